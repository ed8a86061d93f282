import math
import warnings
from fractions import Fraction

import mpmath
import pytest
from flint import acb, arb
from hypothesis import assume, given, settings, strategies as st
from mpmath import mp

import oracles
from ttstar.asymptotics import (
    CONJECTURE_CASES,
    ExponentData,
    NearBoundaryWarning,
    RegionLabel,
    StokesPair,
    P3,
    P4,
    a_E1,
    b1_constant,
    classify_stokes,
    classify_stokes_detail,
    conjecture_predict,
    exponent_data,
    fine_structure_params,
    fine_structure_predict,
    gamma_from_stokes,
    limit_constant,
    rho0,
    rho1,
    rho_pair,
    stokes_from_gamma,
    v1_poly_family,
)
from ttstar.mpsf import PoleError, digits_agree, to_acb, to_arb, to_decimal, workdps

PREC = 60
L = RegionLabel

RHO0 = "0.89156581440748831917188012305422345475702308262231"
RHO1 = "0.22017225140694662756648980530049931068839656816740"

# one interior point per out-of-triangle region, plus the edge cases
SAMPLES = {
    L.OMEGA1: (2, 1),
    L.OMEGA2: (Fraction(-5, 2), 8),
    L.OMEGA3: (-8, -8),
    L.OMEGA4: (-5, Fraction(-41, 5)),
    L.OMEGA5: (Fraction(-9, 2), -8),
    L.OMEGA6: (5, Fraction(-41, 5)),
    L.E1U: (-2, 6),
    L.E2U: (1, 4),
    L.E1D: (Fraction(9, 2), -7),
    L.E2D: (Fraction(-9, 2), -7),
    L.E3R: (5, Fraction(-33, 4)),
    L.E3L: (-5, Fraction(-33, 4)),
}

in_triangle = st.tuples(
    st.fractions(min_value=Fraction(-99, 100), max_value=Fraction(299, 100), max_denominator=1000),
    st.fractions(min_value=Fraction(-299, 100), max_value=Fraction(99, 100), max_denominator=1000),
).filter(lambda g: g[0] - g[1] < Fraction(199, 100))


def close(a, b, tol):
    return abs((to_acb(a) - to_acb(b)).mid()) < tol


# -- connection formula ---------------------------------------------------------


@pytest.mark.parametrize(
    "g, s",
    [
        ((1, Fraction(1, 3)), ("sqrt(3)", -2)),
        ((1, 1), (2, -2)),
        ((Fraction(1, 3), Fraction(-5, 3)), (-2, -3)),
        ((3, 1), (4, -6)),
        ((-1, 1), (0, 2)),
    ],
)
def test_connection_formula_examples(g, s):
    p = stokes_from_gamma(*g, prec=PREC)
    with workdps(PREC + 10):
        assert close(p.s1, to_arb(s[0]), arb(10) ** -PREC)
        assert close(p.s2, to_arb(s[1]), arb(10) ** -PREC)


@settings(max_examples=60, deadline=None)
@given(in_triangle)
def test_connection_formula_against_mpmath(g):
    p = stokes_from_gamma(*g, prec=PREC)
    with mp.workdps(PREC + 10):
        s1, s2 = oracles.stokes_from_gamma(mpmath.mpf(g[0].numerator) / g[0].denominator, mpmath.mpf(g[1].numerator) / g[1].denominator, PREC)
        assert abs(oracles.to_mpf(p.s1) - s1) < mpmath.mpf(10) ** -PREC
        assert abs(oracles.to_mpf(p.s2) - s2) < mpmath.mpf(10) ** -PREC


def test_inverse_omega1_example():
    e = gamma_from_stokes(StokesPair(2, 1), PREC)
    with workdps(PREC):
        assert close(e.gamma0, arb(1) / 3, arb(10) ** -PREC)
        want = acb(1, 4 / arb.pi() * ((3 - arb(5).sqrt()) / 2).log())
        assert close(e.gamma1, want, arb(10) ** -PREC)
    assert not e.is_real


def test_inverse_v2_example():
    e = gamma_from_stokes(StokesPair(0, 2), PREC)
    with workdps(PREC):
        assert close(e.gamma0, -1, arb(10) ** -25)
        assert close(e.gamma1, 1, arb(10) ** -25)


@settings(max_examples=100, deadline=None)
@given(in_triangle)
def test_forward_inverse_roundtrip(g):
    e = gamma_from_stokes(stokes_from_gamma(*g, prec=PREC), PREC)
    with workdps(PREC):
        assert close(e.gamma0, to_arb(g[0]), arb(10) ** (10 - PREC))
        assert close(e.gamma1, to_arb(g[1]), arb(10) ** (10 - PREC))


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=-6, max_value=6, max_denominator=100), st.fractions(min_value=-10, max_value=10, max_denominator=100))
def test_inverse_then_forward(s1, s2):
    assume(8 + s1 * s1 + 4 * s2 >= 0)
    e = gamma_from_stokes(StokesPair(s1, s2), PREC)
    back = stokes_from_gamma(e.gamma0, e.gamma1, PREC)
    with workdps(PREC):
        assert close(back.s1, to_arb(s1), arb(10) ** (15 - PREC))
        assert close(back.s2, to_arb(s2), arb(10) ** (15 - PREC))


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=-5, max_value=5, max_denominator=1000), st.fractions(min_value=-5, max_value=5, max_denominator=1000))
def test_stokes_symmetry(g0, g1):
    a = stokes_from_gamma(g0, g1, PREC)
    b = stokes_from_gamma(-g1, -g0, PREC)
    with workdps(PREC):
        assert close(b.s1, -a.s1, arb(10) ** -PREC)
        assert close(b.s2, a.s2, arb(10) ** -PREC)


# -- classification -------------------------------------------------------------


@pytest.mark.parametrize(
    "s, label",
    [
        (("sqrt(3)", -2), L.OMEGA0),
        ((2, 1), L.OMEGA1),
        ((4, -6), L.V1),
        ((0, 2), L.V2),
        ((-4, -6), L.V3),
        ((2, -2), L.E1),
        ((-2, -2), L.E2),
        ((0, -2), L.E3),
    ],
)
def test_classify_examples(s, label):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearBoundaryWarning)
        assert classify_stokes(StokesPair(*s), PREC) is label


@pytest.mark.parametrize("label", list(SAMPLES))
def test_classify_samples(label):
    assert classify_stokes(StokesPair(*SAMPLES[label])) is label


def _oracle_region(s1, s2):
    """Open-region label from the exponents computed in mpmath, or None near a boundary."""
    with mp.workdps(40):
        s1 = mpmath.mpf(s1.numerator) / s1.denominator
        s2 = mpmath.mpf(s2.numerator) / s2.denominator
        d2 = 8 + s1 * s1 + 4 * s2
        if abs(d2) < 1e-6:
            return None
        if d2 < 0:
            return L.OMEGA5
        D = mpmath.sqrt(d2)
        ap, am = (-s1 + D) / 4, (-s1 - D) / 4
        if min(abs(ap - 1), abs(ap + 1), abs(am - 1), abs(am + 1)) < 1e-6:
            return None
        g0 = 4 / mpmath.pi * mpmath.acos(mpmath.mpc(ap)) - 1
        g1 = 4 / mpmath.pi * mpmath.acos(mpmath.mpc(am)) - 3
        r0, r1 = abs(mpmath.im(g0)) < 1e-20, abs(mpmath.im(g1)) < 1e-20
        if r0 and r1:
            return L.OMEGA0
        if r0:
            return L.OMEGA1
        if r1:
            return L.OMEGA3
        if ap > 1 and am < -1:
            return L.OMEGA2
        if ap > 1 and am > 1:
            return L.OMEGA4
        if ap < -1 and am < -1:
            return L.OMEGA6
        raise AssertionError("unreachable")


@settings(max_examples=300, deadline=None)
@given(st.fractions(min_value=-8, max_value=8, max_denominator=997), st.fractions(min_value=-12, max_value=12, max_denominator=997))
def test_classification_matches_exponent_oracle(s1, s2):
    want = _oracle_region(s1, s2)
    assume(want is not None)
    assert classify_stokes(StokesPair(s1, s2)) is want


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=-8, max_value=8, max_denominator=97))
def test_boundary_lines_classify_to_edges(s1):
    # s2 = -2 s1 + 2 carries E1U, V2, E1, V1, E1D; s2 = 2 s1 + 2 the mirrored edges
    on_e1 = classify_stokes(StokesPair(s1, -2 * s1 + 2))
    on_e2 = classify_stokes(StokesPair(-s1, -2 * s1 + 2))
    expect = L.E1U if s1 < 0 else L.V2 if s1 == 0 else L.E1 if s1 < 4 else L.V1 if s1 == 4 else L.E1D
    mirror = {L.E1U: L.E2U, L.V2: L.V2, L.E1: L.E2, L.V1: L.V3, L.E1D: L.E2D}
    assert on_e1 is expect
    assert on_e2 is mirror[expect]


@pytest.mark.parametrize("s1, label", [(0, L.E3), (Fraction(7, 2), L.E3), (4, L.V1), (-4, L.V3), (5, L.E3R), (-5, L.E3L)])
def test_parabola_classifies_to_edges(s1, label):
    s1 = Fraction(s1)
    assert classify_stokes(StokesPair(s1, -(8 + s1 * s1) / 4)) is label


def test_near_boundary_warning():
    p = StokesPair(arb(2) + arb(10) ** -50, -2)
    c = classify_stokes_detail(p, 60)
    assert c.near_boundary and not c.exact
    with pytest.warns(NearBoundaryWarning):
        assert classify_stokes(p, 60) is L.E1


def test_exact_classification_is_exact():
    c = classify_stokes_detail(StokesPair(2 - Fraction(1, 10**40), -2), 60)
    assert c.exact and c.label is L.OMEGA0


# -- rho --------------------------------------------------------------------------


def test_rho_golden():
    r0, r1 = rho_pair(1, Fraction(1, 3), PREC)
    with workdps(PREC):
        # the printed digits are truncated, not rounded
        assert to_decimal(r0, 60)[:52] == RHO0
        assert to_decimal(r1, 60)[:52] == RHO1


@settings(max_examples=100, deadline=None)
@given(in_triangle)
def test_rho_symmetry(g):
    with workdps(PREC):
        a = rho0(*g, PREC)
        b = rho1(-g[1], -g[0], PREC)
        assert close(b, -a, arb(10) ** (10 - PREC))


@settings(max_examples=50, deadline=None)
@given(in_triangle)
def test_rho_defined_inside(g):
    r0, r1 = rho_pair(*g, PREC)
    assert isinstance(r0, arb) and isinstance(r1, arb)


@settings(max_examples=50, deadline=None)
@given(st.fractions(min_value=-3, max_value=3, max_denominator=50))
def test_rho_rejects_on_boundary_lines(t):
    for g in ((-1, t), (t, 1), (t, t - 2)):
        with pytest.raises(PoleError):
            rho_pair(*g, 30)


def test_rho_pole_names_the_factor():
    with pytest.raises(PoleError, match=r"Gamma\(\(1-gamma1\)/4\)"):
        rho1(1, 1)


def test_rho_complex_inputs():
    e = exponent_data(StokesPair(2, 1), PREC)
    assert e.rho0 is not None and e.rho1 is not None
    assert isinstance(to_acb(e.rho1), acb)


def test_omega1_identity():
    # -1/Im gamma1 = e^{Re rho1} at (2, 1)
    e = exponent_data(StokesPair(2, 1), PREC)
    with workdps(PREC):
        lhs = -1 / to_acb(e.gamma1).imag
        rhs = to_acb(e.rho1).real.exp()
        assert digits_agree(lhs, rhs) >= PREC - 5


# -- fine structure -----------------------------------------------------------------


def test_a_E1_is_rho0_on_the_edge():
    with workdps(PREC):
        assert digits_agree(a_E1(1, PREC), rho0(1, 1, PREC)) >= PREC - 2
        assert digits_agree(a_E1(Fraction(1, 2), PREC), rho0(Fraction(1, 2), 1, PREC)) >= PREC - 2


def test_b1_at_v2_corner():
    # the E1U asymptote -2s + b1 meets the V2 form -2s - 2 gamma_eu + 2 ln 2 at gamma0 = -1
    with mp.workdps(60):
        want = -2 * oracles.euler_gamma(40) + 2 * mpmath.log(2)
        assert abs(oracles.to_mpf(b1_constant(-1, 40)) - want) < mpmath.mpf(10) ** -40


def _poly_oracle(s, dps=60):
    with mp.workdps(dps + 20):
        x = mpmath.mpf(s) - mpmath.log(4)
        g = oracles.euler_gamma(dps)
        z3 = oracles.zeta3(dps)
        p3 = -mpmath.mpf(4) / 3 * x**3 - 4 * g * x**2 - 4 * g**2 * x - z3 / 24 - mpmath.mpf(4) / 3 * g**3
        p4 = mpmath.mpf(4) / 3 * x**4 + mpmath.mpf(16) / 3 * g * x**3 + 8 * g**2 * x**2 + (16 * g**3 / 3 - z3 / 12) * x - g * z3 / 12 + mpmath.mpf(4) / 3 * g**4
        return p3, p4


@pytest.mark.parametrize("s", [0, -7, "-12.5"])
def test_p3_p4_against_oracle(s):
    p3, p4 = _poly_oracle(s)
    with mp.workdps(70):
        assert abs(oracles.to_mpf(P3(s, 50)) - p3) < mpmath.mpf(10) ** -50 * max(1, abs(p3))
        assert abs(oracles.to_mpf(P4(s, 50)) - p4) < mpmath.mpf(10) ** -50 * max(1, abs(p4))


def test_set_b_reproduces_p3_p4():
    with workdps(60):
        g = arb.const_euler()
        a0 = -arb(3).zeta() / 24 - arb(4) / 3 * g**3
        coeffs = v1_poly_family("B", -4 * g, a0, 50)
        x = arb("0.37")
        A = sum(c * x ** (3 - k) for k, c in enumerate(coeffs[:4]))
        B = sum(c * x ** (4 - k) for k, c in enumerate(coeffs[4:]))
        s = x + 2 * arb.const_log2()
        assert abs(A - P3(s, 50)) < arb(10) ** -45
        assert abs(B - P4(s, 50)) < arb(10) ** -45


def test_set_a_zero_parameters():
    with workdps(40):
        c = v1_poly_family("A", 0, 0, 30)
        want = [arb(4) / 3, 0, 0, 0, arb(4) / 3, 0, 0, 0, 0]
        assert all(abs(a - b) < arb(10) ** -30 for a, b in zip(c, want))
    with pytest.raises(ValueError):
        v1_poly_family("C", 0, 0)


@pytest.mark.parametrize("which", ["A", "B"])
@settings(max_examples=20, deadline=None)
@given(a2=st.fractions(min_value=-3, max_value=3, max_denominator=20), a0=st.fractions(min_value=-3, max_value=3, max_denominator=20), x=st.fractions(min_value=-5, max_value=5, max_denominator=50))
def test_poly_family_residual(which, a2, a0, x):
    # (A''A - A'^2)/4 + B = 0 and (B''B - B'^2)/4 + A^2 = 0 as polynomial identities
    c = v1_poly_family(which, a2, a0, 40)
    with mp.workdps(50):
        a = [oracles.to_mpf(v) for v in c[:4]][::-1]
        b = [oracles.to_mpf(v) for v in c[4:]][::-1]
        xv = mpmath.mpf(x.numerator) / x.denominator
        A, dA, ddA = (mpmath.polyval(list(reversed(q)), xv) for q in _derivs(a))
        B, dB, ddB = (mpmath.polyval(list(reversed(q)), xv) for q in _derivs(b))
        scale = 1 + abs(A) ** 2 + abs(B) ** 2 + abs(dB) ** 2
        assert abs((ddA * A - dA**2) / 4 + B) < mpmath.mpf(10) ** -40 * scale
        assert abs((ddB * B - dB**2) / 4 + A**2) < mpmath.mpf(10) ** -40 * scale


def _derivs(coeffs):
    """Coefficient lists (ascending) of p, p', p''."""
    d1 = [k * coeffs[k] for k in range(1, len(coeffs))]
    d2 = [k * d1[k] for k in range(1, len(d1))]
    return coeffs, d1, d2


def test_fine_structure_case_checks():
    with pytest.raises(ValueError, match="gamma1 = 1"):
        fine_structure_params(L.E1, 1, Fraction(1, 3))
    with pytest.raises(ValueError, match="E3 needs"):
        fine_structure_params(L.E3, 1, 0)
    with pytest.raises(ValueError):
        fine_structure_predict(L.OMEGA0, ExponentData(1, Fraction(1, 3)), 1)
    with pytest.raises(ValueError):
        fine_structure_params(L.OMEGA1, 1, Fraction(1, 3))


def test_omega0_prediction_is_affine():
    e = ExponentData(1, Fraction(1, 3))
    p = fine_structure_predict(L.OMEGA0, e, -25, PREC)
    with workdps(PREC):
        assert close(p.values[0], -25 + arb(RHO0), arb(10) ** -49)
        assert close(p.values[1], -arb(25) / 3 + arb(RHO1), arb(10) ** -49)


def test_v2_prediction_is_antisymmetric():
    p = fine_structure_predict(L.V2, ExponentData(-1, 1), -4, PREC)
    with workdps(PREC):
        assert close(p.values[0], -p.values[1], arb(10) ** -PREC)


def test_v3_mirrors_v1():
    a = fine_structure_predict(L.V1, ExponentData(3, 1), -5, 40)
    b = fine_structure_predict(L.V3, ExponentData(-1, -3), -5, 40)
    with workdps(40):
        assert close(a.values[0], -b.values[0], arb(10) ** -35)
        assert close(a.values[1], -b.values[1], arb(10) ** -35)


# -- conjecture ---------------------------------------------------------------------


@pytest.mark.parametrize("label", sorted(CONJECTURE_CASES, key=lambda x: x.value))
def test_conjecture_evaluators_run(label):
    pred = conjecture_predict(label, StokesPair(*SAMPLES[label]), -3, 30)
    assert len(pred.values) == 2
    for v in pred.values:
        assert math.isfinite(float(to_acb(v).real.mid()))


def test_conjecture_omega1_formula():
    p = StokesPair(2, 1)
    e = exponent_data(p, PREC)
    s = -7
    pred = conjecture_predict(L.OMEGA1, p, s, PREC)
    with mp.workdps(PREC + 10):
        g1, r1 = oracles.to_mpc(to_acb(e.gamma1)), oracles.to_mpc(to_acb(e.rho1))
        want = 2 * mpmath.exp(mpmath.re(r1)) * mpmath.exp(s) * mpmath.cos(mpmath.im(g1) * s + mpmath.im(r1))
        assert abs(oracles.to_mpf(pred.values[1]) - want) < mpmath.mpf(10) ** (5 - PREC)


# mirror pairs under w0 -> -w1 with (s1, s2) -> (-s1, s2); True when the two
# smooth variables come out in swapped order
MIRRORS = [
    (L.OMEGA1, L.OMEGA3, True),
    (L.OMEGA2, L.OMEGA2, True),
    (L.OMEGA5, L.OMEGA5, True),
    (L.OMEGA4, L.OMEGA6, False),
    (L.E1U, L.E2U, True),
    (L.E1D, L.E2D, True),
    (L.E3R, L.E3L, False),
]


@pytest.mark.parametrize("a, b, swapped", MIRRORS)
def test_conjecture_mirror_symmetry(a, b, swapped):
    s1, s2 = SAMPLES[a]
    pa = conjecture_predict(a, StokesPair(s1, s2), -4, 30)
    pb = conjecture_predict(b, StokesPair(-Fraction(s1), s2), -4, 30)
    vb = pb.values[::-1] if swapped else pb.values
    with workdps(40):
        for x, y in zip(pa.values, vb):
            assert digits_agree(x, y) > 8


def test_conjecture_wrong_region():
    with pytest.raises(ValueError, match="lies in"):
        conjecture_predict(L.OMEGA2, StokesPair(2, 1), -3)
    with pytest.raises(ValueError, match="not an out-of-triangle"):
        conjecture_predict(L.OMEGA0, StokesPair(2, 1), -3)
    with pytest.raises(ValueError, match="s < 0"):
        conjecture_predict(L.OMEGA1, StokesPair(2, 1), 1)


def test_limit_constant_certifies():
    v = limit_constant("d0", StokesPair(Fraction(9, 2), -7), 30)
    assert math.isfinite(float(v.mid()))
    with pytest.raises(ValueError):
        limit_constant("nope", StokesPair(Fraction(9, 2), -7))
