"""Closed-form data of the radial tt* system.

* the connection formula between the r -> 0 exponents (gamma0, gamma1) and
  the Stokes data (s1, s2) at r -> infinity, and its inverse;
* the 19-part partition of the Stokes plane;
* the constants rho0, rho1 of the r -> 0 fine structure;
* asymptote evaluators for the smooth cases (interior, three edges, three
  vertices) and for the twelve cases outside the curved triangle.

Every function takes ``prec`` in decimal digits and returns arb/acb balls.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from flint import acb, arb

from .mpsf import (
    GUARD_DPS,
    Number,
    PoleError,
    const,
    exact_fraction,
    to_acb,
    to_arb,
    workdps,
)


class RegionLabel(enum.Enum):
    OMEGA0 = "Omega0"
    OMEGA1 = "Omega1"
    OMEGA2 = "Omega2"
    OMEGA3 = "Omega3"
    OMEGA4 = "Omega4"
    OMEGA5 = "Omega5"
    OMEGA6 = "Omega6"
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    E1U = "E1U"
    E2U = "E2U"
    E1D = "E1D"
    E2D = "E2D"
    E3R = "E3R"
    E3L = "E3L"
    V1 = "V1"
    V2 = "V2"
    V3 = "V3"

    @classmethod
    def parse(cls, text: str) -> "RegionLabel":
        key = text.strip().replace("Ω", "Omega").replace("_", "")
        aliases = {"general": "Omega0", "omega0": "Omega0"}
        key = aliases.get(key.lower(), key)
        for label in cls:
            if label.value.lower() == key.lower():
                return label
        raise ValueError(f"unknown region {text!r}")


SMOOTH_CASES = frozenset(
    {RegionLabel.OMEGA0, RegionLabel.E1, RegionLabel.E2, RegionLabel.E3, RegionLabel.V1, RegionLabel.V2, RegionLabel.V3}
)
CONJECTURE_CASES = frozenset(set(RegionLabel) - SMOOTH_CASES)


class NearBoundaryWarning(UserWarning):
    """A non-exact Stokes pair was classified within tolerance of a boundary curve."""


@dataclass(frozen=True)
class StokesPair:
    """Real Stokes data ``(s1, s2)``.

    The raw inputs are kept so that exact rationals (``Fraction``, ``int``,
    ``"p/q"``) are classified exactly.
    """

    s1: Number
    s2: Number

    def __post_init__(self):
        for v in (self.s1, self.s2):
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("Stokes data must be finite")
            if isinstance(v, arb) and not v.is_finite():
                raise ValueError("Stokes data must be finite")

    def values(self) -> Tuple[arb, arb]:
        """Both components as balls at the current working precision."""
        return to_arb(self.s1), to_arb(self.s2)

    def exact(self) -> Optional[Tuple[Fraction, Fraction]]:
        a, b = exact_fraction(self.s1), exact_fraction(self.s2)
        if a is None or b is None:
            return None
        return a, b


@dataclass(frozen=True)
class ExponentData:
    """r -> 0 data: ``2 w_i ~ gamma_i ln r + rho_i``.

    Exact rationals are kept in ``gamma0``/``gamma1`` when given; ``rho0`` and
    ``rho1`` are None where their defining Gamma product has a pole.
    """

    gamma0: Number
    gamma1: Number
    rho0: Optional[acb] = None
    rho1: Optional[acb] = None

    def gammas(self) -> Tuple[acb, acb]:
        return to_acb(self.gamma0), to_acb(self.gamma1)

    @property
    def is_real(self) -> bool:
        return all(_is_real_number(g) for g in (self.gamma0, self.gamma1))


def _is_real_number(x) -> bool:
    if isinstance(x, acb):
        return x.imag.is_zero()
    return True


def _real_if_possible(z: acb):
    return z.real if z.imag.is_zero() else z


def _as_ball(x):
    """arb for real inputs, acb for complex."""
    if isinstance(x, acb):
        return _real_if_possible(x)
    if isinstance(x, complex):
        return _real_if_possible(acb(x.real, x.imag))
    return to_arb(x)


# -- connection formula ---------------------------------------------------


def stokes_from_gamma(gamma0: Number, gamma1: Number, prec: int = 60) -> StokesPair:
    """Stokes data of the solution with r -> 0 exponents ``(gamma0, gamma1)``.

    ``s1 = -2cos(pi(g0+1)/4) - 2cos(pi(g1+3)/4)`` and
    ``s2 = -2 - 4cos(pi(g0+1)/4)cos(pi(g1+3)/4)``.
    """
    with workdps(prec + GUARD_DPS):
        g0, g1 = _as_ball(gamma0), _as_ball(gamma1)
        pi = arb.pi()
        c0 = (pi * (g0 + 1) / 4).cos()
        c1 = (pi * (g1 + 3) / 4).cos()
        s1 = -2 * c0 - 2 * c1
        s2 = -2 - 4 * c0 * c1
        if isinstance(s1, acb):
            s1, s2 = _real_if_possible(s1), _real_if_possible(s2)
    return StokesPair(s1, s2)


def _discriminant(s1, s2):
    return 8 + s1 * s1 + 4 * s2


def gamma_from_stokes(p: StokesPair, prec: int = 60) -> ExponentData:
    """Exponents from Stokes data by the inverse connection formula.

    ``gamma0 = (4/pi) arccos((-s1 + D)/4) - 1`` and
    ``gamma1 = (4/pi) arccos((-s1 - D)/4) - 3`` with ``D = sqrt(8 + s1^2 + 4 s2)``.
    Square root and arccos take principal values, so results are complex
    outside the curved triangle.
    """
    with workdps(prec + GUARD_DPS):
        s1, s2 = p.values()
        D = acb(_discriminant(s1, s2)).sqrt()
        pi = arb.pi()
        g0 = 4 / pi * ((D - s1) / 4).acos() - 1
        g1 = 4 / pi * ((-D - s1) / 4).acos() - 3
        g0, g1 = _real_if_possible(g0), _real_if_possible(g1)
    return ExponentData(g0, g1)


# -- classification -------------------------------------------------------


def _cmp_sqrt_exact(d2: Fraction, L: Fraction) -> int:
    """Sign of sqrt(d2) - L for rational d2 >= 0."""
    if L < 0:
        return 1
    diff = d2 - L * L
    return (diff > 0) - (diff < 0)


def _decide(s1, s2, cmp_sqrt, d2_sign) -> RegionLabel:
    """Shared decision tree; ``cmp_sqrt(L)`` is the sign of D - L."""
    sgn = d2_sign
    if sgn < 0:
        return RegionLabel.OMEGA5
    if sgn == 0:
        c = cmp_sqrt(4 - abs_(s1))  # |s1| vs 4, with D = 0
        if c > 0:  # 0 > 4 - |s1|  ->  |s1| > 4
            return RegionLabel.E3R if s1_pos(s1) else RegionLabel.E3L
        if c == 0:
            return RegionLabel.V1 if s1_pos(s1) else RegionLabel.V3
        return RegionLabel.E3
    # a+ = (-s1 + D)/4 against +-1 and a- = (-s1 - D)/4 against +-1
    ap_vs_1 = cmp_sqrt(4 + s1)  # sign(a+ - 1)
    ap_vs_m1 = cmp_sqrt(s1 - 4)  # sign(a+ + 1)
    am_vs_m1 = -cmp_sqrt(4 - s1)  # sign(a- + 1)
    am_vs_1 = -cmp_sqrt(-(4 + s1))  # sign(a- - 1)
    if ap_vs_m1 < 0:
        return RegionLabel.OMEGA6
    if ap_vs_m1 == 0:
        return RegionLabel.E1D
    if ap_vs_1 < 0:
        if am_vs_m1 < 0:
            return RegionLabel.OMEGA1
        if am_vs_m1 == 0:
            return RegionLabel.E1
        return RegionLabel.OMEGA0
    if ap_vs_1 == 0:
        if am_vs_m1 < 0:
            return RegionLabel.E2U
        if am_vs_m1 == 0:
            return RegionLabel.V2
        return RegionLabel.E2
    if am_vs_m1 < 0:
        return RegionLabel.OMEGA2
    if am_vs_m1 == 0:
        return RegionLabel.E1U
    if am_vs_1 < 0:
        return RegionLabel.OMEGA3
    if am_vs_1 == 0:
        return RegionLabel.E2D
    return RegionLabel.OMEGA4


def abs_(x):
    return abs(x)


def s1_pos(x) -> bool:
    return x > 0


@dataclass(frozen=True)
class Classification:
    label: RegionLabel
    exact: bool
    near_boundary: bool


def classify_stokes_detail(p: StokesPair, prec: int = 60) -> Classification:
    """Region of ``p`` with how it was decided.

    Exact rational inputs are decided exactly.  Otherwise quantities within
    ``10**(-prec/2)`` of a boundary count as on it and ``near_boundary`` is set.
    """
    ex = p.exact()
    if ex is not None:
        s1, s2 = ex
        d2 = _discriminant(s1, s2)
        d2_sign = (d2 > 0) - (d2 < 0)
        label = _decide(s1, s2, lambda L: _cmp_sqrt_exact(d2, Fraction(L)), d2_sign)
        return Classification(label, True, False)
    with workdps(prec + GUARD_DPS):
        s1, s2 = p.values()
        tol = arb(10) ** (-(prec // 2))
        d2 = _discriminant(s1, s2)
        near = [False]

        def sign_of(x) -> int:
            if abs(x) <= tol:
                near[0] = True
                return 0
            return 1 if x > 0 else -1

        d2_sign = sign_of(d2.mid())
        D = d2.mid().sqrt() if d2_sign > 0 else arb(0)

        def cmp_sqrt(L):
            return sign_of((D - L).mid())

        label = _decide(s1.mid(), s2.mid(), cmp_sqrt, d2_sign)
    return Classification(label, False, near[0])


def classify_stokes(p: StokesPair, prec: int = 60) -> RegionLabel:
    """Which of the 19 parts of the Stokes plane contains ``p``."""
    c = classify_stokes_detail(p, prec)
    if c.near_boundary:
        warnings.warn(f"{p} classified as {c.label.value} within tolerance of a boundary", NearBoundaryWarning)
    return c.label


# -- rho constants -------------------------------------------------------


def _affine(g0, g1, c, a0, a1, den):
    """(c + a0*g0 + a1*g1)/den, exactly when the inputs are exact."""
    q0, q1 = exact_fraction(g0), exact_fraction(g1)
    if q0 is not None and q1 is not None:
        return Fraction(c + a0 * q0 + a1 * q1, den)
    return (c + a0 * _as_ball(g0) + a1 * _as_ball(g1)) / den


# (coefficient of log Gamma, constant, coeff g0, coeff g1, denominator, name)
_RHO0_FACTORS = (
    (1, 1, 1, 0, 4, "Gamma((1+gamma0)/4)"),
    (1, 4, 1, 1, 8, "Gamma((4+gamma0+gamma1)/8)"),
    (1, 6, 1, -1, 8, "Gamma((6+gamma0-gamma1)/8)"),
    (-1, 3, -1, 0, 4, "Gamma((3-gamma0)/4)"),
    (-1, 4, -1, -1, 8, "Gamma((4-gamma0-gamma1)/8)"),
    (-1, 2, -1, 1, 8, "Gamma((2-gamma0+gamma1)/8)"),
)
_RHO1_FACTORS = (
    (1, 3, 0, 1, 4, "Gamma((3+gamma1)/4)"),
    (1, 4, 1, 1, 8, "Gamma((4+gamma0+gamma1)/8)"),
    (1, 2, -1, 1, 8, "Gamma((2-gamma0+gamma1)/8)"),
    (-1, 1, 0, -1, 4, "Gamma((1-gamma1)/4)"),
    (-1, 4, -1, -1, 8, "Gamma((4-gamma0-gamma1)/8)"),
    (-1, 6, 1, -1, 8, "Gamma((6+gamma0-gamma1)/8)"),
)


def _is_pole(x) -> bool:
    if isinstance(x, Fraction):
        return x <= 0 and x.denominator == 1
    if isinstance(x, acb):
        if not x.imag.contains(0):
            return False
        x = x.real
    if x > 0.5:
        return False
    n = math.floor(float(x.mid()) + 0.5)
    return n <= 0 and x.contains(n)


def _rho(factors, g, gamma0, gamma1, prec):
    with workdps(prec + GUARD_DPS):
        args = []
        for sgn, c, a0, a1, den, name in factors:
            x = _affine(gamma0, gamma1, c, a0, a1, den)
            if _is_pole(x):
                raise PoleError(f"{name} has a pole: rho is not defined here", location=name)
            args.append((sgn, x))
        total = 2 * _as_ball(g) * arb.const_log2()
        for sgn, x in args:
            z = to_arb(x) if isinstance(x, Fraction) else x
            lg = z.lgamma()
            total = total + lg if sgn > 0 else total - lg
        out = -total
        if isinstance(out, acb):
            out = _real_if_possible(out)
    return out


def rho0(gamma0: Number, gamma1: Number, prec: int = 60):
    """rho0 = -ln(2^{2g0} G((1+g0)/4) G((4+g0+g1)/8) G((6+g0-g1)/8) / (G((3-g0)/4) G((4-g0-g1)/8) G((2-g0+g1)/8))).

    For complex exponents the logarithm is the sum of principal log-Gammas,
    which is continuous in the exponents.
    """
    return _rho(_RHO0_FACTORS, gamma0, gamma0, gamma1, prec)


def rho1(gamma0: Number, gamma1: Number, prec: int = 60):
    """rho1 = -ln(2^{2g1} G((3+g1)/4) G((4+g0+g1)/8) G((2-g0+g1)/8) / (G((1-g1)/4) G((4-g0-g1)/8) G((6+g0-g1)/8)))."""
    return _rho(_RHO1_FACTORS, gamma1, gamma0, gamma1, prec)


def rho_pair(gamma0: Number, gamma1: Number, prec: int = 60):
    """(rho0, rho1); raises PoleError naming the Gamma factor at a pole."""
    return rho0(gamma0, gamma1, prec), rho1(gamma0, gamma1, prec)


def exponent_data(p: StokesPair, prec: int = 60) -> ExponentData:
    """Exponents of ``p`` with every rho that is defined there."""
    e = gamma_from_stokes(p, prec)
    r0 = r1 = None
    try:
        r0 = rho0(e.gamma0, e.gamma1, prec)
    except PoleError:
        pass
    try:
        r1 = rho1(e.gamma0, e.gamma1, prec)
    except PoleError:
        pass
    return ExponentData(e.gamma0, e.gamma1, r0, r1)


# -- fine-structure constants ---------------------------------------------


def _lg(x):
    return to_arb(x).lgamma() if isinstance(x, Fraction) else _as_ball(x).lgamma()


def _psi(x):
    z = to_arb(x) if isinstance(x, Fraction) else _as_ball(x)
    if _is_pole(x if isinstance(x, Fraction) else z):
        raise PoleError(f"digamma has a pole at {x}", location=x)
    return z.digamma()


def _q(x):
    q = exact_fraction(x)
    return q if q is not None else _as_ball(x)


def a_E1(gamma0: Number, prec: int = 60):
    """-ln(2^{2g0} G((g0+1)/4) G((g0+5)/8)^2 / (G((3-g0)/4) G((3-g0)/8)^2))."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma0)
        for x in ((g + 1) / 4, (3 - g) / 4, (3 - g) / 8, (g + 5) / 8):
            if _is_pole(x):
                raise PoleError(f"a_E1 undefined: Gamma pole at {x}", location=x)
        t = 2 * _as_ball(g) * arb.const_log2() + _lg((g + 1) / 4) + 2 * _lg((g + 5) / 8)
        t = t - _lg((3 - g) / 4) - 2 * _lg((3 - g) / 8)
        return -t


def b1_constant(gamma0: Number, prec: int = 60):
    """psi((3-g0)/8)/2 + psi((5+g0)/8)/2 - gamma_eu + 4 ln 2."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma0)
        return (_psi((3 - g) / 8) + _psi((5 + g) / 8)) / 2 - arb.const_euler() + 4 * arb.const_log2()


def b2_constant(gamma1: Number, prec: int = 60):
    """psi((3+g1)/8)/2 + psi((5-g1)/8)/2 - gamma_eu + 4 ln 2."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma1)
        return (_psi((3 + g) / 8) + _psi((5 - g) / 8)) / 2 - arb.const_euler() + 4 * arb.const_log2()


def b3_constant(gamma0: Number, prec: int = 60):
    """-psi((3-g0)/4)/4 - psi((g0-3)/4)/4 + 1/(3-g0) - 2 ln 2 + gamma_eu/2."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma0)
        if exact_fraction(g) == 3:
            raise PoleError("b3 undefined at gamma0 = 3", location=3)
        out = -(_psi((3 - g) / 4) + _psi((g - 3) / 4)) / 4 + 1 / _as_ball(3 - g)
        return out - 2 * arb.const_log2() + arb.const_euler() / 2


b_E1 = b1_constant
a_E2 = b2_constant
b_E3 = b3_constant


def b_E2(gamma1: Number, prec: int = 60):
    """-ln(2^{2g1} G((g1+3)/4) G((g1+3)/8)^2 / (G((1-g1)/4) G((5-g1)/8)^2))."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma1)
        for x in ((g + 3) / 4, (g + 3) / 8, (1 - g) / 4, (5 - g) / 8):
            if _is_pole(x):
                raise PoleError(f"b_E2 undefined: Gamma pole at {x}", location=x)
        t = 2 * _as_ball(g) * arb.const_log2() + _lg((g + 3) / 4) + 2 * _lg((g + 3) / 8)
        t = t - _lg((1 - g) / 4) - 2 * _lg((5 - g) / 8)
        return -t


def a_E3(gamma0: Number, prec: int = 60):
    """4(1-g0) ln 2 - 4 lnG((1+g0)/4) + 4 lnG((3-g0)/4)."""
    with workdps(prec + GUARD_DPS):
        g = _q(gamma0)
        for x in ((1 + g) / 4, (3 - g) / 4):
            if _is_pole(x):
                raise PoleError(f"a_E3 undefined: Gamma pole at {x}", location=x)
        return 4 * _as_ball(1 - g) * arb.const_log2() - 4 * _lg((1 + g) / 4) + 4 * _lg((3 - g) / 4)


def _poly_x(s):
    return _as_ball(s) - 2 * arb.const_log2()


def P3(s: Number, prec: int = 60):
    """-(4/3)x^3 - 4g x^2 - 4g^2 x - zeta(3)/24 - (4/3)g^3 with x = s - ln 4, g = gamma_eu."""
    with workdps(prec + GUARD_DPS):
        x = _poly_x(s)
        g = arb.const_euler()
        z3 = arb(3).zeta()
        return -arb(4) / 3 * x**3 - 4 * g * x**2 - 4 * g * g * x - z3 / 24 - arb(4) / 3 * g**3


def P4(s: Number, prec: int = 60):
    """(4/3)x^4 + (16/3)g x^3 + 8g^2 x^2 + (16g^3/3 - zeta(3)/12)x - g zeta(3)/12 + (4/3)g^4."""
    with workdps(prec + GUARD_DPS):
        x = _poly_x(s)
        g = arb.const_euler()
        z3 = arb(3).zeta()
        return (
            arb(4) / 3 * x**4
            + arb(16) / 3 * g * x**3
            + 8 * g * g * x**2
            + (16 * g**3 / 3 - z3 / 12) * x
            - g * z3 / 12
            + arb(4) / 3 * g**4
        )


def v1_poly_family(which: str, a2: Number, a0: Number, prec: int = 60) -> tuple:
    """Coefficients (a3, a2, a1, a0, b4, b3, b2, b1, b0) of the two polynomial families.

    ``A(x) = a3 x^3 + ... + a0`` and ``B(x) = b4 x^4 + ... + b0`` with
    ``e^{W0} = A`` and ``e^{W0 + W1} = B`` solve the truncated vertex system
    ``(ln A)''/4 = -B/A^2``, ``(ln B)''/4 = -A^2/B^2``.
    """
    which = which.upper()
    if which not in ("A", "B"):
        raise ValueError("set must be 'A' or 'B'")
    with workdps(prec + GUARD_DPS):
        a2, a0 = _as_ball(a2), _as_ball(a0)
        sg = 1 if which == "A" else -1
        a3 = sg * arb(4) / 3
        a1 = sg * a2 * a2 / 4
        b4 = arb(4) / 3
        b3 = sg * arb(4) / 3 * a2
        b2 = a2 * a2 / 2
        b1 = sg * (a2**3 - 16 * a0) / 8
        b0 = (a2**4 - 32 * a0 * a2) / 64
    return (a3, a2, a1, a0, b4, b3, b2, b1, b0)


# -- fine-structure predictions -------------------------------------------


@dataclass(frozen=True)
class Prediction:
    """Predicted asymptotic values of a case's natural pair of quantities."""

    case: RegionLabel
    labels: Tuple[str, str]
    values: tuple


@dataclass(frozen=True)
class FineStructureParams:
    case: RegionLabel
    constants: Dict[str, object] = field(default_factory=dict)


def _equal(x, target) -> bool:
    q = exact_fraction(x)
    if q is not None:
        return q == target
    z = to_acb(x)
    return z.contains(target) and z.imag.contains(0) and abs(z - target) < arb(10) ** -20


def _check_case(case: RegionLabel, g0, g1) -> None:
    req = {
        RegionLabel.OMEGA0: None,
        RegionLabel.E1: (None, 1),
        RegionLabel.E2: (-1, None),
        RegionLabel.V1: (3, 1),
        RegionLabel.V2: (-1, 1),
        RegionLabel.V3: (-1, -3),
    }
    if case is RegionLabel.E3:
        q0, q1 = exact_fraction(g0), exact_fraction(g1)
        ok = (q1 == q0 - 2) if (q0 is not None and q1 is not None) else abs(to_acb(g1) - to_acb(g0) + 2) < arb(10) ** -20
        if not ok:
            raise ValueError("case E3 needs gamma1 = gamma0 - 2")
        return
    if case not in req:
        raise ValueError(f"{case.value} is not a smooth (in-triangle) case")
    want = req[case]
    if want is None:
        if not (to_arb(g0) > -1 and to_arb(g1) < 1 and to_arb(g0) - to_arb(g1) < 2):
            raise ValueError("case Omega0 needs (gamma0, gamma1) strictly inside the triangle")
        return
    for g, w, name in ((g0, want[0], "gamma0"), (g1, want[1], "gamma1")):
        if w is not None and not _equal(g, w):
            raise ValueError(f"case {case.value} needs {name} = {w}")


def fine_structure_params(case: RegionLabel, gamma0: Number, gamma1: Number, prec: int = 60) -> FineStructureParams:
    """Constants entering the fine structure of ``case``."""
    _check_case(case, gamma0, gamma1)
    c: Dict[str, object] = {}
    if case is RegionLabel.OMEGA0:
        c["rho0"], c["rho1"] = rho_pair(gamma0, gamma1, prec)
    elif case is RegionLabel.E1:
        c["a_E1"], c["b_E1"] = a_E1(gamma0, prec), b_E1(gamma0, prec)
    elif case is RegionLabel.E2:
        c["a_E2"], c["b_E2"] = a_E2(gamma1, prec), b_E2(gamma1, prec)
    elif case is RegionLabel.E3:
        c["a_E3"], c["b_E3"] = a_E3(gamma0, prec), b_E3(gamma0, prec)
    return FineStructureParams(case, c)


def fine_structure_predict(case: RegionLabel, gamma: ExponentData, s: Number, prec: int = 60) -> Prediction:
    """Asymptote of a smooth case at ``s = ln r`` (s < 0).

    =====  ==========================  ==============================================
    case   pair                        prediction
    =====  ==========================  ==============================================
    Omega0 (2w0, 2w1)                  (g0 s + rho0, g1 s + rho1)
    E1     (2w0, 2w1)                  (g0 s + a_E1, s + ln(-2s + b_E1))
    E2     (2w0, 2w1)                  (-s - ln(-2s + a_E2), g1 s + b_E2)
    E3     (2w0 + 2w1, 2w1 - 2w0)      (2(g0-1)s + a_E3, -2s - ln(4(s + b_E3)^2))
    V1     (2w0, 2w0 + 2w1)            (3s + ln P3, 4s + ln P4)
    V2     (2w0, 2w1)                  (x, -x), x = -s - ln(-2s - 2 gamma_eu + 2 ln 2)
    V3     (2w1, 2w0 + 2w1)            (-3s - ln P3, -4s - ln P4)
    =====  ==========================  ==============================================
    """
    g0, g1 = gamma.gamma0, gamma.gamma1
    _check_case(case, g0, g1)
    with workdps(prec + GUARD_DPS):
        sv = to_arb(s)
        if not sv < 0:
            raise ValueError("fine structure is an s -> -infinity statement; need s < 0")
        ln2 = arb.const_log2()
        if case is RegionLabel.OMEGA0:
            r0 = gamma.rho0 if gamma.rho0 is not None else rho0(g0, g1, prec)
            r1 = gamma.rho1 if gamma.rho1 is not None else rho1(g0, g1, prec)
            vals = (to_arb(g0) * sv + r0, to_arb(g1) * sv + r1)
            labels = ("2w0", "2w1")
        elif case is RegionLabel.E1:
            vals = (to_arb(g0) * sv + a_E1(g0, prec), sv + (-2 * sv + b_E1(g0, prec)).log())
            labels = ("2w0", "2w1")
        elif case is RegionLabel.E2:
            vals = (-sv - (-2 * sv + a_E2(g1, prec)).log(), to_arb(g1) * sv + b_E2(g1, prec))
            labels = ("2w0", "2w1")
        elif case is RegionLabel.E3:
            b = b_E3(g0, prec)
            vals = (2 * (to_arb(g0) - 1) * sv + a_E3(g0, prec), -2 * sv - (4 * (sv + b) ** 2).log())
            labels = ("2w0+2w1", "2w1-2w0")
        elif case is RegionLabel.V1:
            vals = (3 * sv + P3(sv, prec).log(), 4 * sv + P4(sv, prec).log())
            labels = ("2w0", "2w0+2w1")
        elif case is RegionLabel.V2:
            x = -sv - (-2 * sv - 2 * arb.const_euler() + 2 * ln2).log()
            vals = (x, -x)
            labels = ("2w0", "2w1")
        else:
            vals = (-3 * sv - P3(sv, prec).log(), -4 * sv - P4(sv, prec).log())
            labels = ("2w1", "2w0+2w1")
    return Prediction(case, labels, vals)


# -- conjecture evaluators -----------------------------------------------


RICHARDSON_EPS = Fraction(1, 10**6)


def _richardson(f, eps: Fraction, levels: int):
    """Limit of f(e) as e -> 0+ from samples at eps/2^k, extrapolated in sqrt(e)."""
    hs, table = [], []
    for k in range(levels):
        hs.append(to_arb(eps / 2**k).sqrt())
        row = [f(eps / 2**k)]
        for j in range(1, k + 1):
            ratio = hs[k - j] / hs[k]
            row.append(row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / (ratio**j - 1))
        table.append(row)
    return table[-1][-1]


def _certified_limit(f, eps: Fraction, levels: int, digits: int):
    """Extrapolate from ``eps`` and from ``eps/100``; both must agree to ``digits``.

    The expansions can carry ``e log e`` terms that a power series
    extrapolation does not remove, so agreement between two independent
    tables is the certificate rather than the tail of one table.
    """
    coarse = _richardson(f, eps, levels)
    fine = _richardson(f, eps / 100, levels)
    diff = abs(fine - coarse)
    scale = abs(fine)
    if diff.is_zero():
        agree = math.inf
    else:
        ref = scale if not scale.is_zero() else arb(1)
        agree = -float((diff / ref).log().mid()) / math.log(10)
    if agree < digits:
        raise ArithmeticError(f"limit constant did not converge: {agree:.1f} digits agree, {digits} requested")
    return fine, agree


def limit_constant(name: str, p: StokesPair, prec: int = 60, eps: Number = RICHARDSON_EPS, levels: int = 8, digits: int = 6):
    """One-sided boundary limit constant (d0, d0_tilde, theta0, theta0_tilde).

    The defining expression is sampled at Stokes points pushed off the edge by
    ``eps, eps/2, eps/4, ...`` in s1 and extrapolated to the edge.  The result
    is accurate to roughly ``eps``; ``digits`` is the agreement demanded
    between the extrapolations from ``eps`` and ``eps/100``.
    """
    work = prec + 20
    with workdps(work):
        s1, s2 = p.values()
        eps = exact_fraction(eps) or Fraction(str(eps))

        def sample(side, expr):
            def f(e):
                q = StokesPair(s1 + side * to_arb(e), s2)
                ed = gamma_from_stokes(q, work)
                return expr(ed)

            return f

        if name == "d0":
            def expr(ed):
                r = rho0(ed.gamma0, ed.gamma1, work)
                r = to_acb(r)
                return 2 * r.real.exp() * (r.imag + arb.pi() / 2)
            side = -1
        elif name == "d0_tilde":
            def expr(ed):
                r = to_acb(rho1(ed.gamma0, ed.gamma1, work))
                return 2 * (-r.real).exp() * (arb.pi() / 2 - r.imag)
            side = 1
        elif name == "theta0":
            def expr(ed):
                return to_acb(rho0(ed.gamma0, ed.gamma1, work)).imag
            side = 1
        elif name == "theta0_tilde":
            def expr(ed):
                return -to_acb(rho1(ed.gamma0, ed.gamma1, work)).imag
            side = -1
        else:
            raise ValueError(f"unknown limit constant {name!r}")
        val, _ = _certified_limit(sample(side, expr), eps, levels, digits)
    return val


def _parts(z):
    z = to_acb(z)
    return z.real, z.imag


def _re_exp(z):
    return 2 * to_acb(z).exp().real


def conjecture_predict(case: RegionLabel, p: StokesPair, s: Number, prec: int = 60, limits: Optional[dict] = None) -> Prediction:
    """Asymptote of the smooth pair of an out-of-triangle case at ``s = ln r``.

    ``limits`` may supply precomputed boundary constants (``d0``,
    ``d0_tilde``, ``theta0``, ``theta0_tilde``); otherwise they are
    extrapolated with :func:`limit_constant`.
    """
    if case not in CONJECTURE_CASES:
        raise ValueError(f"{case.value} is not an out-of-triangle case")
    got = classify_stokes(p, prec)
    if got is not case:
        raise ValueError(f"Stokes pair lies in {got.value}, not {case.value}")
    limits = dict(limits or {})
    with workdps(prec + GUARD_DPS):
        sv = to_arb(s)
        if not sv < 0:
            raise ValueError("need s < 0")
        e = exponent_data(p, prec)
        g0, g1 = to_acb(e.gamma0), to_acb(e.gamma1)
        g0R, g0I = g0.real, g0.imag
        g1R, g1I = g1.real, g1.imag

        def lim(name):
            if name not in limits:
                limits[name] = limit_constant(name, p, prec)
            return to_arb(limits[name])

        if case in (RegionLabel.OMEGA1, RegionLabel.OMEGA2, RegionLabel.OMEGA3, RegionLabel.OMEGA5):
            r0, r1 = to_acb(e.rho0), to_acb(e.rho1)
            if case is RegionLabel.OMEGA1:
                vals = ((g0 * sv + r0).exp().real, _re_exp(g1 * sv + r1))
                labels = ("e^{2w0}", "e^{2w1}")
            elif case is RegionLabel.OMEGA2:
                vals = (_re_exp(-g0 * sv - r0), _re_exp(g1 * sv + r1))
                labels = ("e^{-2w0}", "e^{2w1}")
            elif case is RegionLabel.OMEGA3:
                vals = (_re_exp(-g0 * sv - r0), (-g1 * sv - r1).exp().real)
                labels = ("e^{-2w0}", "e^{-2w1}")
            else:
                vals = (_re_exp(g0 * sv + r0), _re_exp(-g1 * sv - r1))
                labels = ("e^{2w0}", "e^{-2w1}")
        elif case in (RegionLabel.OMEGA4, RegionLabel.OMEGA6):
            r0R, r0I = _parts(e.rho0)
            r1R, r1I = _parts(e.rho1)
            dI = g0I - g1I
            if case is RegionLabel.OMEGA4:
                A = (-g1R * sv).exp() * (
                    8 * (-r0R).exp() / dI**2 * (g0I * sv + r0I).cos() + 2 * (-r1R).exp() * (g1I * sv + r1I).cos()
                )
                m = (-r0R - r1R).exp()
                B = (-(g0R + g1R) * sv).exp() * (
                    2 * m * (g0I + g1I) ** 2 / dI**2 * (dI * sv + r0I - r1I).cos()
                    + 16 * (-2 * r0R).exp() * g0I**2 / dI**4
                    + (-2 * r1R).exp() * g1I**2
                    + 2 * m * ((g0R + g1R) * sv + r0I + r1I).cos()
                )
                labels = ("e^{-2w1}", "e^{-2w0-2w1}")
            else:
                A = (g0R * sv).exp() * (
                    8 * r1R.exp() / dI**2 * (g1I * sv + r1I).cos() + 2 * r0R.exp() * (g0I * sv + r0I).cos()
                )
                m = (r0R + r1R).exp()
                B = ((g0R + g1R) * sv).exp() * (
                    2 * m * (g0I + g1I) ** 2 / dI**2 * (dI * sv + r0I - r1I).cos()
                    + 16 * (2 * r1R).exp() * g1I**2 / dI**4
                    + (2 * r0R).exp() * g0I**2
                    + 2 * m * ((g0R + g1R) * sv + r0I + r1I).cos()
                )
                labels = ("e^{2w0}", "e^{2w0+2w1}")
            vals = (A, B)
        elif case is RegionLabel.E1U:
            vals = (_re_exp(-g0 * sv - to_acb(e.rho0)), -2 * sv + to_acb(b1_constant(g0, prec)).real)
            labels = ("e^{-2w0}", "e^{2w1}")
        elif case is RegionLabel.E2U:
            vals = (-2 * sv + to_acb(b2_constant(g1, prec)).real, _re_exp(g1 * sv + to_acb(e.rho1)))
            labels = ("e^{-2w0}", "e^{2w1}")
        elif case is RegionLabel.E1D:
            d0 = lim("d0")
            r1R, r1I = _parts(e.rho1)
            ph = g1I * sv + r1I
            A = (g0R * sv).exp() * (-8 / g1I**2 * sv + d0 - 8 / g1I**3 * ph.cos())
            B = 2 * (g1R * sv + r1R).exp() * (ph.cos() + (1 - ph.sin()) ** 2 / (g1I * sv - g1I**3 / 8 * d0 + ph.cos()))
            vals = (A, B)
            labels = ("e^{2w0}", "e^{2w1}")
        elif case is RegionLabel.E2D:
            dt = lim("d0_tilde")
            r0R, r0I = _parts(e.rho0)
            ph = g0I * sv + r0I
            A = 2 * (-g0R * sv - r0R).exp() * (ph.cos() + 8 * (1 + ph.sin()) ** 2 / (-8 * g0I * sv + g0I**3 * dt + 8 * ph.cos()))
            B = (-g1R * sv).exp() * (-8 / g0I**2 * sv + dt + 8 / g0I**3 * ph.cos())
            vals = (A, B)
            labels = ("e^{-2w0}", "e^{-2w1}")
        elif case is RegionLabel.E3R:
            th = lim("theta0")
            b3 = to_acb(b3_constant(g0, prec)).real
            ph = g0I * sv + th
            A = -(g0R * sv).exp() * (4 / g0I**2 * (sv + b3) * ph.sin() + 4 / g0I**3 * ph.cos())
            B = ((g0R + g1R) * sv).exp() * (4 / g0I**2 * (sv + b3) ** 2 - 4 / g0I**4 * ph.cos() ** 2)
            vals = (A, B)
            labels = ("e^{2w0}", "e^{2w0+2w1}")
        else:  # E3L
            th = lim("theta0_tilde")
            b3 = to_acb(b3_constant(g0, prec)).real
            ph = g1I * sv - th
            A = (-g1R * sv).exp() * (4 / g1I**2 * (sv + b3) * ph.sin() + 4 / g1I**3 * ph.cos())
            B = (-(g0R + g1R) * sv).exp() * (4 / g1I**2 * (sv + b3) ** 2 - 4 / g1I**4 * ph.cos() ** 2)
            vals = (A, B)
            labels = ("e^{-2w1}", "e^{-2w0-2w1}")
        vals = tuple(_real_if_possible(v) if isinstance(v, acb) else v for v in vals)
    return Prediction(case, labels, vals)
