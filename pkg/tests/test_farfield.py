from fractions import Fraction

import pytest
from flint import acb, arb

from ttstar.asymptotics import StokesPair
from ttstar.charts import rhs_wpwm_r
from ttstar.farfield import corrected_far_field, leading_far_field
from ttstar.glrk import ContourPath, IntegratorConfig, Line, integrate_path
from ttstar.mpsf import digits_agree, workdps

GENERAL = StokesPair("sqrt(3)", -2)
KEYS = ("wp", "dwp", "wm", "dwm")


def test_leading_general_wp_matches_print(goldens):
    wp, dwp, wm, dwm = leading_far_field(GENERAL, 45, 60)
    with workdps(70):
        assert digits_agree(wp, arb(goldens["seed_general"]["wp"])) >= 45
        # -(sqrt6/pi) K0(90 sqrt2)
        from ttstar.mpsf import bessel0

        want = -(arb(6).sqrt() / arb.pi()) * bessel0("K", 90 * arb(2).sqrt(), 60)
        assert digits_agree(wp, want) >= 55


def test_leading_e1_wm_matches_print(goldens):
    _, _, wm, _ = leading_far_field(StokesPair(2, -2), 45, 60)
    with workdps(70):
        assert digits_agree(wm, arb(goldens["seed_E1"]["wm"])) >= 30


def test_wp_vanishes_without_s1():
    wp, dwp, wm, _ = leading_far_field(StokesPair(0, 2), 30, 40)
    assert wp.is_zero() and dwp.is_zero()
    assert wm > 0


def test_linearity_and_signs():
    a = leading_far_field(StokesPair(1, -1), 25, 40)
    b = leading_far_field(StokesPair(2, -1), 25, 40)
    with workdps(50):
        assert abs(b[0] - 2 * a[0]) <= abs(a[0]) * arb(10) ** -40
        assert (b[2] - a[2]).is_zero() or abs(b[2] - a[2]) <= abs(a[2]) * arb(10) ** -40
    assert a[0] < 0 and a[2] < 0  # s1 > 0 and s2 < 0
    assert a[1] > 0 and a[3] > 0  # both decay towards zero from below


def test_leading_rejects_nonpositive_r():
    with pytest.raises(ValueError):
        leading_far_field(GENERAL, 0)


def test_corrected_rejects_small_r():
    with pytest.raises(ValueError, match="r >="):
        corrected_far_field(GENERAL, 10, 40)


def test_corrected_general_seed(goldens):
    seed = corrected_far_field(GENERAL, 45, 60)
    g = goldens["seed_general"]
    with workdps(80):
        for k in KEYS:
            assert digits_agree(getattr(seed, k), arb(g[k])) >= 48, k
        assert seed.certified_rel_err < arb(10) ** -100


def test_correction_is_small_and_signed(goldens):
    seed = corrected_far_field(StokesPair(2, -2), 30, 40)
    lead = leading_far_field(StokesPair(2, -2), 30, 40)
    with workdps(50):
        # wm1 = f(wp0^2) with positive source shifts wm by a relative e^{-(4 sqrt2 - 4) r}
        rel = abs(seed.wm - lead[2]) / abs(lead[2])
        assert arb(10) ** -30 < rel < arb(10) ** -15


@pytest.mark.slow
def test_start_radius_consistency():
    # seeds at 45 and 50 carried to 40 agree within the larger certificate
    cfg = IntegratorConfig(stages=24, step=Fraction(1, 20), prec=80)
    a = corrected_far_field(GENERAL, 45, 60)
    b = corrected_far_field(GENERAL, 50, 60)
    ends = []
    for seed, r0 in ((a, 45), (b, 50)):
        tr = integrate_path(rhs_wpwm_r, ContourPath([Line(acb(r0), acb(40))]), seed.as_vector(), cfg, keep=False)
        ends.append(tr.final.y)
    with workdps(80):
        tol = max(a.certified_rel_err, b.certified_rel_err) * 10
        for x, y in zip(*ends):
            assert abs((x - y).mid()) <= abs(y) * max(tol, arb(10) ** -58)
