"""Coordinate charts of the radial two-function Toda (tt*) system.

Writing ``W0 = 2 w0`` and ``W1 = 2 w1`` the system in ``s = ln r`` reads::

    W0'' = 4 e^{2s} (e^{2 W0} - e^{W1 - W0})
    W1'' = 4 e^{2s} (e^{W1 - W0} - e^{-2 W1})

Each chart stores two values and their first derivatives with respect to
the chart's own independent variable, in the order
``[u0, u1, du0, du1]``:

========  ====  ================================================
chart     t     u0, u1
========  ====  ================================================
WPWM_R    r     wp = w0 + w1, wm = w0 - w1
LOG_S     s     W0 - g0 s, W1 - g1 s (g0, g1 the chart exponents)
V_S       s     v0 = e^{W0}, v1 = e^{W1}
V_R       r     v0, v1; derivatives stored as p = r dv/dr = dv/ds
========  ====  ================================================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional

from flint import acb, arb

from .mpsf import Number, exact_fraction, to_acb, to_arb, workdps


class ChartId(enum.Enum):
    WPWM_R = "WPWM_R"
    LOG_S = "LOG_S"
    V_S = "V_S"
    V_R = "V_R"

    @property
    def variable(self) -> str:
        return "r" if self in (ChartId.WPWM_R, ChartId.V_R) else "s"


class ChartSingularity(ArithmeticError):
    """The right-hand side is singular (or a log left its branch) at ``location``."""

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class BranchError(ChartSingularity):
    """A transition needed the log of a value that is zero or on the cut."""


@dataclass(frozen=True)
class ChartState:
    """A point of a solution in one chart.

    ``gammas`` is only used by LOG_S and holds the exponents subtracted from
    ``2 w0`` and ``2 w1``; exact rationals are kept as :class:`Fraction`.
    """

    chart: ChartId
    t: acb
    y: tuple
    gammas: Optional[tuple] = None

    def __post_init__(self):
        if len(self.y) != 4:
            raise ValueError("a chart state has exactly 4 components")
        if self.chart is ChartId.LOG_S and self.gammas is None:
            raise ValueError("LOG_S states carry their exponents (gamma0, gamma1)")
        if self.chart in (ChartId.V_S, ChartId.V_R):
            for k in (0, 1):
                v = to_acb(self.y[k])
                if v.is_zero():
                    raise ChartSingularity(f"v{k} vanishes", location=self.t)

    def with_y(self, t, y) -> "ChartState":
        return replace(self, t=t, y=tuple(y))


def _exponent(g) -> acb:
    """Exponent as a ball at the working precision (exact for rationals)."""
    if isinstance(g, Fraction):
        return acb(to_arb(g))
    return to_acb(g)


def _keep_exact(g):
    q = exact_fraction(g)
    return q if q is not None else g


# -- right-hand sides -----------------------------------------------------


def rhs_wpwm_r(r: acb, y: List[acb]) -> List[acb]:
    """wp'' = -wp'/r + 4e^{2wm} sinh(2wp); wm'' = -wm'/r + 8e^{2wm} sinh^2(wp) + 8 sinh(2wm)."""
    wp, wm, dwp, dwm = y
    if r.is_zero():
        raise ChartSingularity("r = 0 is singular", location=r)
    e2m = (2 * wm).exp()
    sh = wp.sinh()
    return [
        dwp,
        dwm,
        -dwp / r + 4 * e2m * (2 * wp).sinh(),
        -dwm / r + 8 * e2m * sh * sh + 8 * (2 * wm).sinh(),
    ]


def make_rhs_log_s(gamma0, gamma1):
    """RHS of the shifted-log chart for exponents ``gamma0``, ``gamma1``."""
    g0 = _keep_exact(gamma0)
    g1 = _keep_exact(gamma1)
    cache = {}

    def coeffs():
        key = arb(1).rel_accuracy_bits()
        if key not in cache:
            a0, a1 = _exponent(g0), _exponent(g1)
            cache[key] = (2 * (a0 + 1), a1 - a0 + 2, 2 * (1 - a1))
        return cache[key]

    def rhs(s: acb, y: List[acb]) -> List[acb]:
        u0, u1, du0, du1 = y
        k0, k01, k1 = coeffs()
        ea = (2 * u0 + k0 * s).exp()
        eb = (u1 - u0 + k01 * s).exp()
        ec = (-2 * u1 + k1 * s).exp()
        return [du0, du1, 4 * (ea - eb), 4 * (eb - ec)]

    return rhs


def rhs_v_s(s: acb, y: List[acb]) -> List[acb]:
    """v0'' = 4e^{2s}(v0^3 - v1) + v0'^2/v0; v1'' = 4e^{2s}(v1^2/v0 - 1/v1) + v1'^2/v1."""
    v0, v1, d0, d1 = y
    if v0.is_zero() or v1.is_zero():
        raise ChartSingularity("v0 or v1 vanishes", location=s)
    e2s = (2 * s).exp()
    return [
        d0,
        d1,
        4 * e2s * (v0 * v0 * v0 - v1) + d0 * d0 / v0,
        4 * e2s * (v1 * v1 / v0 - 1 / v1) + d1 * d1 / v1,
    ]


def rhs_v_r(r: acb, y: List[acb]) -> List[acb]:
    """First-order V system in r with p = r dv/dr.

    dv/dr = p/r; dp0/dr = p0^2/(r v0) + 4r(v0^3 - v1); dp1/dr = p1^2/(r v1) + 4r(v1^2/v0 - 1/v1).
    """
    v0, v1, p0, p1 = y
    if r.is_zero():
        raise ChartSingularity("r = 0 is singular", location=r)
    if v0.is_zero() or v1.is_zero():
        raise ChartSingularity("v0 or v1 vanishes", location=r)
    return [
        p0 / r,
        p1 / r,
        p0 * p0 / (r * v0) + 4 * r * (v0 * v0 * v0 - v1),
        p1 * p1 / (r * v1) + 4 * r * (v1 * v1 / v0 - 1 / v1),
    ]


def rhs_for(chart: ChartId, gammas=None):
    """The first-order RHS ``f(t, y)`` of ``chart``."""
    if chart is ChartId.WPWM_R:
        return rhs_wpwm_r
    if chart is ChartId.LOG_S:
        if gammas is None:
            raise ValueError("LOG_S needs (gamma0, gamma1)")
        return make_rhs_log_s(*gammas)
    if chart is ChartId.V_S:
        return rhs_v_s
    if chart is ChartId.V_R:
        return rhs_v_r
    raise ValueError(f"unknown chart {chart}")


def rhs(state: ChartState) -> List[acb]:
    """Derivative of the state vector in its own chart."""
    f = rhs_for(state.chart, state.gammas)
    return f(to_acb(state.t), [to_acb(v) for v in state.y])


# -- transitions ----------------------------------------------------------


def _log(v: acb, what: str, where) -> acb:
    if v.is_zero() or v.contains(0):
        raise BranchError(f"log of {what} = 0", location=where)
    if v.imag.is_zero() and v.real < 0:
        raise BranchError(f"log of negative {what}: the solution left the chart", location=where)
    return v.log()


def _to_common(state: ChartState):
    """(r, s, W0, W1, dW0/ds, dW1/ds) of a state."""
    t = to_acb(state.t)
    y = [to_acb(v) for v in state.y]
    c = state.chart
    if c.variable == "r":
        r = t
        s = _log(r, "r", t)
    else:
        s = t
        r = s.exp()
    if c is ChartId.WPWM_R:
        wp, wm, dwp, dwm = y
        return r, s, wp + wm, wp - wm, r * (dwp + dwm), r * (dwp - dwm)
    if c is ChartId.LOG_S:
        g0, g1 = (_exponent(g) for g in state.gammas)
        u0, u1, du0, du1 = y
        return r, s, u0 + g0 * s, u1 + g1 * s, du0 + g0, du1 + g1
    v0, v1, d0, d1 = y  # both V charts store dv/ds
    return r, s, _log(v0, "v0", t), _log(v1, "v1", t), d0 / v0, d1 / v1


def _from_common(chart: ChartId, r, s, W0, W1, D0, D1, gammas=None) -> ChartState:
    if chart is ChartId.WPWM_R:
        y = (W0 + W1) / 2, (W0 - W1) / 2, (D0 + D1) / (2 * r), (D0 - D1) / (2 * r)
        return ChartState(chart, r, tuple(y))
    if chart is ChartId.LOG_S:
        g = tuple(_keep_exact(x) for x in gammas)
        g0, g1 = (_exponent(x) for x in g)
        return ChartState(chart, s, (W0 - g0 * s, W1 - g1 * s, D0 - g0, D1 - g1), g)
    v0, v1 = W0.exp(), W1.exp()
    t = s if chart is ChartId.V_S else r
    return ChartState(chart, t, (v0, v1, v0 * D0, v1 * D1))


def chart_transition(state: ChartState, to: ChartId, gammas=None) -> ChartState:
    """Map ``state`` to chart ``to`` exactly, derivatives included.

    ``gammas`` selects the exponents of a LOG_S target (defaults to the
    source's when it is LOG_S).  Raises :class:`BranchError` when a log is
    taken of zero or of a negative real value.
    """
    if to is ChartId.LOG_S and gammas is None:
        gammas = state.gammas
        if gammas is None:
            raise ValueError("a LOG_S target needs (gamma0, gamma1)")
    if to is state.chart and (to is not ChartId.LOG_S or tuple(gammas) == tuple(state.gammas)):
        return state
    # V_S <-> V_R share the stored values; only the variable changes.
    if {state.chart, to} == {ChartId.V_S, ChartId.V_R}:
        t = to_acb(state.t)
        nt = t.exp() if to is ChartId.V_R else _log(t, "r", t)
        return ChartState(to, nt, state.y)
    return _from_common(to, *_to_common(state), gammas=gammas)


# -- deviated seed ----------------------------------------------------------


@dataclass(frozen=True)
class DeviatedSeed:
    state: ChartState
    dropped: arb
    """Size of the neglected second-iterate terms (relative)."""


def _in_triangle(g0, g1) -> bool:
    return g0 > -1 and g1 < 1 and g0 - g1 < 2


def deviated_seed(gamma0: Number, gamma1: Number, c0: Number, c1: Number, s: Number, prec: int) -> DeviatedSeed:
    """V_S state at ``s`` from one Picard iterate around ``v ~ c e^{gamma s}``.

    The iterate multiplies ``c0 e^{gamma0 s}`` and ``c1 e^{gamma1 s}`` by the
    exponentials of three correction terms, growing like ``e^{2(1+gamma0)s}``,
    ``e^{(2-gamma0+gamma1)s}`` and ``e^{2(1-gamma1)s}``.  The dropped terms of
    the next iterate are of the order of the square of the largest one; the
    call is rejected unless that is below ``10**-prec``.
    """
    with workdps(prec):
        g0, g1 = to_arb(gamma0), to_arb(gamma1)
        if not _in_triangle(g0, g1):
            raise ValueError("(gamma0, gamma1) must lie strictly inside the triangle")
        c0, c1 = to_arb(c0), to_arb(c1)
        if not (c0 > 0 and c1 > 0):
            raise ValueError("c0 and c1 must be positive")
        s = to_arb(s)
        ka, kb, kc = 2 * (1 + g0), 2 - g0 + g1, 2 * (1 - g1)
        ta = c0 * c0 / ((1 + g0) ** 2) * (ka * s).exp()
        tb = 4 * c1 / (c0 * kb * kb) * (kb * s).exp()
        tc = 1 / (c1 * c1 * (1 - g1) ** 2) * (kc * s).exp()
        worst = max(abs(ta), abs(tb), abs(tc), key=lambda x: float(x.mid().log()))
        dropped = worst * worst
        if not dropped < arb(10) ** (-prec):
            rate = min(float(ka.mid()), float(kb.mid()), float(kc.mid()))
            need = -prec * math.log(10) / (2 * rate)
            raise ValueError(f"s = {float(s.mid())} is not negative enough for a {prec}-digit seed; need s < {need:.1f}")
        v0 = c0 * (g0 * s + ta - tb).exp()
        v1 = c1 * (g1 * s + tb - tc).exp()
        d0 = v0 * (g0 + ka * ta - kb * tb)
        d1 = v1 * (g1 + kb * tb - kc * tc)
        state = ChartState(ChartId.V_S, acb(s), tuple(acb(x) for x in (v0, v1, d0, d1)))
    return DeviatedSeed(state, dropped)
