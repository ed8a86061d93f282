"""Initial data at large r built from the Stokes data.

Linearizing about the vacuum gives ``wp ~ -(sqrt2/pi) s1 K0(2 sqrt2 r)`` and
``wm ~ (s2/pi) K0(4r)``.  The quadratic terms of the system then drive a
first-order correction, the decaying solution of::

    u'' + u'/r - k^2 u = 2 f,    u(r) = 2 [K0(kr) J_I(r) - I0(kr) J_K(r)]

with ``J_X(r) = int_r^inf X0(k rho) f(rho) rho drho``.  For ``wp`` we have
``k = 2 sqrt2`` and ``f = 8 wp0 wm0``; for ``wm`` we have ``k = 4`` and
``f = 4 wp0^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from flint import arb

from .asymptotics import StokesPair
from .glrk import nodes_weights
from .mpsf import Number, bessel_k_accurate, to_arb, workdps

MIN_RADIUS = 20
SAFETY = 10
QUAD_PAD = 30
PANEL_WIDTH = 4
# exponential rate bounding the integrand's growth on a panel (2k for k = 2 sqrt2)
PANEL_RATE = 4 * math.sqrt(2) * 2


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, achieved=None):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class FarFieldSeed:
    r0: arb
    wp: arb
    dwp: arb
    wm: arb
    dwm: arb
    certified_rel_err: arb

    def as_vector(self):
        return [self.wp, self.wm, self.dwp, self.dwm]


def _leading(s1: arb, s2: arb, r: arb):
    kp = 2 * arb(2).sqrt()
    pi = arb.pi()
    cp = -arb(2).sqrt() / pi * s1
    cm = s2 / pi
    xp, xm = kp * r, 4 * r
    wp = cp * bessel_k_accurate(0, xp)
    dwp = -cp * kp * bessel_k_accurate(1, xp)
    wm = cm * bessel_k_accurate(0, xm)
    dwm = -cm * 4 * bessel_k_accurate(1, xm)
    return wp, dwp, wm, dwm


def leading_far_field(p: StokesPair, r: Number, prec: int = 50):
    """(wp0, dwp0, wm0, dwm0) at ``r``: the Bessel K0 leading terms."""
    with workdps(prec + 10):
        r = to_arb(r)
        if not r > 0:
            raise ValueError("r must be positive")
        return _leading(to_arb(p.s1), to_arb(p.s2), r)


def _panel_integrals(integrand, r: arb, length: int, width: arb, nodes, weights):
    """(J_I, J_K) on [r, r + length] with Gauss panels of the given width.

    ``integrand(rho)`` returns ``(I0(k rho) f(rho), K0(k rho) f(rho))``.
    """
    ji = arb(0)
    jk = arb(0)
    npanels = int(math.ceil(length / float(width.mid())))
    for j in range(npanels):
        a = r + width * j
        for x, w in zip(nodes, weights):
            rho = a + width * x
            gi, gk = integrand(rho)
            ji += gi * rho * w
            jk += gk * rho * w
    return ji * width, jk * width


def gauss_nodes_for(width: float, rate: float, digits: int) -> int:
    """Smallest n with ``(rate width / 2)^(2n) / (2n)! < 10^-digits``.

    This is the Gauss-Legendre error term for an integrand behaving like
    ``exp(rate x)`` on a panel of the given width.
    """
    a = math.log(rate * width / 2)
    n = 1
    while (2 * n * a - math.lgamma(2 * n + 1)) / math.log(10) > -digits:
        n += 1
    return n


def _tail_length(rate: float, r: float, digits: int) -> int:
    # integrand ~ exp(-rate * rho); the tail beyond r + T is below 10^-digits relative
    return int(math.ceil(digits * math.log(10) / rate)) + 2


def corrected_far_field(p: StokesPair, r: Number, prec: int) -> FarFieldSeed:
    """Seed at ``r`` with the first-order nonlinear correction.

    The correction integrals are evaluated by composite Gauss-Legendre
    panels of width 4 at ``prec + 30`` digits and certified by repeating
    the sum on panels of width 2.
    """
    with workdps(prec + QUAD_PAD):
        r = to_arb(r)
        if not r >= MIN_RADIUS:
            raise ValueError(f"corrected far field needs r >= {MIN_RADIUS}")
        s1, s2 = to_arb(p.s1), to_arb(p.s2)
        kp = 2 * arb(2).sqrt()
        pi = arb.pi()
        cp = -arb(2).sqrt() / pi * s1
        cm = s2 / pi

        def integrand_p(rho):
            # f = 8 wp0 wm0, kernel k = 2 sqrt2 shares K0(k rho) with wp0
            kp_rho = kp * rho
            k0p = bessel_k_accurate(0, kp_rho)
            f = 8 * cp * cm * k0p * bessel_k_accurate(0, 4 * rho)
            return kp_rho.bessel_i(0) * f, k0p * f

        def integrand_m(rho):
            # f = 4 wp0^2, kernel k = 4
            k0p = bessel_k_accurate(0, kp * rho)
            f = 4 * (cp * k0p) ** 2
            x = 4 * rho
            return x.bessel_i(0) * f, bessel_k_accurate(0, x) * f

        digits = prec + QUAD_PAD
        nnodes = gauss_nodes_for(PANEL_WIDTH, PANEL_RATE, digits)
        nodes, weights = nodes_weights(nnodes, digits + 10)
        nodes = [to_arb(x) for x in nodes]
        weights = [to_arb(x) for x in weights]
        rf = float(r.mid())
        # I0(k rho) f rho decays like exp(-4 rho) for wp and exp(-(4 sqrt2 - 4) rho) for wm
        plans = [
            (integrand_p, _tail_length(4.0, rf, digits)),
            (integrand_m, _tail_length(4 * math.sqrt(2) - 4, rf, digits)),
        ]
        results = []
        for integrand, length in plans:
            if s1.is_zero():
                results.append((arb(0), arb(0)))
                continue
            coarse = _panel_integrals(integrand, r, length, arb(PANEL_WIDTH), nodes, weights)
            fine = _panel_integrals(integrand, r, length, arb(PANEL_WIDTH) / 2, nodes, weights)
            for a, b in zip(coarse, fine):
                scale = abs(b)
                if scale.is_zero():
                    continue
                # midpoints: the rule error, not the spread inherited from the Stokes data
                rel = abs(a.mid() - b.mid()) / scale.mid()
                if not rel < arb(10) ** (-(prec + 10)):
                    raise QuadratureError(
                        "correction integral failed to certify", achieved=float((rel.mid().log() / arb(10).log()).mid())
                    )
            results.append(fine)
        (ji_p, jk_p), (ji_m, jk_m) = results
        wp, dwp, wm, dwm = _leading(s1, s2, r)
        xp, xm = kp * r, 4 * r
        wp1 = 2 * (bessel_k_accurate(0, xp) * ji_p - xp.bessel_i(0) * jk_p)
        dwp1 = -2 * kp * (bessel_k_accurate(1, xp) * ji_p + xp.bessel_i(1) * jk_p)
        wm1 = 2 * (bessel_k_accurate(0, xm) * ji_m - xm.bessel_i(0) * jk_m)
        dwm1 = -2 * 4 * (bessel_k_accurate(1, xm) * ji_m + xm.bessel_i(1) * jk_m)
        C = SAFETY * (1 + abs(s1) + abs(s2)) ** 2
        cert = C / r * (-2 * kp * r).exp()
        out = [x.mid() for x in (wp + wp1, dwp + dwp1, wm + wm1, dwm + dwm1)]
    return FarFieldSeed(r, out[0], out[1], out[2], out[3], cert)
