"""Arbitrary-precision scalars and the special functions the tt* formulas use.

Real values are :class:`flint.arb` balls and complex values are
:class:`flint.acb` balls.  A ball carries its own error radius, so every value
reports how many digits it can be trusted to (:func:`accurate_digits`).
Working precision is set with :func:`workdps`; all public functions taking a
``prec`` argument evaluate with ``prec`` decimal digits plus a small guard.
"""
from __future__ import annotations

import contextlib
import math
import re
from fractions import Fraction
from typing import Iterator, Union

import flint
from flint import acb, arb, fmpq

BigReal = arb
BigComplex = acb
Number = Union[int, Fraction, str, float, arb, acb, fmpq]

MIN_DPS = 10
GUARD_DPS = 10
DEFAULT_PAD = 20

CONSTANTS = ("pi", "euler_gamma", "ln2", "zeta3")

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*([+-]?\d+)\s*$")


class PoleError(ValueError):
    """Raised when a function is evaluated at (or numerically on) a pole."""

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


@contextlib.contextmanager
def workdps(dps: int) -> Iterator[None]:
    """Temporarily set the working precision to ``dps`` decimal digits."""
    dps = int(dps)
    if dps < MIN_DPS:
        raise ValueError(f"precision must be at least {MIN_DPS} digits, got {dps}")
    saved = flint.ctx.prec
    flint.ctx.dps = dps
    try:
        yield
    finally:
        flint.ctx.prec = saved


def current_dps() -> int:
    return flint.ctx.dps


def parse_rational(text: str) -> Fraction | None:
    """Parse ``"p/q"`` or an integer/decimal literal exactly; None otherwise."""
    m = _RATIONAL_RE.match(text)
    if m:
        return Fraction(int(m.group(1)), int(m.group(2)))
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        return None


def to_arb(x: Number) -> arb:
    """Convert ``x`` to an arb ball; existing balls pass through unrounded.

    Strings may be exact rationals (``"1/3"``), decimal literals, or the
    form ``"sqrt(q)"`` for a rational ``q``.  Floats are accepted but carry
    only binary double information.
    """
    if isinstance(x, arb):
        return x
    if isinstance(x, acb):
        if not x.imag.is_zero():
            raise ValueError(f"expected a real value, got {x}")
        return x.real
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return arb(x)
    if isinstance(x, Fraction):
        return arb(fmpq(x.numerator, x.denominator))
    if isinstance(x, fmpq):
        return arb(x)
    if isinstance(x, float):
        return arb(x)
    if isinstance(x, str):
        s = x.strip()
        if s.startswith("sqrt(") and s.endswith(")"):
            inner = to_arb(s[5:-1])
            if inner < 0:
                raise ValueError(f"sqrt of a negative number: {x!r}")
            return inner.sqrt()
        if s.startswith("-sqrt(") and s.endswith(")"):
            return -to_arb(s[1:])
        q = parse_rational(s)
        if q is not None:
            return to_arb(q)
        return arb(s)
    raise TypeError(f"cannot convert {type(x).__name__} to a real number")


def to_acb(x: Number) -> acb:
    if isinstance(x, acb):
        return x
    if isinstance(x, arb):
        return acb(x)
    if isinstance(x, complex):
        return acb(x.real, x.imag)
    return acb(to_arb(x))


def exact_fraction(x) -> Fraction | None:
    """Return ``x`` as an exact Fraction when it is an exact rational input."""
    if isinstance(x, bool):
        return None
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return parse_rational(x)
    return None


def mid(x):
    """Midpoint of a ball (drops the radius)."""
    return x.mid()


def is_real(z, tol=None) -> bool:
    """True when ``z`` is real, or has imaginary part below ``tol``."""
    if isinstance(z, arb):
        return True
    im = z.imag
    if im.is_zero():
        return True
    if tol is None:
        return False
    return abs(im.mid()) <= to_arb(tol)


def accurate_digits(x) -> float:
    """Number of correct significant decimal digits certified by the ball."""
    bits = x.rel_accuracy_bits()
    return bits * math.log10(2)


def digits_agree(a, b) -> float:
    """Number of leading decimal digits on which ``a`` and ``b`` agree.

    Computed as ``-log10(|a - b| / |b|)``; returns ``inf`` for exact equality.
    """
    a = to_acb(a).mid()
    b = to_acb(b).mid()
    diff = abs(a - b)
    if diff.is_zero():
        return math.inf
    scale = abs(b)
    if scale.is_zero():
        return -float((diff.log() / arb(10).log()).mid())
    return -float(((diff / scale).log() / arb(10).log()).mid())


def to_decimal(x, digits: int) -> str:
    """Decimal string of the midpoint with ``digits`` significant digits."""
    if isinstance(x, acb):
        if x.imag.is_zero():
            return to_decimal(x.real, digits)
        re_s = to_decimal(x.real, digits)
        im_s = to_decimal(x.imag, digits)
        sign = "" if im_s.startswith("-") else "+"
        return f"{re_s}{sign}{im_s}j"
    x = to_arb(x)
    if x.mid().is_zero():
        return "0"
    return x.mid().str(digits, radius=False, more=True)


def log10(x) -> arb:
    return x.log() / arb(10).log()


# -- constants -------------------------------------------------------------


def const(name: str, prec: int) -> arb:
    """Named mathematical constant to ``prec`` digits.

    Args:
        name: one of ``pi``, ``euler_gamma``, ``ln2``, ``zeta3``.
        prec: decimal digits.
    """
    if name not in CONSTANTS:
        raise ValueError(f"unknown constant {name!r}; expected one of {CONSTANTS}")
    with workdps(prec + GUARD_DPS):
        if name == "pi":
            return arb.pi()
        if name == "euler_gamma":
            return arb.const_euler()
        if name == "ln2":
            return arb.const_log2()
        return arb(3).zeta()


# -- gamma family ----------------------------------------------------------


def _nonpositive_integer(x) -> int | None:
    """Return n if the ball x could be the nonpositive integer n."""
    if isinstance(x, acb):
        if not x.imag.contains(0):
            return None
        x = x.real
    if x > 0.5:
        return None
    n = int(math.floor(float(x.mid()) + 0.5))
    if n > 0:
        return None
    return n if x.contains(n) else None


def _check_pole(x, what: str) -> None:
    n = _nonpositive_integer(x)
    if n is not None:
        raise PoleError(f"{what} has a pole at {n}", location=n)


def gamma_fn(x: Number, prec: int):
    """Γ(x) for real or complex ``x``; rejects the poles 0, -1, -2, ..."""
    with workdps(prec + GUARD_DPS):
        z = x if isinstance(x, (arb, acb)) else to_arb(x)
        _check_pole(z, "Gamma")
        return z.gamma()


def log_gamma_fn(x: Number, prec: int):
    """Principal log Γ(x), continuous off the negative real axis."""
    with workdps(prec + GUARD_DPS):
        z = x if isinstance(x, (arb, acb)) else to_arb(x)
        _check_pole(z, "log Gamma")
        return z.lgamma()


def digamma_fn(x: Number, prec: int):
    """ψ(x) = Γ'(x)/Γ(x) for real or complex ``x``."""
    with workdps(prec + GUARD_DPS):
        z = x if isinstance(x, (arb, acb)) else to_arb(x)
        _check_pole(z, "digamma")
        return z.digamma()


# -- Bessel functions ------------------------------------------------------


def bessel0(kind: str, x: Number, prec: int) -> arb:
    """Modified Bessel function I₀(x) or K₀(x) for real ``x > 0``.

    Arb selects between the convergent series and the asymptotic expansion
    and returns a certified enclosure on both branches.
    """
    return _bessel(kind, 0, x, prec)


def bessel1(kind: str, x: Number, prec: int) -> arb:
    """I₁(x) or K₁(x); I₀' = I₁ and K₀' = -K₁."""
    return _bessel(kind, 1, x, prec)


def _bessel(kind: str, order: int, x: Number, prec: int) -> arb:
    if kind not in ("I", "K"):
        raise ValueError(f"kind must be 'I' or 'K', got {kind!r}")
    with workdps(prec + GUARD_DPS):
        z = to_arb(x)
        if not z > 0:
            raise ValueError(f"Bessel argument must be positive, got {z}")
        if kind == "I":
            return z.bessel_i(order)
    return bessel_k_accurate(order, z, prec + GUARD_DPS)


def bessel_k_accurate(order: int, x: arb, dps: int | None = None) -> arb:
    """K_order(x), order 0 or 1, to ``dps`` digits (default: current precision).

    For large ``x`` at high precision Arb's ``bessel_k`` can fall back to a
    series that cancels about ``2x/ln10`` digits, is slow, and amplifies the
    input radius by ``exp(2x)``.  Above ``x = 2`` we use instead
    ``K_n(x) = sqrt(pi) (2x)^n exp(-x) U(n + 1/2, 2n + 1, 2x)`` at the exact
    midpoint and propagate the input radius afterwards with ``|K0'| = K1``
    and ``|K1'| <= K1 (1 + 1/x)``.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if dps is None:
        dps = current_dps()
    m = x.mid()
    if not m > 2:
        with workdps(dps):
            return x.bessel_k(order)
    with workdps(dps + GUARD_DPS):
        z = 2 * m
        if order == 0:
            v = arb.pi().sqrt() * (-m).exp() * z.hypgeom_u(arb(1) / 2, 1)
        else:
            v = arb.pi().sqrt() * z * (-m).exp() * z.hypgeom_u(arb(3) / 2, 3)
    rad = x.rad()
    if rad.is_zero():
        return v
    with workdps(20):
        lo = (m - rad).lower()
        if not lo > 0:
            raise ValueError("Bessel K argument ball reaches zero")
        slope = lo.bessel_k(1).upper()
        if order == 1:
            slope = slope * (1 + 1 / lo)
        err = (slope * rad).upper()
    # add at working precision; the caller's context may be at 53 bits
    with workdps(dps + GUARD_DPS):
        return v + arb(0, err)
