"""Arbitrary-precision Gauss-Legendre implicit Runge-Kutta integration.

The n-stage Gauss method is the collocation method at the zeros of the
shifted Legendre polynomial; it has order 2n and is symmetric.  Steps are
taken along straight chords in the complex plane of the independent
variable, so paths may be lines or circular arcs (polygons with vertices on
the circle).  The stage system is solved by fixed-point iteration, switching
to simplified Newton when the iteration contracts too slowly.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

from flint import acb, acb_mat, arb, arb_mat

from .mpsf import DEFAULT_PAD, GUARD_DPS, Number, to_acb, to_arb, workdps

Vector = List[acb]
RHS = Callable[[acb, Vector], Vector]


class TruncationWarning(UserWarning):
    """The configured step and stage count cannot reach the working precision."""


class IntegrationError(RuntimeError):
    """Base class for failures while stepping; carries the path position."""

    def __init__(self, message: str, position=None):
        super().__init__(message)
        self.position = position


class StageDivergence(IntegrationError):
    """The implicit stage equations could not be solved.

    Usually means the step reached too close to a singularity of the solution.
    """


class NonConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings of the Gauss-Legendre integrator.

    ``prec`` is the working precision in decimal digits (pipelines pass the
    target precision plus their padding).  ``stage_tol`` defaults to
    ``10**-(prec - 10)``.
    """

    stages: int = 24
    step: Number = Fraction(1, 20)
    prec: int = 80
    stage_tol: Optional[Number] = None
    max_stage_iters: int = 200
    newton_switch: float = 0.5

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if to_arb(self.step) <= 0:
            raise ValueError("step must be positive")
        # prec includes the pipelines' padding; the target is about 20 digits less
        if self.truncation_estimate() > -(self.prec - DEFAULT_PAD):
            warnings.warn(
                f"step**(2*stages) = 1e{self.truncation_estimate():.0f} exceeds the target 1e-{self.prec - DEFAULT_PAD}",
                TruncationWarning,
                stacklevel=3,
            )

    @property
    def tolerance(self) -> arb:
        with workdps(self.prec):
            if self.stage_tol is not None:
                return to_arb(self.stage_tol)
            return arb(10) ** (-(self.prec - 10))

    def truncation_estimate(self) -> float:
        """log10 of step**(2 * stages), the nominal local truncation size."""
        return 2 * self.stages * math.log10(float(to_arb(self.step).mid()))


# -- nodes and weights ---------------------------------------------------


def _legendre_and_derivative(n: int, x: arb):
    p0, p1 = arb(1), x
    if n == 0:
        return p0, arb(0)
    for k in range(2, n + 1):
        # midpoints: ball radii compound through the recurrence and would stop
        # the Newton iteration long before the root is resolved
        p0, p1 = p1, (((2 * k - 1) * x * p1 - (k - 1) * p0) / k).mid()
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@functools.lru_cache(maxsize=32)
def _nodes_weights_cached(n: int, prec: int):
    if n < 1:
        raise ValueError("number of nodes must be >= 1")
    with workdps(prec + 2 * GUARD_DPS):
        tol = arb(10) ** (-(prec + 5))
        pi = arb.pi()
        xs, ws = [], []
        for i in range(1, n + 1):
            x = (pi * (4 * i - 1) / (4 * n + 2)).cos()
            for _ in range(200):
                p, dp = _legendre_and_derivative(n, x)
                dx = p / dp
                x = (x - dx).mid()
                if abs(dx.mid()) < tol:
                    break
            else:
                raise NonConvergence(f"Newton iteration for Legendre root {i} of degree {n} failed")
            _, dp = _legendre_and_derivative(n, x)
            xs.append(x)
            ws.append((2 / ((1 - x * x) * dp * dp)).mid())
        nodes = [((1 - x) / 2).mid() for x in xs]
        weights = [(w / 2).mid() for w in ws]
    return tuple(nodes), tuple(weights)


def nodes_weights(n: int, prec: int):
    """Gauss-Legendre nodes in (0, 1), ascending, with weights summing to 1."""
    nodes, weights = _nodes_weights_cached(int(n), int(prec))
    return list(nodes), list(weights)


# -- Butcher tableau -----------------------------------------------------


class Tableau:
    """Gauss-Legendre Butcher tableau with the derived matrices the stepper needs."""

    def __init__(self, n: int, prec: int):
        self.n = n
        self.prec = prec
        c, b = nodes_weights(n, prec + n // 2 + 20)
        self.c = c
        self.b = b
        self.A = self._collocation_matrix(c)
        with workdps(prec + GUARD_DPS):
            self.c_acb = [acb(x) for x in c]
            self.b_acb = [acb(x) for x in b]
            self.A_acb = acb_mat(self.A)
        self._extrap = None
        self._eig = None

    def _collocation_matrix(self, c) -> arb_mat:
        # a_ij = int_0^{c_i} l_j; solved in the basis (2x - 1)^k, with enough
        # guard digits that the ball radii certify the working precision.
        n = self.n
        guard = n // 2 + 20
        while True:
            with workdps(self.prec + guard):
                u = [2 * x - 1 for x in c]
                V = arb_mat(n, n)
                for k in range(n):
                    for j in range(n):
                        V[k, j] = u[j] ** k
                R = arb_mat(n, n)
                for k in range(n):
                    sign = -1 if k % 2 == 0 else 1
                    for i in range(n):
                        R[k, i] = (u[i] ** (k + 1) - sign) / (2 * (k + 1))
                X = V.solve(R)  # X[j, i] = a_ij
                A = arb_mat(n, n)
                worst = math.inf
                for i in range(n):
                    for j in range(n):
                        a = X[j, i]
                        A[i, j] = a.mid()
                        if not a.is_zero():
                            worst = min(worst, a.rel_accuracy_bits())
            if worst * math.log10(2) >= self.prec + 5:
                return A
            guard *= 2

    @property
    def extrapolation(self) -> acb_mat:
        """E[i, j] = l_j(1 + c_i): predicts next-step stage slopes from this step's."""
        if self._extrap is None:
            n = self.n
            with workdps(self.prec + GUARD_DPS):
                E = acb_mat(n, n)
                for i in range(n):
                    x = 1 + self.c[i]
                    for j in range(n):
                        v = arb(1)
                        for k in range(n):
                            if k != j:
                                v *= (x - self.c[k]) / (self.c[j] - self.c[k])
                        E[i, j] = v
                self._extrap = E
        return self._extrap

    @property
    def eigensystem(self):
        """(lambda_i, T, T^-1) with A = T diag(lambda) T^-1, for simplified Newton."""
        if self._eig is None:
            with workdps(self.prec + self.n // 2 + GUARD_DPS):
                lam, T = self.A_acb.eig(right=True)
                Tinv = T.inv()
            with workdps(self.prec + GUARD_DPS):
                self._eig = ([x.mid() for x in lam], T.mid(), Tinv.mid())
        return self._eig


@functools.lru_cache(maxsize=16)
def tableau(n: int, prec: int) -> Tableau:
    return Tableau(n, prec)


# -- single step ----------------------------------------------------------


@dataclass
class StepResult:
    y: Vector
    K: acb_mat
    iterations: int
    newton: bool


def _finite(v: acb) -> bool:
    return v.is_finite()


class GaussLegendre:
    """Fixed-order Gauss-Legendre stepper bound to a configuration."""

    def __init__(self, cfg: IntegratorConfig):
        self.cfg = cfg
        self.tab = tableau(cfg.stages, cfg.prec)
        with workdps(cfg.prec):
            self.tol = cfg.tolerance

    # The stage unknowns are the slopes K (n x m); stage values are
    # Y_i = y + h * sum_j a_ij K_j.
    def _stage_values(self, y: Vector, hAK: acb_mat, m: int) -> List[Vector]:
        return [[y[c] + hAK[i, c] for c in range(m)] for i in range(self.tab.n)]

    def _evaluate(self, rhs: RHS, t: acb, h: acb, Y: List[Vector], m: int) -> acb_mat:
        n = self.tab.n
        F = acb_mat(n, m)
        c = self.tab.c_acb
        for i in range(n):
            f = rhs(t + c[i] * h, Y[i])
            for k in range(m):
                v = f[k]
                if not _finite(v):
                    raise StageDivergence(f"non-finite slope at stage {i}", position=t)
                F[i, k] = v.mid()
        return F

    def _defect(self, F: acb_mat, K: acb_mat, y: Vector, h: acb, m: int):
        """Per-component size of the update defect relative to the state."""
        n = self.tab.n
        habs = abs(h)
        worst = arb(0)
        for k in range(m):
            dk = arb(0)
            kk = arb(0)
            for i in range(n):
                d = (F[i, k] - K[i, k]).abs_upper()
                if d > dk:
                    dk = d
                a = F[i, k].abs_upper()
                if a > kk:
                    kk = a
            scale = max_arb(abs(y[k]).abs_upper(), habs * kk)
            err = habs * dk
            if err.is_zero():
                continue
            if scale.is_zero():
                return arb("inf")
            rel = err / scale
            if rel > worst:
                worst = rel
        return worst

    def step(self, rhs: RHS, t: acb, y: Vector, h: acb, guess: Optional[acb_mat] = None) -> StepResult:
        cfg = self.cfg
        tab = self.tab
        n, m = tab.n, len(y)
        with workdps(cfg.prec):
            t = to_acb(t)
            h = to_acb(h)
            y = [to_acb(v) for v in y]
            hA = tab.A_acb * h
            if guess is None:
                f0 = rhs(t, y)
                K = acb_mat(n, m, [f0[k] for _ in range(n) for k in range(m)])
            else:
                K = guess
            prev = None
            newton = False
            iterations = 0
            while True:
                iterations += 1
                if iterations > cfg.max_stage_iters:
                    raise StageDivergence(
                        f"stage iteration did not converge in {cfg.max_stage_iters} iterations",
                        position=t,
                    )
                F = self._evaluate(rhs, t, h, self._stage_values(y, hA * K, m), m)
                err = self._defect(F, K, y, h, m)
                if err <= self.tol:
                    K = F
                    break
                if not err.is_finite():
                    raise StageDivergence("stage iteration produced non-finite values", position=t)
                if prev is not None and not newton and err > prev * cfg.newton_switch:
                    newton = True
                    jac = self._jacobian(rhs, t + h / 2, y, m)
                    solvers = self._newton_solvers(jac, h, m)
                if prev is not None and newton and err > prev * 4 and iterations > 6:
                    raise StageDivergence("simplified Newton diverged", position=t)
                prev = err
                if newton:
                    K = self._newton_update(K, F, solvers, m)
                else:
                    K = F
            ynew = [y[k] for k in range(m)]
            for i in range(n):
                bi = tab.b_acb[i] * h
                for k in range(m):
                    ynew[k] += bi * K[i, k]
            ynew = [v.mid() for v in ynew]
        return StepResult(ynew, K, iterations, newton)

    def _jacobian(self, rhs: RHS, t: acb, y: Vector, m: int):
        eps = arb(10) ** (-(self.cfg.prec // 2))
        cols = []
        for k in range(m):
            d = eps * max_arb(arb(1), abs(y[k]).abs_upper())
            yp = list(y)
            ym = list(y)
            yp[k] = y[k] + d
            ym[k] = y[k] - d
            fp = rhs(t, yp)
            fm = rhs(t, ym)
            cols.append([(fp[i] - fm[i]) / (2 * d) for i in range(m)])
        return acb_mat(m, m, [cols[j][i] for i in range(m) for j in range(m)])

    def _newton_solvers(self, jac: acb_mat, h: acb, m: int):
        lam, T, Tinv = self.tab.eigensystem
        eye = acb_mat(m, m, [1 if i == j else 0 for i in range(m) for j in range(m)])
        # the Jacobian only steers the iteration, so its midpoint is enough
        jt = jac.transpose().mid()
        invs = []
        for li in lam:
            M = (eye - jt * (h * li)).mid()
            try:
                invs.append(M.inv().mid())
            except ZeroDivisionError:
                raise StageDivergence("Newton matrix is singular") from None
        return T, Tinv, invs

    def _newton_update(self, K: acb_mat, F: acb_mat, solvers, m: int) -> acb_mat:
        T, Tinv, invs = solvers
        n = self.tab.n
        G = acb_mat(n, m, [K[i, k] - F[i, k] for i in range(n) for k in range(m)])
        Gh = Tinv * G
        W = acb_mat(n, m)
        for i in range(n):
            row = acb_mat(1, m, [Gh[i, k] for k in range(m)]) * invs[i]
            for k in range(m):
                W[i, k] = -row[0, k]
        D = T * W
        return acb_mat(n, m, [(K[i, k] + D[i, k]).mid() for i in range(n) for k in range(m)])

    def predict(self, K: acb_mat, ratio=1) -> Optional[acb_mat]:
        """Stage slopes for the next step extrapolated from this step's polynomial."""
        if ratio != 1:
            return None
        return self.tab.extrapolation * K


def max_arb(a: arb, b: arb) -> arb:
    return a if a > b else b


def gl_step(rhs: RHS, t: Number, y: Sequence, h_dir: Number, cfg: IntegratorConfig) -> Vector:
    """One Gauss-Legendre step from ``t`` to ``t + h_dir``."""
    with workdps(cfg.prec):
        t, h = to_acb(t), to_acb(h_dir)
    return GaussLegendre(cfg).step(rhs, t, list(y), h).y


# -- paths ----------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    start: acb
    end: acb

    def length(self) -> arb:
        return abs(self.end - self.start)

    def point(self, frac) -> acb:
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i * theta)`` from ``from_angle`` to ``to_angle``.

    ``n_steps`` fixes the number of equal-angle chords; otherwise it follows
    from the configured arc-length step.
    """

    center: acb
    radius: arb
    from_angle: arb
    to_angle: arb
    n_steps: Optional[int] = None

    @property
    def start(self) -> acb:
        return self.point_at(self.from_angle)

    @property
    def end(self) -> acb:
        return self.point_at(self.to_angle)

    def point_at(self, theta) -> acb:
        return self.center + self.radius * acb(0, theta).exp()

    def length(self) -> arb:
        return abs(self.to_angle - self.from_angle) * self.radius


@dataclass
class ContourPath:
    segments: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)

    def validate(self, tol=None) -> None:
        tol = to_arb(tol) if tol is not None else arb(10) ** -20
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.end - b.start) > tol:
                raise ValueError(f"segments do not share an endpoint: {a.end} vs {b.start}")

    @property
    def start(self):
        return self.segments[0].start if self.segments else None


@dataclass
class TrajectoryPoint:
    t: acb
    y: Vector
    segment: int
    checkpoint: bool = False


@dataclass
class Trajectory:
    points: List[TrajectoryPoint]

    @property
    def final(self) -> TrajectoryPoint:
        return self.points[-1]

    def at(self, t, tol=None) -> TrajectoryPoint:
        """State stored at parameter value ``t`` (checkpoint or step point)."""
        t = to_acb(t)
        tol = to_arb(tol) if tol is not None else arb(10) ** -15
        best = None
        for p in self.points:
            if abs(p.t - t) <= tol:
                best = p
                if p.checkpoint:
                    return p
        if best is None:
            raise KeyError(f"no trajectory point at {t}")
        return best

    def checkpoints(self) -> List[TrajectoryPoint]:
        return [p for p in self.points if p.checkpoint]


def _segment_nodes(seg, cfg: IntegratorConfig, checkpoints) -> List[tuple]:
    """Ordered (t, is_checkpoint) node list along a segment, excluding its start."""
    step = to_arb(cfg.step)
    if isinstance(seg, Line):
        L = seg.length()
        if L.is_zero():
            return []
        fracs = []
        nsteps = int(math.ceil(float((L / step).mid()) - 1e-9))
        for k in range(1, nsteps):
            fracs.append((step * k / L, False))
        fracs.append((arb(1), False))
        d = seg.end - seg.start
        for cp in checkpoints:
            cp = to_acb(cp)
            f = (cp - seg.start) / d
            fm = f.real.mid()
            # a checkpoint at the segment end counts; one at its start belongs to the previous segment
            if abs(f.imag) < arb(10) ** -20 and fm > 0 and fm < 1 + arb(10) ** -25:
                fracs.append((fm, True))
        fracs.sort(key=lambda p: float(p[0].mid()))
        out = []
        for f, is_cp in fracs:
            if out and abs(out[-1][0] - f) < arb(10) ** -25:
                if is_cp:
                    out[-1] = (out[-1][0], True)
                continue
            out.append((f, is_cp))
        return [(seg.point(f), cp) for f, cp in out]
    if isinstance(seg, Arc):
        sweep = seg.to_angle - seg.from_angle
        if seg.n_steps is not None:
            nsteps = seg.n_steps
        else:
            nsteps = max(1, int(math.ceil(float((abs(sweep) * seg.radius / step).mid()) - 1e-9)))
        return [(seg.point_at(seg.from_angle + sweep * k / nsteps), False) for k in range(1, nsteps + 1)]
    raise TypeError(f"unknown segment type {type(seg).__name__}")


def integrate_path(
    rhs: RHS,
    path: ContourPath,
    y0: Sequence,
    cfg: IntegratorConfig,
    on_step: Optional[Callable[[TrajectoryPoint], None]] = None,
    keep: bool = True,
) -> Trajectory:
    """Integrate along ``path`` and return the states at every node.

    A chord between two consecutive nodes is one Gauss-Legendre step, so the
    step length is ``cfg.step`` except where a segment end or checkpoint
    shortens it.  ``keep=False`` stores only the start, checkpoints and the
    final point.
    """
    stepper = GaussLegendre(cfg)
    with workdps(cfg.prec):
        y = [to_acb(v) for v in y0]
        if not path.segments:
            return Trajectory([TrajectoryPoint(acb(0), y, -1)])
        path.validate()
        t = to_acb(path.start).mid()
        points = [TrajectoryPoint(t, y, 0, checkpoint=_is_checkpoint(t, path.checkpoints))]
        guess, last_h = None, None
        for si, seg in enumerate(path.segments):
            for tn, is_cp in _segment_nodes(seg, cfg, path.checkpoints):
                # nodes are exact points of the path; a radius would only widen the stages
                tn = tn.mid()
                h = tn - t
                if guess is not None and last_h is not None and abs(h - last_h) < abs(h) * arb(10) ** -20:
                    pred = stepper.predict(guess)
                else:
                    pred = None
                try:
                    res = stepper.step(rhs, t, y, h, guess=pred)
                except IntegrationError as exc:
                    if exc.position is None:
                        exc.position = t
                    raise
                t, y = tn, res.y
                guess, last_h = res.K, h
                pt = TrajectoryPoint(t, y, si, checkpoint=is_cp)
                if keep or is_cp:
                    points.append(pt)
                if on_step is not None:
                    on_step(pt)
        if not keep and points[-1].t != t:
            points.append(TrajectoryPoint(t, y, len(path.segments) - 1))
    return Trajectory(points)


def _is_checkpoint(t, checkpoints) -> bool:
    return any(abs(to_acb(c) - t) < arb(10) ** -20 for c in checkpoints)


# -- Cauchy evaluation on a circle ---------------------------------------


def cauchy_eval(samples, center: Number, R: Number, s: Number):
    """Value at interior point ``s`` from equally spaced samples on a circle.

    ``samples`` is a sequence of ``(theta_j, values)`` covering [0, 2*pi)
    with equal spacing pi/n.  The trapezoidal rule on the periodic Cauchy
    integrand converges geometrically in ``|s - center| / R``.
    """
    center = to_acb(center)
    R = to_arb(R)
    s = to_acb(s)
    dist = abs(s - center)
    if dist >= R * 3 / 4:
        raise ValueError(
            f"point {s} is within R/4 of the circle; integrate along a chord instead"
        )
    count = len(samples)
    if count == 0:
        raise ValueError("no samples")
    m = len(samples[0][1])
    acc = [acb(0)] * m
    for theta, vals in samples:
        e = acb(0, to_arb(theta)).exp() * R
        wgt = e / (center + e - s)
        for k in range(m):
            acc[k] += vals[k] * wgt
    return [a / count for a in acc]


def winding_number(samples, center: Number, R: Number, index: int = 0, deriv_index: Optional[int] = None):
    """Argument-principle count (zeros minus poles) of component ``index``.

    ``deriv_index`` names the component holding its derivative with respect
    to the independent variable; without it the winding is taken from the
    unwrapped phase of the samples.
    """
    if deriv_index is None:
        total = 0.0
        prev = None
        for _, vals in samples + samples[:1]:
            # arg of the midpoint: a ball straddling the negative axis has arg 0 +/- pi
            ph = float(to_acb(vals[index]).mid().arg().mid())
            if prev is not None:
                d = ph - prev
                while d > math.pi:
                    d -= 2 * math.pi
                while d < -math.pi:
                    d += 2 * math.pi
                total += d
            prev = ph
        return total / (2 * math.pi)
    center = to_acb(center)
    R = to_arb(R)
    count = len(samples)
    acc = acb(0)
    for theta, vals in samples:
        e = acb(0, to_arb(theta)).exp() * R
        acc += vals[deriv_index] / vals[index] * e
    val = acc / count
    return val
