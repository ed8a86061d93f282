"""End-to-end numerical experiments built from the other modules.

Three pipelines are provided:

* :func:`verify_fine_structure` integrates a smooth (in-triangle) solution
  from a far-field seed down to ``r = 1`` and then in ``s = ln r`` to the
  depth where the case's truncated equation is exact to working precision,
  and tabulates the distance to the predicted asymptote.
* :func:`omega1_run` does the same for a point of the region Omega1, where
  ``v1 = e^{2 w1}`` has infinitely many zeros on the negative ``s`` axis; the
  path detours around each of them on a circle.
* :func:`deviation_run` starts from asymptotic data that violate the
  connection formula, integrates outward in ``r`` and locates the first
  singularity.

Every run carries a :class:`RunProfile`.  A second, refined run started
further out gives the error estimates (:func:`error_audit`).
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from flint import acb, arb

from .asymptotics import (
    ExponentData,
    RegionLabel,
    SMOOTH_CASES,
    StokesPair,
    classify_stokes,
    exponent_data,
    fine_structure_predict,
    gamma_from_stokes,
    stokes_from_gamma,
)
from .charts import (
    ChartId,
    ChartSingularity,
    ChartState,
    chart_transition,
    deviated_seed,
    make_rhs_log_s,
    rhs_v_r,
    rhs_v_s,
    rhs_wpwm_r,
)
from .farfield import FarFieldSeed, corrected_far_field
from .glrk import (
    Arc,
    ContourPath,
    GaussLegendre,
    IntegrationError,
    IntegratorConfig,
    Line,
    Trajectory,
    TrajectoryPoint,
    cauchy_eval,
    integrate_path,
    winding_number,
)
from .mpsf import Number, exact_fraction, to_acb, to_arb, to_decimal, workdps

DEFAULT_PAD = 20
SAFETY_DIGITS = 2
CIRCLE_RADIUS = Fraction(1, 5)
CHORD_LENGTH = Fraction(1, 10)
SCAN_OFFSET = Fraction(1, 100)
SEED_S = -100
R_MAX = 6
BRACKET_TOL = Fraction(1, 10**7)


class ContourError(RuntimeError):
    """The detour contour cannot be built (zeros too close to each other or to a sample)."""


# -- profiles -------------------------------------------------------------


@dataclass
class RunProfile:
    """Everything that determines a run.

    ``prec`` is the target number of digits; integrations and seeds work
    with ``prec + pad``.  ``s_final=None`` picks the depth from the case's
    truncation bound.  ``cauchy_n=None`` picks the number of circle samples
    (``2n``) so the trapezoidal Cauchy formula is exact to working precision
    at the chord ends.
    """

    prec: int = 60
    r_start: Number = 30
    r_refined: Optional[Number] = None
    s_final: Optional[Number] = None
    integrator: Optional[IntegratorConfig] = None
    case: Optional[RegionLabel] = None
    inputs: object = None
    deviation: Optional[Tuple[Number, Number]] = None
    pad: int = DEFAULT_PAD
    name: str = "custom"
    cauchy_n: Optional[int] = None
    scan_offset: Number = SCAN_OFFSET
    r_max: Number = R_MAX
    s_seed: Number = SEED_S
    audit: bool = True

    def __post_init__(self):
        if self.r_refined is None:
            self.r_refined = to_arb(self.r_start) + 10 if not _is_exact(self.r_start) else Fraction(self.r_start) + 10
        if self.integrator is None:
            self.integrator = IntegratorConfig(prec=self.prec + self.pad)
        elif self.integrator.prec < self.prec:
            self.integrator = replace(self.integrator, prec=self.prec + self.pad)
        with workdps(self.work_prec):
            if not to_arb(self.r_refined) > to_arb(self.r_start):
                raise ValueError("r_refined must exceed r_start")
            if self.s_final is not None and not to_arb(self.s_final) < 0:
                raise ValueError("s_final must be negative")

    @property
    def work_prec(self) -> int:
        return self.integrator.prec

    @classmethod
    def desk(cls, **kw) -> "RunProfile":
        """60 digits, 24 stages, step 1/20, seeded at r = 30 (refined run at r = 35)."""
        prec = kw.pop("prec", 60)
        cfg = IntegratorConfig(stages=24, step=Fraction(1, 20), prec=prec + kw.get("pad", DEFAULT_PAD))
        base = dict(prec=prec, r_start=30, r_refined=35, integrator=cfg, name="desk")
        base.update(kw)
        return cls(**base)

    @classmethod
    def paper(cls, **kw) -> "RunProfile":
        """100 digits, 100 stages, step 1/100, seeded at r = 45 (refined run at r = 55)."""
        prec = kw.pop("prec", 100)
        cfg = IntegratorConfig(stages=100, step=Fraction(1, 100), prec=prec + kw.get("pad", DEFAULT_PAD))
        base = dict(prec=prec, r_start=45, r_refined=55, integrator=cfg, name="paper", cauchy_n=1000)
        base.update(kw)
        return cls(**base)

    @classmethod
    def named(cls, name: str, **kw) -> "RunProfile":
        if name == "desk":
            return cls.desk(**kw)
        if name == "paper":
            return cls.paper(**kw)
        raise ValueError(f"unknown profile {name!r}; expected 'desk' or 'paper'")

    def to_dict(self) -> dict:
        cfg = self.integrator
        out = {
            "name": self.name,
            "prec": self.prec,
            "pad": self.pad,
            "r_start": _num_str(self.r_start),
            "r_refined": _num_str(self.r_refined),
            "s_final": None if self.s_final is None else _num_str(self.s_final),
            "integrator": {
                "stages": cfg.stages,
                "step": _num_str(cfg.step),
                "prec": cfg.prec,
                "stage_tol": None if cfg.stage_tol is None else _num_str(cfg.stage_tol),
            },
            "case": None if self.case is None else self.case.value,
            "inputs": _inputs_dict(self.inputs),
            "deviation": None if self.deviation is None else [_num_str(c) for c in self.deviation],
            "cauchy_n": self.cauchy_n,
            "scan_offset": _num_str(self.scan_offset),
            "r_max": _num_str(self.r_max),
            "s_seed": _num_str(self.s_seed),
            "audit": self.audit,
        }
        return out


def _is_exact(x) -> bool:
    return exact_fraction(x) is not None


def _num_str(x, digits: int = 40) -> str:
    q = exact_fraction(x)
    if q is not None:
        return str(q)
    if isinstance(x, str):
        return x
    return to_decimal(x, digits)


def _inputs_dict(inputs) -> Optional[dict]:
    if inputs is None:
        return None
    if isinstance(inputs, StokesPair):
        return {"s1": _num_str(inputs.s1), "s2": _num_str(inputs.s2)}
    if isinstance(inputs, ExponentData):
        return {"gamma0": _num_str(inputs.gamma0), "gamma1": _num_str(inputs.gamma1)}
    raise TypeError(f"unsupported inputs {type(inputs).__name__}")


# -- tables ---------------------------------------------------------------


@dataclass
class ErrorTable:
    """Base-minus-refined errors at one location."""

    location: object
    labels: Tuple[str, ...]
    absolute: List[arb]
    relative: List[arb]

    def __post_init__(self):
        for v in list(self.absolute) + list(self.relative):
            if v < 0:
                raise ValueError("errors are nonnegative")

    def max_relative(self) -> arb:
        m = arb(0)
        for v in self.relative:
            if v > m:
                m = v
        return m

    def to_dict(self, digits: int = 6) -> dict:
        return {
            "location": _num_str(self.location, 30),
            "labels": list(self.labels),
            "absolute": [to_decimal(v, digits) for v in self.absolute],
            "relative": [to_decimal(v, digits) for v in self.relative],
        }


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    power: float
    points: int
    method: str


@dataclass
class DeviationTable:
    """Rows ``(s, ln|deviation| per component)``, ordered by decreasing ``s``.

    ``floor`` is the natural log of the working resolution; rows below it
    carry no information about the asymptote.
    """

    labels: Tuple[str, ...]
    rows: List[Tuple[arb, Tuple[arb, ...]]] = field(default_factory=list)
    floor: Optional[float] = None

    def __post_init__(self):
        for a, b in zip(self.rows, self.rows[1:]):
            if not float(a[0].mid()) > float(b[0].mid()):
                raise ValueError("rows must be ordered by decreasing s")

    def value(self, s, component: int = 0) -> arb:
        target = float(to_arb(s).mid())
        for sv, devs in self.rows:
            if abs(float(sv.mid()) - target) < 1e-9:
                return devs[component]
        raise KeyError(f"no row at s = {s}")

    def column(self, component: int) -> List[Tuple[float, float]]:
        out = []
        for sv, devs in self.rows:
            d = float(devs[component].mid())
            if not math.isfinite(d):
                continue
            if self.floor is not None and d < self.floor:
                continue
            out.append((float(sv.mid()), d))
        return out

    def slope_fit(self, component: int = 0, power: float = 0.0, discard: int = 2, envelope: Optional[float] = None) -> SlopeFit:
        """Least-squares slope of ``ln dev - power * ln|s|`` against ``s``.

        ``discard`` drops the rows nearest ``s = 0``.  With ``envelope`` set
        to a period, only the largest value in each window of that length
        enters the fit, which removes the downward spikes of an oscillating
        deviation.
        """
        pts = self.column(component)[discard:]
        pts = [(s, d - power * math.log(abs(s))) for s, d in pts]
        method = "least squares"
        if envelope:
            method = f"least squares on window maxima (window {envelope:.6g})"
            if pts:
                s0 = pts[0][0]
                windows: Dict[int, Tuple[float, float]] = {}
                for s, d in pts:
                    k = int((s0 - s) // envelope)
                    if k not in windows or d > windows[k][1]:
                        windows[k] = (s, d)
                pts = [windows[k] for k in sorted(windows)]
        if len(pts) < 2:
            raise ValueError("not enough rows above the resolution floor to fit a slope")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        slope, intercept = statistics.linear_regression(xs, ys)
        return SlopeFit(slope, intercept, power, len(pts), method)

    def to_dict(self, digits: int = 8) -> dict:
        return {
            "labels": list(self.labels),
            "floor": None if self.floor is None else f"{self.floor:.6g}",
            "rows": [[_num_str(s, 20)] + [to_decimal(d, digits) for d in devs] for s, devs in self.rows],
        }


@dataclass
class SingularityRecord:
    """A singularity located by blow-up bracketing or by a line scan."""

    location: acb
    kind: str
    bracket: Optional[Tuple[arb, arb]] = None
    evidence: dict = field(default_factory=dict)

    KINDS = ("pole_of_v1", "zero_of_v0", "zero_of_v1", "pole_of_v0", "unclassified")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown singularity kind {self.kind!r}")

    def to_dict(self) -> dict:
        out = {"location": to_decimal(self.location, 20), "kind": self.kind}
        if self.bracket is not None:
            out["bracket"] = [to_decimal(b, 20) for b in self.bracket]
        out["evidence"] = {k: (v if isinstance(v, (int, float, str, bool, type(None), list)) else to_decimal(v, 20)) for k, v in self.evidence.items()}
        return out


# -- truncation depth -----------------------------------------------------


def truncation_bound(case: RegionLabel, gamma0, gamma1) -> Tuple[float, float, str]:
    """(rate, power, formula) with the neglected terms of order ``|s|^power e^{rate s}``."""
    g0 = float(to_acb(gamma0).real.mid())
    g1c = to_acb(gamma1)
    g1 = float(g1c.real.mid())
    if case is RegionLabel.OMEGA0:
        rate = min(2 * (g0 + 1), g1 - g0 + 2, 2 * (1 - g1))
        return rate, 0.0, "exp(min(2(g0+1), g1-g0+2, 2(1-g1)) s)"
    if case is RegionLabel.E1:
        return min(3 - g0, 2 * (g0 + 1)), 1.0, "s exp(min(3-g0, 2(g0+1)) s)"
    if case is RegionLabel.E2:
        return min(3 + g1, 2 * (1 - g1)), 1.0, "s exp(min(3+g1, 2(1-g1)) s)"
    if case is RegionLabel.E3:
        return min(2 * (g0 + 1), 2 * (3 - g0)), 2.0, "s^2 exp(min(2(g0+1), 2(3-g0)) s)"
    if case in (RegionLabel.V1, RegionLabel.V3):
        return 8.0, 6.0, "s^6 exp(8 s)"
    if case is RegionLabel.V2:
        return 4.0, 2.0, "s^2 exp(4 s)"
    if case is RegionLabel.OMEGA1:
        return min(2 + 2 * g0, 2 + g1 - g0), 0.0, "exp(min(2+2 g0, 2+Re g1-g0) s)"
    raise ValueError(f"no truncation bound for {case.value}")


def s_final_for(case: RegionLabel, gamma0, gamma1, prec: int, safety: int = SAFETY_DIGITS) -> int:
    """Least negative integer ``s`` with the truncation bound below ``10^-(prec + safety)``."""
    rate, power, _ = truncation_bound(case, gamma0, gamma1)
    if rate <= 0:
        raise ValueError("truncation bound does not decay")
    target = -(prec + safety) * math.log(10)
    S = 1
    while True:
        val = power * math.log(S) - rate * S
        # the bound decreases for S > power / rate
        if val < target and S > power / rate:
            return -S
        S += 1


# -- shared legs ------------------------------------------------------------


def _seed(p: StokesPair, r0, profile: RunProfile) -> FarFieldSeed:
    return corrected_far_field(p, r0, profile.work_prec)


def r_leg(p: StokesPair, r0, profile: RunProfile, checkpoints: Sequence = ()) -> Tuple[FarFieldSeed, Trajectory]:
    """Seed at ``r0`` and integrate the (wp, wm) system down to ``r = 1``."""
    cfg = profile.integrator
    seed = _seed(p, r0, profile)
    with workdps(cfg.prec):
        path = ContourPath([Line(to_acb(r0), acb(1))], checkpoints=[to_acb(c) for c in checkpoints])
    traj = integrate_path(rhs_wpwm_r, path, seed.as_vector(), cfg, keep=False)
    return seed, traj


def _real_axis_samples(s_final, step: int = 1) -> List[int]:
    """Integers ``-1, -2, ...`` down to and including ``s_final``."""
    sf = int(math.ceil(float(to_arb(s_final).mid()) - 1e-12))
    return list(range(-step, sf - 1, -step))


def error_audit(base: Trajectory, refined: Trajectory, locations: Sequence, labels: Sequence[str] = ("y0", "y1", "y2", "y3")) -> List[ErrorTable]:
    """Per-component ``|base - refined|`` and ``|base - refined| / |refined|``.

    Both trajectories must hold a stored point at every location.
    """
    tables = []
    for loc in locations:
        try:
            a = base.at(loc)
            b = refined.at(loc)
        except KeyError as exc:
            raise ValueError(f"missing checkpoint at {loc}") from exc
        absolute, relative = [], []
        for x, y in zip(a.y, b.y):
            d = abs(to_acb(x) - to_acb(y)).mid()
            absolute.append(d)
            ref = abs(to_acb(y)).mid()
            relative.append(d / ref if not ref.is_zero() else (arb(0) if d.is_zero() else arb("inf")))
        tables.append(ErrorTable(loc, tuple(labels), absolute, relative))
    return tables


def _seed_audit(seed: FarFieldSeed, refined: Trajectory) -> ErrorTable:
    base = Trajectory([TrajectoryPoint(to_acb(seed.r0), [to_acb(v) for v in seed.as_vector()], 0, True)])
    return error_audit(base, refined, [seed.r0], ("wp", "wm", "dwp", "dwm"))[0]


# -- fine structure --------------------------------------------------------


def _case_gammas(profile: RunProfile):
    inputs = profile.inputs
    if isinstance(inputs, ExponentData):
        return inputs.gamma0, inputs.gamma1
    if isinstance(inputs, StokesPair):
        e = gamma_from_stokes(inputs, profile.work_prec)
        return e.gamma0, e.gamma1
    raise ValueError("profile.inputs must be ExponentData or StokesPair")


def _stokes(profile: RunProfile) -> StokesPair:
    inputs = profile.inputs
    if isinstance(inputs, StokesPair):
        return inputs
    return stokes_from_gamma(inputs.gamma0, inputs.gamma1, profile.work_prec)


def _combos(labels, W0, W1):
    table = {"2w0": W0, "2w1": W1, "2w0+2w1": W0 + W1, "2w1-2w0": W1 - W0}
    return [table[l] for l in labels]


@dataclass
class FineStructureReport:
    profile: RunProfile
    stokes: StokesPair
    s_final: int
    bound: str
    seed_errors: Optional[ErrorTable]
    r1_errors: Optional[ErrorTable]
    s_final_errors: Optional[ErrorTable]
    deviations: DeviationTable
    r1_values: List[acb]
    s_final_values: List[acb]
    series: Dict[str, List[Tuple[arb, List[acb]]]] = field(default_factory=dict)


def verify_fine_structure(profile: RunProfile) -> FineStructureReport:
    """Full smooth-case pipeline: far-field seed, r-leg, s-leg, audits, deviations."""
    case = profile.case
    if case not in SMOOTH_CASES:
        raise ValueError(f"verify_fine_structure needs a smooth case, got {case}")
    g0, g1 = _case_gammas(profile)
    p = _stokes(profile)
    if profile.s_final is not None:
        s_f = int(math.floor(float(to_arb(profile.s_final).mid())))
    else:
        s_f = s_final_for(case, g0, g1, profile.prec)
    _, _, formula = truncation_bound(case, g0, g1)
    cfg = profile.integrator
    samples = _real_axis_samples(s_f)
    runs = []
    starts = [profile.r_start] + ([profile.r_refined] if profile.audit else [])
    for k, r0 in enumerate(starts):
        cps = [profile.r_start] if k == 1 else []
        seed, rtraj = r_leg(p, r0, profile, cps)
        with workdps(cfg.prec):
            at1 = ChartState(ChartId.WPWM_R, acb(1), tuple(rtraj.final.y))
            st = chart_transition(at1, ChartId.LOG_S, gammas=(g0, g1))
            path = ContourPath([Line(acb(0), to_acb(s_f))], checkpoints=[acb(s) for s in samples])
        straj = integrate_path(make_rhs_log_s(*st.gammas), path, list(st.y), cfg, keep=False)
        runs.append((seed, rtraj, straj))
    seed, rtraj, straj = runs[0]
    seed_err = r1_err = sf_err = None
    if profile.audit:
        _, rtraj2, straj2 = runs[1]
        seed_err = _seed_audit(seed, rtraj2)
        r1_err = error_audit(rtraj, rtraj2, [1], ("wp", "wm", "dwp", "dwm"))[0]
        sf_err = error_audit(straj, straj2, [s_f], ("u0", "u1", "du0", "du1"))[0]
    dev = _deviation_table(case, g0, g1, straj, samples, profile)
    with workdps(cfg.prec):
        series = {
            "s_leg": [(to_arb(pt.t.real), list(pt.y)) for pt in straj.points if pt.checkpoint],
        }
    return FineStructureReport(
        profile, p, s_f, formula, seed_err, r1_err, sf_err, dev, list(rtraj.final.y), list(straj.final.y), series
    )


def _deviation_table(case, g0, g1, straj: Trajectory, samples, profile: RunProfile) -> DeviationTable:
    cfg = profile.integrator
    exps = ExponentData(g0, g1)
    rows = []
    labels = None
    with workdps(cfg.prec):
        c0, c1 = to_acb(g0), to_acb(g1)
        for s in samples:
            pt = straj.at(s)
            sv = arb(s)
            W0 = (to_acb(pt.y[0]) + c0 * sv).real
            W1 = (to_acb(pt.y[1]) + c1 * sv).real
            pred = fine_structure_predict(case, exps, sv, cfg.prec)
            labels = pred.labels
            num = _combos(pred.labels, W0, W1)
            devs = tuple(_ln_abs(to_arb(a) - b) for a, b in zip(pred.values, num))
            rows.append((sv, devs))
    floor = -(cfg.prec - 5) * math.log(10)
    return DeviationTable(tuple(f"ln|{l} - asymptote|" for l in labels), rows, floor)


def _ln_abs(x) -> arb:
    a = abs(x).mid()
    if a.is_zero():
        return arb("-inf")
    return a.log()


# -- root finding on a trajectory ------------------------------------------


def find_real_zeros(
    trajectory: Trajectory,
    component: int = 1,
    rhs=None,
    cfg: Optional[IntegratorConfig] = None,
    tol: Number = Fraction(1, 10**6),
    offset: Optional[Number] = None,
) -> List[arb]:
    """Zeros of ``Re y[component]`` along a horizontal line of the trajectory.

    Sign changes between consecutive stored points are bracketed and refined
    by the secant method.  With ``rhs`` and ``cfg`` each secant iterate is
    evaluated by one integration step from the bracket's left point;
    otherwise the refinement interpolates linearly between the two samples.
    Only points on the line ``Im t = offset`` take part (default: the
    imaginary part of the last point).  The returned values are ``Re t``.
    """
    pts = trajectory.points
    if not pts:
        return []
    tol = to_arb(tol)
    if offset is None:
        offset = pts[-1].t.imag
    off = to_arb(offset)
    line = [p for p in pts if abs(p.t.imag - off) < arb(10) ** -12]
    stepper = GaussLegendre(cfg) if (rhs is not None and cfg is not None) else None
    zeros = []
    for a, b in zip(line, line[1:]):
        fa = a.y[component].real
        fb = b.y[component].real
        if fa.is_zero():
            zeros.append(a.t.real)
            continue
        if not ((fa > 0 and fb < 0) or (fa < 0 and fb > 0)):
            continue
        if stepper is None:
            x = a.t.real - fa * (b.t.real - a.t.real) / (fb - fa)
            zeros.append(x.mid())
            continue
        x0, f0 = a.t.real, fa
        x1, f1 = b.t.real, fb
        lo, hi, flo = a.t.real, b.t.real, fa
        x = x1
        for _ in range(60):
            x = x1 - f1 * (x1 - x0) / (f1 - f0)
            if not ((x > lo and x < hi) or (x < lo and x > hi)):
                x = (lo + hi) / 2
            t = acb(x, off)
            y = stepper.step(rhs, a.t, a.y, t - a.t).y
            fx = y[component].real
            if (fx > 0) == (flo > 0):
                lo, flo = x, fx
            else:
                hi = x
            x0, f0, x1, f1 = x1, f1, x, fx
            if abs(x1 - x0) < tol:
                break
        zeros.append(x.mid())
    return zeros


# -- Omega1 ----------------------------------------------------------------


def default_cauchy_n(digits: int) -> int:
    """Half the number of circle samples so that chord ends (at R/2) are exact to ``digits``."""
    return int(math.ceil(digits * math.log(10) / (2 * math.log(2)))) + 4


@dataclass
class CircleRecord:
    center: arb
    radius: arb
    samples: List[Tuple[arb, List[acb]]]
    closure: arb
    chord_check: List[float]


@dataclass
class Omega1Report:
    profile: RunProfile
    stokes: StokesPair
    exponents: ExponentData
    s_final: int
    zeros: List[arb]
    zero_spacing: Optional[float]
    predicted_spacing: float
    circles: List[CircleRecord]
    deltas: DeviationTable
    skipped: List[int]
    r1_errors: Optional[ErrorTable]
    s_final_errors: Optional[ErrorTable]
    series: Dict[str, List[Tuple[object, List[acb]]]] = field(default_factory=dict)


def _v_s_contour(y0, zeros, s_f, cfg, R, n, samples_wanted) -> Tuple[Dict[int, List[acb]], List[CircleRecord], List[Tuple[arb, List[acb]]], List[acb]]:
    """Integrate the V_S system from s = 0 to ``s_f`` detouring around ``zeros``.

    Returns the states at the requested real sample points, the circle
    records, the real-axis series and the final state.
    """
    R = to_arb(R)
    half = to_arb(CHORD_LENGTH)
    states: Dict[int, List[acb]] = {}
    series: List[Tuple[arb, List[acb]]] = []
    circles: List[CircleRecord] = []
    t = arb(0)
    y = [to_acb(v) for v in y0]
    stops = [(z + R, z) for z in zeros] + [(to_arb(s_f), None)]

    def run_line(t0, t1, y0, wanted):
        cps = [acb(s) for s in wanted]
        path = ContourPath([Line(acb(t0), acb(t1))], checkpoints=cps)
        tr = integrate_path(rhs_v_s, path, y0, cfg, keep=True)
        for pt in tr.points:
            series.append((pt.t.real, pt.y))
            if pt.checkpoint:
                states[int(round(float(pt.t.real.mid())))] = pt.y
        return tr.final.y

    for target, zero in stops:
        wanted = [s for s in samples_wanted if float(target.mid()) < s < float(t.mid()) or (zero is None and s == int(float(target.mid())))]
        if not target < t:
            raise ContourError(f"circles overlap near s = {to_decimal(target, 8)}")
        y = run_line(t, target, y, wanted)
        if zero is None:
            t = target
            break
        start_y = y
        arc = Arc(acb(zero), R, arb(0), 2 * arb.pi(), n_steps=2 * n)
        tr = integrate_path(rhs_v_s, ContourPath([arc]), start_y, cfg, keep=True)
        pts = tr.points
        samples = [(2 * arb.pi() * j / (2 * n), pts[j].y) for j in range(2 * n)]
        closure = max((abs(a - b) / (abs(b) + 1)).mid() for a, b in zip(pts[-1].y, start_y))
        exit_y = pts[n].y
        # chords run from the circle towards the zero; their ends check the Cauchy formula
        checks = []
        for s0, y0c, sign in ((zero + R, start_y, -1), (zero - R, exit_y, 1)):
            end = s0 + sign * half
            cpath = ContourPath([Line(acb(s0), acb(end))])
            ctr = integrate_path(rhs_v_s, cpath, y0c, cfg, keep=True)
            for pt in ctr.points:
                series.append((pt.t.real, pt.y))
            cv = cauchy_eval(samples, zero, R, end)
            checks.append(min(_agree(a, b) for a, b in zip(ctr.final.y, cv)))
        circles.append(CircleRecord(zero, R, samples, closure, checks))
        for s in samples_wanted:
            if abs(arb(s) - zero) < R * 3 / 4:
                states[s] = cauchy_eval(samples, zero, R, s)
        t = zero - R
        y = list(exit_y)
    series.sort(key=lambda p: -float(p[0].mid()))
    return states, circles, series, y


def _agree(a, b) -> float:
    a = to_acb(a)
    b = to_acb(b)
    d = abs(a - b).mid()
    if d.is_zero():
        return math.inf
    ref = abs(b).mid()
    if ref.is_zero():
        ref = arb(1)
    return -float((d / ref).log().mid()) / math.log(10)


def omega1_run(p: StokesPair, profile: RunProfile) -> Omega1Report:
    """Out-of-triangle pipeline for the region Omega1.

    After the r-leg the solution is carried in ``v_i = e^{2 w_i}`` against
    ``s``.  A pre-scan along ``Im s = scan_offset`` locates the zeros of
    ``v1``; the main path follows the real axis and goes once round a circle
    of radius 1/5 about each zero, whose samples give the values inside by
    the trapezoidal Cauchy formula.
    """
    if classify_stokes(p, profile.work_prec) is not RegionLabel.OMEGA1:
        raise ValueError("omega1_run needs Stokes data in Omega1")
    cfg = profile.integrator
    exps = exponent_data(p, cfg.prec)
    if exps.rho0 is None or exps.rho1 is None:
        raise ValueError("rho is undefined at these Stokes data")
    if profile.s_final is not None:
        s_f = int(math.floor(float(to_arb(profile.s_final).mid())))
    else:
        s_f = s_final_for(RegionLabel.OMEGA1, exps.gamma0, exps.gamma1, profile.prec)
    n = profile.cauchy_n or default_cauchy_n(cfg.prec)
    with workdps(cfg.prec):
        R = to_arb(CIRCLE_RADIUS)
    samples_wanted = _real_axis_samples(s_f)
    starts = [profile.r_start] + ([profile.r_refined] if profile.audit else [])
    r_runs = [r_leg(p, r0, profile)[1] for r0 in starts]
    with workdps(cfg.prec):
        v_at_0 = []
        for tr in r_runs:
            st = chart_transition(ChartState(ChartId.WPWM_R, acb(1), tuple(tr.final.y)), ChartId.V_S)
            v_at_0.append(list(st.y))
        eps = to_arb(profile.scan_offset)
        scan_path = ContourPath([Line(acb(0), acb(0, eps)), Line(acb(0, eps), acb(s_f, eps))])
    scan = integrate_path(rhs_v_s, scan_path, v_at_0[0], cfg, keep=True)
    with workdps(cfg.prec):
        zeros = find_real_zeros(scan, 1, rhs_v_s, cfg, offset=eps)
        zeros = [z for z in zeros if z - R > s_f]
        for a, b in zip(zeros, zeros[1:]):
            if not a - b > 2 * R:
                raise ContourError(f"zeros at {to_decimal(a, 8)} and {to_decimal(b, 8)} are closer than two radii")
        if zeros and not zeros[0] + R < 0:
            raise ContourError("a zero lies within one radius of s = 0")
        skipped = [s for s in samples_wanted if any(abs(arb(s) - z) < R and not abs(arb(s) - z) < R * 3 / 4 for z in zeros)]
        wanted = [s for s in samples_wanted if s not in skipped]
        results = []
        for y0 in v_at_0:
            results.append(_v_s_contour(y0, zeros, s_f, cfg, R, n, wanted))
        states, circles, series, final = results[0]
        g0 = to_acb(exps.gamma0).real
        g1 = to_acb(exps.gamma1)
        r0 = to_acb(exps.rho0).real
        r1 = to_acb(exps.rho1)
        rows = []
        for s in sorted(states, reverse=True):
            y = states[s]
            sv = arb(s)
            v0 = y[0].real
            v1 = y[1].real
            d0 = abs(v0 * (-g0 * sv - r0).exp() - 1)
            d1 = abs(v1 / 2 * (-g1.real * sv - r1.real).exp() - (g1.imag * sv + r1.imag).cos())
            rows.append((sv, (_ln_abs(d0), _ln_abs(d1))))
        deltas = DeviationTable(("ln Delta0", "ln Delta1"), rows, -(cfg.prec - 5) * math.log(10))
        r1_err = sf_err = None
        if profile.audit:
            r1_err = error_audit(r_runs[0], r_runs[1], [1], ("wp", "wm", "dwp", "dwm"))[0]
            fin2 = results[1][3]
            a = Trajectory([TrajectoryPoint(acb(s_f), final, 0, True)])
            b = Trajectory([TrajectoryPoint(acb(s_f), fin2, 0, True)])
            sf_err = error_audit(a, b, [s_f], ("v0", "v1", "dv0", "dv1"))[0]
        spacing = None
        if len(zeros) > 1:
            spacing = float(((zeros[0] - zeros[-1]) / (len(zeros) - 1)).mid())
        predicted = float((arb.pi() / abs(g1.imag)).mid())
    out_series = {
        "v(s)": [(s, y) for s, y in series],
        "scan v(s+i eps)": [(pt.t, pt.y) for pt in scan.points],
    }
    for k, c in enumerate(circles):
        out_series[f"circle{k}"] = [(th, y) for th, y in c.samples]
    return Omega1Report(
        profile, p, exps, s_f, zeros, spacing, predicted, circles, deltas, skipped, r1_err, sf_err, out_series
    )


# -- deviated solutions ------------------------------------------------------


@dataclass
class DeviationReport:
    profile: RunProfile
    gammas: Tuple[Number, Number]
    constants: Tuple[Number, Number]
    s0_values: List[acb]
    seed_dropped: arb
    singularities: List[SingularityRecord]
    circle: Optional[CircleRecord]
    windings: Dict[str, float]
    series: Dict[str, List[Tuple[object, List[acb]]]] = field(default_factory=dict)


class _Blocked(Exception):
    def __init__(self, t, y, h):
        super().__init__("blocked")
        self.t, self.y, self.h = t, y, h


def _scale(y) -> arb:
    m = arb(0)
    for v in y:
        a = abs(to_acb(v)).mid()
        if a > m:
            m = a
    return m


def march(rhs, t0, y0, t_end, cfg: IntegratorConfig, min_step: Number = BRACKET_TOL, growth: float = 8.0, on_point=None):
    """Integrate along the segment ``[t0, t_end]``, halving the step on trouble.

    A step is rejected when the stage equations fail, the right-hand side
    is singular, or the state grows by more than ``growth`` in one step.
    After a success the step doubles back towards ``cfg.step``.  Returns the
    final ``(t, y)``; raises :class:`_Blocked` with the last good point when
    the step falls below ``min_step``.
    """
    stepper = GaussLegendre(cfg)
    with workdps(cfg.prec):
        t = to_acb(t0)
        y = [to_acb(v) for v in y0]
        t_end = to_acb(t_end)
        L = abs(t_end - t)
        if L.is_zero():
            return t, y
        direction = (t_end - t) / L
        hmax = to_arb(cfg.step)
        h = hmax
        min_step = to_arb(min_step)
        g = arb(growth)
        while True:
            remaining = abs(t_end - t)
            if remaining < arb(10) ** -(cfg.prec // 2):
                return t_end, y
            hh = h if h < remaining else remaining
            ok = True
            try:
                res = stepper.step(rhs, t, y, direction * hh)
                ynew = res.y
                if not all(v.is_finite() for v in ynew):
                    ok = False
                elif _scale(ynew) > g * (_scale(y) + 1):
                    ok = False
            except (IntegrationError, ChartSingularity, ZeroDivisionError):
                ok = False
            if ok:
                t = t + direction * hh
                y = ynew
                if on_point is not None:
                    on_point(t, y)
                if h < hmax:
                    h = h * 2 if h * 2 < hmax else hmax
                continue
            h = h / 2
            if h < min_step:
                raise _Blocked(t, y, h * 2)


def _pole_estimate(t, y) -> acb:
    """r_pole ~ r + v1 / (dv1/dr) for a simple pole of v1 (V_R chart, p = r dv/dr)."""
    return t + y[1] * t / y[3]


def _pole_from_circle(samples, center, R) -> acb:
    """Location of a lone simple pole of v1 inside the circle.

    With ``f = 1/v1``, ``(1/2 pi i) oint z f'/f dz`` is the zero of ``f``; on
    the circle ``f'/f = -v1'/v1 = -p1 / (r v1)``.  The trapezoidal sum
    converges geometrically, unlike the one-step Newton estimate.
    """
    center = to_acb(center)
    acc = acb(0)
    for theta, y in samples:
        e = acb(0, to_arb(theta)).exp() * R
        z = center + e
        acc += z * (-y[3] / (z * y[1])) * e
    return acc / len(samples)


def _anchor_for(pole: arb) -> arb:
    """Largest multiple of 1/10 at least 1/5 below the pole: circle passes through it."""
    k = math.floor((float(pole.mid()) - 0.2) * 10 + 1e-9)
    return arb(k) / 10


def deviation_run(gamma0: Number, gamma1: Number, c0: Number, c1: Number, profile: RunProfile) -> DeviationReport:
    """Solution with ``v_i ~ c_i e^{gamma_i s}`` at ``s -> -infinity`` for arbitrary ``c_i > 0``.

    The V_S system is seeded at ``profile.s_seed`` and integrated to ``s = 0``;
    the V_R system then runs outward along the real axis until the first
    blow-up, which is bracketed by step halving.  A circle through the
    nearest multiple of 1/10 below the pole gives the argument-principle
    counts; a scan along ``Im r = scan_offset`` then records further
    singularities up to ``r_max``.
    """
    cfg = profile.integrator
    seed = deviated_seed(gamma0, gamma1, c0, c1, profile.s_seed, cfg.prec)
    with workdps(cfg.prec):
        s_lo = int(math.ceil(float(to_arb(profile.s_seed).mid())))
        path = ContourPath([Line(to_acb(profile.s_seed), acb(0))], checkpoints=[acb(k) for k in range(s_lo, 1)])
    tr = integrate_path(rhs_v_s, path, list(seed.state.y), cfg, keep=False)
    s0 = list(tr.final.y)
    records: List[SingularityRecord] = []
    series: Dict[str, List] = {"v(s)": [(pt.t, pt.y) for pt in tr.points if pt.checkpoint], "v(r)": [], "scan v(r+i eps)": []}
    circle = None
    windings: Dict[str, float] = {}
    with workdps(cfg.prec):
        r_max = to_arb(profile.r_max)
        kept: List[Tuple[acb, List[acb]]] = [(acb(1), s0)]

        def keep(t, y):
            kept.append((t, y))

        blocked = None
        try:
            march(rhs_v_r, acb(1), s0, acb(r_max), cfg, on_point=keep)
        except _Blocked as b:
            blocked = b
        series["v(r)"] = kept
        if blocked is not None:
            t, y = blocked.t, blocked.y
            est = _pole_estimate(t, y).real
            # the march stops short of the pole (growth test), so the last good
            # point is a lower bound; mirror it through the estimate for the upper one
            lo = t.real
            bracket = (lo, est + (est - lo) if est > lo else lo + blocked.h)
            anchor = _anchor_for(est)
            anchor_y = None
            for tk, yk in kept:
                if abs(tk - anchor) < arb(10) ** -20:
                    anchor_y = yk
                    break
            kind = "unclassified"
            evidence = {"bracket_width": to_decimal(bracket[1] - bracket[0], 6), "newton_estimate": est}
            if anchor_y is not None:
                R = est - anchor
                n = profile.cauchy_n or default_cauchy_n(cfg.prec)
                n = min(n, 400)
                arc = Arc(acb(est), R, arb.pi(), 3 * arb.pi(), n_steps=2 * n)
                ctr = integrate_path(rhs_v_r, ContourPath([arc]), anchor_y, cfg, keep=True)
                pts = ctr.points
                samples = [(arb.pi() + 2 * arb.pi() * j / (2 * n), pts[j].y) for j in range(2 * n)]
                closure = max((abs(a - b) / (abs(b) + 1)).mid() for a, b in zip(pts[-1].y, anchor_y))
                w1 = winding_number(samples, est, R, 1)
                w0 = winding_number(samples, est, R, 0)
                if round(w1) == -1 and round(w0) in (0, 1):
                    located = _pole_from_circle(samples, est, R)
                else:
                    located = acb(est)
                inv = [(th, [1 / y[1]]) for th, y in samples]
                center_v0 = cauchy_eval(samples, est, R, located)[0]
                center_inv_v1 = cauchy_eval(inv, est, R, located)[0]
                windings = {"v0": round(w0, 6), "v1": round(w1, 6), "1/v1": round(-w1, 6)}
                # samples reordered to start at angle 0 for reporting
                circle = CircleRecord(est, R, samples, closure, [])
                evidence.update(
                    {
                        "circle_location": located,
                        "winding_v0": round(w0, 6),
                        "winding_v1": round(w1, 6),
                        "v0_at_center": center_v0,
                        "inv_v1_at_center": center_inv_v1,
                        "max_abs_v0_on_circle": max(abs(y[0]).mid() for _, y in samples),
                        "circle_radius": R,
                        "circle_closure": closure,
                    }
                )
                if round(w1) == -1:
                    kind = "pole_of_v1"
                elif round(w0) >= 1:
                    kind = "zero_of_v0"
                evidence["v0_vanishes"] = bool(abs(center_v0) < arb(10) ** -(cfg.prec // 4))
            records.append(SingularityRecord(located if anchor_y is not None else acb(est), kind, bracket, evidence))
            # scan above the real axis from the anchor (or the last good point) to r_max
            start_t, start_y = (anchor, anchor_y) if anchor_y is not None else (t.real, y)
            records.extend(_line_scan(start_t, start_y, r_max, cfg, profile, series, skip_near=est))
    return DeviationReport(profile, (gamma0, gamma1), (c0, c1), s0, seed.dropped, records, circle, windings, series)


def _line_scan(t0: arb, y0, r_max: arb, cfg, profile, series, skip_near=None) -> List[SingularityRecord]:
    """Follow ``Im r = eps`` and flag sign flips of ``Re v1`` and spikes of ``|v0|``, ``|v1|``."""
    eps = to_arb(profile.scan_offset)
    pts: List[Tuple[acb, List[acb]]] = []

    def keep(t, y):
        pts.append((t, y))

    try:
        t, y = march(rhs_v_r, acb(t0), y0, acb(t0, eps), cfg, on_point=keep)
        march(rhs_v_r, t, y, acb(r_max, eps), cfg, min_step=Fraction(1, 10**6), on_point=keep)
    except _Blocked:
        pass
    line = [(t, y) for t, y in pts if abs(t.imag - eps) < arb(10) ** -12]
    series["scan v(r+i eps)"] = line
    out = []
    for (ta, ya), (tb, yb) in zip(line, line[1:]):
        fa, fb = ya[1].real, yb[1].real
        if (fa > 0 and fb < 0) or (fa < 0 and fb > 0):
            x = ta.real - fa * (tb.real - ta.real) / (fb - fa)
            big = max(abs(ya[1]).mid(), abs(yb[1]).mid())
            if fa > 0 and big > 1:
                kind = "pole_of_v1"
            elif big < 1:
                kind = "zero_of_v1"
            else:
                kind = "unclassified"
            if skip_near is not None and abs(x - skip_near) < arb(1) / 10:
                continue
            out.append(SingularityRecord(acb(x.mid()), kind, (ta.real, tb.real), {"source": "line scan", "re_v1_left": fa.mid(), "re_v1_right": fb.mid()}))
    # |v0| dips and peaks relative to both neighbours
    for (ta, ya), (tm, ym), (tb, yb) in zip(line, line[1:], line[2:]):
        a, m, b = (abs(ya[0]).mid(), abs(ym[0]).mid(), abs(yb[0]).mid())
        if m < a and m < b and m < arb(1) / 10:
            kind = "zero_of_v0"
        elif m > a and m > b and m > 10:
            kind = "pole_of_v0"
        else:
            continue
        if skip_near is not None and abs(tm.real - skip_near) < arb(1) / 10:
            continue
        out.append(SingularityRecord(acb(tm.real), kind, (ta.real, tb.real), {"source": "line scan", "abs_v0": m}))
    out.sort(key=lambda r: float(r.location.real.mid()))
    return out
