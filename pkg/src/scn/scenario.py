"""Case studies: boundary data, runs, action points and re-strategizing.

Boundary values are perturbation amplitudes of (N4, N5, N7, V_CO2).  Both
horizons of a case share the same initial row.  Time is in working days,
300 per year.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from . import bvp
from .bvp import BoundarySpec, Dirichlet, NeumannZero, SolveReport, Trajectory
from .config import ModelConfig
from .dynamics import STATE_LABELS
from .errors import ValidationError

log = logging.getLogger(__name__)

DAYS_PER_YEAR = bvp.DAYS_PER_YEAR
VCO2 = 3  # state index of dV_CO2

# Initial and terminal rows per case; None marks a zero-slope terminal condition.
INITIAL_ROWS = {
    1: (0.3, 76.0, 2.0, 2.86),
    2: (0.3, 76.0, 2.0, 2.86),
}
TERMINAL_ROWS = {
    1: (0.6, 80.0, 5.0, 5.2),
    2: (0.5, 82.0, None, 2.0),
}
# V_CO2 check values: (row, horizon_years) -> target.
VCO2_CHECK = {
    1: {("IC", 3): 3.0, ("IC", 5): 2.3, ("BC", 3): 2.4, ("BC", 5): 2.0},
    2: {("IC", 3): 2.19, ("IC", 5): 1.46, ("BC", 3): 1.72, ("BC", 5): 1.0},
}


@dataclass(frozen=True)
class CaseDefinition:
    case_id: int
    horizon_years: int = 3
    constrained: bool = True
    # Optional overrides of the tabulated boundary rows.
    initial: Optional[tuple] = None
    terminal: Optional[tuple] = None

    def __post_init__(self):
        if self.case_id not in INITIAL_ROWS:
            raise ValidationError(f"unknown case id {self.case_id!r}")
        if self.horizon_years <= 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon_years}")

    @property
    def horizon_days(self) -> float:
        return float(self.horizon_years * DAYS_PER_YEAR)

    @property
    def name(self) -> str:
        mode = "constrained" if self.constrained else "unconstrained"
        return f"case{self.case_id}_{self.horizon_years}y_{mode}"

    def boundary_spec(self) -> BoundarySpec:
        ic = self.initial if self.initial is not None else INITIAL_ROWS[self.case_id]
        bc = self.terminal if self.terminal is not None else TERMINAL_ROWS[self.case_id]
        return BoundarySpec(tuple(ic), tuple(NeumannZero() if v is None else Dirichlet(float(v))
                                             for v in bc))

    def check_value(self, row: Literal["IC", "BC"]) -> float:
        try:
            return VCO2_CHECK[self.case_id][(row, self.horizon_years)]
        except KeyError:
            raise ValidationError(
                f"no V_CO2 check value for case {self.case_id}, row {row}, "
                f"{self.horizon_years}-year horizon") from None


@dataclass(frozen=True)
class RestrategizePlan:
    """One revision: from ``revision_time`` steer dV_CO2 to ``revised_vco2_target``.

    ``revision_time=None`` means the first interior minimum of dV_CO2 on the
    trajectory being revised.
    """

    revision_time: Optional[float]
    revised_vco2_target: float


@dataclass
class StageOutcome:
    revision_time: float
    target: float
    reference_terminal: float
    revised_terminal: Optional[float]
    reduction_pct: Optional[float]
    report: SolveReport


@dataclass
class ActionPoint:
    component: str
    time: float
    kind: str   # "minimum", "maximum" or "crossing"


@dataclass
class CaseResult:
    definition: CaseDefinition
    matrix: np.ndarray            # effective coefficient matrix (mass scales applied)
    base: Trajectory
    report: SolveReport
    action_points: list[ActionPoint] = field(default_factory=list)
    modes: list = field(default_factory=list)
    vco2_oscillatory: bool = False
    revised: Optional[Trajectory] = None
    stages: list[StageOutcome] = field(default_factory=list)
    vco2_reduction_pct: Optional[float] = None

    @property
    def divergent(self) -> bool:
        return self.report.divergent

    @property
    def current(self) -> Trajectory:
        return self.revised if self.revised is not None else self.base

    @property
    def vco2_instability(self) -> Optional[str]:
        if self.report.divergent:
            return "divergent"
        if self.vco2_oscillatory:
            return "oscillatory"
        return None

    @property
    def cumulative_reduction_pct(self) -> Optional[float]:
        if not self.stages or self.stages[-1].revised_terminal is None:
            return None
        ref = self.base.states[-1, VCO2]
        return _reduction(ref, self.stages[-1].revised_terminal)

    def endpoint_error(self) -> float:
        spec = self.definition.boundary_spec()
        x, v = self.base.states, self.base.derivatives
        errs = list(np.abs(x[0] - np.asarray(spec.initial)))
        for k, c in enumerate(spec.terminal):
            errs.append(abs(x[-1, k] - c.value) if isinstance(c, Dirichlet) else abs(v[-1, k]))
        return float(max(errs))


def _reduction(reference: float, revised: float) -> Optional[float]:
    if reference == 0.0:
        return None
    return 100.0 * (reference - revised) / reference


def _sign_runs(x: np.ndarray):
    """Yield (index, kind) for each interior extremum of a sampled series.

    A plateau is reported at its first grid point.
    """
    d = np.diff(x)
    last_sign = 0
    last_pos = 0
    for k, dk in enumerate(d):
        s = 1 if dk > 0 else (-1 if dk < 0 else 0)
        if s == 0:
            continue
        if last_sign and s != last_sign:
            yield last_pos + 1, ("maximum" if last_sign > 0 else "minimum")
        last_sign, last_pos = s, k


def interior_extrema(x: Sequence[float]) -> list[tuple[int, str]]:
    return list(_sign_runs(np.asarray(x, dtype=float)))


def zero_crossings(times: np.ndarray, x: np.ndarray) -> list[float]:
    """Linearly interpolated times where the series changes sign."""
    out = []
    for k in range(len(x) - 1):
        a, b = x[k], x[k + 1]
        if a == 0.0 and 0 < k:
            if x[k - 1] * b < 0:
                out.append(float(times[k]))
        elif a * b < 0:
            out.append(float(times[k] + (times[k + 1] - times[k]) * a / (a - b)))
    return out


def detect_action_point(traj: Trajectory, component: int | str,
                        kind: Literal["minimum", "maximum"]) -> Optional[float]:
    """Grid time of the first interior extremum of ``kind``; None when there is none."""
    if isinstance(component, str):
        component = STATE_LABELS.index(component)
    if not np.all(np.isfinite(traj.states[:, component])):
        raise ValidationError("cannot detect action points on a non-finite trajectory")
    for idx, k in interior_extrema(traj.states[:, component]):
        if k == kind:
            return float(traj.times[idx])
    return None


def find_action_points(traj: Trajectory) -> list[ActionPoint]:
    points = []
    for c, label in enumerate(STATE_LABELS):
        x = traj.states[:, c]
        for idx, kind in interior_extrema(x):
            points.append(ActionPoint(label, float(traj.times[idx]), kind))
        for t in zero_crossings(traj.times, x):
            points.append(ActionPoint(label, t, "crossing"))
    return points


def run_case(defn: CaseDefinition, cfg: ModelConfig,
             step_days: float = bvp.DEFAULT_STEP_DAYS, **solve_kw) -> CaseResult:
    a = cfg.effective_matrix(defn.constrained)
    spec = defn.boundary_spec()
    traj, report = bvp.solve(a, spec, defn.horizon_days, step_days, **solve_kw)
    modes = bvp.classify_modes(a)
    result = CaseResult(defn, a, traj, report, modes=modes,
                        vco2_oscillatory=bvp.component_oscillates(modes, VCO2))
    if not report.divergent:
        result.action_points = find_action_points(traj)
    log.info("%s: divergent=%s boundary_residual=%.3g", defn.name, report.divergent,
             report.boundary_residual)
    return result


def restrategize(result: CaseResult, plan: RestrategizePlan,
                 step_days: Optional[float] = None, **solve_kw) -> CaseResult:
    """Re-solve from the revision time with a new dV_CO2 target and splice.

    Revisions chain: the trajectory revised is the latest one on ``result``,
    and the reduction is measured against that trajectory's terminal value.
    """
    if result.divergent:
        raise ValidationError("cannot re-strategize a divergent trajectory")
    current = result.current
    if not np.all(np.isfinite(current.states)):
        raise ValidationError("cannot re-strategize a non-finite trajectory")
    step = current.step if step_days is None else step_days
    if abs(step - current.step) > 1e-12 * max(1.0, step):
        raise ValidationError("revision must use the trajectory's own grid step")

    t_rev = plan.revision_time
    if t_rev is None:
        t_rev = detect_action_point(current, VCO2, "minimum")
        if t_rev is None:
            raise ValidationError("no interior dV_CO2 minimum to revise at")
    horizon = float(current.times[-1])
    if not current.times[0] < t_rev < horizon:
        raise ValidationError(f"revision time {t_rev} must lie strictly inside (0, {horizon})")
    k = current.index_of(t_rev)
    t_rev = float(current.times[k])

    spec = result.definition.boundary_spec()
    revised_spec = BoundarySpec(tuple(current.states[k]), spec.terminal).with_terminal(
        VCO2, Dirichlet(float(plan.revised_vco2_target)))
    n_rest = len(current.times) - 1 - k
    tail, report = bvp.solve(result.matrix, revised_spec, n_rest * step, step, t0=t_rev, **solve_kw)

    reference = float(current.states[-1, VCO2])
    if report.divergent:
        stage = StageOutcome(t_rev, plan.revised_vco2_target, reference, None, None, report)
        result.stages.append(stage)
        result.vco2_reduction_pct = None
        return result

    states = np.vstack([current.states[:k], tail.states])
    derivs = np.vstack([current.derivatives[:k], tail.derivatives])
    # Keep the original grid times so revisions splice onto identical stamps.
    spliced = Trajectory(times=current.times.copy(), states=states, derivatives=derivs)
    revised_terminal = float(tail.states[-1, VCO2])
    pct = _reduction(reference, revised_terminal)
    result.revised = spliced
    result.stages.append(StageOutcome(t_rev, plan.revised_vco2_target, reference,
                                      revised_terminal, pct, report))
    result.vco2_reduction_pct = pct
    return result


def default_plans(defn: CaseDefinition) -> list[RestrategizePlan]:
    """Early revision toward the IC-row check value, late revision toward the BC-row one.

    Case 1 revises first at the detected dV_CO2 minimum; case 2 at the end of
    year 1 (3-year horizon) or year 3 (5-year horizon).  The late revision is
    at the start of the final year.
    """
    if defn.case_id == 1:
        first = None
    else:
        first = float((1 if defn.horizon_years <= 3 else 3) * DAYS_PER_YEAR)
    late = defn.horizon_days - DAYS_PER_YEAR
    return [RestrategizePlan(first, defn.check_value("IC")),
            RestrategizePlan(late, defn.check_value("BC"))]


def apply_plans(result: CaseResult, plans: Sequence[RestrategizePlan], **solve_kw) -> CaseResult:
    for plan in plans:
        restrategize(result, plan, **solve_kw)
        if result.stages[-1].reduction_pct is None:
            break
    return result


def compare_modes(case_id: int, horizon_years: int, cfg: ModelConfig,
                  step_days: float = bvp.DEFAULT_STEP_DAYS, **solve_kw) -> tuple[CaseResult, CaseResult]:
    """Constrained and unconstrained runs on identical boundary data."""
    defn = CaseDefinition(case_id, horizon_years, constrained=True)
    con = run_case(defn, cfg, step_days, **solve_kw)
    unc = run_case(replace(defn, constrained=False), cfg, step_days, **solve_kw)
    if unc.vco2_instability:
        log.info("%s: dV_CO2 %s", unc.definition.name, unc.vco2_instability)
    return con, unc
