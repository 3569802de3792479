"""Linear two-point boundary value problems  x'' = A x  on [t0, t0 + T].

Initial values are always Dirichlet.  Each terminal component is either a
Dirichlet value or a zero slope.  Solved by shooting with superposition:
one particular solution (zero initial velocity) and one basis solution per
initial-velocity direction are integrated with classical RK4; their terminal
states give a small linear system for the initial velocity, after which the
problem is integrated once more to produce the trajectory.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import NumericalError, ValidationError

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-8
DIVERGENCE_THRESHOLD = 1e12
DEFAULT_STEP_DAYS = 0.25
DAYS_PER_YEAR = 300

CSV_HEADER = ("t", "dN4", "dN5", "dN7", "dVCO2", "dN4dot", "dN5dot", "dN7dot", "dVCO2dot")


@dataclass(frozen=True)
class Dirichlet:
    value: float


@dataclass(frozen=True)
class NeumannZero:
    pass


Terminal = Union[Dirichlet, NeumannZero]


@dataclass(frozen=True)
class BoundarySpec:
    initial: tuple[float, ...]
    terminal: tuple[Terminal, ...]

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(float(v) for v in self.initial))
        object.__setattr__(self, "terminal", tuple(self.terminal))
        if len(self.initial) != len(self.terminal) or not self.initial:
            raise ValidationError("need one initial and one terminal condition per component")
        for t in self.terminal:
            if not isinstance(t, (Dirichlet, NeumannZero)):
                raise ValidationError(f"unknown terminal condition {t!r}")

    @property
    def n(self) -> int:
        return len(self.initial)

    @classmethod
    def dirichlet(cls, initial: Sequence[float], terminal: Sequence[float]) -> "BoundarySpec":
        return cls(tuple(initial), tuple(Dirichlet(float(v)) for v in terminal))

    def scaled(self, s: float) -> "BoundarySpec":
        return BoundarySpec(tuple(s * v for v in self.initial),
                            tuple(Dirichlet(s * t.value) if isinstance(t, Dirichlet) else t
                                  for t in self.terminal))

    def __add__(self, other: "BoundarySpec") -> "BoundarySpec":
        terms = []
        for a, b in zip(self.terminal, other.terminal):
            if type(a) is not type(b):
                raise ValidationError("cannot add specs with different terminal condition kinds")
            terms.append(Dirichlet(a.value + b.value) if isinstance(a, Dirichlet) else a)
        return BoundarySpec(tuple(x + y for x, y in zip(self.initial, other.initial)), tuple(terms))

    def with_terminal(self, index: int, cond: Terminal) -> "BoundarySpec":
        terms = list(self.terminal)
        terms[index] = cond
        return BoundarySpec(self.initial, tuple(terms))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray        # (npoints, n)
    derivatives: np.ndarray   # (npoints, n)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def index_of(self, t: float) -> int:
        """Grid index of time ``t``; raises if ``t`` is not on the grid."""
        h = self.step
        k = int(round((t - self.times[0]) / h))
        if not 0 <= k < len(self.times) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValidationError(f"time {t} is not on the trajectory grid")
        return k


@dataclass
class SolveReport:
    boundary_residual: float
    ode_residual: float
    divergent: bool
    condition_estimate: float
    diagnostic: str = ""
    extra: dict = field(default_factory=dict)


def make_grid(horizon: float, step: float, t0: float = 0.0) -> np.ndarray:
    if not (np.isfinite(horizon) and horizon > 0):
        raise ValidationError(f"horizon must be positive, got {horizon}")
    if not (np.isfinite(step) and step > 0):
        raise ValidationError(f"step must be positive, got {step}")
    n = int(round(horizon / step))
    if n < 2 or abs(n * step - horizon) > 1e-9 * horizon:
        raise ValidationError(f"step {step} does not divide horizon {horizon}")
    return t0 + step * np.arange(n + 1)


def _first_order(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    b = np.zeros((2 * n, 2 * n))
    b[:n, n:] = np.eye(n)
    b[n:, :n] = a
    return b


def rk4_step(b: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    k1 = b @ y
    k2 = b @ (y + 0.5 * h * k1)
    k3 = b @ (y + 0.5 * h * k2)
    k4 = b @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(b: np.ndarray, y0: np.ndarray, h: float, nsteps: int,
              keep: bool = False) -> np.ndarray:
    """RK4 for y' = B y.  ``y0`` may hold several initial states as columns."""
    y = np.array(y0, dtype=float)
    if keep:
        out = np.empty((nsteps + 1,) + y.shape)
        out[0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(nsteps):
            y = rk4_step(b, y, h)
            if keep:
                out[k + 1] = y
    return out if keep else y


def residual_check(traj: Trajectory, a: np.ndarray) -> float:
    """Max over interior points of |central-difference x'' - A x| (infinity norm)."""
    x = traj.states
    if len(x) < 3:
        raise ValidationError("residual check needs at least 3 grid points")
    h = traj.step
    xdd = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / h ** 2
    r = xdd - x[1:-1] @ np.asarray(a).T
    return float(np.max(np.abs(r)))


def solve(a, spec: BoundarySpec, horizon_days: float, step_days: float = DEFAULT_STEP_DAYS,
          t0: float = 0.0, boundary_tol: float = BOUNDARY_TOL,
          divergence_threshold: float = DIVERGENCE_THRESHOLD) -> tuple[Trajectory, SolveReport]:
    a = np.asarray(getattr(a, "entries", a), dtype=float)
    n = spec.n
    if a.shape != (n, n):
        raise ValidationError(f"matrix shape {a.shape} does not match {n} boundary components")
    if not np.all(np.isfinite(a)):
        raise ValidationError("system matrix has non-finite entries")
    times = make_grid(horizon_days, step_days, t0)
    nsteps = len(times) - 1
    h = step_days
    b = _first_order(a)

    # Column 0: particular solution; columns 1..n: unit initial velocities.
    y0 = np.zeros((2 * n, n + 1))
    y0[:n, 0] = spec.initial
    y0[n:, 1:] = np.eye(n)
    yT = integrate(b, y0, h, nsteps)

    rows = [k if isinstance(c, Dirichlet) else n + k for k, c in enumerate(spec.terminal)]
    targets = np.array([c.value if isinstance(c, Dirichlet) else 0.0 for c in spec.terminal])
    s = yT[rows, 1:]
    rhs = targets - yT[rows, 0]

    diagnostic = ""
    divergent = False
    magnitude = float(np.max(np.abs(yT))) if np.all(np.isfinite(yT)) else np.inf
    if not np.isfinite(magnitude) or magnitude > divergence_threshold:
        divergent = True
        diagnostic = f"terminal basis magnitude {magnitude:.3g} exceeds {divergence_threshold:.3g}"
        cond = np.inf
    else:
        cond = float(np.linalg.cond(s))
        if not np.isfinite(cond) or cond > divergence_threshold:
            divergent = True
            diagnostic = f"terminal matching system condition {cond:.3g} exceeds {divergence_threshold:.3g}"

    if divergent:
        if np.all(np.isfinite(s)) and np.all(np.isfinite(rhs)):
            v0 = np.linalg.lstsq(s, rhs, rcond=None)[0]
        else:
            v0 = np.zeros(n)
    else:
        v0 = np.linalg.solve(s, rhs)

    y_start = np.concatenate([np.asarray(spec.initial), v0])
    ys = integrate(b, y_start, h, nsteps, keep=True)
    traj = Trajectory(times=times, states=ys[:, :n], derivatives=ys[:, n:])

    end = ys[-1]
    with np.errstate(invalid="ignore"):
        mismatch = np.concatenate([np.abs(ys[0, :n] - spec.initial), np.abs(end[rows] - targets)])
    bres = float(np.max(mismatch)) if np.all(np.isfinite(mismatch)) else np.inf
    if np.all(np.isfinite(ys)):
        ores = residual_check(traj, a)
    else:
        ores = np.inf
        divergent = True
        diagnostic = diagnostic or "trajectory overflowed"

    scale = max(1.0, float(np.max(np.abs(targets))))
    if not divergent and bres > boundary_tol * scale:
        divergent = True
        diagnostic = (f"boundary residual {bres:.3g} exceeds tolerance {boundary_tol * scale:.3g} "
                      f"(condition {cond:.3g})")
    if divergent:
        log.warning("divergent solve: %s", diagnostic)
    return traj, SolveReport(bres, ores, divergent, cond, diagnostic)


@dataclass(frozen=True)
class Mode:
    eigenvalue: complex
    kind: str          # "oscillatory", "exponential", "neutral" or "growing-oscillatory"
    rate: float        # angular frequency for oscillatory modes, growth rate otherwise
    vector: tuple[complex, ...]


def classify_modes(a, zero_tol: float = 1e-12) -> list[Mode]:
    """Eigen-modes of x'' = A x: negative real eigenvalues oscillate, positive ones grow."""
    a = np.asarray(getattr(a, "entries", a), dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(a))))
    modes = []
    for k in np.argsort(-vals.real, kind="stable"):
        lam = complex(vals[k])
        vec = tuple(complex(v) for v in vecs[:, k])
        if abs(lam.imag) > zero_tol * scale:
            root = np.sqrt(lam)
            modes.append(Mode(lam, "growing-oscillatory", float(abs(root.real)), vec))
        elif abs(lam.real) <= zero_tol * scale:
            modes.append(Mode(lam, "neutral", 0.0, vec))
        elif lam.real < 0:
            modes.append(Mode(lam, "oscillatory", float(np.sqrt(-lam.real)), vec))
        else:
            modes.append(Mode(lam, "exponential", float(np.sqrt(lam.real)), vec))
    return modes


def component_oscillates(modes: Sequence[Mode], component: int, tol: float = 1e-9) -> bool:
    """True when some oscillating mode has a non-negligible share in ``component``."""
    for m in modes:
        if m.kind in ("oscillatory", "growing-oscillatory"):
            v = np.abs(np.asarray(m.vector))
            if v[component] > tol * max(v.max(), 1e-300):
                return True
    return False


def write_csv(traj: Trajectory, path) -> None:
    if traj.states.shape[1] != 4:
        raise ValidationError("CSV export expects the 4-component perturbation state")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, x, v in zip(traj.times, traj.states, traj.derivatives):
            w.writerow([repr(float(t))] + [repr(float(z)) for z in x] + [repr(float(z)) for z in v])


def read_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_HEADER:
            raise ValidationError(f"unexpected CSV header {header}")
        data = np.array([[float(z) for z in row] for row in r])
    return Trajectory(times=data[:, 0], states=data[:, 1:5], derivatives=data[:, 5:9])
