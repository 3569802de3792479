"""Analytic Hierarchy Process: priority weights, consistency, layered coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, ParseError, ValidationError

# Saaty random consistency index, keyed by matrix order.
RANDOM_INDEX = {
    1: 0.00, 2: 0.00, 3: 0.58, 4: 0.90, 5: 1.12,
    6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49,
}

CR_THRESHOLD = 0.10
# Guards the CR <= 0.10 comparison against last-bit round-off.
_CR_SLACK = 1e-12

POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000


class PairwiseMatrix:
    """Square positive reciprocal judgment matrix."""

    def __init__(self, entries, rtol: float = 1e-9):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValidationError(f"pairwise matrix must be square and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValidationError("pairwise matrix entries must be finite and strictly positive")
        if not np.allclose(np.diag(a), 1.0, rtol=rtol, atol=0.0):
            raise ValidationError("pairwise matrix diagonal must be 1")
        if not np.allclose(a.T * a, 1.0, rtol=rtol, atol=0.0):
            i, j = np.unravel_index(np.argmax(np.abs(a.T * a - 1.0)), a.shape)
            raise ValidationError(
                f"pairwise matrix is not reciprocal at ({i}, {j}): {a[i, j]!r} vs {a[j, i]!r}"
            )
        a.setflags(write=False)
        self.entries = a

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "PairwiseMatrix":
        """Perfectly consistent matrix with entries w_i / w_j."""
        w = np.asarray(weights, dtype=float)
        return cls(w[:, None] / w[None, :])

    @classmethod
    def from_upper(cls, n: int, upper: Sequence[float]) -> "PairwiseMatrix":
        """Build from the n(n-1)/2 upper-triangle judgments, row by row."""
        if len(upper) != n * (n - 1) // 2:
            raise ValidationError(f"need {n * (n - 1) // 2} judgments for n={n}, got {len(upper)}")
        a = np.ones((n, n))
        it = iter(upper)
        for i in range(n):
            for j in range(i + 1, n):
                v = float(next(it))
                a[i, j] = v
                a[j, i] = 1.0 / v
        return cls(a)


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    ci: float
    ri: float
    cr: float
    acceptable: bool


def priority_vector(m: PairwiseMatrix, tol: float = POWER_TOL,
                    max_iter: int = POWER_MAX_ITER) -> tuple[np.ndarray, float]:
    """Principal eigenvector (normalised to sum 1) and dominant eigenvalue.

    Power iteration on the raw matrix; stops once successive weight vectors
    agree to ``tol`` in the max norm.
    """
    a = m.entries
    n = m.n
    if n == 1:
        return np.ones(1), 1.0
    w = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = a @ w
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - w)) < tol:
            w = nxt
            break
        w = nxt
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    # Rayleigh-type estimate: A w = lambda w, summed over components.
    lam = float((a @ w).sum() / w.sum())
    return w, lam


def consistency_from_lambda(lambda_max: float, n: int) -> ConsistencyReport:
    if n <= 2:
        return ConsistencyReport(lambda_max, 0.0, 0.0, 0.0, True)
    try:
        ri = RANDOM_INDEX[n]
    except KeyError:
        raise ValidationError(f"no random index tabulated for n={n} (max 10)") from None
    ci = (lambda_max - n) / (n - 1)
    cr = ci / ri
    return ConsistencyReport(lambda_max, ci, ri, cr, cr <= CR_THRESHOLD + _CR_SLACK)


def consistency_ratio(m: PairwiseMatrix) -> ConsistencyReport:
    _, lam = priority_vector(m)
    return consistency_from_lambda(lam, m.n)


def derive_compound(ci: float, cj: float) -> float:
    """Coefficient of a product term: the product of its two base coefficients."""
    return ci * cj


def derive_squared(ci: float) -> float:
    """Coefficient of a squared term: the square root of its base coefficient."""
    if ci < 0:
        raise ValidationError(f"cannot take square root of negative coefficient {ci}")
    return math.sqrt(ci)


def parse_matrix_text(text: str) -> PairwiseMatrix:
    """Parse ``n`` followed by ``n`` whitespace-separated rows; ``1/3`` style fractions allowed."""
    lines = [(no, ln.strip()) for no, ln in enumerate(text.splitlines(), start=1)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty matrix file", line=1)
    no, head = lines[0]
    try:
        n = int(head)
    except ValueError:
        raise ParseError(f"expected matrix order, got {head!r}", line=no) from None
    if n < 1:
        raise ParseError(f"matrix order must be positive, got {n}", line=no)
    rows = lines[1:]
    if len(rows) != n:
        at = rows[-1][0] + 1 if rows else no + 1
        raise ParseError(f"expected {n} rows, found {len(rows)}", line=at if len(rows) < n else rows[n][0])
    data = []
    for no, ln in rows:
        toks = ln.split()
        if len(toks) != n:
            raise ParseError(f"expected {n} entries, found {len(toks)}", line=no)
        try:
            data.append([float(Fraction(t)) for t in toks])
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad number in row {ln!r}", line=no) from None
    try:
        return PairwiseMatrix(data)
    except ValidationError as exc:
        raise ParseError(str(exc), line=rows[0][0]) from None
