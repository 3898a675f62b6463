"""Small dense linear programs: two-phase primal simplex with Bland's rule.

Intended for the desk-sized problems of the oracles (a few hundred columns).
Pivoting is deterministic, so identical problems give bit-identical answers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from slicemux.errors import DimensionMismatch, NumericalBreakdown

PIVOT_FLOOR = 1e-11
FEAS_TOL = 1e-8
COST_TOL = 1e-9
MAX_PIVOTS = 200_000

SENSES = ("<=", "=", ">=")


@dataclass
class LpProblem:
    """Optimize ``c @ x`` subject to ``A[k] @ x  (senses[k])  b[k]`` and bounds.

    ``bounds`` holds one ``(lo, hi)`` pair per variable; ``None`` means
    unbounded on that side. The default is ``(0, None)`` for every variable.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: Sequence[str]
    bounds: Sequence[tuple[float | None, float | None]] | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        A = np.asarray(self.A, dtype=np.float64)
        if A.size == 0:
            A = A.reshape(0, n)
        self.A = A
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.senses = tuple(self.senses)
        if A.ndim != 2 or A.shape[1] != n or A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise DimensionMismatch(
                f"c has {n} entries, A is {A.shape}, b has {self.b.size}, {len(self.senses)} senses"
            )
        if any(s not in SENSES for s in self.senses):
            raise DimensionMismatch(f"row senses must be among {SENSES}")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise DimensionMismatch(f"{len(self.bounds)} bounds for {n} variables")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(self.b))):
            raise DimensionMismatch("LP data must be finite")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def violation(self, x: np.ndarray) -> float:
        """Largest row or bound violation, each row scaled by ``max(1, |row|)``."""
        worst = 0.0
        if self.A.shape[0]:
            lhs = self.A @ x
            scale = np.maximum(1.0, np.linalg.norm(self.A, axis=1))
            for k, s in enumerate(self.senses):
                gap = lhs[k] - self.b[k]
                v = {"<=": gap, ">=": -gap, "=": abs(gap)}[s]
                worst = max(worst, v / scale[k])
        for j, (lo, hi) in enumerate(self.bounds):
            if lo is not None:
                worst = max(worst, lo - x[j])
            if hi is not None:
                worst = max(worst, x[j] - hi)
        return worst


@dataclass
class LpSolution:
    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    pivots: int = field(default=0, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Simplex tableau; the last row holds reduced costs, the last column the rhs."""

    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.pivots = 0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        p = T[r, j]
        if abs(p) < PIVOT_FLOOR:
            raise NumericalBreakdown(f"pivot {p:.3e} below {PIVOT_FLOOR:g}")
        T[r] /= p
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[np.abs(T) < 1e-14] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise NumericalBreakdown("pivot limit exceeded")

    def run(self, n_cols: int) -> str:
        """Minimize over the first ``n_cols`` columns with Bland's rule."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            cost = T[-1, :n_cols]
            entering = np.flatnonzero(cost < -COST_TOL)
            if entering.size == 0:
                return "optimal"
            j = int(entering[0])
            col = T[:m, j]
            rows = np.flatnonzero(col > PIVOT_FLOOR)
            if rows.size == 0:
                return "unbounded"
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(min(tied, key=lambda k: self.basis[k]))
            self.pivot(r, j)


def _standardize(p: LpProblem):
    """Rewrite as ``min c'z, A'z = b', z >= 0``; return data and the recovery map."""
    cols = []  # (orig var, sign) per z column
    offset = np.zeros(p.n_vars)
    extra_rows = []  # (z col, upper) rows z <= upper
    for j, (lo, hi) in enumerate(p.bounds):
        if lo is not None and np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if hi is not None and np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif hi is not None and np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nz = len(cols)
    M = np.zeros((p.n_vars, nz))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    A = p.A @ M
    b = p.b - p.A @ offset
    senses = list(p.senses)
    if extra_rows:
        E = np.zeros((len(extra_rows), nz))
        for r, (k, ub) in enumerate(extra_rows):
            E[r, k] = 1.0
        A = np.vstack([A, E])
        b = np.concatenate([b, [ub for _, ub in extra_rows]])
        senses += ["<="] * len(extra_rows)
    c = (-1.0 if p.maximize else 1.0) * (p.c @ M)
    return c, A, b, senses, M, offset


def solve_lp(problem: LpProblem) -> LpSolution:
    c, A, b, senses, M, offset = _standardize(problem)
    m, nz = A.shape
    A = A.copy()
    b = b.copy()
    senses = list(senses)
    for k in range(m):
        if b[k] < 0:
            A[k] *= -1.0
            b[k] *= -1.0
            senses[k] = {"<=": ">=", ">=": "<=", "=": "="}[senses[k]]
    n_slack = sum(s != "=" for s in senses)
    n_art = sum(s != "<=" for s in senses)
    n_real = nz + n_slack
    width = n_real + n_art + 1
    T = np.zeros((m + 1, width))
    T[:m, :nz] = A
    T[:m, -1] = b
    basis = [0] * m
    s_col, a_col = nz, n_real
    for k, s in enumerate(senses):
        if s == "<=":
            T[k, s_col] = 1.0
            basis[k] = s_col
            s_col += 1
        else:
            if s == ">=":
                T[k, s_col] = -1.0
                s_col += 1
            T[k, a_col] = 1.0
            basis[k] = a_col
            a_col += 1
    tab = _Tableau(T, basis)

    if n_art:
        # Phase 1: minimize the sum of artificials.
        T[-1, :] = 0.0
        T[-1, n_real : n_real + n_art] = 1.0
        for k in range(m):
            if basis[k] >= n_real:
                T[-1] -= T[k]
        tab.run(n_real + n_art)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -T[-1, -1] > FEAS_TOL * scale:
            return LpSolution("infeasible", pivots=tab.pivots)
        # Drive remaining (zero-level) artificials out of the basis.
        k = 0
        while k < tab.T.shape[0] - 1:
            if tab.basis[k] >= n_real:
                row = tab.T[k, :n_real]
                cand = np.flatnonzero(np.abs(row) > PIVOT_FLOOR)
                if cand.size:
                    tab.pivot(k, int(cand[0]))
                else:
                    tab.T = np.delete(tab.T, k, axis=0)
                    del tab.basis[k]
                    continue
            k += 1
        tab.T = np.delete(tab.T, np.s_[n_real : n_real + n_art], axis=1)

    # Phase 2.
    T = tab.T
    T[-1, :] = 0.0
    T[-1, :nz] = c
    for k, j in enumerate(tab.basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[k]
    status = tab.run(n_real)
    if status == "unbounded":
        return LpSolution("unbounded", pivots=tab.pivots)
    z = np.zeros(n_real)
    for k, j in enumerate(tab.basis):
        z[j] = tab.T[k, -1]
    x = offset + M @ z[:nz]
    obj = float(problem.c @ x)
    if problem.violation(x) > FEAS_TOL:
        raise NumericalBreakdown(f"solution violates constraints by {problem.violation(x):.3e}")
    return LpSolution("optimal", obj, x, pivots=tab.pivots)
