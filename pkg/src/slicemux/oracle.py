"""Ground-truth baselines for the Max-Weight provisioner.

* ``static_epsilon``: the best stationary randomized policy that looks only at
  the current excess vector, found by LP; its slack ``epsilon*`` decides
  whether any scheduler can meet the coverage targets at a given pool size.
* ``offline_optimal``: the smallest pool any (non-causal) schedule needs on a
  concrete trace, via a grouped integer program solved by branch and bound.
* ``drift_check``: exact one-step Lyapunov drift of Max-Weight, enumerated
  over the joint excess distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from slicemux.demand_gen import MarkovDemandModel, gen_markov_trace
from slicemux.demand_stats import EmpiricalCdf, excess_trace, isolation_floor
from slicemux.errors import (
    DimensionMismatch,
    ModelTooLarge,
    StateSpaceTooLarge,
    ValidationError,
)
from slicemux.lp import LpProblem, solve_lp
from slicemux.scheduler import SlaSpec, slot_capacity, solve_knapsack

LP_COLUMN_CAP = 4096
ILP_VARIABLE_CAP = 20_000
INTEGRALITY_TOL = 1e-6
BB_NODE_LIMIT = 20_000
EPS_ZERO_TOL = 1e-9


def allowed_actions(excess_row, w_c: int, maximal_only: bool = False) -> list[tuple[int, ...]]:
    """Subsets of positive-excess slices that fit the slot capacity.

    Enumerated by depth-first backtracking over slice indices with capacity
    pruning. With ``maximal_only`` only subsets that cannot be extended are
    kept (serving more never hurts coverage).
    """
    row = np.asarray(excess_row, dtype=np.int64)
    cap = slot_capacity(row, w_c)
    items = [int(i) for i in np.flatnonzero(row > 0)]
    weights = {i: int(row[i]) for i in items}
    out: list[tuple[int, ...]] = []

    def extend(k: int, chosen: list[int], room: int) -> None:
        if k == len(items):
            if maximal_only and any(weights[i] <= room for i in items if i not in chosen):
                return
            out.append(tuple(chosen))
            return
        i = items[k]
        if weights[i] <= room:
            chosen.append(i)
            extend(k + 1, chosen, room - weights[i])
            chosen.pop()
        extend(k + 1, chosen, room)

    extend(0, [], cap)
    return out


# ---------------------------------------------------------------------------
# Stationary (excess-only) policies


@dataclass
class JointExcess:
    """Product distribution of the per-slice excess demands."""

    states: np.ndarray
    probs: np.ndarray


def model_floors(model: MarkovDemandModel, p_l: Sequence[float]) -> tuple[list[int], np.ndarray]:
    """Isolation floors and achieved ``P^M`` from the chains' stationary laws."""
    if len(p_l) != model.slice_count:
        raise DimensionMismatch("one isolation target per slice")
    floors, p_m = [], []
    for i, p in enumerate(p_l):
        f = isolation_floor(EmpiricalCdf.from_distribution(*model.marginal(i)), p)
        floors.append(f.w_l)
        p_m.append(f.p_m)
    return floors, np.array(p_m)


def model_targets(model: MarkovDemandModel, sla: SlaSpec) -> tuple[list[int], np.ndarray]:
    """Floors and coverage targets ``P^H - P^M`` for a Markov model."""
    floors, p_m = model_floors(model, sla.p_l)
    return floors, np.array(sla.p_h) - p_m


def joint_excess(model: MarkovDemandModel, floors: Sequence[int]) -> JointExcess:
    per_slice = []
    for i in range(model.slice_count):
        values, probs = model.marginal(i)
        per_slice.append(list(zip((values - int(floors[i])).tolist(), probs.tolist())))
    states, probs = [], []
    for combo in itertools.product(*per_slice):
        states.append([v for v, _ in combo])
        probs.append(math.prod(p for _, p in combo))
    return JointExcess(np.array(states, dtype=np.int64), np.array(probs))


@dataclass
class StaticLpResult:
    epsilon_star: float
    joint: JointExcess
    actions: list[list[tuple[int, ...]]]
    policy: list[np.ndarray]
    coverage: np.ndarray
    floors: list[int]
    w_c: int
    targets: np.ndarray

    @property
    def joint_states(self) -> np.ndarray:
        return self.joint.states


def static_epsilon(
    model: MarkovDemandModel,
    floors: Sequence[int],
    w_c: int,
    targets,
    column_cap: int = LP_COLUMN_CAP,
) -> StaticLpResult:
    """Largest uniform slack achievable by a stationary excess-only policy.

    Maximizes ``eps`` subject to ``sum_u p(u|w) = 1`` for every joint excess
    state ``w``, ``p >= 0``, and ``E[u_i 1{w_i > 0}] >= a_i + eps`` per slice.
    """
    N = model.slice_count
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (N,) or len(floors) != N:
        raise DimensionMismatch("targets and floors need one entry per slice")
    n_states = math.prod(len(model.marginal(i)[0]) for i in range(N))
    if n_states * 2**N > column_cap:
        raise StateSpaceTooLarge(
            f"{n_states} joint states x 2^{N} actions exceeds the {column_cap}-column cap"
        )
    joint = joint_excess(model, floors)
    actions = [allowed_actions(w, w_c) for w in joint.states]
    n_cols = sum(len(a) for a in actions)
    n = n_cols + 1  # last variable is eps
    S = len(actions)
    A = np.zeros((S + N, n))
    b = np.zeros(S + N)
    col = 0
    for s, acts in enumerate(actions):
        for u in acts:
            A[s, col] = 1.0
            for i in u:
                A[S + i, col] = joint.probs[s]
            col += 1
        b[s] = 1.0
    A[S:, -1] = -1.0
    b[S:] = targets
    c = np.zeros(n)
    c[-1] = 1.0
    bounds = [(0.0, None)] * n_cols + [(None, None)]
    sol = solve_lp(LpProblem(c, A, b, ["="] * S + [">="] * N, bounds=bounds, maximize=True))
    if not sol.optimal:
        raise ValidationError(f"stationary-policy LP returned {sol.status}")
    x = np.clip(sol.x[:-1], 0.0, None)
    policy, col = [], 0
    for acts in actions:
        p = x[col : col + len(acts)]
        policy.append(p / p.sum())
        col += len(acts)
    coverage = A[S:, :-1] @ x
    return StaticLpResult(
        epsilon_star=float(sol.x[-1]),
        joint=joint,
        actions=actions,
        policy=policy,
        coverage=coverage,
        floors=[int(f) for f in floors],
        w_c=int(w_c),
        targets=targets,
    )


def static_upper_bound(model: MarkovDemandModel, floors: Sequence[int]) -> int:
    joint = joint_excess(model, floors)
    return int(np.maximum(joint.states, 0).sum(axis=1).max())


def static_threshold(model: MarkovDemandModel, floors: Sequence[int], targets, column_cap: int = LP_COLUMN_CAP) -> int:
    """Smallest integer pool with ``epsilon* >= 0`` (``epsilon*`` is nondecreasing in it)."""
    targets = np.asarray(targets, dtype=np.float64)
    if np.all(targets <= 0):
        return 0
    lo, hi = 0, static_upper_bound(model, floors)

    def ok(w):
        return static_epsilon(model, floors, w, targets, column_cap).epsilon_star >= -EPS_ZERO_TOL

    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def simulate_static_scheduler(
    model: MarkovDemandModel,
    result: StaticLpResult,
    T: int,
    seed: int | None,
    policy: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Empirical coverage of the randomized excess-only policy on a fresh trace.

    ``policy`` overrides the LP policy (same action lists as ``result``).
    """
    policy = result.policy if policy is None else policy
    rng = np.random.default_rng(seed)
    trace = gen_markov_trace(model, T, int(rng.integers(2**63)))
    ex = excess_trace(trace, result.floors)
    index = {tuple(w): k for k, w in enumerate(result.joint.states.tolist())}
    state_of = np.array([index[tuple(r)] for r in ex.tolist()])
    N = model.slice_count
    served = np.zeros(N, dtype=np.int64)
    for s in range(len(result.actions)):
        slots = np.flatnonzero(state_of == s)
        if slots.size == 0:
            continue
        cum = np.cumsum(policy[s])
        cum[-1] = 1.0
        pick = np.searchsorted(cum, rng.random(slots.size), side="right")
        counts = np.bincount(pick, minlength=len(cum))
        for a, n in zip(result.actions[s], counts):
            for i in a:
                served[i] += n
    return served / T


# ---------------------------------------------------------------------------
# Offline (non-causal) optimum


@dataclass
class OfflineResult:
    w_c_offline: int
    groups: np.ndarray
    group_sizes: np.ndarray
    assignment: list[list[tuple[tuple[int, ...], int]]]
    bound_certificates: list[tuple[int, str, float | None]] = field(default_factory=list)

    def decisions(self, excess, rng: np.random.Generator | None = None) -> np.ndarray:
        """Expand group counts into per-slot decisions for ``excess``.

        Slots of a group are filled in time order, or in a random order when
        ``rng`` is given. Non-positive excess is marked served.
        """
        excess = np.asarray(excess, dtype=np.int64)
        out = excess <= 0
        index = {tuple(g): k for k, g in enumerate(self.groups.tolist())}
        rows, inverse = np.unique(excess, axis=0, return_inverse=True)
        group_of = np.array([index[tuple(r)] for r in rows.tolist()])[inverse.ravel()]
        order = np.argsort(group_of, kind="stable")
        starts = np.searchsorted(group_of[order], np.arange(len(self.groups) + 1))
        for k in range(len(self.groups)):
            slots = order[starts[k] : starts[k + 1]]
            if rng is not None:
                slots = rng.permutation(slots)
            pos = 0
            for subset, n in self.assignment[k]:
                if subset:
                    out[np.ix_(slots[pos : pos + n], list(subset))] = True
                pos += n
        return out


def _group(excess: np.ndarray):
    groups, inverse, sizes = np.unique(excess, axis=0, return_inverse=True, return_counts=True)
    return groups, sizes


def _grouped_ilp(groups, sizes, w_c, counts, var_cap, certificates):
    """Integer feasibility of serving ``counts`` with pool ``w_c``; returns the assignment or None."""
    N = groups.shape[1]
    actions = [[a for a in allowed_actions(g, w_c, maximal_only=True)] for g in groups]
    n = sum(len(a) for a in actions)
    if n > var_cap:
        raise ModelTooLarge(
            f"grouped program needs {n} variables (cap {var_cap}); "
            "coarsen the trace (window_max) or raise the ILP cap"
        )
    need = [i for i in range(N) if counts[i] > 0]
    G = len(groups)
    A = np.zeros((G + len(need), n))
    b = np.zeros(G + len(need))
    c = np.zeros(n)
    owner, subsets = [], []
    col = 0
    for g, acts in enumerate(actions):
        for u in acts:
            A[g, col] = 1.0
            for r, i in enumerate(need):
                if i in u:
                    A[G + r, col] = 1.0
            c[col] = len(u)
            owner.append(g)
            subsets.append(u)
            col += 1
        b[g] = sizes[g]
    for r, i in enumerate(need):
        b[G + r] = counts[i]
    senses = ["="] * G + [">="] * len(need)

    stack = [([0.0] * n, [None] * n, 0)]
    nodes = 0
    while stack:
        lo, hi, depth = stack.pop()
        nodes += 1
        if nodes > BB_NODE_LIMIT:
            raise ModelTooLarge(f"branch and bound exceeded {BB_NODE_LIMIT} nodes")
        sol = solve_lp(LpProblem(c, A, b, senses, bounds=list(zip(lo, hi)), maximize=True))
        if not sol.optimal:
            certificates.append((int(w_c), sol.status, None))
            continue
        x = sol.x
        frac = np.abs(x - np.round(x))
        if frac.max(initial=0.0) <= INTEGRALITY_TOL:
            xi = np.round(x).astype(np.int64)
            assignment: list[list[tuple[tuple[int, ...], int]]] = [[] for _ in range(G)]
            for k in np.flatnonzero(xi):
                assignment[owner[k]].append((subsets[k], int(xi[k])))
            return assignment
        j = int(np.argmax(frac))
        down_hi = list(hi)
        down_hi[j] = math.floor(x[j])
        up_lo = list(lo)
        up_lo[j] = math.ceil(x[j])
        stack.append((lo, down_hi, depth + 1))
        stack.append((up_lo, hi, depth + 1))
    certificates.append((int(w_c), "exhausted", None))
    return None


def offline_optimal(excess, counts, var_cap: int = ILP_VARIABLE_CAP) -> OfflineResult:
    """Smallest integer pool admitting a schedule that serves ``counts[i]`` positive-excess slots of each slice."""
    excess = np.ascontiguousarray(excess, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    if excess.ndim != 2 or counts.shape != (excess.shape[1],):
        raise DimensionMismatch("need a (T, N) excess trace and N coverage counts")
    available = (excess > 0).sum(axis=0)
    if np.any(counts > available):
        raise ValidationError(
            f"coverage counts {counts.tolist()} exceed positive-excess slots {available.tolist()}"
        )
    groups, sizes = _group(excess)
    certificates: list = []
    hi = int(np.maximum(excess, 0).sum(axis=1).max())

    def solve(w):
        return _grouped_ilp(groups, sizes, w, counts, var_cap, certificates)

    if np.all(counts <= 0):
        best_w, best = 0, solve(0)
    else:
        best_w, best = hi, solve(hi)
        if best is None:  # pragma: no cover - everything fits at the upper bound
            raise ValidationError("offline program infeasible at its upper bound")
        lo = -1
        while best_w - lo > 1:
            mid = (lo + best_w) // 2
            got = solve(mid)
            if got is None:
                lo = mid
            else:
                best_w, best = mid, got
    return OfflineResult(best_w, groups, sizes, best, certificates)


# ---------------------------------------------------------------------------
# Lyapunov drift


@dataclass
class DriftReport:
    epsilon_star: float
    b_std: float
    b_avg: float
    points: np.ndarray
    drift: np.ndarray
    bound: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.bound - self.drift

    @property
    def min_margin(self) -> float:
        return float(self.margin.min())


def drift_check(
    model: MarkovDemandModel,
    floors: Sequence[int],
    w_c: int,
    targets,
    deficit_grid: Sequence[float] = (0, 1, 2, 4, 8),
    column_cap: int = LP_COLUMN_CAP,
) -> DriftReport:
    """Exact expected change of ``L(d) = sum(d_i^2) / 2`` over one Max-Weight slot.

    The drift at each grid point is compared with ``B - eps* * sum(d)`` where
    ``B = sum(1 + a_i^2) / 2``. Slices with ``a_i <= 0`` keep a zero deficit on
    every trajectory from ``d = 0``, so their grid coordinate is fixed at 0.
    """
    targets = np.asarray(targets, dtype=np.float64)
    N = model.slice_count
    eps = static_epsilon(model, floors, w_c, targets, column_cap).epsilon_star
    joint = joint_excess(model, floors)
    if len(joint.states) > column_cap:
        raise StateSpaceTooLarge(f"{len(joint.states)} joint states")
    axes = [list(deficit_grid) if targets[i] > 0 else [0.0] for i in range(N)]
    points = np.array(list(itertools.product(*axes)), dtype=np.float64)
    drift = np.zeros(len(points))
    for k, d in enumerate(points):
        L0 = 0.5 * float(d @ d)
        total = 0.0
        for w, p in zip(joint.states, joint.probs):
            pos = np.flatnonzero(w > 0)
            served = np.zeros(N, dtype=bool)
            if pos.size:
                pick = solve_knapsack(d[pos], w[pos], slot_capacity(w, w_c))
                served[pos[list(pick)]] = True
            nxt = np.maximum(np.maximum(d - served, 0.0) + targets, 0.0)
            total += p * (0.5 * float(nxt @ nxt) - L0)
        drift[k] = total
    b_std = 0.5 * float(np.sum(1.0 + targets**2))
    b_avg = 1.0 + float(np.sum(targets**2)) / N
    bound = b_std - eps * points.sum(axis=1)
    return DriftReport(eps, b_std, b_avg, points, drift, bound)
