"""Seeded property checks behind ``slicemux validate``.

Every check compares a production path against an independent brute-force
computation on small random instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from slicemux import kernels
from slicemux.demand_gen import DemandTrace, build_markov_model
from slicemux.demand_stats import empirical_cdf, isolation_floor, slice_floors
from slicemux.equivalence import feasible_corpus, verify_lift, verify_floor_pinning
from slicemux.lp import LpProblem, solve_lp
from slicemux.oracle import drift_check, model_targets
from slicemux.scheduler import SlaSpec, solve_knapsack


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def brute_force_knapsack(values, weights, capacity) -> tuple[float, tuple[int, ...]]:
    """Best value and, among optimal subsets, the lexicographically largest indicator vector."""
    n = len(values)
    best_v, best_bits = -1.0, None
    for bits in itertools.product((1, 0), repeat=n):  # lexicographically descending
        w = sum(wi for wi, b in zip(weights, bits) if b)
        if w > capacity:
            continue
        v = sum(vi for vi, b in zip(values, bits) if b)
        if v > best_v:
            best_v, best_bits = v, bits
    return best_v, tuple(i for i, b in enumerate(best_bits) if b)


def check_knapsack(rng, cases=300) -> CheckResult:
    for k in range(cases):
        n = int(rng.integers(1, 11))
        # Small integer values force plenty of ties.
        values = rng.integers(0, 6, size=n).astype(float)
        weights = rng.integers(1, 8, size=n)
        cap = int(rng.integers(0, weights.sum() + 1))
        got = solve_knapsack(values, weights, cap)
        best, want = brute_force_knapsack(values.tolist(), weights.tolist(), cap)
        if got != want or abs(values[list(got)].sum() - best) > 1e-12:
            return CheckResult("knapsack", False, f"case {k}: got {got}, brute force {want}")
    return CheckResult("knapsack", True, f"{cases} instances")


def check_floors(rng, cases=100) -> CheckResult:
    for k in range(cases):
        col = rng.integers(0, 12, size=int(rng.integers(1, 60)))
        cdf = empirical_cdf(col)
        p = float(rng.choice([0.0, 1.0, rng.random()]))
        got = isolation_floor(cdf, p).w_l
        want = next(w for w in range(int(col.max()) + 1) if np.mean(col <= w) >= p - 1e-12)
        if got != want:
            return CheckResult("isolation floor", False, f"case {k}: {got} != scan {want}")
    return CheckResult("isolation floor", True, f"{cases} traces")


def check_kernel_parity(rng) -> CheckResult:
    if "compiled" not in kernels.BACKENDS:
        return CheckResult("kernel parity", True, "compiled backend not built; skipped")
    py, ext = kernels.BACKENDS["python"], kernels.BACKENDS["compiled"]
    for k in range(20):
        n = int(rng.integers(1, 7))
        ex = rng.integers(-5, 12, size=(300, n))
        a = rng.uniform(0, 0.6, size=n)
        w = int(rng.integers(0, 20))
        r1 = py.run_max_weight(ex, w, a, True, True)
        r2 = ext.run_max_weight(ex, w, a, True, True)
        if not all(np.array_equal(x, y) for x, y in zip(r1, r2)):
            return CheckResult("kernel parity", False, f"case {k} differs")
    return CheckResult("kernel parity", True, "20 traces")


def check_lp(rng, cases=40) -> CheckResult:
    """Bounded 2-3 variable LPs against enumeration of all basic points."""
    for k in range(cases):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, 4))
        A = rng.integers(-3, 5, size=(m, n)).astype(float)
        b = rng.integers(0, 10, size=m).astype(float)
        c = rng.integers(-4, 5, size=n).astype(float)
        box = [(0.0, 5.0)] * n
        sol = solve_lp(LpProblem(c, A, b, ["<="] * m, box, maximize=True))
        # Vertices: every n-subset of the active constraints (rows plus box faces).
        rows = [(A[i], b[i]) for i in range(m)]
        for j in range(n):
            e = np.eye(n)[j]
            rows += [(e, 0.0), (e, 5.0)]
        best = None
        for combo in itertools.combinations(rows, n):
            M = np.array([r for r, _ in combo])
            if abs(np.linalg.det(M)) < 1e-9:
                continue
            x = np.linalg.solve(M, np.array([v for _, v in combo]))
            if (A @ x <= b + 1e-9).all() and (x >= -1e-9).all() and (x <= 5 + 1e-9).all():
                val = float(c @ x)
                best = val if best is None else max(best, val)
        if best is None:
            if sol.status != "infeasible":
                return CheckResult("lp", False, f"case {k}: expected infeasible, got {sol.status}")
        elif not sol.optimal or abs(sol.objective - best) > 1e-7:
            return CheckResult("lp", False, f"case {k}: {sol.status} {sol.objective} vs {best}")
    return CheckResult("lp", True, f"{cases} programs")


def check_equivalence(rng) -> CheckResult:
    trace = DemandTrace(rng.integers(0, 7, size=(30, 2)))
    sla = SlaSpec((0.9, 0.8), (0.5, 0.3))
    floors = [f.w_l for f in slice_floors(trace, sla.p_l)]
    n = 0
    for point in feasible_corpus(trace, sla, n_points=20, n_shifts=5, seed=int(rng.integers(2**31))):
        rep = verify_lift(point, trace, sla, floors)
        n += 1
        if not rep.passed:
            return CheckResult("equivalence", False, f"lift failed: {rep.lifted_problems}")
    pinned = verify_floor_pinning(trace, sla)
    if not pinned.passed:
        return CheckResult("equivalence", False, f"free provisioning {pinned.best_free} < floor optimum {pinned.at_floor}")
    return CheckResult("equivalence", True, f"{n} lifted points, free optimum {pinned.best_free}")


def check_drift(rng) -> CheckResult:
    model = build_markov_model([[0, 4], [1, 5]], [[[0.6, 0.4], [0.3, 0.7]], [[0.5, 0.5], [0.2, 0.8]]])
    floors, targets = model_targets(model, SlaSpec((0.9, 0.85), (0.3, 0.2)))
    worst = np.inf
    for w in range(0, 9):
        rep = drift_check(model, floors, w, targets)
        if rep.epsilon_star >= 0:
            worst = min(worst, rep.min_margin)
    if worst < -1e-9:
        return CheckResult("drift bound", False, f"margin {worst:.3g}")
    return CheckResult("drift bound", True, f"min margin {worst:.3g}")


CHECKS = (check_knapsack, check_floors, check_kernel_parity, check_lp, check_equivalence, check_drift)


def run_suite(seed: int = 0) -> list[CheckResult]:
    results = []
    for i, check in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        try:
            results.append(check(rng))
        except Exception as exc:  # a crash is a failed check, not an aborted suite
            results.append(CheckResult(check.__name__.removeprefix("check_"), False, repr(exc)))
    return results
