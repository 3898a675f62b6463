"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from slicemux import kernels
from slicemux.bench import DEFAULT_SLICE_COUNTS, run_bench
from slicemux.demand_gen import OnOffSourceSpec, build_markov_model, gen_markov_trace, onoff_activity
from slicemux.demand_stats import excess_trace, slice_floors
from slicemux.equivalence import feasible_corpus, infeasibilities, verify_lift, verify_floor_pinning
from slicemux.oracle import (
    drift_check,
    joint_excess,
    model_targets,
    offline_optimal,
    simulate_static_scheduler,
    static_epsilon,
    static_threshold,
    static_upper_bound,
)
from slicemux.provisioner import full_isolation_baseline, isolation_sweep, provision_max_weight
from slicemux.scenario import four_slice_scenario
from slicemux.scheduler import SlaSpec, required_counts, run_max_weight, solve_knapsack

pytestmark = pytest.mark.slow

SCENARIOS = 20
SHORT_T = 10_000
LONG_T = 100_000


def markov_scenario(seed):
    """Random ergodic chains: 1-3 slices, 2-3 states each, demands in 0..12."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    states, mats = [], []
    for _ in range(n):
        k = int(rng.integers(2, 4))
        states.append(sorted(rng.choice(13, size=k, replace=False).tolist()))
        mats.append(rng.dirichlet(np.ones(k), size=k))
    model = build_markov_model(states, mats)
    p_h = rng.uniform(0.8, 0.99, n).round(2)
    p_l = (p_h * rng.uniform(0, 0.8, n)).round(2)
    return model, SlaSpec(p_h, p_l)


@pytest.fixture(scope="module")
def corpus():
    return [markov_scenario(s) for s in range(SCENARIOS)]


@pytest.fixture(scope="module")
def long_runs(corpus):
    """Per scenario and pool size: (eps*, Max-Weight result, counts) on a 10^5-slot trace."""
    out = []
    for s, (model, sla) in enumerate(corpus):
        floors, targets = model_targets(model, sla)
        trace = gen_markov_trace(model, LONG_T, seed=2000 + s)
        ex = excess_trace(trace, floors)
        counts = required_counts(targets, LONG_T)
        rows = []
        for w in range(static_upper_bound(model, floors) + 1):
            eps = static_epsilon(model, floors, w, targets).epsilon_star
            rows.append((w, eps, run_max_weight(ex, w, targets), counts))
        out.append(rows)
    return out


def test_criterion_1_max_weight_matches_offline(corpus, record_criterion):
    start = time.perf_counter()
    gaps = []
    for s, (model, sla) in enumerate(corpus):
        trace = gen_markov_trace(model, SHORT_T, seed=1000 + s)
        floors = slice_floors(trace, sla.p_l)
        targets = np.array(sla.p_h) - [f.p_m for f in floors]
        ex = excess_trace(trace, floors)
        mw = provision_max_weight(ex, targets)
        off = offline_optimal(ex, required_counts(targets, SHORT_T)).w_c_offline
        gaps.append(mw - off)
    elapsed = time.perf_counter() - start
    gaps = np.array(gaps)
    close = float(np.mean(np.abs(gaps) <= 1))
    passed = close >= 0.9 and (gaps >= 0).all() and elapsed <= 300
    record_criterion(
        1, passed,
        f"within 1 PRB in {close:.0%} of {SCENARIOS}, never below offline: {bool((gaps >= 0).all())}, "
        f"gaps {gaps.tolist()}, {elapsed:.1f} s",
    )
    assert passed


def test_criterion_2_feasibility_boundary(long_runs, record_criterion):
    checked, exceptions = 0, []
    for s, rows in enumerate(long_runs):
        for w, eps, res, counts in rows:
            if abs(eps) < 0.005:
                continue
            checked += 1
            if res.meets(counts) != (eps >= 0):
                exceptions.append((s, w, round(eps, 4)))
    passed = not exceptions and checked > 0
    record_criterion(2, passed, f"{checked} pool sizes checked, exceptions {exceptions}")
    assert passed


def test_criterion_3_stability(long_runs, record_criterion):
    stable = unstable = 0
    bad = []
    for s, rows in enumerate(long_runs):
        for w, eps, res, _ in rows:
            ratio = res.deficit_final / LONG_T
            if eps >= 0.005:
                stable += 1
                if ratio.max() > 0.01:
                    bad.append(("stable", s, w, eps, float(ratio.max())))
            elif eps <= -0.01:
                unstable += 1
                if ratio.max() < abs(eps) / 2:
                    bad.append(("unstable", s, w, eps, float(ratio.max())))
    passed = not bad and stable > 0 and unstable > 0
    record_criterion(3, passed, f"{stable} stable and {unstable} unstable pool sizes, violations {bad}")
    assert passed


def test_criterion_4_drift_bound(corpus, record_criterion):
    worst, models, points = math.inf, 0, 0
    for model, sla in corpus:
        floors, targets = model_targets(model, sla)
        if len(joint_excess(model, floors).states) > 27:
            continue
        models += 1
        for w in range(static_upper_bound(model, floors) + 1):
            rep = drift_check(model, floors, w, targets, deficit_grid=(0, 1, 2, 4, 8))
            worst = min(worst, rep.min_margin)
            points += len(rep.points)
    passed = models > 0 and worst >= -1e-9
    record_criterion(4, passed, f"{models} models, {points} grid points, min margin {worst:.3g}")
    assert passed


def exhaustive_knapsack(values, weights, cap):
    """Best value, the optimal subset with the lexicographically largest indicator
    vector, and how many subsets reach the best value."""
    n = len(values)
    codes = np.arange(2**n, dtype=np.int64)
    bits = (codes[:, None] >> (n - 1 - np.arange(n))) & 1  # item 0 is the most significant bit
    load = bits @ weights
    value = bits @ values
    value[load > cap] = -1
    best = value.max()
    optimal = codes[value == best]
    pick = optimal.max()
    return int(best), tuple(i for i in range(n) if (pick >> (n - 1 - i)) & 1), len(optimal)


def test_criterion_5_knapsack_exhaustive(record_criterion):
    rng = np.random.default_rng(5)
    value_mismatch = tie_mismatch = ties = 0
    for _ in range(1000):
        n = int(rng.integers(1, 16))
        # integer values: sums are exact and ties are frequent
        values = rng.integers(0, 20, size=n)
        weights = rng.integers(1, 30, size=n)
        cap = int(rng.integers(0, weights.sum() + 1))
        got = solve_knapsack(values.astype(float), weights, cap)
        best, want, n_optimal = exhaustive_knapsack(values, weights, cap)
        ties += int(n_optimal > 1)
        value_mismatch += int(values[list(got)].sum() != best or weights[list(got)].sum() > cap)
        tie_mismatch += int(got != want)
    passed = value_mismatch == 0 and tie_mismatch == 0
    record_criterion(
        5, passed,
        f"1000 instances, {ties} with tied optima, value mismatches {value_mismatch}, tie-break mismatches {tie_mismatch}",
    )
    assert passed


def test_criterion_6_equivalence_suite(corpus, record_criterion):
    points = failures = 0
    pinned = []
    for s, (model, sla) in enumerate(corpus):
        trace = gen_markov_trace(model, SHORT_T, seed=1000 + s)
        floors = [f.w_l for f in slice_floors(trace, sla.p_l)]
        for p in feasible_corpus(trace, sla, n_points=50, n_shifts=5, seed=s):
            points += 1
            if infeasibilities(p, trace, sla) or not verify_lift(p, trace, sla, floors).passed:
                failures += 1
        small = gen_markov_trace(model, 2000, seed=1000 + s)
        pinned.append(verify_floor_pinning(small, sla).passed)
    passed = failures == 0 and all(pinned)
    record_criterion(
        6, passed,
        f"{points} lifted points, {failures} failures; pinned-floor optimum equal in {sum(pinned)}/{len(pinned)}",
    )
    assert passed


def exact_floor(column, p):
    """Smallest demand value reached by a fraction ``p`` of the slots, in exact arithmetic."""
    k = math.ceil(Fraction(repr(float(p))) * len(column))
    return 0 if k == 0 else int(np.sort(column)[k - 1])


def test_criterion_7_tradeoff_surface(record_criterion):
    sc = four_slice_scenario()
    trace = sc.build_trace()
    sla = sc.sla
    surface = isolation_sweep(trace, sla, 0.25)
    totals = np.array([p.total for p in surface.plans])
    levels = [sorted({pl[i] for pl in surface.p_l}) for i in range(trace.slice_count)]
    grid = totals.reshape([len(v) for v in levels])

    expected = sum(exact_floor(trace.demands[:, i], p) for i, p in enumerate(sla.p_h))
    identity = surface.plans[-1].total == full_isolation_baseline(trace, sla.p_h) == expected
    identity = identity and surface.plans[-1].w_c == 0 and surface.plans[0].w_l == [0] * trace.slice_count

    drops = [np.diff(grid, axis=i) for i in range(grid.ndim)]
    n_drops = sum(int((d < 0).sum()) for d in drops)
    monotone = n_drops == 0
    shared, isolated = surface.plans[0].total, surface.plans[-1].total
    saving = 1 - shared / isolated
    in_band = shared < isolated and 0.10 < saving < 0.60

    passed = identity and monotone and in_band
    record_criterion(
        7, passed,
        f"endpoint identity {identity} ({isolated} PRBs); saving {shared} vs {isolated} = {saving:.1%} "
        f"in (10%, 60%): {in_band}; monotone: {monotone} "
        f"({n_drops} decreasing steps of {sum(d.size for d in drops)}, largest drop {min(int(d.min()) for d in drops)} PRB)",
    )
    assert identity, "full-isolation endpoint identity"
    assert in_band, "savings band"
    assert monotone, f"{n_drops} grid steps where raising one slice's isolation lowered the total"


def test_criterion_8_voice_activity(record_criterion):
    voice = four_slice_scenario().slices[0].model
    spec = OnOffSourceSpec(**{k: v for k, v in voice.items() if k != "kind"})
    T = 1_000_000
    active = onoff_activity(spec, T, 1.0, np.random.default_rng(8))
    fraction = float(active.mean() / spec.user_count)
    passed = abs(fraction - 0.29) <= 0.02
    record_criterion(8, passed, f"per-user active fraction {fraction:.4f} over {T} slots")
    assert passed


def test_criterion_9_static_policy_simulation(corpus, record_criterion):
    bad, checked = [], 0
    for s, (model, sla) in enumerate(corpus):
        floors, targets = model_targets(model, sla)
        w = static_threshold(model, floors, targets)
        res = static_epsilon(model, floors, w, targets)
        cov = simulate_static_scheduler(model, res, LONG_T, seed=3000 + s)
        tol = 3 * np.sqrt(res.coverage / LONG_T)
        checked += len(cov)
        if (np.abs(cov - res.coverage) > tol + 1e-12).any():
            bad.append((s, cov.round(4).tolist(), res.coverage.round(4).tolist()))
    passed = not bad
    record_criterion(9, passed, f"{checked} slice coverages at T={LONG_T}, outside 3 sigma: {bad}")
    assert passed


def test_criterion_10_benchmark(record_criterion):
    rows = run_bench(DEFAULT_SLICE_COUNTS, slots=10_000, repeats=5)
    means = {r.n_slices: r.mean_us_per_slot for r in rows}
    shape = all(means[a] <= means[b] for a, b in zip(DEFAULT_SLICE_COUNTS, DEFAULT_SLICE_COUNTS[1:]))
    fast = means[16] <= 1000.0
    passed = shape and fast
    listing = ", ".join(f"N={n}: {m:.2f}" for n, m in means.items())
    record_criterion(10, passed, f"{kernels.BACKEND} backend, us/slot {listing}; nondecreasing {shape}")
    assert passed
