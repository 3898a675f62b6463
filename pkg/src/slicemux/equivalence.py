"""Executable checks that dedicated provisions above the isolation floor can be
moved into the shared pool without loss.

A solution point is ``(w_c, w_r, decisions)``: shared pool, per-slice
dedicated provision and per-slot service decisions. All counting is exact
(integers and fractions).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from slicemux.demand_gen import DemandTrace
from slicemux.demand_stats import slice_floors
from slicemux.errors import DimensionMismatch, InputInfeasible
from slicemux.oracle import offline_optimal
from slicemux.scheduler import SlaSpec


def exact(p: float) -> Fraction:
    """Decimal value of a probability as written (0.9 -> 9/10)."""
    return Fraction(repr(float(p)))


@dataclass
class SolutionPoint:
    w_c: int
    w_r: np.ndarray
    decisions: np.ndarray

    def __post_init__(self):
        self.w_r = np.asarray(self.w_r, dtype=np.int64)
        self.decisions = np.asarray(self.decisions, dtype=bool)

    @property
    def objective(self) -> int:
        return int(self.w_c + self.w_r.sum())


def lift_decision(u_row, demand_row, floors, e) -> np.ndarray:
    """Decisions for the point whose extra provision ``e`` was moved into the pool.

    A slice is served if it was served above ``W^L + e`` or if its demand lies
    in ``[W^L, W^L + e]``, which the moved provision now covers. Works on a
    single slot or a (T, N) block.
    """
    u = np.asarray(u_row, dtype=bool)
    W = np.asarray(demand_row, dtype=np.int64)
    lo = np.asarray(floors, dtype=np.int64)
    hi = lo + np.asarray(e, dtype=np.int64)
    return (u & (W > hi)) | ((lo <= W) & (W <= hi))


def check_capacity(point: SolutionPoint, trace) -> np.ndarray:
    """Per-slot check that served excess fits the pool plus unused provisions."""
    W = np.asarray(getattr(trace, "demands", trace), dtype=np.int64)
    if W.shape != point.decisions.shape:
        raise DimensionMismatch("decisions and trace differ in shape")
    over = np.maximum(W - point.w_r, 0)
    under = np.maximum(point.w_r - W, 0)
    return (point.decisions * over).sum(axis=1) <= point.w_c + under.sum(axis=1)


def availability_counts(point: SolutionPoint, trace) -> np.ndarray:
    W = np.asarray(getattr(trace, "demands", trace), dtype=np.int64)
    within = W <= point.w_r
    return (within | point.decisions).sum(axis=0)


def isolation_counts(point: SolutionPoint, trace) -> np.ndarray:
    W = np.asarray(getattr(trace, "demands", trace), dtype=np.int64)
    return (W <= point.w_r).sum(axis=0)


def infeasibilities(point: SolutionPoint, trace, sla: SlaSpec) -> list[str]:
    """Reasons ``point`` violates the SLA problem on ``trace`` (empty if feasible)."""
    T = point.decisions.shape[0]
    problems = []
    cap = check_capacity(point, trace)
    if not cap.all():
        problems.append(f"capacity exceeded in {int((~cap).sum())} slots")
    avail = availability_counts(point, trace)
    iso = isolation_counts(point, trace)
    for i in range(sla.slice_count):
        if avail[i] < exact(sla.p_h[i]) * T:
            problems.append(f"slice {i}: availability {avail[i]}/{T} < {sla.p_h[i]}")
        if iso[i] < exact(sla.p_l[i]) * T:
            problems.append(f"slice {i}: isolation {iso[i]}/{T} < {sla.p_l[i]}")
    return problems


@dataclass
class LiftReport:
    original: SolutionPoint
    lifted: SolutionPoint
    objective_equal: bool
    availability_equal: bool
    lifted_problems: list[str]

    @property
    def passed(self) -> bool:
        return self.objective_equal and self.availability_equal and not self.lifted_problems


def verify_lift(point: SolutionPoint, trace: DemandTrace, sla: SlaSpec, floors: Sequence[int]) -> LiftReport:
    """Move the provision above the floor into the pool and re-check everything.

    Raises :class:`InputInfeasible` if ``point`` is not feasible with
    ``w_r >= floors``.
    """
    floors = np.asarray(floors, dtype=np.int64)
    e = point.w_r - floors
    if (e < 0).any():
        raise InputInfeasible(f"provision {point.w_r.tolist()} below floors {floors.tolist()}")
    problems = infeasibilities(point, trace, sla)
    if problems:
        raise InputInfeasible("; ".join(problems))
    v = lift_decision(point.decisions, trace.demands, floors, e)
    lifted = SolutionPoint(int(point.w_c + e.sum()), floors, v)
    return LiftReport(
        original=point,
        lifted=lifted,
        objective_equal=lifted.objective == point.objective,
        availability_equal=bool(
            np.array_equal(availability_counts(lifted, trace), availability_counts(point, trace))
        ),
        lifted_problems=infeasibilities(lifted, trace, sla),
    )


def coverage_counts_for(trace: DemandTrace, sla: SlaSpec, w_r) -> np.ndarray:
    """Served above-provision slots each slice needs to reach ``P^H`` with provision ``w_r``."""
    T = trace.horizon
    within = (trace.demands <= np.asarray(w_r)[None, :]).sum(axis=0)
    return np.array(
        [max(0, math.ceil(exact(h) * T) - int(within[i])) for i, h in enumerate(sla.p_h)],
        dtype=np.int64,
    )


def min_pool(trace: DemandTrace, sla: SlaSpec, w_r) -> int:
    w_r = np.asarray(w_r, dtype=np.int64)
    res = offline_optimal(trace.demands - w_r[None, :], coverage_counts_for(trace, sla, w_r))
    return res.w_c_offline


def feasible_corpus(
    trace: DemandTrace,
    sla: SlaSpec,
    n_points: int = 50,
    n_shifts: int = 5,
    seed: int | None = 0,
    max_extra_pool: int = 3,
) -> Iterator[SolutionPoint]:
    """Feasible points generated by the offline oracle.

    For each of ``n_shifts`` random provision vectors ``w_r >= W^L`` the oracle
    gives a minimal-pool schedule; ``n_points`` variants are produced by adding
    random pool slack and shuffling which slots of each excess pattern are
    served.
    """
    rng = np.random.default_rng(seed)
    floors = np.array([f.w_l for f in slice_floors(trace, sla.p_l)], dtype=np.int64)
    top = trace.demands.max(axis=0)
    for _ in range(n_shifts):
        e = np.array([rng.integers(0, max(t - f, 0) + 1) for f, t in zip(floors, top)], dtype=np.int64)
        w_r = floors + e
        excess = trace.demands - w_r[None, :]
        res = offline_optimal(excess, coverage_counts_for(trace, sla, w_r))
        for _ in range(n_points):
            dec = res.decisions(excess, rng) & (excess > 0)
            yield SolutionPoint(res.w_c_offline + int(rng.integers(0, max_extra_pool + 1)), w_r, dec)


@dataclass
class FloorPinningReport:
    best_free: int
    best_free_w_r: tuple[int, ...]
    at_floor: int

    @property
    def passed(self) -> bool:
        return self.best_free == self.at_floor


def verify_floor_pinning(trace: DemandTrace, sla: SlaSpec) -> FloorPinningReport:
    """Optimal total with free provisions equals the optimum with provisions pinned at the floors.

    Enumerates every ``w_r`` between the floors and the peak demands, so only
    use on small traces.
    """
    floors = [f.w_l for f in slice_floors(trace, sla.p_l)]
    top = trace.demands.max(axis=0)
    at_floor = min_pool(trace, sla, floors) + sum(floors)
    best, best_w = None, None
    for w_r in itertools.product(*[range(f, max(f, int(t)) + 1) for f, t in zip(floors, top)]):
        total = min_pool(trace, sla, w_r) + sum(w_r)
        if best is None or total < best:
            best, best_w = total, tuple(w_r)
    return FloorPinningReport(best, best_w, at_floor)
