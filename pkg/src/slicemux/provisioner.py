"""Bandwidth provisioning for Max-Weight multiplexing.

Pipeline: isolation floors from each slice's empirical CDF, excess demands
over those floors, then the smallest shared pool under which Max-Weight meets
every slice's coverage count on the trace.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from slicemux.demand_gen import DemandTrace
from slicemux.demand_stats import empirical_cdf, excess_trace, isolation_floor, slice_floors
from slicemux.errors import DimensionMismatch, GridTooLarge, InfeasibleAtUpperBound, ValidationError
from slicemux.scheduler import SlaSpec, required_counts, run_max_weight

log = logging.getLogger(__name__)

SWEEP_CELL_CAP = 10_000


def _feasible(excess, w_c, targets, counts) -> bool:
    res = run_max_weight(excess, w_c, targets, record_decisions=False)
    return res.meets(counts)


def provision_max_weight(excess, targets, horizon: int | None = None) -> int:
    """Smallest integer pool for which Max-Weight meets ``ceil(a_i * T)`` served slots per slice.

    Binary search over ``[0, max_t sum_i max(W^e_i(t), 0)]``. Feasibility is
    assumed monotone in the pool; the answer is re-checked with a full run and
    the search continues upward if that check fails.
    """
    excess = np.ascontiguousarray(excess, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    if excess.ndim != 2 or targets.shape != (excess.shape[1],):
        raise DimensionMismatch("need a (T, N) excess trace and N targets")
    T = excess.shape[0] if horizon is None else int(horizon)
    if T != excess.shape[0]:
        raise DimensionMismatch(f"horizon {T} does not match trace length {excess.shape[0]}")
    counts = required_counts(targets, T)
    if not counts.any():
        return 0
    hi = int(np.maximum(excess, 0).sum(axis=1).max())
    if not _feasible(excess, hi, targets, counts):
        raise InfeasibleAtUpperBound(
            f"coverage counts {counts.tolist()} unreachable even with pool {hi}"
        )
    if _feasible(excess, 0, targets, counts):
        return 0
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(excess, mid, targets, counts):
            hi = mid
        else:
            lo = mid
    w = hi
    while not _feasible(excess, w, targets, counts):  # defensive re-check
        log.warning("Max-Weight feasibility not monotone near pool %d", w)
        w += 1
    return w


@dataclass
class ProvisionPlan:
    w_l: list[int]
    w_c: int
    p_m: list[float]
    targets: list[float] = field(default_factory=list)

    @property
    def total(self) -> int:
        return int(self.w_c + sum(self.w_l))

    def to_dict(self) -> dict:
        return {
            "w_l": list(self.w_l),
            "w_c": int(self.w_c),
            "total": self.total,
            "p_m": list(self.p_m),
            "targets": list(self.targets),
        }


def full_plan(trace: DemandTrace, sla: SlaSpec) -> ProvisionPlan:
    """Floors at each slice's ``P^L`` quantile plus the minimal Max-Weight pool."""
    if sla.slice_count != trace.slice_count:
        raise DimensionMismatch(f"SLA covers {sla.slice_count} slices, trace has {trace.slice_count}")
    floors = slice_floors(trace, sla.p_l)
    targets = np.array(sla.p_h) - np.array([f.p_m for f in floors])
    ex = excess_trace(trace, floors)
    w_c = provision_max_weight(ex, targets, trace.horizon)
    return ProvisionPlan(
        w_l=[f.w_l for f in floors],
        w_c=w_c,
        p_m=[f.p_m for f in floors],
        targets=targets.tolist(),
    )


def full_isolation_baseline(trace: DemandTrace, p_h) -> int:
    """Total PRBs when every slice gets its own ``P^H`` quantile and nothing is shared."""
    if len(p_h) != trace.slice_count:
        raise DimensionMismatch("one P^H per slice")
    return int(sum(isolation_floor(empirical_cdf(trace.column(i)), p).w_l for i, p in enumerate(p_h)))


@dataclass
class TradeoffSurface:
    p_l: list[tuple[float, ...]]
    plans: list[ProvisionPlan]

    def rows(self):
        for pl, plan in zip(self.p_l, self.plans):
            yield list(pl) + list(plan.w_l) + [plan.w_c, plan.total]

    def header(self) -> list[str]:
        n = len(self.p_l[0])
        return [f"pl_{i}" for i in range(n)] + [f"wl_{i}" for i in range(n)] + ["wc", "total"]


def sweep_grid(p_h, step: float) -> list[tuple[float, ...]]:
    """Cartesian grid of ``P^L`` vectors ``{0, step, 2 step, ...} capped at P^H``, row-major."""
    if not 0 < step <= 1:
        raise ValidationError("grid step must lie in (0, 1]")
    axes = []
    for h in p_h:
        k = int(np.floor(h / step + 1e-9))
        pts = [round(j * step, 12) for j in range(k + 1)]
        if h - pts[-1] > 1e-9:
            pts.append(float(h))
        axes.append(pts)
    return list(itertools.product(*axes))


def _cell(args):
    trace, p_h, p_l = args
    return full_plan(trace, SlaSpec(p_h, p_l))


def isolation_sweep(
    trace: DemandTrace,
    sla: SlaSpec,
    grid_step: float,
    *,
    cell_cap: int = SWEEP_CELL_CAP,
    workers: int = 1,
) -> TradeoffSurface:
    """Provisioning plans over a grid of isolation degrees; ``sla.p_l`` is ignored.

    Rows come back in grid order whatever ``workers`` is.
    """
    grid = sweep_grid(sla.p_h, grid_step)
    if len(grid) > cell_cap:
        raise GridTooLarge(f"sweep has {len(grid)} cells (cap {cell_cap}); use a coarser step")
    jobs = [(trace, sla.p_h, pl) for pl in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            plans = list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        plans = [_cell(j) for j in jobs]
    return TradeoffSurface(grid, plans)
