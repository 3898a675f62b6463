"""Causal Max-Weight scheduling over excess demands.

Each slot, the positive-excess slices compete for the shared pool plus the
unused floor provisions of the other slices. The scheduler serves the subset
with the largest total deficit that fits (a 0/1 knapsack), then updates the
deficits, which behave as virtual queues fed by the coverage targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from slicemux import kernels
from slicemux.errors import DimensionMismatch, ValidationError


def slot_capacity(excess_row, w_c: int) -> int:
    """Shared pool plus the unused floor provisions in this slot."""
    if w_c < 0:
        raise ValidationError("w_c must be >= 0")
    row = np.asarray(excess_row, dtype=np.int64)
    return int(w_c + np.maximum(-row, 0).sum())


def solve_knapsack(values, weights, capacity: int) -> tuple[int, ...]:
    """Exact 0/1 knapsack by dynamic programming over capacity.

    Among optimal selections the one that includes the lowest index wherever
    possible is returned, i.e. the indicator vector is lexicographically
    largest. Zero-value items are therefore taken whenever they fit.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.int64)
    if values.shape != weights.shape or values.ndim != 1:
        raise DimensionMismatch("values and weights must be equal-length vectors")
    if (weights < 1).any():
        raise ValidationError("weights must be integers >= 1")
    if (values < 0).any() or not np.all(np.isfinite(values)):
        raise ValidationError("values must be finite and >= 0")
    mask = kernels.knapsack(values, weights, max(int(capacity), 0))
    return tuple(int(i) for i in np.flatnonzero(mask))


@dataclass
class DeficitState:
    d: np.ndarray
    targets: np.ndarray

    @classmethod
    def zeros(cls, targets) -> "DeficitState":
        targets = np.asarray(targets, dtype=np.float64)
        return cls(np.zeros_like(targets), targets)


def deficit_update(state: DeficitState, decision, excess_row) -> DeficitState:
    """One slot of the virtual-queue recursion ``[d - served]^+ + a``, floored at 0."""
    served = np.asarray(decision, dtype=bool) & (np.asarray(excess_row) > 0)
    d = np.maximum(state.d - served, 0.0) + state.targets
    return DeficitState(np.maximum(d, 0.0), state.targets)


def required_counts(targets, horizon: int) -> np.ndarray:
    """Finite-horizon coverage requirement ``K_i = ceil(a_i * T)`` (0 when ``a_i <= 0``)."""
    out = []
    for a in np.asarray(targets, dtype=np.float64):
        x = a * horizon
        out.append(max(0, math.ceil(x - 1e-9 * max(1.0, abs(x)))))
    return np.array(out, dtype=np.int64)


@dataclass
class ScheduleResult:
    served: np.ndarray
    decisions: np.ndarray | None
    deficit_final: np.ndarray
    deficit_max: np.ndarray
    deficits: np.ndarray | None
    horizon: int

    @property
    def coverage(self) -> np.ndarray:
        return self.served / self.horizon

    @property
    def deficit_over_T(self) -> np.ndarray:
        return self.deficit_final / self.horizon

    def meets(self, counts) -> bool:
        return bool(np.all(self.served >= np.asarray(counts)))


def run_max_weight(
    excess,
    w_c: int,
    targets,
    *,
    record_decisions: bool = True,
    record_deficits: bool = False,
    backend: str | None = None,
) -> ScheduleResult:
    """Run Max-Weight over a (T, N) excess trace with deficits starting at 0.

    Recorded decisions mark slices with non-positive excess as served, since
    their demand is met within the floor.
    """
    excess = np.ascontiguousarray(excess, dtype=np.int64)
    if excess.ndim != 2:
        raise DimensionMismatch("excess trace must be (T, N)")
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    if targets.shape != (excess.shape[1],):
        raise DimensionMismatch(f"{targets.size} targets for {excess.shape[1]} slices")
    if w_c < 0 or int(w_c) != w_c:
        raise ValidationError("w_c must be a nonnegative integer")
    impl = kernels.get_backend(backend)
    served, dec, d_final, d_max, defs = impl.run_max_weight(
        excess, int(w_c), targets, record_decisions, record_deficits
    )
    return ScheduleResult(
        served=served,
        decisions=None if dec is None else dec.astype(bool),
        deficit_final=d_final,
        deficit_max=d_max,
        deficits=defs,
        horizon=excess.shape[0],
    )


@dataclass(frozen=True)
class SlaSpec:
    p_h: tuple[float, ...]
    p_l: tuple[float, ...]

    def __post_init__(self):
        p_h = tuple(float(x) for x in self.p_h)
        p_l = tuple(float(x) for x in self.p_l)
        if len(p_h) != len(p_l) or not p_h:
            raise ValidationError("p_h and p_l need one entry per slice")
        for i, (h, l) in enumerate(zip(p_h, p_l)):
            if not (0.0 <= l <= h <= 1.0):
                raise ValidationError(f"slice {i}: need 0 <= P^L ({l}) <= P^H ({h}) <= 1")
        object.__setattr__(self, "p_h", p_h)
        object.__setattr__(self, "p_l", p_l)

    @property
    def slice_count(self) -> int:
        return len(self.p_h)


@dataclass
class SlaReport:
    availability: np.ndarray
    isolation: np.ndarray
    availability_ok: np.ndarray
    isolation_ok: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(self.availability_ok.all() and self.isolation_ok.all())

    @property
    def coverage(self) -> np.ndarray:
        return self.availability - self.isolation


def evaluate_sla(trace, decisions, floors: Sequence[int], sla: SlaSpec, slack: float = 0.0) -> SlaReport:
    """Achieved availability and isolation fractions against the SLA."""
    demands = np.asarray(getattr(trace, "demands", trace))
    decisions = np.asarray(decisions, dtype=bool)
    w_l = np.asarray(floors, dtype=np.int64)
    if demands.shape != decisions.shape or w_l.shape != (demands.shape[1],):
        raise DimensionMismatch("trace, decisions and floors disagree in shape")
    if sla.slice_count != demands.shape[1]:
        raise DimensionMismatch("SLA slice count does not match the trace")
    if slack < 0:
        raise ValidationError("slack must be >= 0")
    T = demands.shape[0]
    within = demands <= w_l[None, :]
    isolated = within.sum(axis=0)
    covered = (~within & decisions).sum(axis=0)
    availability = (isolated + covered) / T
    isolation = isolated / T
    tol = 1e-12
    return SlaReport(
        availability=availability,
        isolation=isolation,
        availability_ok=availability >= np.array(sla.p_h) - slack - tol,
        isolation_ok=isolation >= np.array(sla.p_l) - slack - tol,
    )
