"""Empirical demand CDFs, isolation floors and excess traces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from slicemux.demand_gen import DemandTrace
from slicemux.errors import DimensionMismatch, EmptyTrace, ValidationError


@dataclass(frozen=True)
class EmpiricalCdf:
    """Step CDF over integer demand values.

    ``counts[k]`` is the number of samples with demand ``<= values[k]``; when
    built from a distribution rather than a trace, ``sample_count`` is None and
    ``fractions`` carries the probabilities directly.
    """

    values: np.ndarray
    fractions: np.ndarray
    sample_count: int | None = None
    counts: np.ndarray | None = None

    def __call__(self, w: float) -> float:
        k = np.searchsorted(self.values, w, side="right")
        return 0.0 if k == 0 else float(self.fractions[k - 1])

    def count_le(self, w: float) -> int:
        if self.counts is None:
            raise ValidationError("count_le needs a trace-backed CDF")
        k = np.searchsorted(self.values, w, side="right")
        return 0 if k == 0 else int(self.counts[k - 1])

    @property
    def max_value(self) -> int:
        return int(self.values[-1])

    @classmethod
    def from_distribution(cls, values, probs) -> "EmpiricalCdf":
        values = np.asarray(values, dtype=np.int64)
        order = np.argsort(values)
        values, probs = values[order], np.asarray(probs, dtype=np.float64)[order]
        uniq, inverse = np.unique(values, return_inverse=True)
        mass = np.zeros(len(uniq))
        np.add.at(mass, inverse, probs)
        frac = np.cumsum(mass)
        frac[-1] = 1.0
        return cls(uniq, frac)


def empirical_cdf(column) -> EmpiricalCdf:
    column = np.asarray(column)
    if column.size == 0:
        raise EmptyTrace("cannot build a CDF from an empty trace")
    values, counts = np.unique(column.astype(np.int64), return_counts=True)
    cum = np.cumsum(counts)
    return EmpiricalCdf(values, cum / column.size, int(column.size), cum)


@dataclass(frozen=True)
class IsolationFloor:
    w_l: int
    p_m: float


def isolation_floor(cdf: EmpiricalCdf, p_l: float) -> IsolationFloor:
    """Smallest integer ``w`` in ``[0, max]`` with ``F(w) >= p_l``, by bisection on ``w``."""
    if not 0.0 <= p_l <= 1.0:
        raise ValidationError(f"p_l must lie in [0, 1], got {p_l}")
    lo, hi = 0, cdf.max_value  # F(hi) = 1 >= p_l always
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf(mid) >= p_l:
            hi = mid
        else:
            lo = mid + 1
    return IsolationFloor(lo, cdf(lo))


def slice_floors(trace: DemandTrace, p_l: Sequence[float]) -> list[IsolationFloor]:
    if len(p_l) != trace.slice_count:
        raise DimensionMismatch(f"{len(p_l)} isolation targets for {trace.slice_count} slices")
    return [isolation_floor(empirical_cdf(trace.column(i)), p) for i, p in enumerate(p_l)]


def excess_trace(trace: DemandTrace, floors) -> np.ndarray:
    """Signed excess ``W_i(t) - W_i^L`` as a (T, N) int64 array."""
    w_l = np.array([f.w_l if isinstance(f, IsolationFloor) else f for f in floors], dtype=np.int64)
    if w_l.shape != (trace.slice_count,):
        raise DimensionMismatch(f"{w_l.size} floors for {trace.slice_count} slices")
    return np.ascontiguousarray(trace.demands - w_l[None, :])
