"""Per-slot timing of the Max-Weight scheduler versus the number of slices."""

from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from slicemux import kernels

DEFAULT_SLICE_COUNTS = (2, 4, 8, 16, 32, 64)
COLUMNS = ["backend", "n_slices", "slots", "repeats", "mean_us_per_slot", "min_us_per_slot", "max_us_per_slot"]


@dataclass
class BenchRow:
    backend: str
    n_slices: int
    slots: int
    repeats: int
    mean_us_per_slot: float
    min_us_per_slot: float
    max_us_per_slot: float


def random_excess(n: int, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Excess demands in [-10, 30] PRBs; about three in four slots are positive."""
    return rng.integers(-10, 31, size=(slots, n), dtype=np.int64)


def time_max_weight(
    n: int,
    slots: int = 10_000,
    repeats: int = 5,
    backend: str | None = None,
    seed: int = 0,
) -> BenchRow:
    """Median over ``repeats`` runs of the mean wall-clock time per scheduled slot.

    The pool is set to ``5 n`` PRBs so the knapsack has real contention.
    """
    impl = kernels.get_backend(backend)
    rng = np.random.default_rng(seed)
    means = []
    for _ in range(repeats):
        excess = random_excess(n, slots, rng)
        targets = rng.uniform(0.05, 0.5, size=n)
        t0 = time.perf_counter()
        impl.run_max_weight(excess, 5 * n, targets, False, False)
        means.append((time.perf_counter() - t0) / slots * 1e6)
    return BenchRow(
        backend=backend or kernels.BACKEND,
        n_slices=n,
        slots=slots,
        repeats=repeats,
        mean_us_per_slot=statistics.median(means),
        min_us_per_slot=min(means),
        max_us_per_slot=max(means),
    )


def run_bench(slice_counts=DEFAULT_SLICE_COUNTS, slots=10_000, repeats=5, backends=None, seed=0) -> list[BenchRow]:
    backends = backends or [kernels.BACKEND]
    return [time_max_weight(n, slots, repeats, b, seed) for b in backends for n in slice_counts]


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))
