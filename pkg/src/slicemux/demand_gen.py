"""Seeded per-slice PRB demand traces.

Three source families are supported: finite ergodic Markov chains (the setting
in which Max-Weight is provably optimal), on-off users with Pareto active
periods and exponential idle periods (voice/video stand-ins), and a renewal
web-browsing model (download objects, parse, read).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path
from typing import Sequence

import numpy as np

from slicemux import kernels
from slicemux.errors import (
    DimensionMismatch,
    EmptyTrace,
    NonStochasticMatrix,
    NotIrreducible,
    Periodic,
    ValidationError,
)

SYSTEM_BANDWIDTH = 100
DEFAULT_BITS_PER_PRB = 1000.0
DIRECT_SOLVE_MAX_STATES = 64


@dataclass(frozen=True)
class DemandTrace:
    """Integer PRB demands, one row per slot and one column per slice."""

    demands: np.ndarray
    slot_ms: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        d = np.asarray(self.demands)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2 or d.shape[0] < 1:
            raise EmptyTrace("a trace needs at least one slot")
        if not np.issubdtype(d.dtype, np.integer):
            if not np.all(np.equal(np.mod(d, 1), 0)):
                raise ValidationError("demands must be integer PRB counts")
        d = np.ascontiguousarray(d, dtype=np.int64)
        if (d < 0).any():
            raise ValidationError("demands must be nonnegative")
        object.__setattr__(self, "demands", d)

    @property
    def horizon(self) -> int:
        return self.demands.shape[0]

    @property
    def slice_count(self) -> int:
        return self.demands.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.demands[:, i]


# ---------------------------------------------------------------------------
# Markov chains


def _check_stochastic(P: np.ndarray, i: int) -> None:
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NonStochasticMatrix(f"slice {i}: transition matrix must be square")
    if not np.all(np.isfinite(P)) or (P < 0).any():
        raise NonStochasticMatrix(f"slice {i}: transition entries must be finite and >= 0")
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-12:
        raise NonStochasticMatrix(f"slice {i}: rows sum to {rows.tolist()}, not 1")


def _reachable(adj: np.ndarray) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(adj[u] & ~seen):
            seen[v] = True
            stack.append(int(v))
    return seen


def chain_period(P: np.ndarray) -> int:
    """Period of an irreducible chain (gcd of level differences along edges)."""
    adj = P > 0
    level = np.full(P.shape[0], -1)
    level[0] = 0
    queue = [0]
    for u in queue:
        for v in np.flatnonzero(adj[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
    g = 0
    for u, v in zip(*np.nonzero(adj)):
        g = gcd(g, int(abs(level[u] + 1 - level[v])))
    return g


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    if n <= DIRECT_SOLVE_MAX_STATES:
        A = P.T - np.eye(n)
        A[-1, :] = 1.0
        b = np.zeros(n)
        b[-1] = 1.0
        pi = np.linalg.solve(A, b)
    else:
        pi = np.full(n, 1.0 / n)
        for _ in range(1_000_000):
            nxt = pi @ P
            if np.max(np.abs(nxt - pi)) < 1e-15:
                pi = nxt
                break
            pi = nxt
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class MarkovDemandModel:
    """Independent per-slice ergodic chains over PRB demand levels."""

    states: tuple[np.ndarray, ...]
    transitions: tuple[np.ndarray, ...]
    stationary: tuple[np.ndarray, ...]

    @property
    def slice_count(self) -> int:
        return len(self.states)

    def marginal(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Distinct demand values of slice ``i`` and their stationary mass."""
        values, inverse = np.unique(self.states[i], return_inverse=True)
        probs = np.zeros(len(values))
        np.add.at(probs, inverse, self.stationary[i])
        return values, probs

    def cdf(self, i: int, w: float) -> float:
        values, probs = self.marginal(i)
        return float(probs[values <= w].sum())


def build_markov_model(
    states: Sequence[Sequence[int]], transitions: Sequence[Sequence[Sequence[float]]]
) -> MarkovDemandModel:
    """Validate per-slice chains and compute their stationary distributions.

    ``states[i]`` lists the PRB demand of each state of slice ``i`` and
    ``transitions[i]`` its row-stochastic matrix. Raises
    :class:`NonStochasticMatrix`, :class:`NotIrreducible` or :class:`Periodic`.
    """
    if len(states) != len(transitions) or len(states) == 0:
        raise DimensionMismatch("need one transition matrix per slice")
    S, Ps, pis = [], [], []
    for i, (s, P) in enumerate(zip(states, transitions)):
        s = np.asarray(s, dtype=np.int64)
        P = np.asarray(P, dtype=np.float64)
        if s.ndim != 1 or len(s) == 0:
            raise DimensionMismatch(f"slice {i}: state list must be a nonempty vector")
        if (s < 0).any():
            raise ValidationError(f"slice {i}: state demands must be >= 0")
        _check_stochastic(P, i)
        if P.shape[0] != len(s):
            raise DimensionMismatch(f"slice {i}: {len(s)} states but {P.shape[0]}x{P.shape[1]} matrix")
        adj = P > 0
        if not (_reachable(adj).all() and _reachable(adj.T).all()):
            raise NotIrreducible(f"slice {i}: chain is not irreducible")
        period = chain_period(P)
        if period != 1:
            raise Periodic(f"slice {i}: chain has period {period}")
        pi = stationary_distribution(P)
        if np.max(np.abs(pi @ P - pi)) > 1e-10:
            raise NonStochasticMatrix(f"slice {i}: stationary solve did not converge")
        s.setflags(write=False)
        P.setflags(write=False)
        pi.setflags(write=False)
        S.append(s)
        Ps.append(P)
        pis.append(pi)
    return MarkovDemandModel(tuple(S), tuple(Ps), tuple(pis))


def gen_markov_trace(
    model: MarkovDemandModel,
    T: int,
    seed: int | None,
    *,
    slot_ms: float = 1.0,
    burn_in: int = 0,
    initial_states: Sequence[int] | None = None,
    system_bandwidth: int = SYSTEM_BANDWIDTH,
) -> DemandTrace:
    """Sample a demand trace; each chain starts from its stationary law by default.

    With ``initial_states`` the chains start from fixed states instead, and the
    first ``burn_in`` slots are discarded.
    """
    if T < 1:
        raise ValidationError("T must be >= 1")
    rng = np.random.default_rng(seed)
    cols = []
    for i in range(model.slice_count):
        P = model.transitions[i]
        cum = np.cumsum(P, axis=1)
        cum[:, -1] = 1.0
        if initial_states is None:
            start = int(rng.choice(len(P), p=model.stationary[i]))
        else:
            start = int(initial_states[i])
        u = rng.random(T - 1 + burn_in)
        idx = kernels.markov_walk(np.ascontiguousarray(cum), start, u)[burn_in:]
        cols.append(model.states[i][idx])
    demands = np.minimum(np.stack(cols, axis=1), system_bandwidth)
    return DemandTrace(demands, slot_ms=slot_ms, seed=seed)


# ---------------------------------------------------------------------------
# Renewal sources


@dataclass(frozen=True)
class Distribution:
    """A positive random quantity given by its kind and mean.

    ``kind`` is one of ``fixed``, ``exponential``, ``lognormal`` (``shape`` is
    sigma of the underlying normal), ``pareto`` (``shape`` is the tail index)
    or ``geometric`` (integer valued, support 1, 2, ...).
    """

    kind: str
    mean: float
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in {"fixed", "exponential", "lognormal", "pareto", "geometric"}:
            raise ValidationError(f"unknown distribution kind {self.kind!r}")
        if not (self.mean > 0 or (self.kind == "fixed" and self.mean == 0)):
            raise ValidationError("distribution mean must be positive")
        if self.kind == "pareto" and not self.shape > 1:
            raise ValidationError("pareto shape must exceed 1 for the mean to exist")
        if self.kind == "geometric" and self.mean < 1:
            raise ValidationError("geometric mean must be >= 1")
        if math.isinf(self.mean) and self.kind != "fixed":
            raise ValidationError("only fixed distributions may have an infinite mean")

    def sample(self, rng: np.random.Generator, size=None):
        k, m = self.kind, self.mean
        if k == "fixed":
            return np.full(size, m) if size is not None else m
        if k == "exponential":
            return rng.exponential(m, size)
        if k == "lognormal":
            mu = math.log(m) - self.shape**2 / 2
            return rng.lognormal(mu, self.shape, size)
        if k == "pareto":
            scale = m * (self.shape - 1) / self.shape
            return scale * (rng.pareto(self.shape, size) + 1.0)
        return rng.geometric(1.0 / m, size)

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        return cls(kind=d["kind"], mean=float(d["mean"]), shape=float(d.get("shape", 1.0)))


@dataclass(frozen=True)
class OnOffSourceSpec:
    """Users alternating Pareto active periods and exponential idle periods."""

    user_count: int
    active_mean_s: float
    idle_mean_s: float
    rate_bps: float
    packet_bytes: int = 20
    bits_per_prb: float = DEFAULT_BITS_PER_PRB
    pareto_shape: float = 1.5

    def __post_init__(self):
        if self.user_count < 1:
            raise ValidationError("user_count must be >= 1")
        for name in ("active_mean_s", "idle_mean_s", "packet_bytes", "bits_per_prb"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.rate_bps < 0:
            raise ValidationError("rate_bps must be >= 0")
        if not self.pareto_shape > 1:
            raise ValidationError("pareto_shape must exceed 1")

    @property
    def active_fraction(self) -> float:
        return self.active_mean_s / (self.active_mean_s + self.idle_mean_s)


def onoff_activity(spec: OnOffSourceSpec, T: int, slot_ms: float, rng: np.random.Generator) -> np.ndarray:
    """Number of active users at the start of each slot."""
    horizon_ms = T * slot_ms
    on = Distribution("pareto", spec.active_mean_s * 1000.0, spec.pareto_shape)
    off = Distribution("exponential", spec.idle_mean_s * 1000.0)
    diff = np.zeros(T + 1, dtype=np.int64)
    for _ in range(spec.user_count):
        active = rng.random() < spec.active_fraction
        now = 0.0
        while now < horizon_ms:
            length = float((on if active else off).sample(rng))
            if active:
                k0 = min(math.ceil(now / slot_ms), T)
                k1 = min(math.ceil((now + length) / slot_ms), T)
                diff[k0] += 1
                diff[k1] -= 1
            now += length
            active = not active
    return np.cumsum(diff[:-1])


def _prbs(bits, bits_per_prb):
    return np.ceil(np.asarray(bits, dtype=np.float64) / bits_per_prb - 1e-9).astype(np.int64)


def gen_onoff_trace(
    spec: OnOffSourceSpec,
    T: int,
    slot_ms: float,
    seed: int | None,
    *,
    system_bandwidth: int = SYSTEM_BANDWIDTH,
) -> DemandTrace:
    rng = np.random.default_rng(seed)
    active = onoff_activity(spec, T, slot_ms, rng)
    bits = active * spec.rate_bps * slot_ms / 1000.0
    demand = np.minimum(_prbs(bits, spec.bits_per_prb), system_bandwidth)
    return DemandTrace(demand[:, None], slot_ms=slot_ms, seed=seed)


@dataclass(frozen=True)
class WebBrowsingSpec:
    """Simplified web-browsing renewal process.

    Each user repeatedly loads a page (a random number of objects of random
    size, each followed by a parsing pause) and then reads it for a random
    time. Object bytes become PRB-slots delivered at no more than
    ``peak_prbs_per_slot`` per slot.
    """

    user_count: int = 10
    object_size_bytes: Distribution = field(default_factory=lambda: Distribution("lognormal", 10_000.0, 1.0))
    objects_per_page: Distribution = field(default_factory=lambda: Distribution("geometric", 5.0))
    parsing_time_s: Distribution = field(default_factory=lambda: Distribution("exponential", 0.13))
    reading_time_s: Distribution = field(default_factory=lambda: Distribution("exponential", 5.0))
    bits_per_prb: float = DEFAULT_BITS_PER_PRB
    peak_prbs_per_slot: int = 10

    def __post_init__(self):
        if self.user_count < 1:
            raise ValidationError("user_count must be >= 1")
        if not self.bits_per_prb > 0 or self.peak_prbs_per_slot < 1:
            raise ValidationError("bits_per_prb and peak_prbs_per_slot must be positive")


def gen_web_trace(
    spec: WebBrowsingSpec,
    T: int,
    slot_ms: float,
    seed: int | None,
    *,
    system_bandwidth: int = SYSTEM_BANDWIDTH,
) -> DemandTrace:
    rng = np.random.default_rng(seed)
    demand = np.zeros(T, dtype=np.int64)
    peak = spec.peak_prbs_per_slot
    reading = spec.reading_time_s
    for _ in range(spec.user_count):
        # Random phase so users do not start in lockstep.
        now = 0.0 if math.isinf(reading.mean) else rng.uniform(0.0, reading.mean * 1000.0 / slot_ms)
        while now < T:
            for _ in range(max(int(spec.objects_per_page.sample(rng)), 1)):
                size = float(spec.object_size_bytes.sample(rng))
                need = int(_prbs(size * 8.0, spec.bits_per_prb))
                start = math.ceil(now)
                full, rest = divmod(need, peak)
                stop = min(start + full, T)
                if start < T:
                    demand[start:stop] += peak
                    if rest and start + full < T:
                        demand[start + full] += rest
                now = start + full + (1 if rest else 0)
                now += float(spec.parsing_time_s.sample(rng)) * 1000.0 / slot_ms
                if now >= T:
                    break
            now += float(reading.sample(rng)) * 1000.0 / slot_ms
    return DemandTrace(np.minimum(demand, system_bandwidth)[:, None], slot_ms=slot_ms, seed=seed)


# ---------------------------------------------------------------------------
# Trace transforms and files


def window_max(trace: DemandTrace, window_slots: int) -> DemandTrace:
    """Maximum demand over consecutive windows; a trailing partial window is kept."""
    if window_slots < 1:
        raise ValidationError("window_slots must be >= 1")
    if window_slots == 1:
        return trace
    starts = np.arange(0, trace.horizon, window_slots)
    out = np.maximum.reduceat(trace.demands, starts, axis=0)
    return DemandTrace(out, slot_ms=trace.slot_ms * window_slots, seed=trace.seed)


def stack_traces(traces: Sequence[DemandTrace]) -> DemandTrace:
    """Combine single- or multi-slice traces of equal horizon side by side."""
    if len({t.horizon for t in traces}) != 1:
        raise DimensionMismatch("traces must share a horizon")
    return DemandTrace(
        np.concatenate([t.demands for t in traces], axis=1),
        slot_ms=traces[0].slot_ms,
        seed=traces[0].seed,
    )


def write_trace_csv(trace: DemandTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"slice_{i}" for i in range(trace.slice_count)])
        for t, row in enumerate(trace.demands.tolist()):
            w.writerow([t] + row)


def read_trace_csv(path, slot_ms: float = 1.0) -> DemandTrace:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["t"]:
        raise ValidationError(f"{path}: expected header 't,slice_0,...'")
    n = len(rows[0]) - 1
    body = rows[1:]
    if not body:
        raise EmptyTrace(f"{path}: no slots")
    data = np.zeros((len(body), n), dtype=np.int64)
    for k, row in enumerate(body, start=2):
        if len(row) != n + 1:
            raise ValidationError(f"{path}, line {k}: expected {n + 1} fields, got {len(row)}")
        try:
            data[k - 2] = [int(x) for x in row[1:]]
        except ValueError as exc:
            raise ValidationError(f"{path}, line {k}: {exc}") from None
    return DemandTrace(data, slot_ms=slot_ms)
