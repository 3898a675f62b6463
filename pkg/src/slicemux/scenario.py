"""JSON scenario files: slice traffic models, SLAs, horizon and solver caps.

Example::

    {
      "slot_ms": 1.0, "horizon": 60000, "window_slots": 100, "seed": 7,
      "slices": [
        {"name": "voice", "p_h": 0.99, "p_l": 0.5,
         "model": {"kind": "onoff", "user_count": 100, "active_mean_s": 2,
                   "idle_mean_s": 5, "rate_bps": 8000}},
        {"name": "bursty", "p_h": 0.95, "p_l": 0.0,
         "model": {"kind": "markov", "states": [0, 10],
                   "transitions": [[0.5, 0.5], [0.5, 0.5]]}}
      ]
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from slicemux.demand_gen import (
    SYSTEM_BANDWIDTH,
    DemandTrace,
    Distribution,
    MarkovDemandModel,
    OnOffSourceSpec,
    WebBrowsingSpec,
    build_markov_model,
    gen_markov_trace,
    gen_onoff_trace,
    gen_web_trace,
    stack_traces,
    window_max,
)
from slicemux.errors import ConfigError, SlicemuxError
from slicemux.oracle import ILP_VARIABLE_CAP, LP_COLUMN_CAP
from slicemux.provisioner import SWEEP_CELL_CAP
from slicemux.scheduler import SlaSpec

DEFAULT_CAPS = {
    "sweep_cells": SWEEP_CELL_CAP,
    "lp_columns": LP_COLUMN_CAP,
    "ilp_variables": ILP_VARIABLE_CAP,
}

_ONOFF_KEYS = {"user_count", "active_mean_s", "idle_mean_s", "rate_bps", "packet_bytes", "bits_per_prb", "pareto_shape"}
_WEB_DIST_KEYS = {"object_size_bytes", "objects_per_page", "parsing_time_s", "reading_time_s"}
_WEB_KEYS = _WEB_DIST_KEYS | {"user_count", "bits_per_prb", "peak_prbs_per_slot"}


@dataclass
class SliceConfig:
    name: str
    model: dict
    p_h: float
    p_l: float


@dataclass
class Scenario:
    slices: list[SliceConfig]
    horizon: int
    slot_ms: float = 1.0
    window_slots: int = 1
    seed: int = 0
    system_bandwidth: int = SYSTEM_BANDWIDTH
    caps: dict = field(default_factory=lambda: dict(DEFAULT_CAPS))

    @property
    def sla(self) -> SlaSpec:
        return SlaSpec([s.p_h for s in self.slices], [s.p_l for s in self.slices])

    def to_dict(self) -> dict:
        return {
            "slot_ms": self.slot_ms,
            "horizon": self.horizon,
            "window_slots": self.window_slots,
            "seed": self.seed,
            "system_bandwidth": self.system_bandwidth,
            "caps": dict(self.caps),
            "slices": [
                {"name": s.name, "p_h": s.p_h, "p_l": s.p_l, "model": s.model} for s in self.slices
            ],
        }

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def slice_seeds(self) -> list[int]:
        children = np.random.SeedSequence(self.seed).spawn(len(self.slices))
        return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]

    def markov_model(self) -> MarkovDemandModel | None:
        """Joint model when every slice is a Markov chain, else ``None``."""
        if any(s.model["kind"] != "markov" for s in self.slices):
            return None
        return build_markov_model(
            [s.model["states"] for s in self.slices],
            [s.model["transitions"] for s in self.slices],
        )

    def build_trace(self, seed: int | None = None) -> DemandTrace:
        """Generate every slice, stack them and apply the window maximum."""
        if seed is not None and seed != self.seed:
            return Scenario(
                self.slices, self.horizon, self.slot_ms, self.window_slots, seed, self.system_bandwidth, self.caps
            ).build_trace()
        cols = []
        for s, sd in zip(self.slices, self.slice_seeds()):
            cols.append(_gen_slice(s.model, self.horizon, self.slot_ms, sd, self.system_bandwidth))
        trace = stack_traces(cols)
        trace = DemandTrace(trace.demands, slot_ms=self.slot_ms, seed=self.seed)
        return window_max(trace, self.window_slots)


def _gen_slice(model: dict, T: int, slot_ms: float, seed: int, bw: int) -> DemandTrace:
    kind = model["kind"]
    if kind == "markov":
        m = build_markov_model([model["states"]], [model["transitions"]])
        return gen_markov_trace(m, T, seed, slot_ms=slot_ms, system_bandwidth=bw)
    if kind == "onoff":
        spec = OnOffSourceSpec(**{k: model[k] for k in _ONOFF_KEYS if k in model})
        return gen_onoff_trace(spec, T, slot_ms, seed, system_bandwidth=bw)
    kw = {k: model[k] for k in _WEB_KEYS if k in model}
    for k in _WEB_DIST_KEYS & kw.keys():
        kw[k] = Distribution.from_dict(kw[k])
    return gen_web_trace(WebBrowsingSpec(**kw), T, slot_ms, seed, system_bandwidth=bw)


# ---------------------------------------------------------------------------
# Parsing


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing '{key}'")
    return d[key]


def _number(x, where: str, *, integer=False, positive=False, minimum=None) -> Any:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    if integer and int(x) != x:
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    if positive and not x > 0:
        raise ConfigError(f"{where}: must be positive")
    if minimum is not None and x < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return int(x) if integer else float(x)


def _check_model(model, where: str) -> dict:
    if not isinstance(model, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _need(model, "kind", where)
    allowed = {"markov": {"states", "transitions"}, "onoff": _ONOFF_KEYS, "web": _WEB_KEYS}
    if kind not in allowed:
        raise ConfigError(f"{where}.kind: unknown model kind {kind!r} (markov, onoff, web)")
    unknown = set(model) - allowed[kind] - {"kind"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    # Build once so bad parameters surface at load time with their location.
    try:
        if kind == "markov":
            build_markov_model([_need(model, "states", where)], [_need(model, "transitions", where)])
        elif kind == "onoff":
            for k in ("user_count", "active_mean_s", "idle_mean_s", "rate_bps"):
                _need(model, k, where)
            OnOffSourceSpec(**{k: model[k] for k in _ONOFF_KEYS if k in model})
        else:
            for k in _WEB_DIST_KEYS & model.keys():
                Distribution.from_dict(model[k])
    except SlicemuxError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return model


def scenario_from_dict(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    known = {"slices", "horizon", "slot_ms", "window_slots", "seed", "system_bandwidth", "caps"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")
    slices_raw = _need(raw, "slices", "top level")
    if not isinstance(slices_raw, list) or not slices_raw:
        raise ConfigError("slices: expected a nonempty list")
    slices = []
    for i, s in enumerate(slices_raw):
        where = f"slices[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{where}: expected an object")
        p_h = _number(_need(s, "p_h", where), f"{where}.p_h")
        p_l = _number(s.get("p_l", 0.0), f"{where}.p_l")
        if not 0.0 <= p_l <= p_h <= 1.0:
            raise ConfigError(f"{where}: need 0 <= p_l ({p_l}) <= p_h ({p_h}) <= 1")
        model = _check_model(_need(s, "model", where), f"{where}.model")
        slices.append(SliceConfig(str(s.get("name", f"slice_{i}")), model, p_h, p_l))
    caps = dict(DEFAULT_CAPS)
    caps_raw = raw.get("caps", {})
    if not isinstance(caps_raw, dict):
        raise ConfigError("caps: expected an object")
    for k, v in caps_raw.items():
        if k not in DEFAULT_CAPS:
            raise ConfigError(f"caps: unknown cap {k!r}")
        caps[k] = _number(v, f"caps.{k}", integer=True, positive=True)
    return Scenario(
        slices=slices,
        horizon=_number(_need(raw, "horizon", "top level"), "horizon", integer=True, minimum=1),
        slot_ms=_number(raw.get("slot_ms", 1.0), "slot_ms", positive=True),
        window_slots=_number(raw.get("window_slots", 1), "window_slots", integer=True, minimum=1),
        seed=_number(raw.get("seed", 0), "seed", integer=True, minimum=0),
        system_bandwidth=_number(raw.get("system_bandwidth", SYSTEM_BANDWIDTH), "system_bandwidth", integer=True, positive=True),
        caps=caps,
    )


def loads_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}\n  {context}\n  {' ' * (exc.colno - 1)}^"
        ) from exc
    return scenario_from_dict(raw)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_scenario(text)


def four_slice_scenario(horizon: int = 600_000, seed: int = 2024, window_slots: int = 100) -> Scenario:
    """Voice, video and two web-browsing slices at 1 ms slots, aggregated over 100 ms windows.

    Voice: 100 users, 1 kB/s while active, Pareto calls of mean 2 s, idle 5 s.
    Video: 15 users, 8 Mb/s while active, same calls, idle 10 s.
    Web: 10 and 20 browsing users.
    """
    voice = {"kind": "onoff", "user_count": 100, "active_mean_s": 2.0, "idle_mean_s": 5.0,
             "rate_bps": 8000.0, "packet_bytes": 20, "bits_per_prb": 100.0}
    video = {"kind": "onoff", "user_count": 15, "active_mean_s": 2.0, "idle_mean_s": 10.0,
             "rate_bps": 8e6, "packet_bytes": 1000, "bits_per_prb": 1000.0}
    return Scenario(
        slices=[
            SliceConfig("voice", voice, 0.99, 0.5),
            SliceConfig("video", video, 0.99, 0.5),
            SliceConfig("web_a", {"kind": "web", "user_count": 10}, 0.99, 0.5),
            SliceConfig("web_b", {"kind": "web", "user_count": 20}, 0.99, 0.5),
        ],
        horizon=horizon,
        slot_ms=1.0,
        window_slots=window_slots,
        seed=seed,
    )
