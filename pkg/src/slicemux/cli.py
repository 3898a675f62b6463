"""Command-line entry point: ``slicemux <command> [options]``.

Exit codes: 0 ok, 2 validation failure, 3 config error, 4 cap exceeded,
1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from slicemux import __version__, kernels
from slicemux.bench import DEFAULT_SLICE_COUNTS, run_bench, write_bench_csv
from slicemux.demand_gen import read_trace_csv, window_max, write_trace_csv
from slicemux.demand_stats import excess_trace, slice_floors
from slicemux.errors import ConfigError, SlicemuxError, ValidationError
from slicemux.oracle import (
    model_targets,
    offline_optimal,
    static_epsilon,
    static_threshold,
    static_upper_bound,
)
from slicemux.provisioner import full_isolation_baseline, full_plan, isolation_sweep, provision_max_weight
from slicemux.scenario import DEFAULT_CAPS, Scenario, load_scenario
from slicemux.scheduler import SlaSpec, evaluate_sla, required_counts, run_max_weight
from slicemux.selfcheck import run_suite

log = logging.getLogger("slicemux")


# ---------------------------------------------------------------------------
# Shared option handling


def _parse_caps(text: str | None) -> dict:
    caps = dict(DEFAULT_CAPS)
    if not text:
        return caps
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in caps:
            raise ConfigError(f"--caps: expected key=value with key in {sorted(caps)}, got {item!r}")
        try:
            caps[key] = int(value)
        except ValueError:
            raise ConfigError(f"--caps: {key} must be an integer") from None
        if caps[key] < 1:
            raise ConfigError(f"--caps: {key} must be positive")
    return caps


def _load_sla(args, n_slices: int, scenario: Scenario | None) -> SlaSpec:
    if args.sla:
        path = Path(args.sla)
        try:
            raw = json.loads(path.read_text()) if path.exists() else json.loads(args.sla)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--sla: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict) or "p_h" not in raw:
            raise ConfigError('--sla: expected {"p_h": [...], "p_l": [...]}')
        sla = SlaSpec(raw["p_h"], raw.get("p_l", [0.0] * len(raw["p_h"])))
    elif scenario is not None:
        sla = scenario.sla
    else:
        raise ConfigError("need --sla or --config to know the SLA")
    if sla.slice_count != n_slices:
        raise ValidationError(f"SLA covers {sla.slice_count} slices, trace has {n_slices}")
    return sla


def _load_inputs(args):
    """Trace and optional scenario from ``--trace`` and/or ``--config``."""
    caps = _parse_caps(args.caps)
    scenario = load_scenario(args.config) if getattr(args, "config", None) else None
    if scenario is not None and args.caps:
        scenario.caps = caps
    if getattr(args, "trace", None):
        try:
            trace = read_trace_csv(args.trace)
        except OSError as exc:
            raise ConfigError(f"cannot read trace {args.trace}: {exc}") from exc
    elif scenario is not None:
        trace = scenario.build_trace(args.seed)
    else:
        raise ConfigError("need --trace or --config")
    if getattr(args, "window", None):
        trace = window_max(trace, args.window)
    return trace, scenario


def _caps(args, scenario) -> dict:
    if scenario is not None:
        return scenario.caps
    return _parse_caps(args.caps)


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_trace(args) -> int:
    scenario = load_scenario(args.config)
    if args.window:
        scenario.window_slots = args.window
    seed = scenario.seed if args.seed is None else args.seed
    trace = scenario.build_trace(seed)
    out = Path(args.out)
    write_trace_csv(trace, out)
    meta = {
        "seed": seed,
        "spec_hash": scenario.spec_hash(),
        "horizon_slots": scenario.horizon,
        "window_slots": scenario.window_slots,
        "rows": trace.horizon,
        "slot_ms": trace.slot_ms,
        "slices": [s.name for s in scenario.slices],
        "version": __version__,
    }
    out.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    log.info("wrote %d x %d trace to %s", trace.horizon, trace.slice_count, out)
    return 0


def cmd_stats(args) -> int:
    trace, scenario = _load_inputs(args)
    sla = _load_sla(args, trace.slice_count, scenario)
    floors = slice_floors(trace, sla.p_l)
    rows = [[i, f.w_l, f.p_m] for i, f in enumerate(floors)]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["slice", "w_l", "p_m"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_provision(args) -> int:
    trace, scenario = _load_inputs(args)
    sla = _load_sla(args, trace.slice_count, scenario)
    plan = full_plan(trace, sla)
    floors = slice_floors(trace, sla.p_l)
    run = run_max_weight(excess_trace(trace, floors), plan.w_c, plan.targets)
    report = evaluate_sla(trace, run.decisions, plan.w_l, sla, slack=args.slack)
    result = plan.to_dict()
    result["full_isolation_total"] = full_isolation_baseline(trace, sla.p_h)
    result["report"] = {
        "availability": report.availability.tolist(),
        "isolation": report.isolation.tolist(),
        "availability_ok": report.availability_ok.tolist(),
        "isolation_ok": report.isolation_ok.tolist(),
        "passed": report.passed,
    }
    _emit(result, args.out)
    return 0 if report.passed else 2


def cmd_sweep(args) -> int:
    trace, scenario = _load_inputs(args)
    sla = _load_sla(args, trace.slice_count, scenario)
    caps = _caps(args, scenario)
    surface = isolation_sweep(trace, sla, args.step, cell_cap=caps["sweep_cells"], workers=args.workers)
    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(surface.header())
        w.writerows(surface.rows())
    svg = Path(args.svg) if args.svg else out.with_suffix(".svg")
    from slicemux.plotting import plot_surface  # matplotlib import is slow

    names = [s.name for s in scenario.slices] if scenario is not None else None
    plot_surface(surface, svg, names)
    lo, hi = surface.plans[0].total, surface.plans[-1].total
    log.info("P^L=0 total %d, P^L=P^H total %d, saving %.1f%%", lo, hi, 100 * (1 - lo / hi) if hi else 0.0)
    return 0


def cmd_oracle(args) -> int:
    trace, scenario = _load_inputs(args)
    sla = _load_sla(args, trace.slice_count, scenario)
    caps = _caps(args, scenario)
    floors = slice_floors(trace, sla.p_l)
    targets = np.array(sla.p_h) - [f.p_m for f in floors]
    ex = excess_trace(trace, floors)
    counts = required_counts(targets, trace.horizon)
    rows = [
        ("offline", offline_optimal(ex, counts, caps["ilp_variables"]).w_c_offline, ""),
        ("max_weight", provision_max_weight(ex, targets, trace.horizon), ""),
    ]
    model = scenario.markov_model() if scenario is not None else None
    if model is not None:
        m_floors, m_targets = model_targets(model, sla)
        rows.append(("static_threshold", static_threshold(model, m_floors, m_targets, caps["lp_columns"]), ""))
        for w in range(static_upper_bound(model, m_floors) + 1):
            eps = static_epsilon(model, m_floors, w, m_targets, caps["lp_columns"]).epsilon_star
            rows.append(("epsilon_star", w, f"{eps:.12g}"))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["kind", "w_c", "value"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_bench(args) -> int:
    counts = [int(x) for x in args.n.split(",")] if args.n else list(DEFAULT_SLICE_COUNTS)
    backends = sorted(kernels.BACKENDS) if args.backend == "all" else [args.backend or kernels.BACKEND]
    rows = run_bench(counts, args.slots, args.repeats, backends, seed=args.seed or 0)
    write_bench_csv(rows, args.out)
    for r in rows:
        log.info("%s N=%d: %.2f us/slot", r.backend, r.n_slices, r.mean_us_per_slot)
    return 0


def cmd_validate(args) -> int:
    results = run_suite(args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 2


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slicemux", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trace=True, sla=True):
        sp.add_argument("--config", help="scenario JSON")
        if trace:
            sp.add_argument("--trace", help="trace CSV (overrides generating one from --config)")
            sp.add_argument("--window", type=int, help="apply a window maximum of this many rows")
        if sla:
            sp.add_argument("--sla", help='JSON file or literal {"p_h": [...], "p_l": [...]}')
        sp.add_argument("--seed", type=int)
        sp.add_argument("--caps", help="cap overrides, e.g. sweep_cells=500,ilp_variables=5000")
        sp.add_argument("--out")

    sp = sub.add_parser("trace", help="generate a demand trace from a scenario")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--window", type=int, help="override the scenario's window_slots")
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("stats", help="per-slice isolation floors")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("provision", help="floors plus minimal Max-Weight pool")
    common(sp)
    sp.add_argument("--slack", type=float, default=0.0, help="tolerance on achieved fractions")
    sp.set_defaults(func=cmd_provision)

    sp = sub.add_parser("sweep", help="provisioning over a grid of isolation degrees")
    common(sp)
    sp.add_argument("--step", type=float, default=0.25)
    sp.add_argument("--svg")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("oracle", help="offline optimum, Max-Weight and static-policy curve")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("bench", help="per-slot Max-Weight timing")
    sp.add_argument("--out", required=True)
    sp.add_argument("--n", help="comma-separated slice counts")
    sp.add_argument("--slots", type=int, default=10_000)
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--backend", choices=["python", "compiled", "all"])
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("validate", help="run the seeded property suite")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except SlicemuxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
