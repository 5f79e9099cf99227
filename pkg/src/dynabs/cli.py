"""Command-line pipeline: fit, abstract, verify, bench, simulate.

Configuration comes from an optional JSON file plus flag overrides (flags
win), so an experiment is reproducible from its config alone. Exit codes:
0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .abstraction import TransitionSystem, build_cells, compute_transitions, export_dot, sample_traces
from .ctl import CtlSyntaxError, check, parse_ctl, sat_set
from .data import DataError, Dataset, WorkingZone, load_dataset, zone_from_data
from .elm import SingularSystemError, fit_output_weights, init_elm, mse
from .geometry import Box
from .hybrid import HybridModel, hybrid_mse, merge_and_learn
from .partition import me_partition

DEFAULT_EPSILON = 4e-2
DEFAULT_GAMMA = 1.5e-5
DEFAULT_HIDDEN = 20
DEFAULT_REFERENCE_HIDDEN = 200
DEFAULT_TRACES = 400
DEFAULT_TRACE_LENGTH = 400


class UsageError(ValueError):
    """Bad configuration or arguments (exit code 2)."""


@dataclass
class PipelineConfig:
    dataset: str | None = None
    n_x: int = 2
    n_u: int = 0
    omega_lo: list[float] | None = None
    omega_hi: list[float] | None = None
    input_lo: list[float] | None = None
    input_hi: list[float] | None = None
    epsilon: float = DEFAULT_EPSILON
    gamma: float = DEFAULT_GAMMA
    hidden_count: int = DEFAULT_HIDDEN
    reference_hidden_count: int = DEFAULT_REFERENCE_HIDDEN
    traces: int = DEFAULT_TRACES
    trace_length: int = DEFAULT_TRACE_LENGTH
    seed: int = 0
    out_dir: str = "."
    threads: int = 1

    def validate(self) -> None:
        if self.epsilon < 0 or self.gamma < 0:
            raise UsageError("epsilon and gamma must be >= 0")
        if self.n_x < 1 or self.n_u < 0:
            raise UsageError("need n_x >= 1 and n_u >= 0")
        if self.hidden_count < 1 or self.reference_hidden_count < 1:
            raise UsageError("hidden counts must be positive")
        if self.traces < 1 or self.trace_length < 1:
            raise UsageError("traces and trace_length must be positive")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")
        if self.threads < 1:
            raise UsageError("threads must be positive")
        if (self.omega_lo is None) != (self.omega_hi is None):
            raise UsageError("omega_lo and omega_hi must be given together")
        if self.omega_lo is not None:
            Box(np.asarray(self.omega_lo), np.asarray(self.omega_hi))  # validity check
        if (self.input_lo is None) != (self.input_hi is None):
            raise UsageError("input_lo and input_hi must be given together")

    @classmethod
    def from_file(cls, path) -> PipelineConfig:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for f in fields(PipelineConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _zone_for(cfg: PipelineConfig, data: Dataset) -> WorkingZone:
    if cfg.omega_lo is None:
        zone = zone_from_data(data)
        if cfg.input_lo is not None:
            zone = WorkingZone(zone.omega, Box(np.asarray(cfg.input_lo), np.asarray(cfg.input_hi)))
        return zone
    omega = Box(np.asarray(cfg.omega_lo, dtype=float), np.asarray(cfg.omega_hi, dtype=float))
    input_bounds = None
    if data.n_u > 0:
        if cfg.input_lo is not None:
            input_bounds = Box(np.asarray(cfg.input_lo, dtype=float), np.asarray(cfg.input_hi, dtype=float))
        else:
            input_bounds = zone_from_data(data).input_bounds
    zone = WorkingZone(omega, input_bounds)
    zone.check_dataset(data)
    return zone


def _load_for(cfg: PipelineConfig) -> Dataset:
    if not cfg.dataset:
        raise UsageError("no dataset given (config key 'dataset' or --dataset)")
    return load_dataset(cfg.dataset, cfg.n_x, cfg.n_u)


def _fit_model(cfg: PipelineConfig, data: Dataset):
    zone = _zone_for(cfg, data)
    parts = me_partition(zone, data, cfg.epsilon)
    model = merge_and_learn(
        parts, data, hidden_count=cfg.hidden_count, seed=cfg.seed,
        gamma=cfg.gamma, workers=cfg.threads,
    )
    return parts, model


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    data = _load_for(cfg)
    parts, model = _fit_model(cfg, data)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    model.save(model_path)

    stats = model.stats
    print(f"partitions: {len(parts)}")
    print(f"regions after merge: {model.n_regions}")
    ids, _ = model.locate_batch(data.states)
    for region, net, secs in zip(model.regions, model.networks, stats.refit_seconds):
        rows = np.nonzero(ids == region.id)[0]
        if rows.size:
            mse_text = f"{mse(net, data.subset(rows)):.6e}"
        else:
            mse_text = "n/a (no samples)"
        print(f"region {region.id:3d}: samples={rows.size:6d}  mse={mse_text}  fit_ms={secs * 1e3:.4f}")
    print(f"total mse: {hybrid_mse(model, data):.6e}")
    print(f"total fit time: {stats.total_refit_seconds * 1e3:.4f} ms")
    print(f"model written: {model_path}")
    return 0


def cmd_abstract(args) -> int:
    cfg = _config_from_args(args)
    model = HybridModel.load(args.model)
    traces = sample_traces(model, cfg.traces, cfg.trace_length, cfg.seed)
    cells = build_cells(model.zone, traces, cfg.epsilon)
    ts = compute_transitions(model, cells, initial=args.initial, workers=cfg.threads)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ts_path = out_dir / "ts.json"
    dot_path = out_dir / "ts.dot"
    ts.save(ts_path)
    dot_path.write_text(export_dot(ts), encoding="utf-8")

    print(f"cells: {ts.n_cells}")
    print(f"edges: {ts.edge_count()}")
    print(f"transition system written: {ts_path}")
    print(f"graph written: {dot_path}")
    return 0


def cmd_verify(args) -> int:
    ts = TransitionSystem.load(args.ts)
    formula = parse_ctl(args.formula)
    result = check(ts, formula, args.initial)
    sat = sorted(sat_set(ts, formula))
    print(json.dumps({
        "formula": str(formula),
        "initial": args.initial,
        "result": result,
        "sat_set": [ts.state_label(i) for i in sat],
    }, indent=2))
    return 0


def cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    data = _load_for(cfg)

    parts, model = _fit_model(cfg, data)
    sub_times = [s for s in model.stats.refit_seconds if s > 0.0]
    hybrid_row = {
        "variant": "hybrid",
        "networks": model.n_regions,
        "hidden_count": cfg.hidden_count,
        "samples": len(data),
        "median_fit_ms": statistics.median(sub_times) * 1e3 if sub_times else 0.0,
        "total_fit_ms": model.stats.total_refit_seconds * 1e3,
        "mse": hybrid_mse(model, data),
    }

    reference = init_elm(data.n_x + data.n_u, data.n_x, cfg.reference_hidden_count, cfg.seed)
    t0 = time.perf_counter()
    reference = fit_output_weights(reference, data)
    ref_seconds = time.perf_counter() - t0
    reference_row = {
        "variant": "reference",
        "networks": 1,
        "hidden_count": cfg.reference_hidden_count,
        "samples": len(data),
        "median_fit_ms": ref_seconds * 1e3,
        "total_fit_ms": ref_seconds * 1e3,
        "mse": mse(reference, data),
    }

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = out_dir / "bench.csv"
    with open(report, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(hybrid_row))
        writer.writeheader()
        writer.writerow(hybrid_row)
        writer.writerow(reference_row)

    for row in (hybrid_row, reference_row):
        print(
            f"{row['variant']:9s} networks={row['networks']:3d} hidden={row['hidden_count']:4d} "
            f"median_fit_ms={row['median_fit_ms']:.4f} total_fit_ms={row['total_fit_ms']:.4f} "
            f"mse={row['mse']:.6e}"
        )
    print(f"report written: {report}")
    return 0


def cmd_simulate(args) -> int:
    model = HybridModel.load(args.model)
    x0 = np.asarray([float(v) for v in args.x0.split(",")], dtype=float)
    inputs = None
    if model.zone.n_u > 0:
        rng = np.random.default_rng(args.seed)
        ib = model.zone.input_bounds
        inputs = rng.uniform(ib.lo, ib.hi, size=(args.steps, ib.dim))
    result = model.simulate(x0, inputs, args.steps)
    doc = {
        "states": result.states.tolist(),
        "out_of_zone_steps": result.out_of_zone_steps,
        "truncated": result.truncated,
        "message": result.message,
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"trace written: {args.out}")
    else:
        print(json.dumps(doc, indent=2))
    return 0


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _add_config_flags(p: argparse.ArgumentParser, include_dataset: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    if include_dataset:
        p.add_argument("--dataset", help="CSV file of one-step samples")
        p.add_argument("--n-x", dest="n_x", type=int, help="state dimension")
        p.add_argument("--n-u", dest="n_u", type=int, help="input dimension (0 for autonomous)")
        p.add_argument("--omega-lo", dest="omega_lo", type=_csv_floats, help="zone lower corner")
        p.add_argument("--omega-hi", dest="omega_hi", type=_csv_floats, help="zone upper corner")
        p.add_argument("--input-lo", dest="input_lo", type=_csv_floats, help="input lower bounds")
        p.add_argument("--input-hi", dest="input_hi", type=_csv_floats, help="input upper bounds")
    p.add_argument("--epsilon", type=float, help="entropy-gain threshold for partitioning")
    p.add_argument("--gamma", type=float, help="pooled-MSE threshold for merging")
    p.add_argument("--hidden-count", dest="hidden_count", type=int, help="neurons per sub-network")
    p.add_argument("--reference-hidden-count", dest="reference_hidden_count", type=int,
                   help="neurons of the single reference network (bench)")
    p.add_argument("--traces", type=int, help="number of traces sampled for abstraction")
    p.add_argument("--trace-length", dest="trace_length", type=int, help="steps per sampled trace")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    p.add_argument("--threads", type=int, help="worker cap for parallel sections")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynabs",
        description="Learn a neural hybrid model from one-step samples, abstract it into "
                    "a finite transition system, and verify CTL formulas against it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="partition, merge, and train the hybrid model")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("abstract", help="sample traces, build cells, compute transitions")
    p.add_argument("--model", required=True, help="model JSON produced by fit")
    p.add_argument("--initial", type=int, help="cell id to mark as initial")
    _add_config_flags(p, include_dataset=False)
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("verify", help="check a CTL formula on a transition system")
    p.add_argument("--ts", required=True, help="transition-system JSON produced by abstract")
    p.add_argument("--formula", required=True, help="CTL formula, e.g. 'EF Q2'")
    p.add_argument("--initial", required=True, type=int, help="initial cell id")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="compare hybrid training against one large network")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", help="roll out the hybrid model from a start state")
    p.add_argument("--model", required=True, help="model JSON produced by fit")
    p.add_argument("--x0", required=True, help="comma-separated start state")
    p.add_argument("--steps", required=True, type=int, help="number of steps")
    p.add_argument("--seed", type=int, default=0, help="seed for random inputs, if the model has any")
    p.add_argument("--out", help="write the trace JSON here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, CtlSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SingularSystemError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
