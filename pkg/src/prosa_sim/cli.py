"""Command-line entry point: ``prosa-sim run|sweep|baseline|metrics``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .metrics import (
    build_report,
    random_graph_apl,
    random_graph_cc,
    write_metrics_csv,
)
from .overlay import read_edge_list
from .routing import read_traces_csv, write_traces_csv
from .workload import ExperimentConfig, run_experiment, sweep

SEED_ENV = "PROSA_SIM_SEED"


class CliError(Exception):
    pass


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, help=f"64-bit seed (fallback: ${SEED_ENV})")
    parser.add_argument("--nodes", dest="node_count", type=int)
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in ("seed", "node_count"):
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = str if isinstance(f.default, bool) else type(f.default)
        group.add_argument(flag, dest=f.name, type=kind, metavar=f.name.upper())


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        if not args.config.is_file():
            raise CliError(f"config file not found: {args.config}")
        try:
            cfg = ExperimentConfig.from_file(args.config)
        except (OSError, ValueError) as exc:
            raise CliError(str(exc)) from None
    else:
        cfg = ExperimentConfig()
    overrides = {}
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    # precedence: --seed, then the config file, then the environment
    if "seed" not in overrides and os.environ.get(SEED_ENV) and not _config_sets_seed(args.config):
        overrides["seed"] = os.environ[SEED_ENV]
    try:
        return cfg.with_overrides(overrides, "command line")
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _config_sets_seed(path: Path | None) -> bool:
    if path is None:
        return False
    for line in path.read_text().splitlines():
        key = line.split("#", 1)[0].split("=", 1)[0].strip()
        if key == "seed":
            return True
    return False


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: ExperimentConfig, started: datetime, outputs: list[Path]) -> Path:
    manifest = {
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {p.name: {"path": str(p), "sha256": _sha256(p)} for p in outputs},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _prepare_out(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _prepare_out(args.out)
    started = datetime.now(timezone.utc)
    result = run_experiment(cfg)
    metrics_path = args.out / "metrics.csv"
    traces_path = args.out / "traces.csv"
    edges_path = args.out / "edges.txt"
    write_metrics_csv(result.report, metrics_path)
    write_traces_csv(result.traces, traces_path)
    result.network.write_edge_list(edges_path)
    write_manifest(args.out, cfg, started, [metrics_path, traces_path, edges_path])
    rep = result.report
    print(f"nodes={rep.node_count} edges={rep.edge_count} apl={rep.apl:.4f} "
          f"cc={rep.cc:.4f} random_apl={rep.random_apl:.4f} random_cc={rep.random_cc:.6f}")
    return 0


SUMMARY_COLUMNS = ("size", "apl", "random_apl", "cc", "random_cc")


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    try:
        sizes = sorted({int(s) for s in args.sizes.split(",") if s.strip()})
    except ValueError:
        raise CliError(f"--sizes must be a comma-separated list of integers: {args.sizes!r}") from None
    if not sizes:
        raise CliError("--sizes is empty")
    _prepare_out(args.out)
    started = datetime.now(timezone.utc)
    reports = sweep(cfg, sizes, workers=args.workers)
    outputs = []
    for size, report in zip(sizes, reports):
        path = args.out / f"metrics_{size}.csv"
        write_metrics_csv(report, path)
        outputs.append(path)
    summary = args.out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for size, rep in zip(sizes, reports):
            writer.writerow((size, repr(rep.apl), repr(rep.random_apl), repr(rep.cc), repr(rep.random_cc)))
            print(f"size={size} apl={rep.apl:.4f} random_apl={rep.random_apl:.4f} "
                  f"cc={rep.cc:.4f} random_cc={rep.random_cc:.6f}")
    outputs.append(summary)
    write_manifest(args.out, cfg, started, outputs)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    try:
        cc = random_graph_cc(args.v, args.e)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    status = 0
    try:
        print(f"random_apl: {random_graph_apl(args.v, args.e)!r}")
    except ValueError:
        print("random_apl: undefined")
        status = 1
    print(f"random_cc: {cc!r}")
    return status


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        node_count, edges = read_edge_list(args.edges)
        traces = read_traces_csv(args.traces) if args.traces else []
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read inputs: {exc}") from None
    adjacency = {n: set() for n in range(node_count)}
    for s, t, _ in edges:
        adjacency[s].add(t)
    report = build_report(adjacency, traces, window=args.window, step=args.step)
    if args.out:
        write_metrics_csv(report, args.out)
    print(f"nodes={report.node_count} edges={report.edge_count} apl={report.apl:.4f} "
          f"cc={report.cc:.4f} random_apl={report.random_apl:.4f} random_cc={report.random_cc:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prosa-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and export its artifacts")
    _add_config_flags(run)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run one experiment per network size")
    _add_config_flags(sw)
    sw.add_argument("--sizes", required=True, help="comma-separated node counts")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    base = sub.add_parser("baseline", help="analytic random-graph APL and CC")
    base.add_argument("v", type=int, help="vertex count")
    base.add_argument("e", type=int, help="edge count")
    base.set_defaults(func=cmd_baseline)

    met = sub.add_parser("metrics", help="recompute metrics from exported artifacts")
    met.add_argument("--edges", type=Path, required=True)
    met.add_argument("--traces", type=Path)
    met.add_argument("--out", type=Path)
    met.add_argument("--window", type=int, default=300)
    met.add_argument("--step", type=int, default=50)
    met.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"prosa-sim: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"prosa-sim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
