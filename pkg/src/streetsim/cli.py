"""Command-line entry point: ``streetsim world|run|report``.

Exit codes: 0 ok, 1 configuration or schema error, 2 I/O error,
3 provider error, 4 engine error. Low benchmark scores are data and never
change the exit code.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .canonical import dumps
from .errors import ProviderError, SchemaError, StreetSimError, WorldError
from .tasks import PROVIDERS, TASKS, ConfigError, merge_config, run_task, world_params_from_config

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PROVIDER, EXIT_ENGINE = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return data


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="streetsim", description="Street-level agent simulator and benchmark harness.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pw = sub.add_parser("world", help="generate, validate or summarize a world file")
    wsub = pw.add_subparsers(dest="world_command", required=True, parser_class=_Parser)
    g = wsub.add_parser("generate", help="write a synthetic world")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nodes", type=int, help="number of street nodes")
    g.add_argument("--config", help="YAML/JSON file; its world_params section feeds the generator")
    g.add_argument("--out", required=True, help="output world file")
    v = wsub.add_parser("validate", help="check a world file against every invariant")
    v.add_argument("path")
    st = wsub.add_parser("stats", help="node/place/instance counts per region")
    st.add_argument("path")

    r = sub.add_parser("run", help="run a task and write records + aggregate")
    r.add_argument("--config", help="YAML/JSON run config; flags override it")
    r.add_argument("--task", choices=TASKS)
    r.add_argument("--world", help="world file; default generates one from --seed")
    r.add_argument("--seed", type=int)
    r.add_argument("--provider", choices=PROVIDERS)
    r.add_argument("--endpoint", help="base URL of an external provider")
    r.add_argument("--out", help="output directory")
    r.add_argument("--workers", type=int, help="parallel episodes (default: CPU count)")
    r.add_argument("--threshold-m", dest="threshold_m", type=float, help="VLN success radius in meters")

    rep = sub.add_parser("report", help="emit CSV tables from a run directory")
    rep.add_argument("dir")
    return p


def _world_generate(args) -> int:
    from .world import generate_world, write_world

    cfg = _load_config(args.config)
    wp = dict(cfg.get("world_params", {}))
    if args.nodes is not None:
        wp["node_count"] = args.nodes
    w = generate_world(args.seed, world_params_from_config(wp))
    write_world(w, args.out)
    print(f"wrote {args.out}: {len(w.nodes)} nodes, {len(w.places)} places, {len(w.instances)} instances")
    return EXIT_OK


def _world_validate(args) -> int:
    from .world import read_world

    try:
        w = read_world(args.path)
    except SchemaError as exc:
        print(f"{args.path}: invalid at {exc.path or '<root>'}: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    except WorldError as exc:
        print(f"{args.path}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.path}: ok ({len(w.nodes)} nodes, {len(w.places)} places, {len(w.instances)} instances)")
    return EXIT_OK


def _world_stats(args) -> int:
    from .tasks import _regions, region_of
    from .world import read_world

    try:
        w = read_world(args.path)
    except WorldError as exc:
        print(f"{args.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    regions = _regions(w)
    rows = {name: [0, 0, 0] for name, _ in regions}
    rows[""] = [0, 0, 0]
    for k, table in enumerate((w.nodes, w.places, w.instances)):
        for item in table.values():
            rows[region_of(regions, item.coord)][k] += 1
    print(f"{'region':<10}{'nodes':>8}{'places':>8}{'instances':>11}")
    for name, _ in regions:
        n, p, i = rows[name]
        print(f"{name:<10}{n:>8}{p:>8}{i:>11}")
    if any(rows[""]):
        n, p, i = rows[""]
        print(f"{'(outside)':<10}{n:>8}{p:>8}{i:>11}")
    print(f"{'total':<10}{len(w.nodes):>8}{len(w.places):>8}{len(w.instances):>11}")
    return EXIT_OK


def _run(args) -> int:
    from .benchmark.reports import write_aggregate, write_records

    file_cfg = _load_config(args.config)
    flags = {k: getattr(args, k) for k in ("task", "world", "seed", "provider", "endpoint", "out",
                                            "workers", "threshold_m")}
    cfg = merge_config(file_cfg, flags)
    try:
        from .tasks import load_run_world

        w = load_run_world(cfg)
    except WorldError as exc:
        raise ConfigError(f"world {cfg.world}: {exc}") from None
    records, aggregate, artifacts, summary = run_task(cfg, w)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_records(cfg.out, records)
    write_aggregate(cfg.out, aggregate)
    for name, payload in sorted(artifacts.items()):
        if hasattr(payload, "to_document"):
            payload = dumps(payload.to_document())
        (cfg.out / name).write_bytes(payload)
    print(f"{cfg.task}: {summary}")
    print(f"wrote {len(records)} records to {cfg.out}")
    return EXIT_OK


def _report(args) -> int:
    from .benchmark.reports import build_report, read_records, write_report

    try:
        records, aggregate = read_records(Path(args.dir))
        tables = build_report(records, aggregate)
    except (ValueError, KeyError, TypeError) as exc:
        print(f"{args.dir}: corrupt records: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in write_report(Path(args.dir), tables):
        print(f"wrote {p}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "world":
            return {"generate": _world_generate, "validate": _world_validate,
                    "stats": _world_stats}[args.world_command](args)
        if args.command == "run":
            return _run(args)
        return _report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except StreetSimError as exc:
        print(f"engine error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
