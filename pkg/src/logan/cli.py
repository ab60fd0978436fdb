"""Command line entry point: analyze, serve, bench, validate-config, version.

Every config key is addressable as a flag (`--templatizer.sim-threshold`),
and values layer as flags > environment > config file > defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_file, merge_into, validate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# keys whose flag value is a comma-separated list
_LIST_KEYS = {
    ("ingest", "formats"), ("ingest", "include"), ("ingest", "exclude"),
    ("templatizer", "masks"), ("reports", "granularity_set"),
}

# short aliases for the parameters people tune most
_ALIASES = {
    "--granularity": ("reports", "granularity"),
    "--interval": ("causal", "interval"),
    "--max-lag": ("causal", "max_lag"),
    "--alpha": ("causal", "alpha"),
}

_ENV_KEYS = {
    "LOGAN_DATA_DIR": ("jobsvc", "data_dir"),
    "LOGAN_POOL_SIZE": ("jobsvc", "pool_size"),
    "LOGAN_WEBHOOK_URL": ("jobsvc", "webhook_url"),
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


def _add_config_flags(parser: argparse.ArgumentParser) -> dict[str, tuple[str, str]]:
    """One flag per config key; returns dest -> (section, key)."""
    parser.add_argument("--config", metavar="FILE", help="logan.toml/logan.json path")
    mapping = {}
    template = RunConfig()
    for section_field in dataclasses.fields(template):
        section = section_field.name
        for key_field in dataclasses.fields(getattr(template, section)):
            key = key_field.name
            dest = f"{section}__{key}"
            parser.add_argument(
                f"--{section}.{key.replace('_', '-')}",
                dest=dest, metavar="VALUE", help=argparse.SUPPRESS,
            )
            mapping[dest] = (section, key)
    for alias, target in _ALIASES.items():
        dest = "alias__" + alias.strip("-").replace("-", "_")
        parser.add_argument(alias, dest=dest, metavar="VALUE", help=argparse.SUPPRESS)
        mapping[dest] = target
    return mapping


def build_config(args, mapping, warnings: list[str]) -> RunConfig:
    """defaults <- config file <- environment <- flags"""
    cfg = RunConfig()
    path = args.config
    if path is None:
        for candidate in ("logan.toml", "logan.json"):
            if Path(candidate).is_file():
                path = candidate
                break
    if path is not None:
        merge_into(cfg, load_file(path), warnings)

    env_overrides: dict = {}
    for env_name, (section, key) in _ENV_KEYS.items():
        if env_name in os.environ:
            env_overrides.setdefault(section, {})[key] = os.environ[env_name]
    if env_overrides:
        merge_into(cfg, env_overrides, warnings)

    flag_overrides: dict = {}
    for dest, (section, key) in mapping.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if (section, key) in _LIST_KEYS:
            value = [v for v in value.split(",") if v]
        flag_overrides.setdefault(section, {})[key] = value
    if flag_overrides:
        merge_into(cfg, flag_overrides, warnings)
    return cfg


def _checked_config(args, mapping, warnings: list[str]) -> RunConfig:
    cfg = build_config(args, mapping, warnings)
    violations = validate(cfg)
    if violations:
        raise _UsageError("invalid config:\n  " + "\n  ".join(violations))
    return cfg


# ---------------------------------------------------------------------------
# Subcommands


def cmd_analyze(args, mapping) -> int:
    from .causal import PROBLEMATIC_SIGNALS
    from .ingest import IngestError
    from .pipeline import analyze_paths

    warnings: list[str] = []
    cfg = _checked_config(args, mapping, warnings)
    for path in args.paths:
        if Path(path).is_file() and Path(path).suffix.lower() in (
            ".zip", ".tar", ".gz", ".tgz", ".bz2", ".xz", ".7z", ".rar",
        ):
            raise _UsageError(
                f"unsupported format: {path} is an archive; extract it first"
            )
    try:
        result = analyze_paths(args.paths, cfg=cfg)
    except IngestError as exc:
        raise _UsageError(str(exc)) from exc

    out = Path(args.output)
    out.write_text(result.bundle.to_json(), encoding="utf-8")
    counters = result.bundle.meta["counters"]
    problematic = sum(
        1 for er in result.enriched if er.labels.golden in PROBLEMATIC_SIGNALS
    )
    print(
        f"{counters['lines_processed']} lines, "
        f"{counters['templates_discovered']} templates, "
        f"{counters['reduction']:.1%} reduction, "
        f"{problematic} problematic -> {out}"
    )
    for warning in warnings + result.bundle.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args, mapping) -> int:
    from .jobsvc import serve

    warnings: list[str] = []
    cfg = _checked_config(args, mapping, warnings)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    try:
        serve(cfg)
    except OSError as exc:
        print(f"error: cannot serve on {cfg.jobsvc.host}:{cfg.jobsvc.port}: {exc}",
              file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_bench(args, mapping) -> int:
    from . import bench

    out_dir = Path(args.out)
    if args.experiment == "rq1":
        spec = bench.SyntheticCorpusSpec(
            bench.default_pool(args.templates), args.lines, seed=args.seed
        )
        increments = list(range(args.increment, args.lines, args.increment)) + [args.lines]
        result = bench.run_rq1(spec, per_call_latency=args.latency, increments=increments)
        result.write(out_dir)
        last = result.points[-1]
        print(f"rq1: {args.lines} lines, {last.templates} templates -> "
              f"broadcast {last.lb_calls.get('gsc', 0)} calls "
              f"({result.lb_sim_s(last):.2f}s simulated), "
              f"per-line {last.pl_calls.get('gsc', 0)} calls "
              f"({result.pl_sim_s(last):.2f}s simulated); wrote {out_dir}/rq1.*")
    elif args.experiment == "rq2":
        sensitive = round(args.sensitive_fraction * args.lines)
        if sensitive > 0:
            pool = bench.default_pool(args.templates - 1) + [bench.sensitive_pattern(0)]
            others = args.lines - sensitive
            base, extra = divmod(others, args.templates - 1)
            counts = [base + (i < extra) for i in range(args.templates - 1)] + [sensitive]
            spec = bench.SyntheticCorpusSpec(pool, args.lines, seed=args.seed, counts=counts)
            report = bench.run_rq2(spec, sensitive_keyword="500")
        else:
            spec = bench.SyntheticCorpusSpec(
                bench.default_pool(args.templates), args.lines, seed=args.seed
            )
            report = bench.run_rq2(spec)
        report.write(out_dir)
        print(f"rq2: {report.identical} identical, {report.differing} differing "
              f"({report.differing / report.lines:.2%}); wrote {out_dir}/rq2.*")
    else:
        result = bench.run_kernels(args.lines, args.templates, repeats=args.repeats)
        for row in result["results"]:
            print(f"{row['kernel']:>7}: {row['lines_per_s']:,.0f} lines/s "
                  f"({row['seconds']:.3f}s for {result['n_lines']} lines)")
        if "speedup" in result:
            print(f"speedup: {result['speedup']:.2f}x")
    return EXIT_OK


def cmd_validate_config(args, mapping) -> int:
    warnings: list[str] = []
    cfg = build_config(args, mapping, warnings)
    violations = validate(cfg)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if violations:
        for violation in violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_USAGE
    print("config OK", file=sys.stderr)
    return EXIT_OK


def cmd_version(args, mapping) -> int:
    from .templatizer import KERNEL

    print(f"logan {__version__} (kernel: {KERNEL})")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="logan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    mappings = {}

    p_analyze = sub.add_parser("analyze", help="analyze log dumps into a report bundle")
    p_analyze.add_argument("paths", nargs="+", help="log files or directories")
    p_analyze.add_argument("-o", "--output", default="bundle.json",
                           help="bundle output path (default: bundle.json)")
    mappings["analyze"] = _add_config_flags(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_serve = sub.add_parser("serve", help="run the job service API")
    mappings["serve"] = _add_config_flags(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    p_bench = sub.add_parser("bench", help="run the desk-scale experiments")
    p_bench.add_argument("experiment", choices=["rq1", "rq2", "kernels"])
    p_bench.add_argument("--lines", type=int, default=50_000)
    p_bench.add_argument("--templates", type=int, default=150)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--latency", type=float, default=0.02,
                         help="simulated seconds per classifier call")
    p_bench.add_argument("--increment", type=int, default=10_000)
    p_bench.add_argument("--sensitive-fraction", type=float, default=0.0937,
                         help="fraction of lines covered by the injected rule (rq2)")
    p_bench.add_argument("--repeats", type=int, default=3, help="kernel bench repeats")
    p_bench.add_argument("--out", default="bench-out", help="output directory")
    mappings["bench"] = {}
    p_bench.set_defaults(func=cmd_bench)

    p_validate = sub.add_parser("validate-config", help="check and echo the merged config")
    mappings["validate-config"] = _add_config_flags(p_validate)
    p_validate.set_defaults(func=cmd_validate_config)

    p_version = sub.add_parser("version", help="print version and active kernel")
    mappings["version"] = {}
    p_version.set_defaults(func=cmd_version)

    return parser, mappings


def main(argv: list[str] | None = None) -> int:
    parser, mappings = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, mappings.get(args.command, {}))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # runtime failure with diagnostics
        import traceback

        traceback.print_exc()
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
