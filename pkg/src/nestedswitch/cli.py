"""``nested-switch`` command line.

Exit codes: 0 success, 1 runtime error, 2 usage error.  Every file written
gets a ``<file>.manifest.json`` next to it; passing that manifest back via
``--config`` reproduces the run.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    CAPACITY_COLUMNS,
    ConfigError,
    ExperimentConfig,
    failure_sweep,
    failure_sweep_csv,
    load_distribution,
    load_distribution_csv,
    scaling_csv,
    scaling_sweep,
    to_csv,
)
from .fidelity import WernerParams, end_to_end, hops_for_network
from .graphstate import capacity_sweep
from .plotting import CAPACITY_PLOT, FAILURE_PLOT, FIDELITY_PLOT, HOPS_PLOT, LOAD_PLOT, SCALING_PLOT, emit_svg
from .requests import Matching, random_perfect_matching
from .routing import plan_metrics, route_matching
from .topology import apply_failures, build_nested

# --- argument types ----------------------------------------------------------


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {value}")
        return value

    return parse


def _dimension(text: str) -> int:
    d = _int_at_least(1)(text)
    if d > 16:
        raise argparse.ArgumentTypeError(f"d={d} is too large (max 16)")
    return d


def _capacity(text: str):
    if text.lower() in ("inf", "none", "unbounded"):
        return None
    return _int_at_least(1)(text)


def _unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("expected a non-empty list of non-negative integers")
    return values


# --- parser ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, *, seed=True, out=True, svg=False, threads=False):
    p.add_argument("--config", help="key=value file (or a run manifest) supplying defaults for flags")
    if seed:
        p.add_argument("--seed", type=_int_at_least(0), default=0, help="master random seed")
    if out:
        p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if svg:
        p.add_argument("--svg", help="also write an SVG figure to this path")
    if threads:
        p.add_argument("--threads", type=_int_at_least(1), default=os.cpu_count() or 1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nested-switch", description="Nested quantum switch simulator", allow_abbrev=False
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("topology", help="write the nested/hypercube edge list", allow_abbrev=False)
    p.add_argument("--d", type=_dimension, required=True)
    p.add_argument("--failed", type=_int_list, default=[], help="nodes to mask out")
    p.add_argument("--hypercube", action="store_true", help="also list the logical hypercube edges")
    _common(p, seed=False)

    p = sub.add_parser("route", help="route one request", allow_abbrev=False)
    p.add_argument("--d", type=_dimension, required=True)
    p.add_argument("--R", type=_capacity, default=2, help="Bell pairs per link ('inf' for unbounded)")
    p.add_argument("--k", type=_int_at_least(1), default=20)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--matching", help="file with one 'u v' pair per line")
    src.add_argument("--random", action="store_true", help="route a random perfect matching (default)")
    p.add_argument("--metrics", help="also write the metrics CSV row to this file")
    _common(p)
    p.set_defaults(format="json")

    p = sub.add_parser("sweep-failures", help="served fraction and hops versus failed nodes", allow_abbrev=False)
    p.add_argument("--d", type=_dimension, required=True)
    p.add_argument("--R", type=_capacity, default=2)
    p.add_argument("--k", type=_int_at_least(1), default=20)
    p.add_argument("--trials", type=_int_at_least(1), default=500)
    p.add_argument("--x", type=_int_list, default=[0, 10, 20, 30, 40], help="failure counts, e.g. 0,10,20")
    p.add_argument("--hops-svg", help="also plot hops per served pair")
    _common(p, svg=True, threads=True)

    p = sub.add_parser("edge-load", help="edge-load distribution under a maximal request", allow_abbrev=False)
    p.add_argument("--d", type=_dimension, required=True)
    p.add_argument("--R", type=_capacity, default=2)
    p.add_argument("--k", type=_int_at_least(1), default=20)
    p.add_argument("--trials", type=_int_at_least(1), default=500)
    p.add_argument("--x", type=_int_at_least(0), default=0)
    _common(p, svg=True, threads=True)

    p = sub.add_parser("max-load-scaling", help="required per-link load versus n", allow_abbrev=False)
    p.add_argument("--d-min", type=_dimension, default=3)
    p.add_argument("--d-max", type=_dimension, default=10)
    p.add_argument("--trials", type=_int_at_least(1), default=50)
    p.add_argument("--k", type=_int_at_least(1), default=20)
    _common(p, svg=True, threads=True)

    p = sub.add_parser("graphstate", help="merged graph-state capacity versus n", allow_abbrev=False)
    p.add_argument("--d-min", type=_dimension, default=2)
    p.add_argument("--d-max", type=_dimension, default=10)
    p.add_argument("--trials", type=_int_at_least(1), default=20)
    _common(p, svg=True, threads=True)

    p = sub.add_parser("fidelity", help="end-to-end Werner fidelity versus hops", allow_abbrev=False)
    p.add_argument("--p0", type=_unit, required=True)
    p.add_argument("--p-swap", type=_unit, default=1.0)
    p.add_argument("--t", type=_nonneg_float, default=0.0, help="storage time")
    p.add_argument("--T", type=_nonneg_float, default=1.0, help="coherence time (same units as --t)")
    hops = p.add_mutually_exclusive_group(required=True)
    hops.add_argument("--L", type=_int_at_least(1), help="hops; rows for 1..L are emitted")
    hops.add_argument("--n", type=_int_at_least(2), help="network size; uses L = (log2 n)/2 rounded up")
    _common(p, seed=False, svg=True)
    return parser


# --- config files and manifests ----------------------------------------------


def _load_config(path: str) -> dict[str, str]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return dict(json.loads(text).get("config", {}))
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_NOT_CONFIGURABLE = {"command", "config", "out", "svg", "hops_svg", "metrics", "threads", "format"}


def _config_argv(value) -> str | None:
    if value is None or value == "None":
        return "inf"
    if isinstance(value, list):
        return ",".join(map(str, value)) if value else None
    return str(value)


def _find_config(argv: list[str]) -> tuple[str | None, str | None]:
    """Subcommand and ``--config`` path, located without a full parse."""
    command = next((a for a in argv if a in COMMANDS), None)
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return command, argv[i + 1]
        if a.startswith("--config="):
            return command, a.split("=", 1)[1]
    return command, None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` fill in flags not given explicitly."""
    command, path = _find_config(argv)
    if command is None or path is None:
        return parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[command]
    try:
        values = _load_config(path)
    except (OSError, ValueError) as exc:
        subparser.error(f"argument --config: {exc}")
    known = {a.dest: a for a in subparser._actions if a.option_strings}
    given = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    explicit = {a.dest for a in known.values() if given & set(a.option_strings)}
    prefix = []
    for key, value in values.items():
        if key not in known or key in _NOT_CONFIGURABLE:
            subparser.error(f"argument --config: unknown key {key!r}")
        action = known[key]
        if key in explicit or any(
            action in g._group_actions and explicit & {a.dest for a in g._group_actions}
            for g in subparser._mutually_exclusive_groups
        ):
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if str(value).lower() in ("true", "1", "yes"):
                prefix.append(flag)
            continue
        if value is None and action.dest != "R":
            continue
        text = _config_argv(value)
        if text is not None:
            prefix += [flag, text]
    # config values pass through the same validation as flags
    at = argv.index(command) + 1
    return parser.parse_args(argv[:at] + prefix + argv[at:])


def _resolved(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIGURABLE}


def _write(path: str | None, text: str, args: argparse.Namespace, outputs: list[str]):
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    outputs.append(path)


def _write_manifests(args: argparse.Namespace, outputs: list[str]):
    manifest = {
        "tool": "nested-switch",
        "version": __version__,
        "subcommand": args.command,
        "seed": getattr(args, "seed", None),
        "config": _resolved(args),
        "outputs": outputs,
    }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    for path in outputs:
        Path(path + ".manifest.json").write_text(text)


# --- subcommands -------------------------------------------------------------


def _cmd_topology(args, outputs):
    topo = apply_failures(build_nested(args.d), args.failed)
    if args.format == "json":
        data = {
            "d": topo.d,
            "failed": sorted(topo.failed),
            "edges": [[e.u, e.v, e.kind.value, e.k] for e in sorted(topo.surviving_nested_edges)],
        }
        if args.hypercube:
            data["hypercube_edges"] = [[e.u, e.v, e.kind.value, e.k] for e in sorted(topo.surviving_hypercube_edges)]
        _write(args.out, json.dumps(data) + "\n", args, outputs)
    else:
        _write(args.out, topo.to_edge_list(args.hypercube), args, outputs)


_METRIC_COLUMNS = ("requested", "served", "served_fraction", "mean_path_length", "max_edge_load")


def _cmd_route(args, outputs):
    topo = build_nested(args.d)
    rng = np.random.default_rng(args.seed)
    if args.matching:
        m = Matching.from_text(Path(args.matching).read_text())
    else:
        m = random_perfect_matching(topo.surviving, rng)
    plan = route_matching(topo, m, args.R, args.k, rng)
    metrics = plan_metrics(plan)
    row = [getattr(metrics, c) for c in _METRIC_COLUMNS]
    row = ["" if v is None else v for v in row]
    csv_text = to_csv(f"route d={args.d} R={args.R} k={args.k} seed={args.seed}", _METRIC_COLUMNS, [row])
    if args.format == "json":
        data = plan.to_dict()
        data["metrics"] = dict(zip(_METRIC_COLUMNS, row))
        data["metrics"]["edge_load_histogram"] = {str(k): v for k, v in metrics.edge_load_histogram.items()}
        _write(args.out, json.dumps(data, indent=1) + "\n", args, outputs)
    else:
        _write(args.out, csv_text, args, outputs)
    if args.metrics:
        _write(args.metrics, csv_text, args, outputs)


def _table_output(args, outputs, rows, csv_text, plot_spec):
    if args.format == "json":
        _write(args.out, json.dumps(rows, indent=1) + "\n", args, outputs)
    else:
        _write(args.out, csv_text, args, outputs)
    if getattr(args, "svg", None):
        _write(args.svg, emit_svg(rows, plot_spec), args, outputs)


def _cmd_sweep_failures(args, outputs):
    config = ExperimentConfig(d=args.d, R=args.R, k=args.k, trials=args.trials, x_values=args.x, seed=args.seed)
    rows = failure_sweep(config, workers=args.threads)
    dict_rows = [vars_row(r) for r in rows]
    _table_output(args, outputs, dict_rows, failure_sweep_csv(config, rows), FAILURE_PLOT)
    if args.hops_svg:
        _write(args.hops_svg, emit_svg(dict_rows, HOPS_PLOT), args, outputs)


def _cmd_edge_load(args, outputs):
    config = ExperimentConfig(d=args.d, R=args.R, k=args.k, trials=args.trials, x_values=(args.x,), seed=args.seed)
    dist = load_distribution(config, x=args.x, workers=args.threads)
    rows = [{"load": k, "probability": v} for k, v in dist.items()]
    _table_output(args, outputs, rows, load_distribution_csv(config, dist), LOAD_PLOT)


def _check_range(args):
    if args.d_min > args.d_max:
        raise ConfigError(f"argument --d-max: {args.d_max} is below --d-min {args.d_min}")


def _cmd_scaling(args, outputs):
    _check_range(args)
    d_range = range(args.d_min, args.d_max + 1)
    rows = scaling_sweep(d_range, args.trials, args.seed, k=args.k, workers=args.threads)
    _table_output(args, outputs, [vars_row(r) for r in rows],
                  scaling_csv(d_range, args.trials, args.seed, args.k, rows), SCALING_PLOT)


def _cmd_graphstate(args, outputs):
    if args.d_min < 2:
        raise ConfigError("argument --d-min: graph-state capacity needs d >= 2")
    _check_range(args)
    d_range = range(args.d_min, args.d_max + 1)
    rows = capacity_sweep(d_range, args.trials, args.seed, workers=args.threads)
    csv_text = to_csv(
        f"graphstate d=[{args.d_min}..{args.d_max}] trials={args.trials} seed={args.seed}",
        CAPACITY_COLUMNS,
        ((r.n, r.mean_S, r.stderr, r.theoretical) for r in rows),
    )
    _table_output(args, outputs, [vars_row(r) for r in rows], csv_text, CAPACITY_PLOT)


def _cmd_fidelity(args, outputs):
    if args.T <= 0:
        raise ConfigError("argument --T: must be > 0")
    params = WernerParams.from_times(args.p0, args.p_swap, args.t, args.T)
    L = args.L if args.L is not None else hops_for_network(args.n)
    rows = [vars_row(end_to_end(params, ell)) for ell in range(1, L + 1)]
    comment = f"fidelity p0={args.p0} p_swap={args.p_swap} t={args.t} T={args.T} p_mem={params.p_mem!r}"
    if args.n is not None:
        comment += f" n={args.n}"
    csv_text = to_csv(comment, ("L", "p_L", "F_L"), ((r["L"], r["p_L"], r["F_L"]) for r in rows))
    _table_output(args, outputs, rows, csv_text, FIDELITY_PLOT)


def vars_row(row) -> dict:
    import dataclasses

    return dataclasses.asdict(row)


COMMANDS = {
    "topology": _cmd_topology,
    "route": _cmd_route,
    "sweep-failures": _cmd_sweep_failures,
    "edge-load": _cmd_edge_load,
    "max-load-scaling": _cmd_scaling,
    "graphstate": _cmd_graphstate,
    "fidelity": _cmd_fidelity,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    outputs: list[str] = []
    try:
        COMMANDS[args.command](args, outputs)
    except ConfigError as exc:
        print(f"nested-switch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"nested-switch {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if outputs:
        _write_manifests(args, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
