"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every command writes one JSON document (schema ``npsig/1``) that embeds the
resolved configuration, or a flattened ``key,value`` CSV with ``--format csv``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from typing import Any, Sequence

import numpy as np

from . import __version__
from .dataset import Dataset, load_csv, split_columns
from .errors import DataError, NumericError
from .kernel_regression import Bandwidth
from .screening import screen
from .selection import SelectionConfig, backward_eliminate, selection_frequencies, test_variable
from .simulation import (
    SCENARIOS,
    ScenarioSpec,
    TestConfig,
    run_rejection_study,
    run_selection_study,
)
from .sir import SirConfig, sir_fit
from .window_anova import anova_test

SCHEMA = "npsig/1"
SELECTION_SCENARIOS = tuple(s for s in SCENARIOS if s.startswith(("table4", "table5")))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _odd_cell(text: str) -> int:
    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--p must be an integer, got {text!r}") from None
    if p < 3 or p % 2 == 0:
        raise argparse.ArgumentTypeError(f"--p must be an odd integer >= 3, got {p}")
    return p


def _unit(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"value must lie in [0, 1], got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"--seed must be non-negative, got {v}")
    return v


def _bandwidth(text: str) -> str | tuple[float, ...]:
    if text == "auto":
        return "auto"
    try:
        lam = tuple(float(t) for t in text.split(","))
        Bandwidth(lam)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--bandwidth must be 'auto' or comma-separated positive numbers, got {text!r}"
        ) from None
    return lam


def _sweep(text: str) -> range:
    try:
        lo, hi = (int(t) for t in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--slices-sweep expects LO..HI, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise argparse.ArgumentTypeError(f"--slices-sweep needs 2 <= LO <= HI, got {text!r}")
    return range(lo, hi + 1)


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("NPSIG_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="npsig", description="Nonparametric covariate significance tests and selection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", required=True, help="input CSV with a header row")
        p.add_argument("--response", required=True, help="name of the response column")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--p", type=_odd_cell, default=9, help="window (cell) size, odd >= 3")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    def model(p: argparse.ArgumentParser) -> None:
        p.add_argument("--no-sir", action="store_true", help="adjust for raw columns, no SIR reduction")
        p.add_argument("--slices", type=_positive_int, default=10, help="SIR slice count")
        p.add_argument("--estimator", choices=("nw", "mi"), default="nw")
        p.add_argument("--bandwidth", type=_bandwidth, default="auto")

    t = sub.add_parser("test", help="test one covariate")
    data_args(t)
    t.add_argument("--test-var", required=True, help="column to test")
    common(t)
    model(t)

    s = sub.add_parser("screen", help="marginal screening of every covariate")
    data_args(s)
    s.add_argument("--screen-threshold", type=_unit, default=0.5)
    common(s)

    sel = sub.add_parser("select", help="backward-elimination variable selection")
    data_args(sel)
    sel.add_argument("--alpha", type=_unit, default=0.06)
    sel.add_argument("--screen-threshold", type=_unit, default=0.5)
    sel.add_argument("--no-screen", action="store_true")
    sel.add_argument("--slices-sweep", type=_sweep, help="repeat selection for SIR slice counts LO..HI")
    common(sel)
    model(sel)

    r = sub.add_parser("sir", help="inspect the SIR directions")
    data_args(r)
    r.add_argument("--slices", type=_positive_int, default=10)
    r.add_argument("--out")
    r.add_argument("--format", choices=("json", "csv"), default="json")

    sim = sub.add_parser("simulate", help="Monte Carlo reproduction of a simulation scenario")
    sim.add_argument("--scenario", required=True, choices=SCENARIOS)
    sim.add_argument("--runs", type=_positive_int, required=True)
    sim.add_argument("--seed", type=_seed, required=True)
    sim.add_argument("--n", type=_positive_int)
    sim.add_argument("--theta", type=float)
    sim.add_argument("--gamma", type=float)
    sim.add_argument("--level", type=_unit, default=0.05)
    sim.add_argument("--alpha", type=_unit, default=0.06)
    sim.add_argument("--screen-threshold", type=_unit, default=0.5)
    sim.add_argument("--no-screen", action="store_true")
    sim.add_argument("--threads", type=_positive_int, default=_default_threads())
    common(sim)
    model(sim)
    return parser


def _selection_config(args: argparse.Namespace) -> SelectionConfig:
    return SelectionConfig(
        alpha=getattr(args, "alpha", 0.06),
        p=args.p,
        screen=not getattr(args, "no_screen", False),
        screen_threshold=getattr(args, "screen_threshold", 0.5),
        sir=not args.no_sir,
        sir_config=SirConfig(args.slices),
        estimator=args.estimator,
        bandwidth=args.bandwidth,
    )


def _load(args: argparse.Namespace) -> Dataset:
    ds = load_csv(args.data, args.response)
    if np.ptp(ds.y) == 0:
        raise NumericError(f"degenerate data: response column {args.response!r} is constant")
    return ds


def _config(args: argparse.Namespace) -> dict:
    skip = {"out", "format", "threads"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, range):
            v = f"{v.start}..{v.stop - 1}"
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def cmd_test(args: argparse.Namespace) -> dict:
    ds = _load(args)
    j = ds.index(args.test_var)
    cfg = _selection_config(args)
    if args.no_sir or ds.d == 1:
        res = anova_test(ds, split_columns(ds, j), args.p, args.bandwidth, args.estimator)
    else:
        res = test_variable(ds, sir_fit(ds, cfg.sir_config), j, cfg)
    return {"test_var": args.test_var, **res.to_dict()}


def cmd_screen(args: argparse.Namespace) -> dict:
    ds = _load(args)
    return screen(ds, args.p, args.screen_threshold).to_dict(ds.names)


def cmd_select(args: argparse.Namespace) -> dict:
    ds = _load(args)
    cfg = _selection_config(args)
    if args.slices_sweep is not None:
        if args.no_sir:
            raise UsageError("--slices-sweep requires SIR (drop --no-sir)")
        return selection_frequencies(ds, cfg, args.slices_sweep)
    return backward_eliminate(ds, cfg).to_dict()


def cmd_sir(args: argparse.Namespace) -> dict:
    ds = _load(args)
    return sir_fit(ds, SirConfig(args.slices)).to_dict(ds.names)


def cmd_simulate(args: argparse.Namespace) -> dict:
    spec = ScenarioSpec(args.scenario, args.n, args.theta, args.gamma)
    if args.scenario in SELECTION_SCENARIOS:
        rep = run_selection_study(spec, args.runs, _selection_config(args), args.seed, args.threads)
    else:
        test = TestConfig(args.p, args.estimator, args.bandwidth)
        rep = run_rejection_study(spec, args.runs, args.level, test, args.seed, args.threads)
    return rep.to_dict()


COMMANDS = {
    "test": cmd_test,
    "screen": cmd_screen,
    "select": cmd_select,
    "sir": cmd_sir,
    "simulate": cmd_simulate,
}


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        rows = []
        for k, v in obj.items():
            rows += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        rows = []
        for i, v in enumerate(obj):
            rows += _flatten(v, f"{prefix}.{i}")
        return rows
    if isinstance(obj, list):
        return [(prefix, ";".join(str(v) for v in obj))]
    return [(prefix, obj)]


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(_flatten(report))
    return buf.getvalue()


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"npsig: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"npsig: data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"npsig: numeric failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"npsig: data error: {exc}", file=sys.stderr)
        return 2
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "result": result,
    }
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
