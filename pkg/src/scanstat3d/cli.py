"""Command-line interface: approximation, naive simulation, critical values,
and reproduction of the published benchmark tables.

Exit codes: 0 success; 1 usage or parameter error; 2 bound not applicable
(reports are still emitted with gate diagnostics) or significance unreachable;
3 published-table regression outside tolerance.

The data stream (stdout) is byte-deterministic for a fixed configuration and
seed; progress and timing go to stderr only when --progress is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .bounds import L_RULES, L_RULE_SMALLEST
from .distributions import DistributionModel
from .errors import ScanStatError, UnreachableSignificanceError
from .estimator import STEP4_SAMPLED, STEP4_TAU, naive_scan_estimate
from .pipeline import (
    ApproxReport,
    InterpolatedReport,
    PipelineConfig,
    critical_value,
    scan_cdf_reports,
)
from .scanning import ScanGeometry
from .serialize import CSV_HEADER, report_csv_row, report_text, report_to_dict
from .tables import TABLES, run_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INAPPLICABLE = 2
EXIT_REGRESSION = 3

SEED_ENV_VAR = "SCAN3D_SEED"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def parse_model(text: str) -> DistributionModel:
    """Parse 'bernoulli:p=0.01', 'binomial:m=10,p=0.0025', 'poisson:lambda=0.025'."""
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    params: dict[str, float] = {}
    if args:
        for item in args.split(","):
            key, _, value = item.partition("=")
            try:
                params[key.strip().lower()] = float(value)
            except ValueError:
                raise _UsageError(f"malformed model parameter {item!r}") from None
    try:
        if kind == "bernoulli":
            return DistributionModel.bernoulli(params["p"])
        if kind == "binomial":
            trials = params.get("m", params.get("trials"))
            if trials is None:
                raise KeyError("m")
            return DistributionModel.binomial(int(trials), params["p"])
        if kind == "poisson":
            lam = params.get("lambda", params.get("lam"))
            if lam is None:
                raise KeyError("lambda")
            return DistributionModel.poisson(lam)
    except KeyError as exc:
        raise _UsageError(f"model {kind!r} is missing parameter {exc}") from exc
    raise _UsageError(f"unknown model kind {kind!r}")


def parse_triple(text: str) -> tuple[int, int, int]:
    parts = [p for p in text.replace("x", ",").split(",") if p.strip()]
    if len(parts) != 3:
        raise _UsageError(f"expected three comma-separated extents, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise _UsageError(f"non-integer extent in {text!r}") from None


def parse_levels(text: str) -> list[int]:
    """'5' or '1..4' (inclusive range, also accepts '1-4')."""
    text = text.strip()
    try:
        for sep in ("..", "-"):
            if sep in text[1:]:
                lo, _, hi = text.partition(sep)
                lo_i, hi_i = int(lo), int(hi)
                if hi_i < lo_i:
                    raise _UsageError(f"empty level range {text!r}")
                return list(range(lo_i, hi_i + 1))
        return [int(text)]
    except ValueError:
        raise _UsageError(f"malformed level specification {text!r}") from None


def load_config_file(path: str) -> dict[str, str]:
    """key=value lines, '#' comments; keys mirror the long option names."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise _UsageError(f"malformed config line {raw.rstrip()!r}")
            out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


_CONFIG_KEYS = {
    "model": str,
    "region": str,
    "window": str,
    "n": str,
    "iterations": int,
    "repetitions": int,
    "seed": int,
    "workers": int,
    "format": str,
    "significance": float,
    "squared_delta22": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "step4_threshold": str,
    "monotone_enforce": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "l_rule": str,
    "conservative": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def _apply_config_file(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    file_values = load_config_file(args.config)
    for key, conv in _CONFIG_KEYS.items():
        if key in file_values and getattr(args, key, None) is None:
            setattr(args, key, conv(file_values[key]))


_DEFAULTS = {
    "iterations": 100_000,
    "repetitions": 1_000,
    "seed": 0,
    "workers": 1,
    "format": "text",
    "squared_delta22": True,
    "step4_threshold": STEP4_TAU,
    "monotone_enforce": True,
    "l_rule": L_RULE_SMALLEST,
    "conservative": False,
}


def _fill_defaults(args: argparse.Namespace) -> None:
    for key, value in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        args.seed = int(env_seed)


def _add_common(p: argparse.ArgumentParser, with_geometry: bool = True) -> None:
    if with_geometry:
        p.add_argument("--model", help="bernoulli:p=… | binomial:m=…,p=… | poisson:lambda=…")
        p.add_argument("--region", help="T1,T2,T3")
        p.add_argument("--window", help="m1,m2,m3")
    p.add_argument("--iterations", type=int, help="importance-sampling iterations per base probability")
    p.add_argument("--repetitions", type=int, help="naive whole-region simulation repetitions")
    p.add_argument("--seed", type=int, help=f"master seed (env {SEED_ENV_VAR} overrides)")
    p.add_argument("--workers", type=int, help="parallel batch workers (results are worker-count invariant)")
    p.add_argument("--format", choices=("text", "csv", "json"), help="output format")
    p.add_argument("--config", help="key=value config file; explicit flags win")
    p.add_argument("--progress", action="store_true", help="progress/timing on stderr")
    p.add_argument(
        "--squared-delta22",
        dest="squared_delta22",
        action="store_const",
        const=True,
        default=None,
        help="square the second-level slack in the nested error terms (default)",
    )
    p.add_argument(
        "--no-squared-delta22",
        dest="squared_delta22",
        action="store_const",
        const=False,
        help="use the unsquared, more conservative variant",
    )
    p.add_argument("--step4-threshold", choices=(STEP4_TAU, STEP4_SAMPLED), help="exceedance threshold variant")
    p.add_argument(
        "--monotone-enforce",
        dest="monotone_enforce",
        action="store_const",
        const=True,
        default=None,
    )
    p.add_argument(
        "--no-monotone-enforce",
        dest="monotone_enforce",
        action="store_const",
        const=False,
    )
    p.add_argument("--l-rule", dest="l_rule", choices=L_RULES, help="free-parameter rule for the error factor")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scan3d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_approx = sub.add_parser("approx", help="cascade approximation of P(S <= n) with error budgets")
    _add_common(p_approx)
    p_approx.add_argument("--n", help="level or inclusive range, e.g. 6 or 1..3")

    p_sim = sub.add_parser("simulate", help="naive whole-region Monte Carlo of P(S <= n)")
    _add_common(p_sim)
    p_sim.add_argument("--n", help="level or inclusive range")

    p_crit = sub.add_parser("critical", help="smallest threshold with tail below a significance")
    _add_common(p_crit)
    p_crit.add_argument("--significance", type=float, help="target significance level in (0, 1]")
    p_crit.add_argument("--conservative", action="store_const", const=True, default=None,
                        help="add the total error bound before comparing")

    p_table = sub.add_parser("table", help="reproduce a published benchmark table")
    p_table.add_argument("table_id", type=int, choices=sorted(TABLES))
    _add_common(p_table, with_geometry=False)
    p_table.add_argument("--skip-simulated", action="store_true",
                         help="omit the whole-region simulated column")
    return parser


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        iterations=args.iterations,
        repetitions=args.repetitions,
        seed=args.seed,
        workers=args.workers,
        squared_delta22=args.squared_delta22,
        step4_threshold=args.step4_threshold,
        monotone_enforce=args.monotone_enforce,
        l_rule=args.l_rule,
    )


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise _UsageError(f"--{name.replace('_', '-')} is required")


def _progress(args, out_err, started, message):
    if args.progress:
        print(f"[{time.perf_counter() - started:8.2f}s] {message}", file=out_err, flush=True)


def _emit_json(out, document) -> None:
    json.dump(document, out, indent=2, sort_keys=False)
    out.write("\n")


def cmd_approx(args, out, out_err) -> int:
    _require(args, "model", "region", "window", "n")
    model = parse_model(args.model)
    geometry = ScanGeometry(parse_triple(args.region), parse_triple(args.window))
    levels = parse_levels(args.n)
    config = _pipeline_config(args)
    started = time.perf_counter()
    reports = []
    for n in levels:
        reports.append(scan_cdf_reports(geometry, model, [n], config)[0])
        _progress(args, out_err, started, f"n={n} done")
    status = EXIT_OK if all(r.applicable for r in reports) else EXIT_INAPPLICABLE

    if args.format == "csv":
        print(CSV_HEADER, file=out)
        for r in reports:
            print(report_csv_row(r), file=out)
    elif args.format == "json":
        points = [r.point for r in reports]
        monotone = [max(points[: i + 1]) for i in range(len(points))]
        _emit_json(
            out,
            {
                "command": "approx",
                "model": model.describe(),
                "region": list(geometry.region),
                "window": list(geometry.window),
                "seed": args.seed,
                "iterations": args.iterations,
                "reports": [report_to_dict(r) for r in reports],
                "cdf_monotone": monotone,
                "exit_status": status,
            },
        )
    else:
        for r in reports:
            for line in report_text(r):
                print(line, file=out)
    return status


def cmd_simulate(args, out, out_err) -> int:
    _require(args, "model", "region", "window", "n")
    model = parse_model(args.model)
    geometry = ScanGeometry(parse_triple(args.region), parse_triple(args.window))
    levels = parse_levels(args.n)
    started = time.perf_counter()
    rows = []
    for n in levels:
        est = naive_scan_estimate(
            geometry, model, n, args.repetitions, args.seed, workers=args.workers
        )
        rows.append((n, est))
        _progress(args, out_err, started, f"n={n} done")

    if args.format == "csv":
        print("n,p_hat,beta,repetitions,seed", file=out)
        for n, est in rows:
            print(f"{n},{est.p_hat!r},{est.beta!r},{est.repetitions},{args.seed}", file=out)
    elif args.format == "json":
        _emit_json(
            out,
            {
                "command": "simulate",
                "model": model.describe(),
                "region": list(geometry.region),
                "window": list(geometry.window),
                "seed": args.seed,
                "repetitions": args.repetitions,
                "reports": [
                    {"kind": "simulate", "n": n, "p_hat": est.p_hat, "beta": est.beta,
                     "repetitions": est.repetitions}
                    for n, est in rows
                ],
                "exit_status": EXIT_OK,
            },
        )
    else:
        for n, est in rows:
            print(f"n={n}  p_hat={est.p_hat:.8f}  beta={est.beta:.8f}", file=out)
    return EXIT_OK


def cmd_critical(args, out, out_err) -> int:
    _require(args, "model", "region", "window", "significance")
    model = parse_model(args.model)
    geometry = ScanGeometry(parse_triple(args.region), parse_triple(args.window))
    config = _pipeline_config(args)
    result = critical_value(
        geometry, model, args.significance, config, conservative=args.conservative
    )
    if args.format == "json":
        _emit_json(
            out,
            {
                "command": "critical",
                "model": model.describe(),
                "region": list(geometry.region),
                "window": list(geometry.window),
                "seed": args.seed,
                "iterations": args.iterations,
                "reports": [
                    {
                        "kind": "critical",
                        "tau": result.tau,
                        "attained": result.attained,
                        "method": result.method,
                        "significance": args.significance,
                        "conservative": bool(args.conservative),
                    }
                ],
                "exit_status": EXIT_OK,
            },
        )
    elif args.format == "csv":
        print("tau,attained,method,significance", file=out)
        print(f"{result.tau},{result.attained!r},{result.method},{args.significance!r}", file=out)
    else:
        print(
            f"critical threshold tau={result.tau}  attained_tail={result.attained:.8g}"
            f"  ({result.method})",
            file=out,
        )
    return EXIT_OK


def cmd_table(args, out, out_err) -> int:
    config = _pipeline_config(args)
    started = time.perf_counter()
    comparisons = run_table(args.table_id, config)
    _progress(args, out_err, started, "pipeline columns done")
    spec = TABLES[args.table_id]

    simulated: dict[tuple[str, int], tuple[float, float]] = {}
    if not args.skip_simulated:
        for section in spec.sections:
            geometry = ScanGeometry(section.region, section.window)
            for row in section.rows:
                level = row.label + section.level_offset
                est = naive_scan_estimate(
                    geometry, section.model, level, args.repetitions, args.seed,
                    workers=args.workers,
                )
                simulated[section.name, row.label] = (est.p_hat, est.beta)
                _progress(args, out_err, started, f"simulated {section.name} n={row.label}")

    all_within = all(c.within for c in comparisons)
    status = EXIT_OK if all_within else EXIT_REGRESSION

    if args.format == "json":
        _emit_json(
            out,
            {
                "command": "table",
                "seed": args.seed,
                "iterations": args.iterations,
                "reports": [
                    {
                        "kind": "table-row",
                        "table": args.table_id,
                        "section": c.section,
                        "row": c.label,
                        "column": c.column,
                        "computed": c.computed,
                        "published": c.published,
                        "deviation": c.deviation,
                        "tolerance": c.tolerance,
                        "within": c.within,
                    }
                    for c in comparisons
                ],
                "exit_status": status,
            },
        )
    elif args.format == "csv":
        print("table,section,row,column,computed,published,deviation,tolerance,within", file=out)
        for c in comparisons:
            print(
                f"{args.table_id},{c.section},{c.label},{c.column},{c.computed!r},"
                f"{c.published!r},{c.deviation!r},{c.tolerance!r},{int(c.within)}",
                file=out,
            )
    else:
        print(f"Table {args.table_id}: {spec.title}", file=out)
        current = None
        for c in comparisons:
            if c.section != current:
                current = c.section
                print(f"\n  [{current}]", file=out)
                print(
                    "  row   column   computed      published     |dev|        tol         ok   simulated",
                    file=out,
                )
            sim = simulated.get((c.section, c.label))
            sim_text = f"{sim[0]:.6f}±{sim[1]:.6f}" if sim and c.column == "point" else ""
            print(
                f"  {c.label:<5d} {c.column:<8s} {c.computed:<13.8f} {c.published:<13.8f} "
                f"{c.deviation:<12.3g} {c.tolerance:<11.3g} {'ok' if c.within else 'FAIL':<4s} {sim_text}",
                file=out,
            )
        print(f"\nresult: {'all rows within tolerance' if all_within else 'DEVIATIONS out of tolerance'}", file=out)
    return status


def main(argv: list[str] | None = None, out=None, out_err=None) -> int:
    out = out if out is not None else sys.stdout
    out_err = out_err if out_err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args)
        _fill_defaults(args)
        handler = {
            "approx": cmd_approx,
            "simulate": cmd_simulate,
            "critical": cmd_critical,
            "table": cmd_table,
        }[args.command]
        return handler(args, out, out_err)
    except _UsageError as exc:
        print(f"error: {exc}", file=out_err)
        return EXIT_USAGE
    except UnreachableSignificanceError as exc:
        print(f"error: {exc}", file=out_err)
        return EXIT_INAPPLICABLE
    except ScanStatError as exc:
        print(f"error: {exc}", file=out_err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
