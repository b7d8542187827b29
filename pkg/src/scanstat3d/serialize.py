"""Machine-readable renderings of pipeline reports (JSON documents, CSV rows).

Output is deterministic for a fixed configuration: no wall-clock fields, fixed
key order, round-trippable float formatting.
"""

from __future__ import annotations

import math
from typing import Any

from .pipeline import ApproxReport, InterpolatedReport, RTS_KEYS

CSV_HEADER = (
    "n,point,e_app,e_sim,total,"
    "q222,q223,q232,q233,q322,q323,q332,q333,"
    "beta222,beta223,beta232,beta233,beta322,beta323,beta332,beta333,"
    "seed,iterations"
)


def _num(x: float | None) -> float | None:
    """JSON-safe number: non-finite becomes None."""
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def q_table_dict(report: ApproxReport) -> dict[str, Any]:
    values = {}
    betas = {}
    raws = {}
    for key in RTS_KEYS:
        name = "".join(str(i) for i in key)
        est = report.q_table.entries[key]
        values[name] = report.q_table.values[key]
        betas[name] = est.beta
        raws[name] = est.value_raw
    return {"values": values, "betas": betas, "raw_values": raws}


def report_to_dict(report: ApproxReport | InterpolatedReport) -> dict[str, Any]:
    if isinstance(report, InterpolatedReport):
        return {
            "kind": "interpolated",
            "n": report.n,
            "region": list(report.region),
            "window": list(report.window),
            "model": report.model.describe(),
            "point": _num(report.point),
            "weight": report.weight,
            "bracket": [_num(report.bracket[0]), _num(report.bracket[1])],
            "bracket_inverted": report.bracket_inverted,
            "total": _num(report.total),
            "applicable": report.applicable,
            "lower": report_to_dict(report.lower),
            "upper": report_to_dict(report.upper),
        }
    budget = report.budget
    return {
        "kind": "exact",
        "n": report.n,
        "region": list(report.region),
        "window": list(report.window),
        "model": report.model.describe(),
        "levels": list(report.levels),
        "point": _num(report.point),
        "point_raw": _num(report.point_raw),
        "e_app": _num(report.e_app),
        "e_sf": _num(report.e_sf),
        "e_sapp": _num(report.e_sapp),
        "e_sim": _num(report.e_sim),
        "total": _num(report.total),
        "applicable": report.applicable,
        "gate_failure": report.gate_failure,
        "q": q_table_dict(report),
        "diagnostics": {
            "gamma_ts": {f"{t}{s}": budget.gamma_ts[t, s] for t in (2, 3) for s in (2, 3)},
            "gamma_s": {str(s): budget.gamma_s[s] for s in (2, 3)},
            "alpha3": _num(budget.alpha3),
            "alpha23": _num(budget.alpha23),
            "alpha233": _num(budget.alpha233),
            "F1": _num(budget.F1),
            "F2": _num(budget.F2),
            "F3": _num(budget.F3),
            "delta_22": _num(budget.delta_22),
            "delta_23": _num(budget.delta_23),
            "delta_2": _num(budget.delta_2),
            "delta_bar_22": _num(budget.delta_bar_22),
            "delta_bar_23": _num(budget.delta_bar_23),
            "delta_bar_2": _num(budget.delta_bar_2),
        },
        "seed": report.seed,
        "iterations": report.iterations,
    }


def report_csv_row(report: ApproxReport | InterpolatedReport) -> str:
    """One CSV row per level; interpolated reports expose the floored-ratio
    (upper bracket) base probabilities."""
    if isinstance(report, InterpolatedReport):
        base = report.upper
        point = report.point
        e_app = base.e_app
        e_sim = base.e_sim
        total = report.total
    else:
        base = report
        point = report.point
        e_app = report.e_app
        e_sim = report.e_sim
        total = report.total
    cells = [str(report.n), _fmt(point), _fmt(e_app), _fmt(e_sim), _fmt(total)]
    cells += [_fmt(base.q_table.values[k]) for k in RTS_KEYS]
    cells += [_fmt(base.q_table.entries[k].beta) for k in RTS_KEYS]
    cells += [str(base.seed), str(base.iterations)]
    return ",".join(cells)


def _fmt_or_inf(x: float) -> str:
    return _fmt(x) if x is not None else ""


def report_text(report: ApproxReport | InterpolatedReport) -> list[str]:
    """Human-readable block, one list entry per line."""
    if isinstance(report, InterpolatedReport):
        lines = [
            f"n={report.n}  interpolated point={report.point:.8f}  "
            f"bracket=[{report.bracket[0]:.8f}, {report.bracket[1]:.8f}]"
            + ("  (inverted)" if report.bracket_inverted else ""),
            f"    weight={report.weight:.6f}  total_error={report.total:.8f}",
        ]
        if not report.applicable:
            lines.append(f"    NOT APPLICABLE: {report.lower.gate_failure or report.upper.gate_failure}")
        return lines
    lines = [
        f"n={report.n}  point={report.point:.8f}  "
        f"E_app={report.e_app:.8f}  E_sim={report.e_sim:.8f}  total={report.total:.8f}"
        if report.applicable
        else f"n={report.n}  point={report.point:.8f}  error bounds not applicable",
    ]
    if not report.applicable:
        lines.append(f"    gate: {report.gate_failure}")
    return lines
