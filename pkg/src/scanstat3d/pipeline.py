"""Cascade approximation of the scan-statistic CDF with full error budgets.

The whole-region probability P(S <= n) is assembled in three extrapolation
steps from eight base probabilities Q_rts (r, t, s in {2, 3}), each the
no-exceedance probability over a reduced region of r(m1-1) x t(m2-1) x
s(m3-1) cells.  The importance-sampling estimator supplies the Q_rts with
95% half-widths; this module folds them through the extrapolation, assembles
the approximation-error and simulation-error budgets, and exposes the
interpolated variant for regions whose extents are not multiples of m_j - 1,
plus critical-value search on top of either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bounds import (
    L_RULE_SMALLEST,
    extrapolate_max_cdf,
    extrapolate_max_cdf_raw,
    f_factor,
)
from .distributions import DistributionModel, window_aggregate_distribution
from .errors import BoundValidityError, ParameterError, UnreachableSignificanceError
from .estimator import STEP4_TAU, QEstimate, estimate_q
from .scanning import ScanGeometry

RTS_KEYS = tuple(
    (r, t, s) for r in (2, 3) for t in (2, 3) for s in (2, 3)
)  # lexicographic: 222, 223, 232, 233, 322, 323, 332, 333

ALPHA_GATE = 0.1
Q1_GATE = 0.9


@dataclass(frozen=True)
class PipelineConfig:
    """Estimation and bound-evaluation knobs (defaults match the reference
    setting: 1e5 importance-sampling iterations, 1e3 naive repetitions)."""

    iterations: int = 100_000
    repetitions: int = 1_000
    seed: int = 0
    workers: int = 1
    squared_delta22: bool = True
    step4_threshold: str = STEP4_TAU
    monotone_enforce: bool = True
    l_rule: str = L_RULE_SMALLEST


@dataclass(frozen=True)
class QTable:
    """The eight base-probability estimates plus monotone-enforced values."""

    entries: dict[tuple[int, int, int], QEstimate]
    values: dict[tuple[int, int, int], float]

    @classmethod
    def from_entries(
        cls, entries: dict[tuple[int, int, int], QEstimate], enforce: bool
    ) -> "QTable":
        if set(entries) != set(RTS_KEYS):
            raise ParameterError(f"QTable needs all eight (r,t,s) keys, got {sorted(entries)}")
        values = {k: entries[k].value for k in RTS_KEYS}
        if enforce:
            # Larger region on any axis cannot have a larger CDF value.
            for t in (2, 3):
                for s in (2, 3):
                    values[3, t, s] = min(values[3, t, s], values[2, t, s])
            for r in (2, 3):
                for s in (2, 3):
                    values[r, 3, s] = min(values[r, 3, s], values[r, 2, s])
            for r in (2, 3):
                for t in (2, 3):
                    values[r, t, 3] = min(values[r, t, 3], values[r, t, 2])
        return cls(entries=entries, values=values)

    def beta(self, r: int, t: int, s: int) -> float:
        return self.entries[r, t, s].beta

    def value(self, r: int, t: int, s: int) -> float:
        return self.values[r, t, s]


@dataclass(frozen=True)
class CascadeValues:
    """Intermediate extrapolations: window -> slab -> plane -> region."""

    gamma_ts: dict[tuple[int, int], float]
    gamma_s: dict[int, float]
    point: float
    point_raw: float


def cascade_point(q: QTable, levels: tuple[int, int, int]) -> CascadeValues:
    """Fold the eight base probabilities through the three extrapolation steps."""
    l1, l2, l3 = levels
    if min(levels) < 3:
        raise ParameterError(f"cascade ratios must be >= 3, got {levels}")
    gamma_ts = {
        (t, s): extrapolate_max_cdf(q.value(2, t, s), q.value(3, t, s), l1)
        for t in (2, 3)
        for s in (2, 3)
    }
    gamma_s = {
        s: extrapolate_max_cdf(gamma_ts[2, s], gamma_ts[3, s], l2) for s in (2, 3)
    }
    point_raw = extrapolate_max_cdf_raw(gamma_s[2], gamma_s[3], l3)
    point = extrapolate_max_cdf(gamma_s[2], gamma_s[3], l3)
    return CascadeValues(gamma_ts=gamma_ts, gamma_s=gamma_s, point=point, point_raw=point_raw)


@dataclass(frozen=True)
class ErrorBudget:
    """Every intermediate of the approximation- and simulation-error bounds."""

    gamma_ts: dict[tuple[int, int], float]
    gamma_s: dict[int, float]
    point: float
    alpha3: float
    alpha23: float
    alpha233: float
    F1: float = math.nan
    F2: float = math.nan
    F3: float = math.nan
    delta_22: float = math.nan
    delta_23: float = math.nan
    delta_2: float = math.nan
    u_rts: dict[tuple[int, int, int], float] = field(default_factory=dict)
    u_ts: dict[tuple[int, int], float] = field(default_factory=dict)
    u_s: dict[int, float] = field(default_factory=dict)
    delta_bar_22: float = math.nan
    delta_bar_23: float = math.nan
    delta_bar_2: float = math.nan
    E_app: float = math.inf
    E_sf: float = math.inf
    E_sapp: float = math.inf
    E_sim: float = math.inf
    total: float = math.inf


def _check_gates(q: QTable, cascade: CascadeValues) -> str | None:
    """First failing validity gate (innermost level first), or None."""
    alpha233 = 1.0 - q.value(2, 3, 3)
    if alpha233 > ALPHA_GATE or min(q.value(2, t, s) for t in (2, 3) for s in (2, 3)) < Q1_GATE:
        return (
            f"level 3: 1 - Q[2,3,3] = {alpha233:.6g} exceeds {ALPHA_GATE}"
            if alpha233 > ALPHA_GATE
            else "level 3: some Q[2,t,s] below 0.9"
        )
    alpha23 = 1.0 - cascade.gamma_ts[2, 3]
    if alpha23 > ALPHA_GATE or min(cascade.gamma_ts[2, s] for s in (2, 3)) < Q1_GATE:
        return (
            f"level 2: 1 - gamma[2,3] = {alpha23:.6g} exceeds {ALPHA_GATE}"
            if alpha23 > ALPHA_GATE
            else "level 2: some gamma[2,s] below 0.9"
        )
    alpha3 = 1.0 - cascade.gamma_s[3]
    if alpha3 > ALPHA_GATE or cascade.gamma_s[2] < Q1_GATE:
        return (
            f"level 1: 1 - gamma[3] = {alpha3:.6g} exceeds {ALPHA_GATE}"
            if alpha3 > ALPHA_GATE
            else "level 1: gamma[2] below 0.9"
        )
    return None


def error_budget(
    q: QTable,
    levels: tuple[int, int, int],
    cascade: CascadeValues,
    *,
    squared_delta22: bool = True,
    l_rule: str = L_RULE_SMALLEST,
) -> tuple[ErrorBudget, str | None]:
    """Assemble both error budgets; on a gate failure return infinite bounds
    together with the failing level's description."""
    l1, l2, l3 = levels
    alpha233 = 1.0 - q.value(2, 3, 3)
    alpha23 = 1.0 - cascade.gamma_ts[2, 3]
    alpha3 = 1.0 - cascade.gamma_s[3]
    base = dict(
        gamma_ts=cascade.gamma_ts,
        gamma_s=cascade.gamma_s,
        point=cascade.point,
        alpha3=alpha3,
        alpha23=alpha23,
        alpha233=alpha233,
    )
    failure = _check_gates(q, cascade)
    if failure is not None:
        return ErrorBudget(**base), failure
    try:
        f3 = f_factor(alpha233, l1 - 1, l_rule=l_rule)
        f2 = f_factor(alpha23, l2 - 1, l_rule=l_rule)
        f1 = f_factor(alpha3, l3 - 1, l_rule=l_rule)
    except BoundValidityError as exc:
        return ErrorBudget(**base), f"error factor not evaluable: {exc}"

    sq = (lambda d: d * d) if squared_delta22 else (lambda d: d)

    # Approximation error: plug-in hatted quantities.
    delta_2s = {
        s: (1.0 - cascade.gamma_ts[2, s]) + (l1 - 1) * f3 * (1.0 - q.value(2, 2, s)) ** 2
        for s in (2, 3)
    }
    delta_2 = (
        (1.0 - cascade.gamma_s[2])
        + (l2 - 1) * f2 * sq(delta_2s[2])
        + (l2 - 2) * (l1 - 1) * f3 * ((1.0 - q.value(2, 2, 2)) ** 2 + (1.0 - q.value(2, 3, 2)) ** 2)
    )
    e_app = (
        (l3 - 1) * f1 * delta_2**2
        + (l3 - 2) * (l2 - 1) * f2 * (delta_2s[2] ** 2 + delta_2s[3] ** 2)
        + (l3 - 2)
        * (l2 - 2)
        * (l1 - 1)
        * f3
        * sum((1.0 - q.value(2, t, s)) ** 2 for t in (2, 3) for s in (2, 3))
    )

    # Simulation error: the direct propagation term plus the inflated budget.
    e_sf = (l1 - 2) * (l2 - 2) * (l3 - 2) * sum(q.beta(*k) for k in RTS_KEYS)
    u_rts = {k: (1.0 - q.value(*k)) + q.beta(*k) for k in RTS_KEYS}
    u_ts = {
        (t, s): (1.0 - cascade.gamma_ts[t, s]) + (l1 - 2) * (q.beta(2, t, s) + q.beta(3, t, s))
        for t in (2, 3)
        for s in (2, 3)
    }
    u_s = {
        s: (1.0 - cascade.gamma_s[s])
        + (l1 - 2) * (l2 - 2) * sum(q.beta(r, t, s) for r in (2, 3) for t in (2, 3))
        for s in (2, 3)
    }
    delta_bar_2s = {s: u_ts[2, s] + (l1 - 1) * f3 * u_rts[2, 2, s] ** 2 for s in (2, 3)}
    delta_bar_2 = (
        u_s[2]
        + (l2 - 1) * f2 * sq(delta_bar_2s[2])
        + (l2 - 2) * (l1 - 1) * f3 * (u_rts[2, 2, 2] ** 2 + u_rts[2, 3, 2] ** 2)
    )
    e_sapp = (
        (l3 - 1) * f1 * delta_bar_2**2
        + (l3 - 2) * (l2 - 1) * f2 * (delta_bar_2s[2] ** 2 + delta_bar_2s[3] ** 2)
        + (l3 - 2)
        * (l2 - 2)
        * (l1 - 1)
        * f3
        * sum(u_rts[2, t, s] ** 2 for t in (2, 3) for s in (2, 3))
    )
    e_sim = e_sf + e_sapp
    budget = ErrorBudget(
        **base,
        F1=f1,
        F2=f2,
        F3=f3,
        delta_22=delta_2s[2],
        delta_23=delta_2s[3],
        delta_2=delta_2,
        u_rts=u_rts,
        u_ts=u_ts,
        u_s=u_s,
        delta_bar_22=delta_bar_2s[2],
        delta_bar_23=delta_bar_2s[3],
        delta_bar_2=delta_bar_2,
        E_app=e_app,
        E_sf=e_sf,
        E_sapp=e_sapp,
        E_sim=e_sim,
        total=e_app + e_sim,
    )
    return budget, None


@dataclass(frozen=True)
class ApproxReport:
    """Point approximation of P(S <= n) with its full error budget."""

    region: tuple[int, int, int]
    window: tuple[int, int, int]
    model: DistributionModel
    n: int
    levels: tuple[int, int, int]
    point: float
    point_raw: float
    e_app: float
    e_sf: float
    e_sapp: float
    e_sim: float
    total: float
    applicable: bool
    gate_failure: str | None
    q_table: QTable
    budget: ErrorBudget
    iterations: int
    seed: int
    config: PipelineConfig


def estimate_q_table(
    window: tuple[int, int, int],
    model: DistributionModel,
    n: int,
    config: PipelineConfig,
    *,
    stream_salt: int = 0,
) -> QTable:
    """Run the eight base-probability estimations."""
    entries = {}
    for r, t, s in RTS_KEYS:
        entries[r, t, s] = estimate_q(
            r,
            t,
            s,
            window,
            model,
            n,
            config.iterations,
            config.seed,
            workers=config.workers,
            step4_threshold=config.step4_threshold,
            stream_salt=stream_salt,
        )
    return QTable.from_entries(entries, enforce=config.monotone_enforce)


def _assemble_report(
    region: tuple[int, int, int],
    window: tuple[int, int, int],
    model: DistributionModel,
    n: int,
    levels: tuple[int, int, int],
    q: QTable,
    config: PipelineConfig,
) -> ApproxReport:
    cascade = cascade_point(q, levels)
    budget, failure = error_budget(
        q,
        levels,
        cascade,
        squared_delta22=config.squared_delta22,
        l_rule=config.l_rule,
    )
    return ApproxReport(
        region=tuple(region),
        window=tuple(window),
        model=model,
        n=n,
        levels=levels,
        point=cascade.point,
        point_raw=cascade.point_raw,
        e_app=budget.E_app,
        e_sf=budget.E_sf,
        e_sapp=budget.E_sapp,
        e_sim=budget.E_sim,
        total=budget.total,
        applicable=failure is None,
        gate_failure=failure,
        q_table=q,
        budget=budget,
        iterations=config.iterations,
        seed=config.seed,
        config=config,
    )


def approximate_cdf(
    geometry: ScanGeometry,
    model: DistributionModel,
    n: int,
    config: PipelineConfig | None = None,
    *,
    stream_salt: int = 0,
) -> ApproxReport:
    """Full pipeline for a region whose extents are multiples of m_j - 1."""
    config = config or PipelineConfig()
    levels = geometry.cascade_levels()
    q = estimate_q_table(geometry.window, model, n, config, stream_salt=stream_salt)
    return _assemble_report(geometry.region, geometry.window, model, n, levels, q, config)


@dataclass(frozen=True)
class InterpolatedReport:
    """Bracketed approximation for non-divisible region extents.

    ``upper`` comes from the floored ratios L, ``lower`` from L + 1; the
    interpolated point mixes them with weight w = mean fractional part.
    """

    region: tuple[int, int, int]
    window: tuple[int, int, int]
    model: DistributionModel
    n: int
    weight: float
    lower: ApproxReport
    upper: ApproxReport
    point: float
    bracket: tuple[float, float]
    bracket_inverted: bool
    total: float

    @property
    def applicable(self) -> bool:
        return self.lower.applicable and self.upper.applicable


def interpolated_cdf(
    geometry: ScanGeometry,
    model: DistributionModel,
    n: int,
    config: PipelineConfig | None = None,
) -> InterpolatedReport:
    """Linear interpolation between the floored-ratio and next-ratio pipelines."""
    config = config or PipelineConfig()
    levels, fracs = geometry.floor_levels()
    if min(levels) < 4:
        raise ParameterError(
            f"floored cascade ratios {levels} must be >= 4 for the interpolated pipeline"
        )
    window = geometry.window
    upper_region = tuple(l * (m - 1) for l, m in zip(levels, window))
    lower_region = tuple((l + 1) * (m - 1) for l, m in zip(levels, window))
    upper = approximate_cdf(ScanGeometry(upper_region, window), model, n, config, stream_salt=1)
    if upper_region == tuple(geometry.region):
        lower = upper
        weight = 0.0
    else:
        lower = approximate_cdf(ScanGeometry(lower_region, window), model, n, config, stream_salt=2)
        weight = sum(fracs) / 3.0
    point = (1.0 - weight) * upper.point + weight * lower.point
    bracket = (min(lower.point, upper.point), max(lower.point, upper.point))
    half_width = abs(upper.point - lower.point) / 2.0
    return InterpolatedReport(
        region=tuple(geometry.region),
        window=tuple(window),
        model=model,
        n=n,
        weight=weight,
        lower=lower,
        upper=upper,
        point=point,
        bracket=bracket,
        bracket_inverted=lower.point > upper.point,
        total=max(lower.total, upper.total) + half_width,
    )


@dataclass(frozen=True)
class CriticalValue:
    """Smallest threshold whose estimated null tail is within the significance."""

    tau: int
    attained: float
    method: str  # "bonferroni" when the union bound already settles it
    report: ApproxReport | InterpolatedReport | None


def critical_value(
    geometry: ScanGeometry,
    model: DistributionModel,
    significance: float,
    config: PipelineConfig | None = None,
    *,
    conservative: bool = False,
) -> CriticalValue:
    """Scan thresholds upward until the estimated tail drops below the level.

    ``conservative`` adds the total error bound to the estimated tail before
    comparing.  A threshold beyond the window support is never returned; if
    even the largest achievable total fails, the significance is unreachable.
    """
    config = config or PipelineConfig()
    if not 0.0 < significance <= 1.0:
        raise ParameterError(f"significance must lie in (0, 1], got {significance}")
    geometry.require_standing()
    agg = window_aggregate_distribution(model, geometry.window)
    n_origins = geometry.n_origins
    if agg.support_max is not None:
        cap = agg.support_max
    else:
        from .distributions import _upper_cut

        cap = _upper_cut(agg.frozen, significance / n_origins) + 2

    divisible = all(t % (m - 1) == 0 for t, m in zip(geometry.region, geometry.window))
    for tau in range(1, cap + 1):
        single = agg.tail_prob(tau)
        if single > significance:
            continue  # the tail is at least the single-window probability
        bonferroni = n_origins * single
        if bonferroni <= significance:
            return CriticalValue(tau=tau, attained=bonferroni, method="bonferroni", report=None)
        if divisible:
            report = approximate_cdf(geometry, model, tau - 1, config)
        else:
            report = interpolated_cdf(geometry, model, tau - 1, config)
        tail = 1.0 - report.point
        if conservative:
            tail += report.total
        if tail <= significance and tail < 1.0:
            return CriticalValue(tau=tau, attained=tail, method="pipeline", report=report)
    raise UnreachableSignificanceError(
        f"no threshold up to {cap} attains significance {significance:g}"
    )


def scan_cdf_reports(
    geometry: ScanGeometry,
    model: DistributionModel,
    n_values: list[int],
    config: PipelineConfig | None = None,
) -> list[ApproxReport | InterpolatedReport]:
    """Reports for a range of levels, choosing the exact or interpolated path."""
    config = config or PipelineConfig()
    divisible = all(t % (m - 1) == 0 for t, m in zip(geometry.region, geometry.window))
    out = []
    for n in n_values:
        if divisible:
            out.append(approximate_cdf(geometry, model, n, config))
        else:
            out.append(interpolated_cdf(geometry, model, n, config))
    return out
