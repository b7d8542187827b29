"""Monte Carlo estimation of scan-statistic tails.

The importance-sampling estimator writes the tail P(S >= tau) as B * rho,
where B is the Bonferroni (union) bound over all window origins and rho is
the mean of 1/C(Y) under fields conditioned to exceed the threshold in one
uniformly chosen window.  Each iteration seeds one window with a total drawn
from the renormalized tail of the window law, fills it conditionally on that
total, draws every remaining cell i.i.d., and counts the origins at or above
the threshold.

Iterations run in independently seeded batches; batch seeds derive only from
(master seed, stream tag, batch index), and batch results merge in index
order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import prod, sqrt

import numpy as np

from .distributions import (
    DistributionModel,
    _fill_flat_batch,
    _sparse_success_positions,
    window_aggregate_distribution,
)
from .errors import EmptySupportError, ParameterError
from .scanning import ScanGeometry, batch_exceedance_counts, batch_scan_statistics

CONFIDENCE_FACTOR = 1.96  # two-sided 95% normal quantile

# Batch sizing: bounded by memory footprint and by index-array overhead.
_BATCH_CELL_BUDGET = 8_000_000
_BATCH_MAX = 65536

STEP4_TAU = "tau"
STEP4_SAMPLED = "sampled-T"

# Stream namespaces; the first spawn_key entry keeps estimator kinds apart.
_NS_IS = 0
_NS_NAIVE = 1


# Mean cell value below which fields are built from success positions
# instead of dense per-cell draws (exact either way, far cheaper when sparse).
_SPARSE_MEAN_CUTOFF = 0.05


def _sample_compact(
    model: DistributionModel, shape: tuple[int, ...], rng: np.random.Generator
) -> np.ndarray:
    """i.i.d. cells in a compact dtype, sparse-constructed when cheap."""
    total = prod(shape)
    if model.kind == "bernoulli":
        if 0.0 < model.p < _SPARSE_MEAN_CUTOFF:
            out = np.zeros(total, dtype=bool)
            out[_sparse_success_positions(total, model.p, rng)] = True
            return out.reshape(shape)
        return rng.random(shape) < model.p
    if model.kind == "binomial" and 0.0 < model.p < _SPARSE_MEAN_CUTOFF:
        pos = _sparse_success_positions(total * model.trials, model.p, rng)
        out = np.zeros(total, dtype=np.int16)
        np.add.at(out, pos // model.trials, 1)
        return out.reshape(shape)
    if model.kind == "poisson" and model.lam < _SPARSE_MEAN_CUTOFF:
        n_events = int(rng.poisson(model.lam * total))
        pos = rng.integers(0, total, n_events)
        out = np.zeros(total, dtype=np.int16)
        np.add.at(out, pos, 1)
        return out.reshape(shape)
    return model.sample_cells(shape, rng)


def _prepare_for_scan(
    fields: np.ndarray, window: tuple[int, int, int]
) -> tuple[np.ndarray, np.dtype]:
    """Pick the narrowest exact accumulator dtype for the sliding-sum kernel.

    The kernel reduces the innermost axis first, so the largest intermediate
    is max_cell * max(m2*m3*T1, m3*T2, T3).  Fields wider than the chosen
    accumulator are downcast (values fit by the same bound).
    """
    t1, t2, t3 = fields.shape[1:]
    m1, m2, m3 = window
    mx = 1 if fields.dtype == np.bool_ else (int(fields.max()) if fields.size else 0)
    bound = mx * max(m2 * m3 * t1, m3 * t2, t3)
    if bound < 2**15 - 1:
        acc = np.dtype(np.int16)
    elif bound < 2**31 - 1:
        acc = np.dtype(np.int32)
    else:
        acc = np.dtype(np.int64)
    if fields.dtype != np.bool_ and fields.dtype.itemsize > acc.itemsize:
        fields = fields.astype(acc)
    return fields, acc


def stream_generator(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    """Independent generator derived from the master seed and a structured key."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def batch_sizes(iterations: int, n_cells: int) -> list[int]:
    """Deterministic batch split for a given workload (independent of workers)."""
    per = min(_BATCH_MAX, max(1, _BATCH_CELL_BUDGET // max(1, n_cells)))
    sizes = []
    left = iterations
    while left > 0:
        take = min(per, left)
        sizes.append(take)
        left -= take
    return sizes


def _merge_moments(
    acc: tuple[int, float, float], part: tuple[int, float, float]
) -> tuple[int, float, float]:
    """Merge (count, mean, sum of squared deviations) pairs, Chan's formula."""
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = part
    if n_a == 0:
        return part
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * n_b / n
    m2 = m2_a + m2_b + delta * delta * n_a * n_b / n
    return n, mean, m2


def _run_batches(task, specs: list, workers: int) -> list:
    """Run one task per spec; results come back in spec order regardless of
    scheduling, so reductions over them are order-stable."""
    if workers <= 1 or len(specs) <= 1:
        return [task(s) for s in specs]
    with ProcessPoolExecutor(max_workers=min(workers, len(specs))) as pool:
        return list(pool.map(task, specs))


@dataclass(frozen=True)
class TailEstimate:
    """Estimated tail P(S >= tau) = B * rho_hat with a 95% half-width."""

    tail: float
    beta: float
    rho_hat: float
    rho_var: float
    bonferroni: float
    iterations: int


@dataclass(frozen=True)
class QEstimate:
    """One base probability Q_hat = 1 - B * rho_hat, clamped into [0, 1]."""

    value: float
    beta: float
    rho_hat: float
    rho_var: float
    B: float
    iterations: int
    region: tuple[int, int, int] | None = None
    value_raw: float | None = None

    def __post_init__(self) -> None:
        if self.value_raw is None:
            object.__setattr__(self, "value_raw", self.value)


def _is_batch_task(spec: tuple) -> tuple[int, float, float]:
    """One importance-sampling batch: (count, mean, sum sq dev) of the rho_k."""
    (seed, stream_tag, batch_idx, nb, model, region, window, tau, values, cumw, step4) = spec
    m1, m2, m3 = window
    origins = tuple(t - m + 1 for t, m in zip(region, window))
    rng = stream_generator(seed, (_NS_IS, stream_tag, batch_idx))
    fields = _sample_compact(model, (nb,) + tuple(region), rng)
    pick = np.searchsorted(cumw, rng.random(nb), side="right")
    totals = values[np.minimum(pick, len(values) - 1)]
    j1 = rng.integers(0, origins[0], nb)
    j2 = rng.integers(0, origins[1], nb)
    j3 = rng.integers(0, origins[2], nb)
    blocks = _fill_flat_batch(model, m1 * m2 * m3, totals, rng)
    blocks = blocks.reshape(nb, m1, m2, m3)
    bsel = np.arange(nb)[:, None, None, None]
    i1 = (j1[:, None] + np.arange(m1))[:, :, None, None]
    i2 = (j2[:, None] + np.arange(m2))[:, None, :, None]
    i3 = (j3[:, None] + np.arange(m3))[:, None, None, :]
    fields[bsel, i1, i2, i3] = blocks.astype(fields.dtype, copy=False)
    fields, acc = _prepare_for_scan(fields, window)
    thresholds = totals if step4 == STEP4_SAMPLED else tau
    counts = batch_exceedance_counts(fields, window, thresholds, acc=acc)
    rho_k = 1.0 / counts
    mean = float(rho_k.mean())
    m2dev = float(((rho_k - mean) ** 2).sum())
    return nb, mean, m2dev


def _naive_batch_task(spec: tuple) -> int:
    """One naive batch: number of sampled fields whose scan statistic is <= n."""
    seed, batch_idx, nb, model, region, window, n = spec
    rng = stream_generator(seed, (_NS_NAIVE, batch_idx))
    fields = _sample_compact(model, (nb,) + tuple(region), rng)
    fields, acc = _prepare_for_scan(fields, window)
    stats = batch_scan_statistics(fields, window, acc=acc)
    return int(np.count_nonzero(stats <= n))


def _bonferroni(
    region: tuple[int, int, int],
    window: tuple[int, int, int],
    model: DistributionModel,
    tau: int,
) -> float:
    agg = window_aggregate_distribution(model, window)
    n_origins = prod(t - m + 1 for t, m in zip(region, window))
    return n_origins * agg.tail_prob(tau)


def bonferroni_bound(geometry: ScanGeometry, model: DistributionModel, tau: int) -> float:
    """Union bound: (number of origins) * P(one window total >= tau)."""
    if tau < 0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    return _bonferroni(geometry.region, geometry.window, model, tau)


def is_tail_estimate(
    region: tuple[int, int, int],
    window: tuple[int, int, int],
    model: DistributionModel,
    tau: int,
    iterations: int,
    seed: int,
    *,
    workers: int = 1,
    step4_threshold: str = STEP4_TAU,
    stream_tag: int = 0,
) -> TailEstimate:
    """Importance-sampling estimate of P(scan statistic >= tau) over the region."""
    geometry = ScanGeometry(tuple(region), tuple(window))
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    if iterations < 2:
        raise ParameterError(f"iterations must be >= 2 (variance), got {iterations}")
    if step4_threshold not in (STEP4_TAU, STEP4_SAMPLED):
        raise ParameterError(f"unknown step4 threshold {step4_threshold!r}")

    agg = window_aggregate_distribution(model, geometry.window)
    try:
        values, cumw = agg.tail_values(tau)
    except EmptySupportError:
        return TailEstimate(0.0, 0.0, 0.0, 0.0, 0.0, iterations)
    bonf = geometry.n_origins * agg.tail_prob(tau)

    sizes = batch_sizes(iterations, prod(geometry.region))
    specs = [
        (
            seed,
            stream_tag,
            batch_idx,
            nb,
            model,
            geometry.region,
            geometry.window,
            tau,
            values,
            cumw,
            step4_threshold,
        )
        for batch_idx, nb in enumerate(sizes)
    ]
    parts = _run_batches(_is_batch_task, specs, workers)
    acc = (0, 0.0, 0.0)
    for part in parts:
        acc = _merge_moments(acc, part)
    n, rho_hat, m2dev = acc
    rho_var = m2dev / (n - 1)
    beta = CONFIDENCE_FACTOR * bonf * sqrt(rho_var / n)
    return TailEstimate(bonf * rho_hat, beta, rho_hat, rho_var, bonf, n)


def estimate_q(
    r: int,
    t: int,
    s: int,
    window: tuple[int, int, int],
    model: DistributionModel,
    n: int,
    iterations: int,
    seed: int,
    *,
    workers: int = 1,
    step4_threshold: str = STEP4_TAU,
    stream_salt: int = 0,
) -> QEstimate:
    """Base probability Q_rts(n): no window total above n over the reduced region.

    The region is r(m1-1) x t(m2-1) x s(m3-1) and the estimate comes from the
    tail at tau = n + 1 (exact complement on an integer lattice).
    """
    if not all(v in (2, 3) for v in (r, t, s)):
        raise ParameterError(f"(r, t, s) must lie in {{2,3}}^3, got {(r, t, s)}")
    if any(m < 2 for m in window):
        raise ParameterError(f"window extents must be >= 2, got {window}")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    region = tuple(v * (m - 1) for v, m in zip((r, t, s), window))
    tag = stream_salt * 1000 + r * 100 + t * 10 + s
    est = is_tail_estimate(
        region,
        window,
        model,
        n + 1,
        iterations,
        seed,
        workers=workers,
        step4_threshold=step4_threshold,
        stream_tag=tag,
    )
    raw = 1.0 - est.tail
    return QEstimate(
        value=min(1.0, max(0.0, raw)),
        beta=est.beta,
        rho_hat=est.rho_hat,
        rho_var=est.rho_var,
        B=est.bonferroni,
        iterations=est.iterations,
        region=(r, t, s),
        value_raw=raw,
    )


@dataclass(frozen=True)
class NaiveEstimate:
    """Hit-or-miss estimate of P(scan statistic <= n) over the full region."""

    p_hat: float
    beta: float
    repetitions: int


def naive_scan_estimate(
    geometry: ScanGeometry,
    model: DistributionModel,
    n: int,
    repetitions: int,
    seed: int,
    *,
    workers: int = 1,
) -> NaiveEstimate:
    """Scan ``repetitions`` i.i.d. fields and count those with statistic <= n."""
    if repetitions < 2:
        raise ParameterError(f"repetitions must be >= 2, got {repetitions}")
    sizes = batch_sizes(repetitions, prod(geometry.region))
    specs = [
        (seed, batch_idx, nb, model, geometry.region, geometry.window, n)
        for batch_idx, nb in enumerate(sizes)
    ]
    hits = sum(_run_batches(_naive_batch_task, specs, workers))
    p_hat = hits / repetitions
    beta = CONFIDENCE_FACTOR * sqrt(p_hat * (1.0 - p_hat) / repetitions)
    return NaiveEstimate(p_hat=p_hat, beta=beta, repetitions=repetitions)
