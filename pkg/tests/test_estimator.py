"""Importance-sampling estimator: exactness, unbiasedness, determinism."""

import numpy as np
import pytest
from scipy import stats

from scanstat3d import (
    DistributionModel,
    ParameterError,
    ScanGeometry,
    bonferroni_bound,
    estimate_q,
    is_tail_estimate,
    naive_scan_estimate,
)
from scanstat3d.estimator import _merge_moments, batch_sizes


def exact_binomial_tail(n: int, p: float, tau: int) -> float:
    """Direct upper-tail summation from exact binomial terms."""
    from math import comb

    return float(sum(comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(tau, n + 1)))


def test_bonferroni_vacuous_threshold():
    geom = ScanGeometry((6, 6, 6), (3, 3, 3))
    assert bonferroni_bound(geom, DistributionModel.bernoulli(0.3), 0) == 64.0


def test_bonferroni_single_window():
    geom = ScanGeometry((4, 4, 4), (4, 4, 4))
    b = bonferroni_bound(geom, DistributionModel.bernoulli(0.2), 15)
    assert b == pytest.approx(exact_binomial_tail(64, 0.2, 15), rel=1e-12)


def test_bonferroni_sparse_reference_case():
    geom = ScanGeometry((60, 60, 60), (5, 5, 5))
    b = bonferroni_bound(geom, DistributionModel.bernoulli(0.00005), 2)
    assert b == pytest.approx(56**3 * exact_binomial_tail(125, 0.00005, 2), rel=1e-10)


def test_single_window_region_is_exact_with_zero_variance():
    model = DistributionModel.bernoulli(0.1)
    est = is_tail_estimate((4, 4, 4), (4, 4, 4), model, 10, 500, seed=3)
    assert est.tail == pytest.approx(exact_binomial_tail(64, 0.1, 10), rel=1e-12)
    assert est.rho_hat == 1.0
    assert est.rho_var == 0.0
    assert est.beta == 0.0


def test_tail_beyond_support_is_zero():
    model = DistributionModel.bernoulli(0.4)
    est = is_tail_estimate((4, 4, 4), (2, 2, 2), model, 9, 100, seed=4)
    assert est.tail == 0.0 and est.beta == 0.0


def test_tail_estimate_validations():
    model = DistributionModel.bernoulli(0.1)
    with pytest.raises(ParameterError):
        is_tail_estimate((4, 4, 4), (2, 2, 2), model, 0, 100, seed=1)
    with pytest.raises(ParameterError):
        is_tail_estimate((4, 4, 4), (2, 2, 2), model, 2, 1, seed=1)


def test_rho_stays_in_unit_interval():
    model = DistributionModel.poisson(0.2)
    est = is_tail_estimate((6, 6, 6), (3, 3, 3), model, 4, 4000, seed=5)
    assert 0.0 < est.rho_hat <= 1.0
    assert est.tail <= est.bonferroni


def test_determinism_across_runs_and_workers():
    model = DistributionModel.binomial(4, 0.05)
    kwargs = dict(tau=5, iterations=30_000, seed=123)
    ref = is_tail_estimate((6, 6, 6), (3, 3, 3), model, **kwargs)
    for workers in (1, 2, 4):
        again = is_tail_estimate((6, 6, 6), (3, 3, 3), model, workers=workers, **kwargs)
        assert again == ref


def test_is_matches_naive_oracle_mid_size():
    model = DistributionModel.bernoulli(0.1)
    est = is_tail_estimate((8, 8, 8), (4, 4, 4), model, 13, 100_000, seed=42)
    naive = naive_scan_estimate(ScanGeometry((8, 8, 8), (4, 4, 4)), model, 12, 400_000, seed=9)
    naive_tail = 1.0 - naive.p_hat
    assert abs(est.tail - naive_tail) <= 3.0 * (est.beta + naive.beta)


def test_estimate_q_saturates_beyond_support():
    q = estimate_q(2, 2, 2, (3, 3, 3), DistributionModel.bernoulli(0.2), 27, 100, seed=6)
    assert q.value == 1.0 and q.beta == 0.0


def test_estimate_q_single_window_reduction():
    # (r,t,s) = (2,2,2) with window 2x2x2 gives a 2x2x2 region: one origin,
    # so the estimate collapses to the exact aggregate cdf
    p = 0.17
    q = estimate_q(2, 2, 2, (2, 2, 2), DistributionModel.bernoulli(p), 3, 100, seed=7)
    assert q.value == pytest.approx(1.0 - exact_binomial_tail(8, p, 4), rel=1e-12)
    assert q.beta == 0.0


def test_estimate_q_matches_naive_full_scan():
    # (3,3,3) with window 4^3 spans a 9^3 region; level chosen so the naive
    # oracle actually observes exceedances at this repetition budget
    model = DistributionModel.bernoulli(0.0025)
    q = estimate_q(3, 3, 3, (4, 4, 4), model, 3, 100_000, seed=8)
    naive = naive_scan_estimate(ScanGeometry((9, 9, 9), (4, 4, 4)), model, 3, 400_000, seed=9)
    assert naive.p_hat < 1.0
    assert abs(q.value - naive.p_hat) <= 3.0 * (q.beta + naive.beta)


def test_unbiasedness_over_repeated_runs_exact_instance():
    # single-origin region: every run returns the same exact value
    model = DistributionModel.poisson(0.3)
    exact = is_tail_estimate((3, 3, 3), (3, 3, 3), model, 14, 50, seed=0).tail
    runs = [
        is_tail_estimate((3, 3, 3), (3, 3, 3), model, 14, 50, seed=seed).tail
        for seed in range(200)
    ]
    assert np.allclose(runs, exact, rtol=1e-12)
    oracle = float(stats.poisson(0.3 * 27).sf(13))
    assert exact == pytest.approx(oracle, rel=1e-10)


def test_naive_estimate_degenerate_model():
    est = naive_scan_estimate(
        ScanGeometry((6, 6, 6), (3, 3, 3)), DistributionModel.bernoulli(0.0), 0, 100, seed=1
    )
    assert est.p_hat == 1.0 and est.beta == 0.0


def test_naive_beta_formula():
    est = naive_scan_estimate(
        ScanGeometry((6, 6, 6), (2, 2, 2)), DistributionModel.bernoulli(0.1), 2, 5000, seed=2
    )
    expect = 1.96 * np.sqrt(est.p_hat * (1 - est.p_hat) / 5000)
    assert est.beta == pytest.approx(expect, rel=1e-12)
    # spot value of the same formula at a reference magnitude
    assert 1.96 * np.sqrt(0.99 * 0.01 / 1e5) == pytest.approx(6.17e-4, abs=5e-6)


@pytest.mark.parametrize(
    "model,window,tau",
    [
        (DistributionModel.bernoulli(0.00005), (5, 5, 5), 2),
        (DistributionModel.bernoulli(0.0025), (4, 4, 4), 5),
        (DistributionModel.binomial(10, 0.0025), (4, 4, 4), 11),
        (DistributionModel.poisson(0.025), (4, 4, 4), 11),
    ],
)
def test_is_beats_naive_clt_half_width(model, window, tau):
    """At equal iteration counts the IS half-width must undercut the naive
    hit-or-miss CLT half-width 1.96 sqrt(q(1-q)/n) on the benchmark setups."""
    iters = 20_000
    region = tuple(3 * (m - 1) for m in window)
    est = is_tail_estimate(region, window, model, tau, iters, seed=11)
    q_hat = 1.0 - est.tail
    naive_beta = 1.96 * np.sqrt(q_hat * (1.0 - q_hat) / iters)
    assert est.beta < naive_beta


def test_moment_merge_matches_numpy():
    rng = np.random.Generator(np.random.PCG64(99))
    data = rng.random(10_001)
    acc = (0, 0.0, 0.0)
    for chunk in np.array_split(data, 13):
        part = (len(chunk), float(chunk.mean()), float(((chunk - chunk.mean()) ** 2).sum()))
        acc = _merge_moments(acc, part)
    n, mean, m2 = acc
    assert n == len(data)
    assert mean == pytest.approx(data.mean(), rel=1e-12)
    assert m2 / (n - 1) == pytest.approx(data.var(ddof=1), rel=1e-10)


def test_batch_sizes_partition_is_deterministic():
    sizes = batch_sizes(100_000, 1728)
    assert sum(sizes) == 100_000
    assert sizes == batch_sizes(100_000, 1728)
    assert batch_sizes(5, 10**9) == [1, 1, 1, 1, 1]
