"""Prefix volumes, window sums, scan statistics, exceedance counts."""

import numpy as np
import pytest

from scanstat3d import (
    DistributionModel,
    Field,
    GeometryError,
    ScanGeometry,
    build_prefix,
    exceedance_count,
    sample_field,
    scan_statistic,
    window_sum,
    window_sums_all,
)
from scanstat3d.scanning import (
    batch_exceedance_counts,
    batch_scan_statistics,
    batch_window_sums,
)


def make_field(cells) -> Field:
    cells = np.asarray(cells, dtype=np.int64)
    return Field(dims=cells.shape, cells=cells)


def rng_for(k: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(880000 + k))


def brute_window_sum(cells, origin, window):
    i, j, k = (o - 1 for o in origin)
    m1, m2, m3 = window
    return int(cells[i : i + m1, j : j + m2, k : k + m3].sum())


def brute_all(cells, window):
    dims = cells.shape
    out = np.zeros([d - m + 1 for d, m in zip(dims, window)], dtype=np.int64)
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            for k in range(out.shape[2]):
                out[i, j, k] = brute_window_sum(cells, (i + 1, j + 1, k + 1), window)
    return out


def test_prefix_zero_field():
    prefix = build_prefix(make_field(np.zeros((3, 3, 3))))
    assert not prefix.cumulative.any()


def test_prefix_ones_corner():
    prefix = build_prefix(make_field(np.ones((2, 2, 2))))
    assert prefix.cumulative[2, 2, 2] == 8


def test_prefix_matches_triple_loop_oracle():
    field = sample_field((5, 5, 5), DistributionModel.poisson(1.0), rng_for(1))
    prefix = build_prefix(field)
    for a in range(1, 6):
        for b in range(1, 6):
            for c in range(1, 6):
                assert prefix.cumulative[a, b, c] == field.cells[:a, :b, :c].sum()


def test_window_sum_counts_cells():
    field = make_field(np.ones((4, 5, 6)))
    prefix = build_prefix(field)
    assert window_sum(prefix, (1, 1, 1), (2, 3, 4)) == 24


def test_window_sum_single_event_coverage():
    cells = np.zeros((3, 3, 3), dtype=np.int64)
    cells[0, 0, 0] = 1
    prefix = build_prefix(make_field(cells))
    assert window_sum(prefix, (1, 1, 1), (2, 2, 2)) == 1
    assert window_sum(prefix, (2, 1, 1), (2, 2, 2)) == 0


def test_window_sum_all_origins_match_oracle():
    field = sample_field((6, 6, 6), DistributionModel.poisson(0.8), rng_for(2))
    prefix = build_prefix(field)
    window = (3, 2, 2)
    oracle = brute_all(field.cells, window)
    for i in range(oracle.shape[0]):
        for j in range(oracle.shape[1]):
            for k in range(oracle.shape[2]):
                assert window_sum(prefix, (i + 1, j + 1, k + 1), window) == oracle[i, j, k]
    assert np.array_equal(window_sums_all(field, window), oracle)


def test_window_sum_bounds_error():
    prefix = build_prefix(make_field(np.zeros((4, 4, 4))))
    with pytest.raises(GeometryError):
        window_sum(prefix, (4, 1, 1), (2, 2, 2))
    with pytest.raises(GeometryError):
        window_sum(prefix, (0, 1, 1), (2, 2, 2))


def test_scan_statistic_zero_and_full():
    assert scan_statistic(make_field(np.zeros((5, 5, 5))), (2, 2, 2)) == 0
    assert scan_statistic(make_field(np.ones((6, 6, 6))), (4, 4, 4)) == 64


def test_scan_statistic_window_too_large():
    with pytest.raises(GeometryError):
        scan_statistic(make_field(np.zeros((3, 3, 3))), (4, 2, 2))


@pytest.mark.parametrize(
    "model",
    [
        DistributionModel.bernoulli(0.3),
        DistributionModel.binomial(3, 0.2),
        DistributionModel.poisson(0.6),
    ],
)
def test_scan_statistic_matches_brute_force(model):
    rng = rng_for(3)
    for trial in range(60):
        dims = tuple(rng.integers(3, 8, size=3))
        window = tuple(int(rng.integers(1, d + 1)) for d in dims)
        field = sample_field(dims, model, rng)
        assert scan_statistic(field, window) == brute_all(field.cells, window).max()


def test_exceedance_count_examples():
    zeros = make_field(np.zeros((3, 3, 3)))
    assert exceedance_count(zeros, (2, 2, 2), 1) == 0
    assert exceedance_count(zeros, (2, 2, 2), 0) == 8

    center = np.zeros((3, 3, 3), dtype=np.int64)
    center[1, 1, 1] = 1
    assert exceedance_count(make_field(center), (2, 2, 2), 1) == 8


def test_exceedance_count_nonincreasing_in_tau():
    field = sample_field((6, 6, 6), DistributionModel.poisson(1.0), rng_for(4))
    counts = [exceedance_count(field, (3, 3, 3), tau) for tau in range(0, 30)]
    assert counts[0] == 4 * 4 * 4
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_exceedance_positive_when_scan_reaches_tau():
    field = sample_field((7, 7, 7), DistributionModel.bernoulli(0.4), rng_for(5))
    tau = scan_statistic(field, (3, 2, 4))
    assert exceedance_count(field, (3, 2, 4), tau) >= 1


def test_restricting_origins_never_increases_max():
    field = sample_field((8, 8, 8), DistributionModel.poisson(0.7), rng_for(6))
    ws = window_sums_all(field, (3, 3, 3))
    full_max = ws.max()
    assert ws[1:-1, 1:-1, 1:-1].max() <= full_max
    assert ws[:3, :3, :3].max() <= full_max


@pytest.mark.parametrize("dtype", [np.bool_, np.int16, np.int32, np.int64])
def test_batch_kernels_match_per_field(dtype):
    rng = rng_for(7)
    raw = rng.integers(0, 2 if dtype == np.bool_ else 4, size=(10, 6, 5, 7))
    fields = raw.astype(dtype)
    window = (3, 2, 4)
    sums = batch_window_sums(fields, window)
    stats = batch_scan_statistics(fields, window)
    counts = batch_exceedance_counts(fields, window, 5)
    for b in range(10):
        oracle = brute_all(raw[b].astype(np.int64), window)
        assert np.array_equal(sums[b], oracle)
        assert stats[b] == oracle.max()
        assert counts[b] == np.count_nonzero(oracle >= 5)


def test_batch_exceedance_with_per_field_thresholds():
    rng = rng_for(8)
    fields = rng.integers(0, 3, size=(6, 5, 5, 5)).astype(np.int64)
    taus = np.array([0, 1, 2, 3, 4, 5])
    counts = batch_exceedance_counts(fields, (2, 2, 2), taus)
    for b in range(6):
        oracle = brute_all(fields[b], (2, 2, 2))
        assert counts[b] == np.count_nonzero(oracle >= taus[b])


def test_geometry_validation():
    geom = ScanGeometry((60, 60, 60), (5, 5, 5))
    assert geom.origins == (56, 56, 56)
    assert geom.cascade_levels() == (15, 15, 15)

    with pytest.raises(GeometryError):
        ScanGeometry((10, 10, 10), (12, 4, 4))
    with pytest.raises(GeometryError):
        ScanGeometry((8, 8, 8), (4, 4, 4)).cascade_levels()  # 8 % 3 != 0
    with pytest.raises(GeometryError):
        ScanGeometry((9, 9, 9), (4, 4, 4)).cascade_levels()  # levels = 3 < 4
    with pytest.raises(GeometryError):
        ScanGeometry((6, 6, 6), (6, 2, 2)).require_standing()  # m = T

    levels, fracs = ScanGeometry((185, 185, 185), (10, 10, 10)).floor_levels()
    assert levels == (20, 20, 20)
    assert fracs == pytest.approx((5 / 9, 5 / 9, 5 / 9))
