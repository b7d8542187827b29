"""Window sums, scan statistic and exceedance counts over 3D integer fields.

All window totals are obtained from cumulative sums in exact int64 arithmetic,
so a full scan of a T1 x T2 x T3 field costs O(T1*T2*T3) regardless of the
window size.  Batched variants operate on stacks of fields (first axis =
replicate) and are the workhorses of the Monte Carlo estimators.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .distributions import Field
from .errors import GeometryError, ParameterError


@dataclass(frozen=True)
class ScanGeometry:
    """Region extents, window extents, and the derived cascade ratios."""

    region: tuple[int, int, int]
    window: tuple[int, int, int]

    def __post_init__(self) -> None:
        region = tuple(int(t) for t in self.region)
        window = tuple(int(m) for m in self.window)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "window", window)
        if len(region) != 3 or len(window) != 3:
            raise GeometryError("region and window must each have three extents")
        if any(t < 1 for t in region) or any(m < 1 for m in window):
            raise GeometryError(f"extents must be positive, got {region} / {window}")
        if any(m > t for m, t in zip(window, region)):
            raise GeometryError(
                f"window {window} does not fit inside region {region}"
            )

    @property
    def origins(self) -> tuple[int, int, int]:
        return tuple(t - m + 1 for t, m in zip(self.region, self.window))

    @property
    def n_origins(self) -> int:
        return prod(self.origins)

    def require_standing(self) -> None:
        """Enforce 2 <= m_j <= T_j - 1 on every axis."""
        for m, t in zip(self.window, self.region):
            if not 2 <= m <= t - 1:
                raise GeometryError(
                    f"window extent {m} violates 2 <= m <= T-1 for region extent {t}"
                )

    def cascade_levels(self, minimum: int = 4) -> tuple[int, int, int]:
        """Exact ratios L_j = T_j / (m_j - 1); each must be an integer >= minimum."""
        self.require_standing()
        levels = []
        for t, m in zip(self.region, self.window):
            if t % (m - 1) != 0:
                raise GeometryError(
                    f"region extent {t} is not a multiple of window extent minus one ({m - 1});"
                    " use the interpolated pipeline"
                )
            levels.append(t // (m - 1))
        if any(l < minimum for l in levels):
            raise GeometryError(f"cascade ratios {tuple(levels)} must all be >= {minimum}")
        return tuple(levels)

    def floor_levels(self) -> tuple[tuple[int, int, int], tuple[float, float, float]]:
        """Floored ratios and their fractional parts, for the interpolated pipeline."""
        self.require_standing()
        levels = tuple(t // (m - 1) for t, m in zip(self.region, self.window))
        fracs = tuple(
            (t - l * (m - 1)) / (m - 1)
            for t, m, l in zip(self.region, self.window, levels)
        )
        return levels, fracs


@dataclass(frozen=True, eq=False)
class PrefixVolume:
    """3D cumulative-sum table with a zero-padded boundary plane on each axis."""

    dims: tuple[int, int, int]
    cumulative: np.ndarray

    def __post_init__(self) -> None:
        expect = tuple(d + 1 for d in self.dims)
        if self.cumulative.shape != expect:
            raise ParameterError(
                f"cumulative shape {self.cumulative.shape} does not match padded dims {expect}"
            )


def build_prefix(field: Field) -> PrefixVolume:
    """Cumulative sums of the field, exact in int64."""
    t1, t2, t3 = field.dims
    cum = np.zeros((t1 + 1, t2 + 1, t3 + 1), dtype=np.int64)
    cum[1:, 1:, 1:] = field.cells.cumsum(axis=0).cumsum(axis=1).cumsum(axis=2)
    return PrefixVolume(dims=field.dims, cumulative=cum)


def window_sum(
    prefix: PrefixVolume, origin: tuple[int, int, int], window: tuple[int, int, int]
) -> int:
    """Total over the window anchored at a 1-based origin, in O(1).

    The origin (i1, i2, i3) must satisfy 1 <= i_j <= T_j - m_j + 1.
    """
    c = prefix.cumulative
    for i, m, t in zip(origin, window, prefix.dims):
        if not 1 <= i <= t - m + 1:
            raise GeometryError(
                f"origin {origin} out of range for window {window} in region {prefix.dims}"
            )
    a0, b0, c0 = (i - 1 for i in origin)
    a1, b1, c1 = (i - 1 + m for i, m in zip(origin, window))
    total = (
        c[a1, b1, c1]
        - c[a0, b1, c1]
        - c[a1, b0, c1]
        - c[a1, b1, c0]
        + c[a0, b0, c1]
        + c[a0, b1, c0]
        + c[a1, b0, c0]
        - c[a0, b0, c0]
    )
    return int(total)


def _acc_dtype(arr: np.ndarray) -> np.dtype:
    if arr.dtype == np.bool_:
        return np.dtype(np.int32)
    if arr.dtype.kind in "iu" and arr.dtype.itemsize >= 2:
        return arr.dtype
    return np.dtype(np.int64)


def _sliding_sum(
    arr: np.ndarray, m: int, axis: int, acc: np.dtype | None = None
) -> np.ndarray:
    """Sums over all length-m windows along one axis, exact in ``acc``.

    ``acc`` defaults to the input's integer dtype (bool promotes to int32);
    callers passing narrow dtypes must guarantee the totals fit, which the
    batched estimators prove from per-cell bounds before narrowing.  Small
    windows use shifted adds (vectorizes well); large ones a cumulative sum.
    """
    size = arr.shape[axis]
    acc = acc or _acc_dtype(arr)
    if m > size:
        raise GeometryError(f"window extent {m} exceeds axis length {size}")
    if m == 1:
        return arr if arr.dtype == acc else arr.astype(acc)
    take = [slice(None)] * arr.ndim
    if m <= 64:
        shape = list(arr.shape)
        shape[axis] = size - m + 1
        out = np.zeros(shape, dtype=acc)
        for k in range(m):
            take[axis] = slice(k, k + size - m + 1)
            out += arr[tuple(take)]
        return out
    cum = arr.cumsum(axis=axis, dtype=acc)
    take[axis] = slice(m - 1, None)
    out = cum[tuple(take)].copy()
    take[axis] = slice(None, size - m)
    low = cum[tuple(take)]
    take[axis] = slice(1, None)
    out[tuple(take)] -= low
    return out


def window_sums_all(field: Field, window: tuple[int, int, int]) -> np.ndarray:
    """Window totals for every admissible origin, shape (T1-m1+1, ...)."""
    geometry_check(field.dims, window)
    ws = field.cells
    for axis in (2, 1, 0):
        ws = _sliding_sum(ws, int(window[axis]), axis, acc=np.dtype(np.int64))
    return ws


def geometry_check(dims: tuple[int, int, int], window: tuple[int, int, int]) -> None:
    if any(int(m) < 1 for m in window):
        raise GeometryError(f"window extents must be positive, got {window}")
    if any(int(m) > int(t) for m, t in zip(window, dims)):
        raise GeometryError(f"window {tuple(window)} does not fit region {tuple(dims)}")


def scan_statistic(field: Field, window: tuple[int, int, int]) -> int:
    """Maximum window total over all admissible origins."""
    return int(window_sums_all(field, window).max())


def exceedance_count(field: Field, window: tuple[int, int, int], tau: int) -> int:
    """Number of origins whose window total is at least tau."""
    return int(np.count_nonzero(window_sums_all(field, window) >= tau))


def batch_window_sums(
    fields: np.ndarray,
    window: tuple[int, int, int],
    acc: np.dtype | None = None,
) -> np.ndarray:
    """Window totals for a stack of fields, shape (n, T1-m1+1, T2-m2+1, T3-m3+1).

    ``acc`` fixes the accumulator dtype; when narrower than int64 the caller
    must have proven the intermediate sums fit (see the estimator module).
    """
    geometry_check(fields.shape[1:], window)
    ws = fields
    # Innermost (contiguous) axis first: shrinks the array while the slices
    # being added are still cache-friendly.
    for axis in (3, 2, 1):
        ws = _sliding_sum(ws, int(window[axis - 1]), axis, acc=acc)
    return ws


def batch_scan_statistics(
    fields: np.ndarray, window: tuple[int, int, int], acc: np.dtype | None = None
) -> np.ndarray:
    """Scan statistic of each field in the stack."""
    return batch_window_sums(fields, window, acc=acc).max(axis=(1, 2, 3))


def batch_exceedance_counts(
    fields: np.ndarray,
    window: tuple[int, int, int],
    tau: np.ndarray | int,
    acc: np.dtype | None = None,
) -> np.ndarray:
    """Per-field count of origins whose window total reaches the threshold.

    ``tau`` may be scalar or one threshold per field.
    """
    ws = batch_window_sums(fields, window, acc=acc)
    tau = np.asarray(tau)
    if tau.ndim == 0:
        return np.count_nonzero(ws >= tau, axis=(1, 2, 3))
    return np.count_nonzero(ws >= tau[:, None, None, None], axis=(1, 2, 3))
