"""Cell distributions of the null random field and their conditional samplers.

Three integer cell laws are supported (Bernoulli, binomial, Poisson).  All of
them are closed under summation over a window, which gives the exact law of a
window total in closed form.  The module also provides the two non-trivial
samplers needed by the importance-sampling estimator: drawing a window total
from the renormalized upper tail of its law, and filling a window with cell
values drawn from the exact conditional law given their total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import EmptySupportError, ParameterError

# Mass beyond this cumulative level is dropped when materializing pmf tables.
PMF_TRUNCATION = 1e-15

BERNOULLI = "bernoulli"
BINOMIAL = "binomial"
POISSON = "poisson"


@dataclass(frozen=True)
class DistributionModel:
    """Law of one lattice cell under the null hypothesis."""

    kind: str
    p: float | None = None
    trials: int | None = None
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.kind == BERNOULLI:
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ParameterError(f"bernoulli requires 0 <= p <= 1, got p={self.p}")
        elif self.kind == BINOMIAL:
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ParameterError(f"binomial requires 0 <= p <= 1, got p={self.p}")
            if self.trials is None or self.trials < 1:
                raise ParameterError(f"binomial requires trials >= 1, got {self.trials}")
        elif self.kind == POISSON:
            if self.lam is None or not self.lam > 0.0 or not math.isfinite(self.lam):
                raise ParameterError(f"poisson requires lambda > 0, got {self.lam}")
        else:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def bernoulli(cls, p: float) -> "DistributionModel":
        return cls(BERNOULLI, p=p)

    @classmethod
    def binomial(cls, trials: int, p: float) -> "DistributionModel":
        return cls(BINOMIAL, p=p, trials=trials)

    @classmethod
    def poisson(cls, lam: float) -> "DistributionModel":
        return cls(POISSON, lam=lam)

    @property
    def cell_mean(self) -> float:
        if self.kind == BERNOULLI:
            return self.p
        if self.kind == BINOMIAL:
            return self.trials * self.p
        return self.lam

    def support_max(self, n_cells: int = 1) -> int | None:
        """Largest achievable total over ``n_cells`` cells (None = unbounded)."""
        if self.kind == BERNOULLI:
            return n_cells
        if self.kind == BINOMIAL:
            return self.trials * n_cells
        return None

    def sample_cells(self, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        """i.i.d. cell values with the given shape, as int64."""
        if self.kind == BERNOULLI:
            return (rng.random(shape) < self.p).astype(np.int64)
        if self.kind == BINOMIAL:
            return rng.binomial(self.trials, self.p, size=shape).astype(np.int64, copy=False)
        return rng.poisson(self.lam, size=shape).astype(np.int64, copy=False)

    def describe(self) -> str:
        if self.kind == BERNOULLI:
            return f"bernoulli(p={self.p:g})"
        if self.kind == BINOMIAL:
            return f"binomial(m={self.trials}, p={self.p:g})"
        return f"poisson(lambda={self.lam:g})"


@dataclass(frozen=True, eq=False)
class Field:
    """Realized integer lattice; row-major with the third index fastest."""

    dims: tuple[int, int, int]
    cells: np.ndarray

    def __post_init__(self) -> None:
        if any(d < 1 for d in self.dims):
            raise ParameterError(f"field dims must be >= 1, got {self.dims}")
        if self.cells.shape != tuple(self.dims):
            raise ParameterError(
                f"cells shape {self.cells.shape} does not match dims {self.dims}"
            )
        if self.cells.dtype != np.int64:
            object.__setattr__(self, "cells", self.cells.astype(np.int64))
        if not self.cells.flags.c_contiguous:
            object.__setattr__(self, "cells", np.ascontiguousarray(self.cells))


def sample_field(
    dims: tuple[int, int, int], model: DistributionModel, rng: np.random.Generator
) -> Field:
    """Draw an i.i.d. field of the given dimensions from the cell law."""
    if len(dims) != 3 or any(int(d) < 1 for d in dims):
        raise ParameterError(f"dims must be three positive integers, got {dims}")
    dims = tuple(int(d) for d in dims)
    return Field(dims=dims, cells=model.sample_cells(dims, rng))


@dataclass(frozen=True, eq=False)
class AggregateDistribution:
    """Exact law of the total of ``n_cells`` i.i.d. cells.

    The pmf/cdf tables run from ``support_min`` (always 0 here) up to the point
    where cumulative mass reaches 1 - PMF_TRUNCATION.  Tail probabilities are
    served by the underlying survival function, never by 1 - cdf, so they stay
    accurate at machine-relative precision deep in the tail.
    """

    support_min: int
    pmf: np.ndarray
    cdf: np.ndarray
    n_cells: int
    frozen: object = field(repr=False)
    support_max: int | None = None

    def tail_prob(self, tau: int) -> float:
        """P(total >= tau), accurate in relative terms."""
        if tau <= self.support_min:
            return 1.0
        return float(self.frozen.sf(tau - 1))

    def pmf_at(self, k: np.ndarray | int) -> np.ndarray | float:
        return self.frozen.pmf(k)

    def tail_values(self, tau: int) -> tuple[np.ndarray, np.ndarray]:
        """Support points >= tau and their cumulative weights renormalized to 1.

        Raises EmptySupportError when the tail carries no mass.
        """
        mass = self.tail_prob(tau)
        if mass <= 0.0 or (self.support_max is not None and tau > self.support_max):
            raise EmptySupportError(
                f"no support at or above tau={tau} (tail mass {mass:g})"
            )
        if self.support_max is not None:
            hi = self.support_max
        else:
            # Unbounded law: cut where at most 1e-16 of the tail mass remains.
            hi = _upper_cut(self.frozen, mass * 1e-16, start=tau)
        values = np.arange(tau, hi + 1)
        weights = self.frozen.pmf(values) / mass
        cum = np.cumsum(weights)
        if cum[-1] <= 0.0:
            raise EmptySupportError(f"tail at tau={tau} underflowed to zero mass")
        cum /= cum[-1]
        return values, cum


def _upper_cut(frozen, floor_prob: float, start: int = 0) -> int:
    """Smallest practical k with sf(k) <= floor_prob, found by doubling.

    Avoids isf(), which loses the plot for extreme quantiles of discrete laws.
    """
    hi = max(start, int(frozen.mean() + 10.0 * frozen.std()) + 16)
    while frozen.sf(hi) > floor_prob:
        hi += max(8, hi // 4)
    return hi


def window_aggregate_distribution(
    model: DistributionModel, window_dims: tuple[int, int, int]
) -> AggregateDistribution:
    """Exact closed-form law of a window total.

    Bernoulli(p) cells over N window cells total to Binomial(N, p), binomial
    (m, p) cells to Binomial(mN, p), Poisson(lam) cells to Poisson(lam * N).
    """
    if any(int(d) < 1 for d in window_dims):
        raise ParameterError(f"window dims must be >= 1, got {window_dims}")
    n_cells = int(np.prod([int(d) for d in window_dims]))
    if model.kind == BERNOULLI:
        frozen = stats.binom(n_cells, model.p)
        support_max = n_cells
    elif model.kind == BINOMIAL:
        frozen = stats.binom(model.trials * n_cells, model.p)
        support_max = model.trials * n_cells
    else:
        frozen = stats.poisson(model.lam * n_cells)
        support_max = None
    if support_max is not None:
        hi = support_max
    else:
        hi = _upper_cut(frozen, PMF_TRUNCATION)
    ks = np.arange(0, hi + 1)
    pmf = frozen.pmf(ks)
    cdf = np.cumsum(pmf)
    return AggregateDistribution(
        support_min=0,
        pmf=pmf,
        cdf=cdf,
        n_cells=n_cells,
        frozen=frozen,
        support_max=support_max,
    )


def sample_truncated_aggregate(
    agg: AggregateDistribution, tau: int, rng: np.random.Generator
) -> int:
    """Draw one total T >= tau with P(T = t) proportional to the aggregate pmf."""
    values, cum = agg.tail_values(tau)
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return int(values[min(idx, len(values) - 1)])


def sample_truncated_aggregate_batch(
    agg: AggregateDistribution, tau: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized version of sample_truncated_aggregate."""
    values, cum = agg.tail_values(tau)
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return values[np.minimum(idx, len(values) - 1)]


def _check_fill_total(model: DistributionModel, n_cells: int, total: int) -> None:
    if total < 0:
        raise ParameterError(f"window total must be >= 0, got {total}")
    cap = model.support_max(n_cells)
    if cap is not None and total > cap:
        raise ParameterError(
            f"window total {total} exceeds the maximum {cap} achievable over {n_cells} cells"
        )


def fill_window_conditional(
    model: DistributionModel,
    window_dims: tuple[int, int, int],
    total: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Cell values over the window drawn from the exact law given their sum.

    Bernoulli: a uniformly random subset of ``total`` cells set to one.
    Binomial(m, p): multivariate hypergeometric split of ``total`` successes
    among the cells (m trials each), realized sequentially.
    Poisson: multinomial(total) with equal cell probabilities.
    """
    window_dims = tuple(int(d) for d in window_dims)
    n_cells = int(np.prod(window_dims))
    _check_fill_total(model, n_cells, total)
    flat = _fill_flat_batch(model, n_cells, np.asarray([total]), rng)[0]
    return flat.reshape(window_dims)


def _fill_flat_batch(
    model: DistributionModel,
    n_cells: int,
    totals: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """(len(totals), n_cells) conditional fills; each row sums to its total."""
    nb = len(totals)
    if model.kind == BERNOULLI:
        # The cells holding the T smallest of n i.i.d. uniforms are a uniform
        # random subset of size T; select them by partial or full sort.
        u = rng.random((nb, n_cells))
        kmax = int(totals.max()) if nb else 0
        if kmax == 0:
            return np.zeros((nb, n_cells), dtype=np.int64)
        if kmax * 4 < n_cells:
            part = np.argpartition(u, kmax, axis=1)[:, :kmax]
            vals = np.take_along_axis(u, part, axis=1)
            order = np.argsort(vals, axis=1)
            sel = np.take_along_axis(part, order, axis=1)
            out = np.zeros((nb, n_cells), dtype=np.int64)
            hits = (np.arange(kmax)[None, :] < totals[:, None]).astype(np.int64)
            out[np.arange(nb)[:, None], sel] = hits
            return out
        order = np.argsort(u, axis=1)
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(n_cells)[None, :], axis=1)
        return (ranks < totals[:, None]).astype(np.int64)
    if model.kind == BINOMIAL:
        m = model.trials
        out = np.zeros((nb, n_cells), dtype=np.int64)
        remaining = totals.astype(np.int64).copy()
        for j in range(n_cells - 1):
            slots_left = m * (n_cells - j)
            k = rng.hypergeometric(remaining, slots_left - remaining, m)
            out[:, j] = k
            remaining -= k
        out[:, n_cells - 1] = remaining
        return out
    counts = rng.multinomial(totals.astype(np.int64), np.full(n_cells, 1.0 / n_cells))
    return counts.astype(np.int64, copy=False)


def _sparse_success_positions(
    n_slots: int, p: float, rng: np.random.Generator
) -> np.ndarray:
    """Indices of successes among n_slots i.i.d. Bernoulli(p) trials.

    Built from geometric gaps, so the cost is proportional to the number of
    successes rather than the number of slots.  Distributionally exact.
    """
    chunks: list[np.ndarray] = []
    cursor = -1
    while True:
        expect = (n_slots - 1 - cursor) * p
        need = int(expect + 6.0 * math.sqrt(expect + 1.0)) + 16
        gaps = rng.geometric(p, size=need)
        idx = cursor + np.cumsum(gaps)
        if idx[-1] < n_slots:
            chunks.append(idx)
            cursor = int(idx[-1])
            continue
        chunks.append(idx[idx < n_slots])
        break
    return chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
