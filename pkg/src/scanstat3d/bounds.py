"""Error-factor machinery for extrapolating maxima of 1-dependent sequences.

Given the no-exceedance probabilities of two and three consecutive blocks of a
stationary 1-dependent sequence, the probability for m blocks is approximated
by

    (2x - y) / [1 + x - y + 2(x - y)^2]^(m-1)

with an explicit error bound m * F(alpha, m) * (1 - q1)^2 valid whenever
q1 >= 1 - alpha >= 0.9.  F is assembled from the sub-terms K, L and E, which
depend on a free parameter l tied to the roots of alpha*t^3 - t + 1 = 0.

The defining constraint on l printed alongside the bound (l greater than the
cube of the second-magnitude root) makes every denominator below negative for
every alpha in (0, 0.1]; see the module tests.  The usable window is instead
l in (t1^3, t2^3) where t1 is the smallest-magnitude root, and the published
numerical error budgets are only reproduced near its lower edge.  The default
rule therefore takes l just above t1^3; the literal second-root rule and a
numeric minimization of F over the window are available as alternatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from .errors import BoundValidityError, ParameterError, TheoremInapplicableError

ALPHA_MAX = 0.1
ALPHA_FLOOR = 1e-12
L_EDGE_NUDGE = 1e-9

L_RULE_SMALLEST = "smallest-root"
L_RULE_SECOND = "second-root"
L_RULE_OPTIMIZE = "optimize"
L_RULES = (L_RULE_SMALLEST, L_RULE_SECOND, L_RULE_OPTIMIZE)


def _cubic_roots(alpha: float) -> tuple[float, float, float]:
    """The three real roots of alpha*t^3 - t + 1 = 0 for 0 < alpha <= 0.1.

    Returned as (smallest magnitude, second magnitude, largest magnitude);
    each is polished by Newton steps to residual ~1e-14.
    """
    # Depressed cubic t^3 + p*t + q with p = -1/alpha, q = 1/alpha; the
    # discriminant is positive for alpha < 4/27, so all roots are real.
    radius = 2.0 / math.sqrt(3.0 * alpha)
    theta = math.acos(-1.5 * math.sqrt(3.0 * alpha))
    roots = []
    for k in range(3):
        t = radius * math.cos((theta - 2.0 * math.pi * k) / 3.0)
        for _ in range(3):
            f = alpha * t * t * t - t + 1.0
            df = 3.0 * alpha * t * t - 1.0
            if df != 0.0:
                t -= f / df
        roots.append(t)
    roots.sort(key=abs)
    return tuple(roots)


def second_magnitude_root(alpha: float) -> float:
    """Second-largest root in absolute value of alpha*t^3 - t + 1 = 0."""
    if not 0.0 < alpha <= ALPHA_MAX:
        raise ParameterError(f"alpha must lie in (0, {ALPHA_MAX}], got {alpha}")
    return _cubic_roots(alpha)[1]


def smallest_magnitude_root(alpha: float) -> float:
    """Smallest root in absolute value of alpha*t^3 - t + 1 = 0 (just above 1)."""
    if not 0.0 < alpha <= ALPHA_MAX:
        raise ParameterError(f"alpha must lie in (0, {ALPHA_MAX}], got {alpha}")
    return _cubic_roots(alpha)[0]


def kappa(alpha: float, l: float) -> float:
    """Leading error coefficient K(alpha) for free parameter l.

    Raises BoundValidityError when either denominator is nonpositive.
    """
    if not 0.0 <= alpha <= ALPHA_MAX:
        raise ParameterError(f"alpha must lie in [0, {ALPHA_MAX}], got {alpha}")
    eta = 1.0 + l * alpha
    inner = 1.0 - alpha * eta * eta
    if inner <= 0.0:
        raise BoundValidityError(
            f"1 - alpha*(1+l*alpha)^2 = {inner:.6g} <= 0 at alpha={alpha:g}, l={l:g}"
        )
    denom = 1.0 - 2.0 * alpha * eta / (inner * inner)
    if denom <= 0.0:
        raise BoundValidityError(
            f"K denominator {denom:.6g} <= 0 at alpha={alpha:g}, l={l:g}"
        )
    head = (11.0 - 3.0 * alpha) / ((1.0 - alpha) ** 2)
    bulk = (
        2.0
        * l
        * (1.0 + 3.0 * alpha)
        * (2.0 + 3.0 * l * alpha - alpha * (2.0 - l * alpha) * eta * eta)
        / inner**3
    )
    return (head + bulk) / denom


def l_bound(alpha: float, kappa_value: float) -> float:
    """Series-tail coefficient L(alpha) given K(alpha)."""
    base = 1.0 + alpha + 3.0 * alpha * alpha
    return (
        3.0 * kappa_value * base * (base + kappa_value * alpha**3)
        + alpha**6 * kappa_value**3
        + 9.0 * alpha * (4.0 + 3.0 * alpha + 3.0 * alpha * alpha)
        + 55.1
    )


def e_term(alpha: float, eta: float) -> float:
    """Geometric-decay coefficient E(alpha) for eta = 1 + l*alpha.

    Raises BoundValidityError when the denominator loses positivity.
    """
    if not 0.0 <= alpha <= ALPHA_MAX:
        raise ParameterError(f"alpha must lie in [0, {ALPHA_MAX}], got {alpha}")
    a_eta2 = alpha * eta * eta
    first = 1.0 - a_eta2
    if first <= 0.0:
        raise BoundValidityError(
            f"1 - alpha*eta^2 = {first:.6g} <= 0 at alpha={alpha:g}, eta={eta:g}"
        )
    bracket = first * first - a_eta2 * (1.0 + eta - 2.0 * alpha * eta) ** 2
    if bracket <= 0.0:
        raise BoundValidityError(
            f"E denominator bracket {bracket:.6g} <= 0 at alpha={alpha:g}, eta={eta:g}"
        )
    numerator = (
        eta**5
        * (1.0 + (1.0 - 2.0 * alpha) * eta) ** 4
        * (1.0 + alpha * (eta - 2.0))
        * (1.0 + eta + (1.0 - 3.0 * alpha) * eta * eta)
    )
    return numerator / (2.0 * first**4 * bracket)


@dataclass(frozen=True)
class AlphaContext:
    """All sub-terms of the error factor for one tail level alpha."""

    alpha: float
    t2: float
    l: float
    eta: float
    K: float
    Lterm: float
    Eterm: float
    Gamma: float

    @classmethod
    def build(
        cls, alpha: float, l: float | None = None, l_rule: str = L_RULE_SMALLEST
    ) -> "AlphaContext":
        if not 0.0 < alpha <= ALPHA_MAX:
            raise ParameterError(f"alpha must lie in (0, {ALPHA_MAX}], got {alpha}")
        t1, t2, _ = _cubic_roots(alpha)
        if l is None:
            if l_rule == L_RULE_SMALLEST:
                l = t1**3 * (1.0 + L_EDGE_NUDGE)
            elif l_rule == L_RULE_SECOND:
                l = t2**3 * (1.0 + L_EDGE_NUDGE)
            else:
                raise ParameterError(f"unknown l rule {l_rule!r}")
        eta = 1.0 + l * alpha
        k_val = kappa(alpha, l)
        l_val = l_bound(alpha, k_val)
        e_val = e_term(alpha, eta)
        return cls(
            alpha=alpha,
            t2=t2,
            l=l,
            eta=eta,
            K=k_val,
            Lterm=l_val,
            Eterm=e_val,
            Gamma=l_val + e_val,
        )


def _optimized_bracket(alpha: float, m: int) -> float:
    """min over valid l of Gamma(l)/m + K(l), searched inside (t1^3, t2^3)."""
    t1, t2, _ = _cubic_roots(alpha)
    lo = t1**3 * (1.0 + L_EDGE_NUDGE)
    hi = t2**3

    def objective(l: float) -> float:
        try:
            ctx = AlphaContext.build(alpha, l=l)
        except BoundValidityError:
            return math.inf
        return ctx.Gamma / m + ctx.K

    best = objective(lo)
    result = optimize.minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
    )
    if result.fun < best:
        best = float(result.fun)
    if not math.isfinite(best):
        raise BoundValidityError(f"no valid l found for alpha={alpha:g}")
    return best


def f_factor(
    alpha: float,
    m: int,
    one_minus_q1: float | None = None,
    l_rule: str = L_RULE_SMALLEST,
) -> float:
    """Error factor F(alpha, m) = 1 + 3/m + [Gamma/m + K] * (1 - q1).

    ``one_minus_q1`` defaults to alpha, the worst value it can take; passing
    0 short-circuits to 1 + 3/m without evaluating the sub-terms.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if one_minus_q1 is None:
        one_minus_q1 = alpha
    if not 0.0 <= one_minus_q1 <= alpha + 1e-15:
        raise ParameterError(
            f"need 0 <= 1-q1 <= alpha, got 1-q1={one_minus_q1}, alpha={alpha}"
        )
    if alpha > ALPHA_MAX:
        raise ParameterError(f"alpha must be <= {ALPHA_MAX}, got {alpha}")
    base = 1.0 + 3.0 / m
    if one_minus_q1 == 0.0:
        return base
    alpha_eff = max(alpha, ALPHA_FLOOR)
    if l_rule == L_RULE_OPTIMIZE:
        bracket = _optimized_bracket(alpha_eff, m)
    else:
        ctx = AlphaContext.build(alpha_eff, l_rule=l_rule)
        bracket = ctx.Gamma / m + ctx.K
    return base + bracket * one_minus_q1


def extrapolate_max_cdf_raw(x: float, y: float, m: int) -> float:
    """Unclamped (2x - y) / [1 + x - y + 2(x - y)^2]^(m-1)."""
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    d = x - y
    return (2.0 * x - y) / (1.0 + d + 2.0 * d * d) ** (m - 1)


def extrapolate_max_cdf(x: float, y: float, m: int) -> float:
    """Clamped extrapolation of a no-exceedance probability to m blocks.

    Tolerates simulation noise pushing y above x: the numerator is floored at
    zero and the result clamped into [0, 1].  Both projections contract, so
    the (m-2)-Lipschitz property of the raw functional survives; an upper
    numerator clamp would break it and is never needed (the raw value cannot
    exceed one when y <= x).
    """
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    d = x - y
    num = max(0.0, 2.0 * x - y)
    val = num / (1.0 + d + 2.0 * d * d) ** (m - 1)
    return min(1.0, max(0.0, val))


def max_cdf_bound(
    q1: float,
    q2: float,
    m: int,
    alpha: float | None = None,
    l_rule: str = L_RULE_SMALLEST,
) -> tuple[float, float]:
    """Approximate P(max of m blocks stays below the level) with its bound.

    Returns (approximation, error) where the approximation carries exponent m
    and the error is m * F(alpha, m) * (1 - q1)^2.  Requires
    q1 >= 1 - alpha >= 0.9; alpha defaults to 1 - q1.
    """
    if alpha is None:
        alpha = 1.0 - q1
    if q1 < 0.9:
        raise TheoremInapplicableError(f"q1 = {q1:g} < 0.9: bound not applicable")
    if alpha > ALPHA_MAX:
        raise TheoremInapplicableError(f"alpha = {alpha:g} > {ALPHA_MAX}")
    if 1.0 - q1 > alpha + 1e-15:
        raise TheoremInapplicableError(
            f"q1 = {q1:g} below 1 - alpha = {1.0 - alpha:g}"
        )
    approx = extrapolate_max_cdf(q1, q2, m + 1)
    err = m * f_factor(alpha, m, l_rule=l_rule) * (1.0 - q1) ** 2
    return approx, err
