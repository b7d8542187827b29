"""Cubic roots, error-factor sub-terms, and the extrapolation functional."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scanstat3d import (
    AlphaContext,
    BoundValidityError,
    ParameterError,
    TheoremInapplicableError,
    e_term,
    extrapolate_max_cdf,
    extrapolate_max_cdf_raw,
    f_factor,
    kappa,
    l_bound,
    max_cdf_bound,
    second_magnitude_root,
    smallest_magnitude_root,
)

ALPHA_GRID = [float(a) for a in np.linspace(0.005, 0.1, 20)]


def mp_context(alpha: float):
    """Independent arbitrary-precision evaluation of t2, l, K, L, E."""
    from mpmath import mp, mpf, polyroots

    mp.dps = 60
    a = mpf(repr(float(alpha)))
    roots = sorted((r.real for r in polyroots([a, 0, -1, 1])), key=abs)
    t1, t2 = roots[0], roots[1]
    l = t1**3 * (1 + mpf("1e-9"))
    eta = 1 + l * a
    inner = 1 - a * eta**2
    k_val = (
        (11 - 3 * a) / (1 - a) ** 2
        + 2 * l * (1 + 3 * a) * (2 + 3 * l * a - a * (2 - l * a) * eta**2) / inner**3
    ) / (1 - 2 * a * eta / inner**2)
    base = 1 + a + 3 * a**2
    l_val = (
        3 * k_val * base * (base + k_val * a**3)
        + a**6 * k_val**3
        + 9 * a * (4 + 3 * a + 3 * a**2)
        + mpf("55.1")
    )
    e_val = (
        eta**5
        * (1 + (1 - 2 * a) * eta) ** 4
        * (1 + a * (eta - 2))
        * (1 + eta + (1 - 3 * a) * eta**2)
        / (2 * inner**4 * (inner**2 - a * eta**2 * (1 + eta - 2 * a * eta) ** 2))
    )
    return {"t1": t1, "t2": t2, "l": l, "K": k_val, "L": l_val, "E": e_val}


def test_second_root_at_alpha_point_one():
    # roots of t^3 - 10 t + 10 sorted by magnitude: ~{1.153, 2.423, -3.577}
    t2 = second_magnitude_root(0.1)
    assert t2 == pytest.approx(2.423, abs=0.01)
    numeric = sorted(np.roots([0.1, 0.0, -1.0, 1.0]).real, key=abs)
    assert t2 == pytest.approx(numeric[1], rel=1e-10)


def test_second_root_small_alpha_asymptotics():
    # t2 ~ alpha^(-1/2) as alpha -> 0
    assert second_magnitude_root(1e-6) == pytest.approx(1000.0, rel=0.05)


def test_cubic_residual_over_grid():
    for alpha in ALPHA_GRID:
        for root in (second_magnitude_root(alpha), smallest_magnitude_root(alpha)):
            assert abs(alpha * root**3 - root + 1.0) <= 1e-10


def test_cubic_domain_errors():
    for alpha in (0.0, -0.01, 0.11):
        with pytest.raises(ParameterError):
            second_magnitude_root(alpha)


def test_symbolic_limits_of_subterms():
    # fixed-l functional form at the degenerate point alpha = 0
    assert kappa(0.0, 0.0) == pytest.approx(11.0, abs=1e-12)
    assert l_bound(0.0, 11.0) == pytest.approx(88.1, abs=1e-12)
    assert e_term(0.0, 1.0) == pytest.approx(24.0, abs=1e-12)


def test_l_bound_exceeds_additive_constant():
    for alpha in ALPHA_GRID:
        ctx = AlphaContext.build(alpha)
        assert ctx.Lterm > 55.1


def test_subterm_positivity_and_invariants_default_rule():
    for alpha in ALPHA_GRID:
        ctx = AlphaContext.build(alpha)
        assert abs(alpha * ctx.t2**3 - ctx.t2 + 1.0) <= 1e-10
        eta = ctx.eta
        assert 1.0 - alpha * eta * eta > 0.0
        assert 1.0 - 2.0 * alpha * eta / (1.0 - alpha * eta * eta) ** 2 > 0.0
        assert (1.0 - alpha * eta**2) ** 2 - alpha * eta**2 * (
            1.0 + eta - 2.0 * alpha * eta
        ) ** 2 > 0.0
        assert ctx.K > 0 and ctx.Eterm > 0 and ctx.Gamma > 0


def test_second_root_rule_has_no_valid_denominators():
    # l just above t2^3 makes the K denominator negative for every alpha in
    # range, so the literal rule can only report bound-validity failure.
    for alpha in (0.01, 0.05, 0.1):
        with pytest.raises(BoundValidityError):
            AlphaContext.build(alpha, l_rule="second-root")


def test_kappa_monotone_smoke():
    assert AlphaContext.build(0.01).K < AlphaContext.build(0.1).K


def test_kappa_finite_positive_at_default_rule():
    ctx = AlphaContext.build(0.05)
    assert math.isfinite(ctx.K) and ctx.K > 0


@pytest.mark.parametrize("alpha", list(ALPHA_GRID))
def test_subterms_match_arbitrary_precision_oracle(alpha):
    ctx = AlphaContext.build(alpha)
    mp = mp_context(alpha)
    assert ctx.K == pytest.approx(float(mp["K"]), rel=1e-9)
    assert ctx.Lterm == pytest.approx(float(mp["L"]), rel=1e-9)
    assert ctx.Eterm == pytest.approx(float(mp["E"]), rel=1e-9)
    f = f_factor(alpha, 19)
    f_oracle = 1 + 3 / 19 + (float(mp["L"] + mp["E"]) / 19 + float(mp["K"])) * alpha
    assert f == pytest.approx(f_oracle, rel=1e-9)


def test_f_factor_trivial_cases():
    assert f_factor(0.0, 10, 0.0) == pytest.approx(1.3, abs=0.0)
    assert f_factor(0.05, 10**9, 0.0) == pytest.approx(1.0, rel=1e-8)
    for m in (1, 5, 50):
        assert f_factor(0.08, m) >= 1.0 + 3.0 / m


def test_f_factor_validates_arguments():
    with pytest.raises(ParameterError):
        f_factor(0.05, 0)
    with pytest.raises(ParameterError):
        f_factor(0.05, 10, 0.06)  # 1 - q1 above alpha
    with pytest.raises(ParameterError):
        f_factor(0.2, 10)


def test_f_factor_optimize_rule_not_larger():
    for alpha in (0.01, 0.05, 0.1):
        assert f_factor(alpha, 14, l_rule="optimize") <= f_factor(alpha, 14) + 1e-12


def test_extrapolation_spot_value():
    # (2*0.99 - 0.98) / (1 + 0.01 + 2e-4)^9
    assert extrapolate_max_cdf(0.99, 0.98, 10) == pytest.approx(0.91271, abs=1e-5)


@given(
    x=st.floats(min_value=0.0, max_value=1.0),
    m=st.integers(min_value=2, max_value=200),
)
def test_extrapolation_fixed_point(x, m):
    assert extrapolate_max_cdf(x, x, m) == pytest.approx(x, abs=1e-14)


def test_extrapolation_boundary_and_clamping():
    assert extrapolate_max_cdf(1.0, 1.0, 7) == 1.0
    assert extrapolate_max_cdf(0.0, 0.0, 7) == 0.0
    # noise-induced y > x stays a probability
    assert 0.0 <= extrapolate_max_cdf(0.95, 0.97, 12) <= 1.0
    assert 0.0 <= extrapolate_max_cdf(0.4, 0.95, 12) <= 1.0
    raw = extrapolate_max_cdf_raw(0.4, 0.95, 12)
    assert raw < 0.0  # diagnostics keep the unclamped value


@settings(max_examples=200)
@given(
    x1=st.floats(min_value=0.9, max_value=1.0),
    x2=st.floats(min_value=0.9, max_value=1.0),
    d1=st.floats(min_value=0.0, max_value=0.1),
    d2=st.floats(min_value=0.0, max_value=0.1),
    m=st.integers(min_value=6, max_value=60),
)
def test_lipschitz_property(x1, x2, d1, d2, m):
    y1 = max(0.9, x1 - d1)
    y2 = max(0.9, x2 - d2)
    lhs = abs(extrapolate_max_cdf(x1, y1, m) - extrapolate_max_cdf(x2, y2, m))
    assert lhs <= (m - 2) * (abs(x1 - x2) + abs(y1 - y2)) + 1e-12


def test_lipschitz_property_bulk():
    rng = np.random.Generator(np.random.PCG64(424242))
    n = 10_000
    x = 0.9 + 0.1 * rng.random((2, n))
    y = np.maximum(0.9, x - 0.1 * rng.random((2, n)))
    ms = rng.integers(6, 61, size=n)
    for i in range(n):
        m = int(ms[i])
        lhs = abs(
            extrapolate_max_cdf(x[0, i], y[0, i], m)
            - extrapolate_max_cdf(x[1, i], y[1, i], m)
        )
        rhs = (m - 2) * (abs(x[0, i] - x[1, i]) + abs(y[0, i] - y[1, i]))
        assert lhs <= rhs + 1e-12


def test_max_cdf_bound_degenerate():
    approx, err = max_cdf_bound(1.0, 1.0, 12)
    assert approx == 1.0 and err == 0.0


def test_max_cdf_bound_spot_value():
    approx, err = max_cdf_bound(0.99, 0.98, 9)
    assert approx == pytest.approx(0.91271, abs=1e-5)
    assert err == pytest.approx(9 * f_factor(0.01, 9) * 1e-4, rel=1e-12)


def test_max_cdf_bound_gate():
    with pytest.raises(TheoremInapplicableError):
        max_cdf_bound(0.85, 0.8, 10)
    with pytest.raises(TheoremInapplicableError):
        max_cdf_bound(0.95, 0.9, 10, alpha=0.2)
    with pytest.raises(TheoremInapplicableError):
        max_cdf_bound(0.95, 0.9, 10, alpha=0.01)  # 1 - q1 > alpha
