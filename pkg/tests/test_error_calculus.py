import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from volerr.error_calculus import (
    GaussianExpansion,
    SmoothFunctionJet,
    UncertainParameter,
    chebyshev_tail,
    combine_independent,
    gaussian_expansion,
    propagate,
)
from volerr.errors import DomainError, InvalidInputError

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
small_pos = st.floats(min_value=1e-8, max_value=10.0)


def test_linear_map_scales_gamma_quadratically_and_bias_linearly():
    u = UncertainParameter(value=2.0, gamma=0.3, bias=0.1, epsilon=0.5)
    out = propagate(SmoothFunctionJet(value=7.0, d1=3.0, d2=0.0), u)
    assert out.value == 7.0
    assert out.gamma == pytest.approx(9.0 * 0.3, rel=1e-15)
    assert out.bias == pytest.approx(3.0 * 0.1, rel=1e-15)
    assert out.epsilon == 0.5


def test_curvature_enters_bias_not_gamma():
    u = UncertainParameter(value=1.0, gamma=0.4, bias=0.0)
    out = propagate(SmoothFunctionJet(value=0.0, d1=0.0, d2=2.0), u)
    assert out.gamma == 0.0
    assert out.bias == pytest.approx(0.5 * 2.0 * 0.4)


def test_exponential_bias_matches_exact_lognormal_mean():
    """Independent oracle for the bias rule.

    For X ~ N(x + eps*b, eps*g) the exact mean of exp(X) is
    exp(x + eps*b + eps*g/2), so (E[exp X] - exp x) / eps converges to
    exp(x) * (b + g/2) as eps -> 0, which is exactly what the chain rule
    predicts for the jet (e^x, e^x, e^x).
    """
    x, g, b = 0.7, 0.35, -0.12
    jet = SmoothFunctionJet(value=math.exp(x), d1=math.exp(x), d2=math.exp(x))
    predicted = propagate(jet, UncertainParameter(value=x, gamma=g, bias=b)).bias
    for eps in (1e-6, 1e-8):
        exact = math.exp(x + eps * b + 0.5 * eps * g)
        slope = (exact - math.exp(x)) / eps
        assert slope == pytest.approx(predicted, rel=50.0 * eps)


def test_exponential_gamma_matches_exact_lognormal_variance():
    x, g = 0.3, 0.5
    jet = SmoothFunctionJet(value=math.exp(x), d1=math.exp(x), d2=math.exp(x))
    predicted = propagate(jet, UncertainParameter(value=x, gamma=g)).gamma
    eps = 1e-8
    # Var[exp N(m, s^2)] = (exp(s^2) - 1) exp(2m + s^2)
    s2 = eps * g
    exact_var = (math.exp(s2) - 1.0) * math.exp(2.0 * x + s2)
    assert exact_var / eps == pytest.approx(predicted, rel=1e-6)


def test_propagation_composes_like_the_chain_rule():
    """propagate(g at f(x)) after propagate(f at x) equals propagate(g.f at x)."""
    x = 1.3
    u = UncertainParameter(value=x, gamma=0.2, bias=0.05, epsilon=1.0)

    # f = x^2, g = sin; g.f = sin(x^2)
    f_jet = SmoothFunctionJet(value=x * x, d1=2.0 * x, d2=2.0)
    y = x * x
    g_jet = SmoothFunctionJet(value=math.sin(y), d1=math.cos(y), d2=-math.sin(y))
    comp_d1 = math.cos(y) * 2.0 * x
    comp_d2 = -math.sin(y) * (2.0 * x) ** 2 + math.cos(y) * 2.0
    gf_jet = SmoothFunctionJet(value=math.sin(y), d1=comp_d1, d2=comp_d2)

    two_step = propagate(g_jet, propagate(f_jet, u))
    one_step = propagate(gf_jet, u)
    assert two_step.gamma == pytest.approx(one_step.gamma, rel=1e-14)
    assert two_step.bias == pytest.approx(one_step.bias, rel=1e-14)


def test_combine_independent_adds_descriptors():
    parts = [
        UncertainParameter(value=0.0, gamma=0.1, bias=0.02, epsilon=0.3),
        UncertainParameter(value=0.0, gamma=0.25, bias=-0.01, epsilon=0.3),
    ]
    out = combine_independent(parts, value=5.0)
    assert out.value == 5.0
    assert out.gamma == pytest.approx(0.35)
    assert out.bias == pytest.approx(0.01)
    assert out.epsilon == 0.3


def test_combine_independent_rejects_mixed_epsilon():
    parts = [
        UncertainParameter(value=0.0, gamma=0.1, epsilon=0.3),
        UncertainParameter(value=0.0, gamma=0.1, epsilon=0.4),
    ]
    with pytest.raises(InvalidInputError):
        combine_independent(parts)


def test_combine_independent_empty_is_certain():
    out = combine_independent([], value=2.0)
    assert (out.gamma, out.bias, out.epsilon) == (0.0, 0.0, 0.0)


def test_gaussian_expansion_mean_and_stddev():
    u = UncertainParameter(value=10.0, gamma=4.0, bias=3.0, epsilon=0.25)
    law = gaussian_expansion(u)
    assert law == GaussianExpansion(mean=10.75, stddev=1.0)


def test_gaussian_expansion_agrees_with_sampling(rng):
    u = UncertainParameter(value=1.0, gamma=0.09, bias=0.5, epsilon=0.04)
    law = gaussian_expansion(u)
    samples = law.mean + law.stddev * rng.standard_normal(200_000)
    assert samples.mean() == pytest.approx(1.02, abs=4.0 * law.stddev / math.sqrt(200_000))
    assert samples.std() == pytest.approx(law.stddev, rel=0.02)


@pytest.mark.parametrize("k,expected", [(1.0, 0.5), (2.0, 0.2), (3.0, 0.1)])
def test_chebyshev_tail_values(k, expected):
    assert chebyshev_tail(k) == pytest.approx(expected)


def test_chebyshev_tail_rejects_small_k():
    with pytest.raises(DomainError):
        chebyshev_tail(0.5)


def test_chebyshev_tail_bounds_a_skewed_law(rng):
    """The bound is distribution free; check it on a centered exponential."""
    x = rng.exponential(1.0, 400_000) - 1.0  # mean 0, sd 1
    for k in (1.0, 2.0, 3.0):
        freq = float(np.mean(x >= k))
        assert freq <= chebyshev_tail(k)


def test_invalid_inputs_rejected():
    with pytest.raises(InvalidInputError):
        UncertainParameter(value=1.0, gamma=-0.1)
    with pytest.raises(InvalidInputError):
        UncertainParameter(value=1.0, gamma=0.1, epsilon=-1.0)
    with pytest.raises(InvalidInputError):
        UncertainParameter(value=float("nan"), gamma=0.1)
    with pytest.raises(InvalidInputError):
        SmoothFunctionJet(value=0.0, d1=float("inf"), d2=0.0)


@given(d1=finite, d2=finite, gamma=small_pos, bias=finite)
def test_propagated_gamma_is_never_negative(d1, d2, gamma, bias):
    u = UncertainParameter(value=0.0, gamma=gamma, bias=bias)
    out = propagate(SmoothFunctionJet(value=0.0, d1=d1, d2=d2), u)
    assert out.gamma >= 0.0


@given(c=st.floats(min_value=0.1, max_value=10.0), gamma=small_pos, bias=finite)
def test_propagation_is_scale_equivariant(c, gamma, bias):
    """Scaling the map by c scales gamma by c^2 and bias by c."""
    u = UncertainParameter(value=1.0, gamma=gamma, bias=bias)
    jet = SmoothFunctionJet(value=2.0, d1=1.7, d2=-0.6)
    scaled = SmoothFunctionJet(value=2.0 * c, d1=1.7 * c, d2=-0.6 * c)
    base = propagate(jet, u)
    out = propagate(scaled, u)
    assert out.gamma == pytest.approx(c * c * base.gamma, rel=1e-12)
    assert out.bias == pytest.approx(c * base.bias, rel=1e-12, abs=1e-15)
