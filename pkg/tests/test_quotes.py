import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ndtri

from volerr.errors import DomainError, InvalidInputError
from volerr.lognormal import CallSpec, LognormalMarket, TotalVolUncertainty, call_bias, call_price
from volerr.quotes import QuoteTriple, RiskPolicy, make_quote, quantile, quote_call

M = LognormalMarket(spot=100.0, sigma0=0.2)
OTM = CallSpec(strike=110.0, maturity=1.0)
U = TotalVolUncertainty(gamma=0.02, bias=0.005, epsilon=1e-4)
POLICY = RiskPolicy(alpha=0.05)

alphas = st.floats(min_value=0.005, max_value=0.45)
epsilons = st.floats(min_value=0.0, max_value=1.0)


def test_quote_triple_frozen():
    q = quote_call(M, OTM, U, POLICY)
    assert q.bid == pytest.approx(4.205620284899694, rel=1e-14)
    assert q.mid == pytest.approx(4.29206986482623, rel=1e-14)
    assert q.ask == pytest.approx(4.378519444752766, rel=1e-14)
    assert q.bias_component == pytest.approx(5.892341634557499e-05, rel=1e-13)
    assert q.spread_component == pytest.approx(0.08644957992653583, rel=1e-13)
    assert not q.below_intrinsic


def test_mid_is_fair_plus_epsilon_bias_exactly():
    q = quote_call(M, OTM, U, POLICY)
    fair = call_price(M, OTM)
    bias = call_bias(M, OTM, U)
    assert q.fair == fair
    assert q.mid == fair + U.epsilon * bias  # exact float identity by construction


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.25])
@pytest.mark.parametrize("mode", ["gaussian", "chebyshev"])
def test_mid_is_alpha_independent(alpha, mode):
    q = quote_call(M, OTM, U, RiskPolicy(alpha=alpha, quantile_mode=mode))
    base = quote_call(M, OTM, U, POLICY)
    assert q.mid == base.mid


def test_quote_brackets_are_symmetric_about_mid():
    q = quote_call(M, OTM, U, POLICY)
    assert q.ask - q.mid == pytest.approx(q.mid - q.bid, abs=1e-15)
    assert q.ask - q.bid == pytest.approx(2.0 * q.spread_component, rel=1e-15)


def test_gaussian_quantile_value():
    assert quantile(RiskPolicy(alpha=0.05)) == pytest.approx(float(ndtri(0.95)), rel=1e-15)


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.25])
def test_chebyshev_spread_dominates_gaussian(alpha):
    """The distribution-free multiplier must be the more conservative one."""
    g = quote_call(M, OTM, U, RiskPolicy(alpha=alpha, quantile_mode="gaussian"))
    c = quote_call(M, OTM, U, RiskPolicy(alpha=alpha, quantile_mode="chebyshev"))
    assert c.spread_component >= g.spread_component
    assert math.sqrt(1.0 / alpha - 1.0) >= float(ndtri(1.0 - alpha))


def test_buyer_seller_symmetry():
    """The buyer's side is the seller's quote of the negated value.

    bid(F, bias, var) = -ask(-F, -bias, var) holds for the assembled
    triple because the spread term is sign-symmetric.
    """
    q = make_quote(fair=4.0, bias=0.3, variance=2.0, epsilon=0.01, policy=POLICY)
    q_neg = make_quote(fair=-4.0, bias=-0.3, variance=2.0, epsilon=0.01, policy=POLICY)
    assert q.bid == pytest.approx(-q_neg.ask, rel=1e-15)
    assert q.ask == pytest.approx(-q_neg.bid, rel=1e-15)


def test_below_intrinsic_flagged_not_floored():
    # In the money with enough vega that the spread crosses intrinsic.
    itm = CallSpec(strike=90.0, maturity=1.0)
    wide = TotalVolUncertainty(gamma=0.02, bias=0.0, epsilon=1.0)
    q = quote_call(M, itm, wide, RiskPolicy(alpha=0.01))
    assert q.below_intrinsic
    assert q.bid < max(M.spot - itm.strike, 0.0)  # reported as computed


def test_zero_epsilon_collapses_quote_to_fair():
    u0 = TotalVolUncertainty(gamma=0.02, bias=0.005, epsilon=0.0)
    q = quote_call(M, OTM, u0, POLICY)
    assert q.bid == q.mid == q.ask == q.fair


def test_policy_validation():
    with pytest.raises(InvalidInputError):
        RiskPolicy(alpha=0.5)
    with pytest.raises(InvalidInputError):
        RiskPolicy(alpha=0.0)
    with pytest.raises(InvalidInputError):
        RiskPolicy(alpha=0.05, quantile_mode="student_t")


def test_make_quote_validation():
    with pytest.raises(DomainError):
        make_quote(fair=1.0, bias=0.0, variance=-1.0, epsilon=0.1, policy=POLICY)
    with pytest.raises(DomainError):
        make_quote(fair=1.0, bias=0.0, variance=1.0, epsilon=-0.1, policy=POLICY)
    with pytest.raises(InvalidInputError):
        make_quote(fair=float("nan"), bias=0.0, variance=1.0, epsilon=0.1, policy=POLICY)


@given(alpha=alphas, eps=epsilons)
def test_quote_ordering(alpha, eps):
    u = TotalVolUncertainty(gamma=0.02, bias=0.005, epsilon=eps)
    q = quote_call(M, OTM, u, RiskPolicy(alpha=alpha))
    assert q.bid <= q.mid <= q.ask


@given(eps=st.floats(min_value=1e-8, max_value=1.0))
def test_spread_scales_as_sqrt_epsilon(eps):
    u = TotalVolUncertainty(gamma=0.02, bias=0.005, epsilon=eps)
    q = quote_call(M, OTM, u, POLICY)
    base = quote_call(M, OTM, TotalVolUncertainty(gamma=0.02, bias=0.005, epsilon=1.0), POLICY)
    assert q.spread_component == pytest.approx(math.sqrt(eps) * base.spread_component, rel=1e-12)
    assert q.bias_component == pytest.approx(eps * base.bias_component, rel=1e-12)
