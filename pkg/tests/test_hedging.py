import math

import numpy as np
import pytest

from volerr.errors import InvalidInputError
from volerr.lognormal import CallSpec, LognormalMarket, call_price
from volerr.payoffs import OptionSpec
from volerr.simulation.basis import constant_vol
from volerr.simulation.config import SimulationConfig
from volerr.simulation.hedging import ensemble_pnls, hedge_pnl
from volerr.simulation.paths import simulate_paths
from volerr.simulation.pricers import ConstantVolCallPricer, SmoothedCallPricer

TRUE = constant_vol(0.2)
CALL = OptionSpec("call", 100.0, 1.0)
PRICER = ConstantVolCallPricer(100.0, 1.0)


def _ensemble(n_steps, n_paths=4000, seed=31):
    cfg = SimulationConfig(n_paths=n_paths, n_steps=n_steps, seed=seed, horizon=1.0)
    return simulate_paths(TRUE, 0.0, 100.0, cfg)


def test_correct_model_pnl_centres_on_zero():
    ens = _ensemble(128)
    pnl = ensemble_pnls(ens, PRICER, TRUE, CALL)
    se = pnl.std(ddof=1) / math.sqrt(pnl.size)
    assert abs(pnl.mean()) < 4.0 * se


def test_pnl_spread_shrinks_as_the_grid_refines():
    coarse = ensemble_pnls(_ensemble(16), PRICER, TRUE, CALL)
    fine = ensemble_pnls(_ensemble(128), PRICER, TRUE, CALL)
    # discretisation variance is O(1/n_steps); an 8x refinement should
    # cut the spread by well over half
    assert fine.std(ddof=1) < 0.5 * coarse.std(ddof=1)


def test_overhedging_gains_the_price_gap():
    # selling at sigma = 0.22 while the path runs at 0.2 books the price
    # difference up front; the hedge sum stays a martingale, so the mean
    # P&L equals that gap up to Monte Carlo noise
    est = constant_vol(0.22)
    ens = _ensemble(128)
    pnl = ensemble_pnls(ens, PRICER, est, CALL)
    gap = call_price(LognormalMarket(100.0, 0.22), CallSpec(100.0, 1.0)) - call_price(
        LognormalMarket(100.0, 0.2), CallSpec(100.0, 1.0)
    )
    se = pnl.std(ddof=1) / math.sqrt(pnl.size)
    assert pnl.mean() == pytest.approx(gap, abs=4.0 * se)
    assert pnl.mean() > 0.5


def test_single_path_agrees_with_ensemble_rows():
    est = constant_vol(0.22)
    ens = _ensemble(32, n_paths=50)
    pnl = ensemble_pnls(ens, PRICER, est, CALL)
    for i in (0, 7, 49):
        assert hedge_pnl(ens.spots[i], ens.times, PRICER, est, CALL) == pnl[i]


def test_smoothed_payoff_hedges_flat_at_the_true_sigma():
    pay = OptionSpec("smoothed_call", 100.0, 1.0, kappa=0.5)
    pricer = SmoothedCallPricer(100.0, 1.0, 0.5)
    ens = _ensemble(128)
    pnl = ensemble_pnls(ens, pricer, TRUE, pay)
    se = pnl.std(ddof=1) / math.sqrt(pnl.size)
    assert abs(pnl.mean()) < 4.0 * se


def test_hedge_pnl_validates_inputs():
    times = np.linspace(0.0, 1.0, 4)
    with pytest.raises(InvalidInputError):
        hedge_pnl(np.ones((2, 4)), times, PRICER, TRUE, CALL)
    with pytest.raises(InvalidInputError):
        hedge_pnl(np.ones(3), times, PRICER, TRUE, CALL)
    with pytest.raises(InvalidInputError):
        hedge_pnl(np.ones(1), np.zeros(1), PRICER, TRUE, CALL)
