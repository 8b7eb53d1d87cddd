"""Quantile estimation, VaR/ES extraction, volatility adjustment, portfolios."""

import numpy as np
import pytest

from riskengine import (
    PortfolioSpec,
    RiskEstimate,
    ScenarioMatrix,
    VolRatio,
    adjust,
    portfolio_returns,
    quantile,
    var_es,
)
from riskengine.errors import (
    InsufficientDataError,
    ShapeError,
    ValidationError,
)


def test_quantile_interpolation_oracle():
    # order statistics 1..100: g = 0.05 * 99 = 4.95 between the 5th and 6th
    x = np.arange(1.0, 101.0)
    assert quantile(x, 0.05) == pytest.approx(5.95, rel=1e-14)
    assert quantile(x, 0.5) == pytest.approx(50.5, rel=1e-14)


def test_quantile_matches_numpy_linear():
    rng = np.random.default_rng(14)
    for _ in range(50):
        n = int(rng.integers(2, 400))
        x = rng.normal(0, 1, n)
        a = float(rng.uniform(0.001, 0.999))
        assert quantile(x, a) == pytest.approx(
            float(np.quantile(x, a, method="linear")), rel=1e-12, abs=1e-15
        )


def test_quantile_input_order_irrelevant():
    x = np.array([5.0, 1.0, 3.0, 2.0, 4.0])
    assert quantile(x, 0.25) == quantile(np.sort(x), 0.25)


def test_quantile_validation():
    with pytest.raises(InsufficientDataError):
        quantile(np.array([1.0]), 0.5)
    with pytest.raises(ValidationError):
        quantile(np.array([1.0, 2.0]), 0.0)
    with pytest.raises(ValidationError):
        quantile(np.array([1.0, 2.0]), 1.0)
    with pytest.raises(ValidationError):
        quantile(np.array([1.0, np.nan]), 0.5)


def test_var_es_oracle_single_extreme_loss():
    x = np.concatenate([[-10.0], np.zeros(99)])
    est = var_es(x, 0.01)
    assert est.var == pytest.approx(-0.1, rel=1e-12)
    assert est.es == pytest.approx(-10.0, rel=1e-14)
    assert est.n_tail == 1
    assert est.alpha == 0.01


def test_var_es_tail_inclusive_on_ties():
    est = var_es(np.full(100, 5.0), 0.05)
    assert est.var == 5.0 and est.es == 5.0
    assert est.n_tail == 100


def test_var_es_minimum_sample_size():
    # alpha = 0.01 needs at least ceil(1/alpha) = 100 scenarios
    with pytest.raises(InsufficientDataError):
        var_es(np.zeros(99) - np.arange(99), 0.01)
    est = var_es(np.arange(100.0), 0.01)
    assert est.n_tail >= 1


def test_var_es_es_never_above_var():
    rng = np.random.default_rng(21)
    for _ in range(40):
        x = rng.standard_t(4, 500) * 0.02
        a = float(rng.uniform(0.01, 0.2))
        est = var_es(x, a)
        assert est.es <= est.var + 1e-15
        assert est.n_tail >= 1


def test_var_es_records_tag_and_seed():
    est = var_es(np.arange(200.0), 0.05, model_tag="demo", seed=123)
    assert est.model_tag == "demo" and est.seed == 123


def test_risk_estimate_validation():
    with pytest.raises(ValidationError):
        RiskEstimate(alpha=0.05, var=-0.01, es=-0.005, n_tail=3, model_tag="t", seed=0)
    with pytest.raises(ValidationError):
        RiskEstimate(alpha=1.5, var=-0.01, es=-0.02, n_tail=3, model_tag="t", seed=0)
    with pytest.raises(ValidationError):
        RiskEstimate(alpha=0.05, var=np.nan, es=-0.02, n_tail=3, model_tag="t", seed=0)
    with pytest.raises(ValidationError):
        RiskEstimate(alpha=0.05, var=-0.01, es=-0.02, n_tail=-1, model_tag="t", seed=0)


def test_adjust_scales_var_and_es():
    est = RiskEstimate(alpha=0.05, var=-0.02, es=-0.03, n_tail=9, model_tag="t", seed=4)
    out = adjust(est, 1.5)
    assert out.var == pytest.approx(-0.03, rel=1e-15)
    assert out.es == pytest.approx(-0.045, rel=1e-15)
    assert (out.alpha, out.n_tail, out.model_tag, out.seed) == (0.05, 9, "t", 4)
    viaratio = adjust(est, VolRatio(short_vol=0.03, long_vol=0.02))
    assert viaratio.var == pytest.approx(-0.03, rel=1e-12)


def test_adjust_rejects_bad_factor():
    est = RiskEstimate(alpha=0.05, var=-0.02, es=-0.03, n_tail=9, model_tag="t", seed=4)
    with pytest.raises(ValidationError):
        adjust(est, 0.0)
    with pytest.raises(ValidationError):
        adjust(est, -2.0)
    with pytest.raises(ValidationError):
        adjust(est, float("inf"))


def test_adjust_commutes_with_scaling_data():
    rng = np.random.default_rng(8)
    x = rng.normal(0, 0.01, 400)
    c = 1.37
    direct = var_es(x * c, 0.05)
    adjusted = adjust(var_es(x, 0.05), c)
    assert adjusted.var == pytest.approx(direct.var, rel=1e-12)
    assert adjusted.es == pytest.approx(direct.es, rel=1e-12)


def test_portfolio_spec_equal_weights():
    p = PortfolioSpec.equal(("A", "B", "C", "D"))
    np.testing.assert_allclose(p.weights, 0.25, rtol=1e-15)
    assert p.tickers == ("A", "B", "C", "D")
    with pytest.raises(ValueError):
        p.weights[0] = 1.0


def test_portfolio_spec_validation():
    with pytest.raises(ValidationError):
        PortfolioSpec(tickers=("A", "B"), weights=np.array([0.6, 0.6]))
    with pytest.raises(ValidationError):
        PortfolioSpec(tickers=("A", "A"), weights=np.array([0.5, 0.5]))
    with pytest.raises(ShapeError):
        PortfolioSpec(tickers=("A", "B"), weights=np.array([1.0]))


def test_portfolio_returns_oracle():
    # sum log returns per asset across the horizon, then weight
    returns = np.array(
        [
            [[0.01, 0.02], [0.03, -0.01]],
            [[0.00, 0.00], [0.02, 0.04]],
        ]
    )  # (2 paths, 2 steps, 2 assets)
    scen = ScenarioMatrix(returns=returns, rescaled=False, seed=0, tickers=("A", "B"))
    port = PortfolioSpec(tickers=("A", "B"), weights=np.array([0.6, 0.4]))
    out = portfolio_returns(scen, port)
    expected = np.array(
        [0.6 * 0.04 + 0.4 * 0.01, 0.6 * 0.02 + 0.4 * 0.04]
    )
    np.testing.assert_allclose(out, expected, rtol=1e-12)


def test_portfolio_returns_ticker_mismatch():
    scen = ScenarioMatrix(
        returns=np.zeros((2, 1, 2)), rescaled=False, seed=0, tickers=("A", "B")
    )
    port = PortfolioSpec(tickers=("B", "A"), weights=np.array([0.5, 0.5]))
    with pytest.raises(ShapeError):
        portfolio_returns(scen, port)


def test_portfolio_returns_without_tickers_skips_check():
    scen = ScenarioMatrix(returns=np.zeros((2, 1, 2)), rescaled=False, seed=0)
    port = PortfolioSpec(tickers=("A", "B"), weights=np.array([0.5, 0.5]))
    np.testing.assert_array_equal(portfolio_returns(scen, port), [0.0, 0.0])
