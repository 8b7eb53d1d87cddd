"""Classical one-day VaR baselines: historical, parametric normal, GBM-MC.

Each calibrates on a rolling window of log returns and returns a
RiskEstimate tagged "hs", "param" or "gbm_mc". The historical estimator is
the empirical quantile of the window itself and deliberately delegates to
risk.var_es so there is exactly one quantile implementation in the package.
"""

from __future__ import annotations

import numpy as np

from .distributions import normal_pdf, normal_ppf
from .errors import DegenerateDataError, InsufficientDataError, NumericError, ValidationError
from .risk import PortfolioSpec, RiskEstimate, var_es
from .scenario import compound, simulate_gbm_portfolio
from .timeseries import ReturnPanel


def _as_series(window_returns) -> np.ndarray:
    if isinstance(window_returns, ReturnPanel):
        if window_returns.n_assets != 1:
            raise ValidationError(
                "baseline estimators take a single return series; "
                f"panel has {window_returns.n_assets} assets"
            )
        return window_returns.returns[:, 0]
    x = np.asarray(window_returns, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-D return series, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("window contains non-finite returns")
    return x


def historical_var(window_returns, alpha: float, min_len: int = 100) -> RiskEstimate:
    """Historical-simulation VaR/ES: the window's own empirical quantile."""
    x = _as_series(window_returns)
    if x.size < min_len:
        raise InsufficientDataError(
            f"historical window has {x.size} points, need {min_len}"
        )
    est = var_es(x, alpha, model_tag="hs", seed=-1)
    return est


def parametric_var(window_returns, alpha: float) -> RiskEstimate:
    """Normal (variance-covariance) VaR with closed-form ES.

    var = mu + sigma z_alpha, es = mu - sigma phi(z_alpha)/alpha, with mu and
    sigma the window's population moments. n_tail is 0: the ES here is
    analytic, no scenario tail exists.
    """
    x = _as_series(window_returns)
    if x.size < 2:
        raise InsufficientDataError(
            f"parametric window needs at least 2 points, got {x.size}"
        )
    mu = float(np.mean(x))
    sigma = float(np.std(x))
    if sigma == 0.0:
        raise DegenerateDataError("window has zero variance")
    z = normal_ppf(alpha)
    return RiskEstimate(
        alpha=alpha,
        var=mu + sigma * z,
        es=mu - sigma * normal_pdf(z) / alpha,
        n_tail=0,
        model_tag="param",
        seed=-1,
    )


def calibrate_gbm(window_returns, dt: float = 1.0):
    """Per-asset drift/volatility and shock correlation from a window.

    Drifts are mean log return / dt, volatilities population std / sqrt(dt).
    The correlation matrix comes from the same window; a single asset gets
    the 1x1 identity.
    """
    if isinstance(window_returns, ReturnPanel):
        X = window_returns.returns
    else:
        X = np.asarray(window_returns, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientDataError("calibration window needs >= 2 rows")
    if not np.all(np.isfinite(X)):
        raise ValidationError("window contains non-finite returns")
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    sigmas_step = np.std(X, axis=0)
    if np.any(sigmas_step == 0.0):
        bad = int(np.argmax(sigmas_step == 0.0))
        raise DegenerateDataError(f"asset column {bad} has zero variance")
    mus = X.mean(axis=0) / dt
    sigmas = sigmas_step / np.sqrt(dt)
    if X.shape[1] == 1:
        corr = np.ones((1, 1))
    else:
        corr = np.corrcoef(X, rowvar=False)
    return mus, sigmas, corr


def gbm_mc_var(
    window_returns,
    alpha: float,
    m: int,
    seed: int,
    portfolio: PortfolioSpec | None = None,
    horizon: int = 1,
    dt: float = 1.0,
) -> RiskEstimate:
    """GBM Monte Carlo VaR/ES calibrated on a return window.

    Simulates correlated arithmetic-Euler paths from unit initial prices and
    evaluates the portfolio log return ln(w . S_T) (price-space
    aggregation; w . S_0 = 1 when weights sum to one). A single asset, or
    portfolio=None with a one-column window, reduces to the asset itself.
    """
    mus, sigmas, corr = calibrate_gbm(window_returns, dt=dt)
    n_assets = mus.shape[0]
    if portfolio is None:
        if n_assets != 1:
            raise ValidationError(
                f"window has {n_assets} assets; a portfolio spec is required"
            )
        weights = np.ones(1)
    else:
        if portfolio.weights.shape[0] != n_assets:
            raise ValidationError(
                f"{portfolio.weights.shape[0]} portfolio weights for "
                f"{n_assets} window assets"
            )
        weights = portfolio.weights
    try:
        scen = simulate_gbm_portfolio(
            np.ones(n_assets), mus, sigmas, corr, m, horizon, seed, dt=dt
        )
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"shock correlation matrix is not positive definite ({exc}); "
            f"check the window for collinear or constant assets"
        ) from exc
    terminal = compound(scen, np.ones(n_assets))
    value = terminal @ weights
    if np.any(value <= 0.0):
        raise NumericError(
            "portfolio value went non-positive in simulation; log return "
            "undefined (short weights with coarse steps?)"
        )
    return var_es(np.log(value), alpha, model_tag="gbm_mc", seed=seed)
