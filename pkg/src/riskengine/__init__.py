"""Monte Carlo market-risk engine.

Gaussian-mixture scenario models calibrated by EM over rolling return
windows, empirical VaR/ES with short-horizon volatility rescaling, classical
baselines (historical, parametric normal, GBM Monte Carlo) and
Christoffersen coverage backtesting.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateDataError,
    InsufficientDataError,
    NumericError,
    ParseError,
    RiskEngineError,
    RunFailureError,
    ShapeError,
    TailEmptyError,
    ValidationError,
)
from .timeseries import (  # noqa: E402
    DescriptiveStats,
    PricePanel,
    ReturnPanel,
    RollingWindow,
    describe,
    load_prices,
    log_returns,
    slice_window,
)
from .gmm import (  # noqa: E402
    EmSettings,
    FitReport,
    GaussianMixtureModel,
    Responsibilities,
    component_density,
    covariance_floor,
    e_step,
    fit,
    kmeans_init,
    log_likelihood,
    m_step,
    mixture_cdf,
    mixture_density,
    sample,
    stratified_counts,
)
from .scenario import (  # noqa: E402
    GbmParams,
    ScenarioMatrix,
    VolRatio,
    compound,
    rescale,
    simulate_gbm_portfolio,
    simulate_gbm_single,
    simulate_gmm,
    vol_ratios,
)
from .risk import (  # noqa: E402
    PortfolioSpec,
    RiskEstimate,
    adjust,
    portfolio_returns,
    quantile,
    var_es,
)
from .baselines import (  # noqa: E402
    calibrate_gbm,
    gbm_mc_var,
    historical_var,
    parametric_var,
)
from .backtest import (  # noqa: E402
    BacktestReport,
    ChristoffersenResult,
    GofResult,
    HitSequence,
    LossResult,
    christoffersen,
    empirical_density,
    hits,
    ks_test,
    pdf_rmse,
    quadratic_loss,
)
from .engine import (  # noqa: E402
    DayRecord,
    FitDiagnostic,
    RunConfig,
    derive_seed,
    make_scenario_writer,
    report,
    report_sweep,
    run_backtest,
    sweep_sigma_short,
    sweep_verdict_rows,
)

__all__ = [
    "__version__",
    # errors
    "RiskEngineError", "ValidationError", "ShapeError", "ParseError",
    "InsufficientDataError", "DegenerateDataError", "NumericError",
    "TailEmptyError", "ConfigError", "RunFailureError",
    # timeseries
    "PricePanel", "ReturnPanel", "RollingWindow", "DescriptiveStats",
    "load_prices", "log_returns", "describe", "slice_window",
    # gmm
    "GaussianMixtureModel", "Responsibilities", "EmSettings", "FitReport",
    "component_density", "mixture_density", "mixture_cdf", "log_likelihood",
    "e_step", "m_step", "fit", "kmeans_init", "sample", "stratified_counts",
    "covariance_floor",
    # scenario
    "ScenarioMatrix", "GbmParams", "VolRatio", "simulate_gmm",
    "simulate_gbm_single", "simulate_gbm_portfolio", "rescale", "compound",
    "vol_ratios",
    # risk
    "PortfolioSpec", "RiskEstimate", "quantile", "var_es", "adjust",
    "portfolio_returns",
    # baselines
    "historical_var", "parametric_var", "gbm_mc_var", "calibrate_gbm",
    # backtest
    "HitSequence", "ChristoffersenResult", "LossResult", "GofResult",
    "BacktestReport", "hits", "christoffersen", "quadratic_loss", "ks_test",
    "pdf_rmse", "empirical_density",
    # engine
    "RunConfig", "DayRecord", "FitDiagnostic", "run_backtest",
    "sweep_sigma_short", "sweep_verdict_rows", "report", "report_sweep",
    "derive_seed", "make_scenario_writer",
]
