"""Scenario generation: mixture draws, GBM paths, volatility rescaling.

Two GBM discretizations are implemented literally and never mixed. The
single-asset form is exponential, S_t = S_{t-1} exp(mu dt + sigma eps
sqrt(dt)), so prices stay positive by construction. The portfolio form is
the arithmetic Euler step S_t = S_{t-1}(1 + mu dt) + S_{t-1} sigma xi
sqrt(dt) with correlated shocks xi = A eps, where A is the Cholesky factor
of the shock correlation matrix. The two agree in distribution only up to
O(dt), which is why neither is expressed through the other.

Reproducibility: every simulator takes an integer seed and consumes draws
step by step from numpy's default Generator, so a run with horizon T shares
its first T' < T steps with a shorter run under the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmm as _gmm
from .errors import (
    DegenerateDataError,
    NumericError,
    ShapeError,
    ValidationError,
)
from .timeseries import ReturnPanel


@dataclass(frozen=True, eq=False)
class ScenarioMatrix:
    """Simulated log returns, shape (paths, horizon, assets)."""

    returns: np.ndarray
    rescaled: bool
    seed: int
    tickers: tuple[str, ...] | None = None

    def __post_init__(self):
        r = np.array(self.returns, dtype=float)
        if r.ndim != 3:
            raise ShapeError(
                f"scenario returns must be (paths, horizon, assets), "
                f"got ndim={r.ndim}"
            )
        if min(r.shape) < 1:
            raise ValidationError(f"degenerate scenario shape {r.shape}")
        if not np.all(np.isfinite(r)):
            raise ValidationError("scenario returns contain non-finite entries")
        if self.tickers is not None:
            object.__setattr__(self, "tickers", tuple(self.tickers))
            if len(self.tickers) != r.shape[2]:
                raise ShapeError(
                    f"{len(self.tickers)} tickers for {r.shape[2]} asset columns"
                )
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)

    @property
    def n_paths(self) -> int:
        return self.returns.shape[0]

    @property
    def horizon(self) -> int:
        return self.returns.shape[1]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[2]


@dataclass(frozen=True)
class GbmParams:
    """Drift and volatility per unit time, plus the step size dt."""

    mu: float
    sigma: float
    dt: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma) and np.isfinite(self.dt)):
            raise ValidationError("GBM parameters must be finite")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class VolRatio:
    """Short-window to long-window volatility ratio used for rescaling."""

    short_vol: float
    long_vol: float
    ratio: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.short_vol) and np.isfinite(self.long_vol)):
            raise ValidationError("volatilities must be finite")
        if self.short_vol < 0 or self.long_vol < 0:
            raise ValidationError("volatilities must be non-negative")
        if self.long_vol == 0.0:
            raise DegenerateDataError("long-window volatility is zero")
        object.__setattr__(self, "ratio", self.short_vol / self.long_vol)


def vol_ratios(long_slice: ReturnPanel, short_slice: ReturnPanel) -> list[VolRatio]:
    """Per-asset VolRatio from two aligned return slices (population std)."""
    if long_slice.tickers != short_slice.tickers:
        raise ShapeError("long and short slices cover different tickers")
    out = []
    for c in range(long_slice.n_assets):
        out.append(
            VolRatio(
                short_vol=float(np.std(short_slice.returns[:, c])),
                long_vol=float(np.std(long_slice.returns[:, c])),
            )
        )
    return out


def _check_counts(m: int, horizon: int):
    if m < 1:
        raise ValidationError(f"need at least one path, got {m}")
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")


def simulate_gmm(
    model: _gmm.GaussianMixtureModel,
    m: int,
    horizon: int,
    seed: int,
    tickers: tuple[str, ...] | None = None,
) -> ScenarioMatrix:
    """Draw m x horizon i.i.d. step returns from a fitted mixture.

    Each step consumes one stratified sample() call on a Generator seeded
    once from ``seed``; steps are drawn in time order.
    """
    _check_counts(m, horizon)
    gen = np.random.default_rng(seed)
    steps = [_gmm.sample(model, m, gen, allocation="stratified") for _ in range(horizon)]
    returns = np.stack(steps, axis=1)
    return ScenarioMatrix(returns=returns, rescaled=False, seed=int(seed), tickers=tickers)


def simulate_gbm_single(
    s0: float,
    params: GbmParams,
    m: int,
    horizon: int,
    seed: int,
) -> tuple[ScenarioMatrix, np.ndarray]:
    """Exponential-form GBM paths for one asset.

    Returns the per-step log returns (m, horizon, 1) and the price paths
    (m, horizon + 1) including the initial price column. Per step, the
    Generator yields m standard normals.
    """
    if not np.isfinite(s0) or s0 <= 0:
        raise ValidationError(f"initial price must be positive, got {s0}")
    _check_counts(m, horizon)
    gen = np.random.default_rng(seed)
    drift = params.mu * params.dt
    scale = params.sigma * np.sqrt(params.dt)
    log_steps = np.empty((m, horizon))
    for t in range(horizon):
        log_steps[:, t] = drift + scale * gen.standard_normal(m)
    prices = np.empty((m, horizon + 1))
    prices[:, 0] = s0
    prices[:, 1:] = s0 * np.exp(np.cumsum(log_steps, axis=1))
    matrix = ScenarioMatrix(
        returns=log_steps[:, :, None], rescaled=False, seed=int(seed)
    )
    return matrix, prices


def simulate_gbm_portfolio(
    s0,
    mus,
    sigmas,
    corr,
    m: int,
    horizon: int,
    seed: int,
    dt: float = 1.0,
    tickers: tuple[str, ...] | None = None,
) -> ScenarioMatrix:
    """Arithmetic-Euler GBM paths for several correlated assets.

    Step: S_t = S_{t-1} (1 + mu dt) + S_{t-1} sigma xi sqrt(dt), with
    xi = A eps and A the Cholesky factor of corr. Per step, the Generator
    yields an (m, n_assets) block of standard normals. Raises
    numpy.linalg.LinAlgError when corr cannot be factorized (no repair is
    attempted) and NumericError if any path's price hits zero or below,
    which the arithmetic step does not preclude.
    """
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    corr = np.atleast_2d(np.asarray(corr, dtype=float))
    n = s0.shape[0]
    if mus.shape != (n,) or sigmas.shape != (n,) or corr.shape != (n, n):
        raise ShapeError(
            f"parameter shapes disagree: s0 {s0.shape}, mus {mus.shape}, "
            f"sigmas {sigmas.shape}, corr {corr.shape}"
        )
    if np.any(s0 <= 0) or not np.all(np.isfinite(s0)):
        raise ValidationError("initial prices must be positive and finite")
    if np.any(sigmas < 0) or not np.all(np.isfinite(sigmas)) or not np.all(np.isfinite(mus)):
        raise ValidationError("mus/sigmas must be finite, sigmas non-negative")
    if dt <= 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if np.max(np.abs(corr - corr.T)) > 1e-12:
        raise ValidationError("correlation matrix must be symmetric")
    if np.max(np.abs(np.diag(corr) - 1.0)) > 1e-12:
        raise ValidationError("correlation matrix must have a unit diagonal")
    _check_counts(m, horizon)

    A = np.linalg.cholesky(corr)
    gen = np.random.default_rng(seed)
    sqdt = np.sqrt(dt)
    prices = np.tile(s0, (m, 1))
    log_steps = np.empty((m, horizon, n))
    for t in range(horizon):
        eps = gen.standard_normal((m, n))
        xi = eps @ A.T
        nxt = prices * (1.0 + mus * dt) + prices * sigmas * xi * sqdt
        if np.any(nxt <= 0.0):
            raise NumericError(
                f"arithmetic Euler step produced a non-positive price at "
                f"step {t + 1}; parameters too coarse for this step size"
            )
        log_steps[:, t, :] = np.log(nxt / prices)
        prices = nxt
    return ScenarioMatrix(
        returns=log_steps, rescaled=False, seed=int(seed), tickers=tickers
    )


def rescale(scenarios: ScenarioMatrix, ratios) -> ScenarioMatrix:
    """Multiply each asset's per-step returns by its volatility ratio.

    Applied before any compounding, so for multi-step horizons every step is
    scaled. Accepts VolRatio objects or bare positive floats, one per asset
    column. The input matrix is left untouched.
    """
    factors = np.array(
        [r.ratio if isinstance(r, VolRatio) else float(r) for r in ratios],
        dtype=float,
    )
    if factors.shape != (scenarios.n_assets,):
        raise ShapeError(
            f"{factors.shape[0]} ratios for {scenarios.n_assets} asset columns"
        )
    if np.any(factors <= 0) or not np.all(np.isfinite(factors)):
        raise ValidationError("rescale factors must be positive and finite")
    return ScenarioMatrix(
        returns=scenarios.returns * factors,
        rescaled=True,
        seed=scenarios.seed,
        tickers=scenarios.tickers,
    )


def compound(scenarios: ScenarioMatrix, s0) -> np.ndarray:
    """Terminal prices s0 * exp(sum of step log returns), shape (m, assets)."""
    s0 = np.atleast_1d(np.asarray(s0, dtype=float))
    if s0.shape != (scenarios.n_assets,):
        raise ShapeError(
            f"s0 has {s0.shape[0]} entries for {scenarios.n_assets} assets"
        )
    if np.any(s0 <= 0) or not np.all(np.isfinite(s0)):
        raise ValidationError("initial prices must be positive and finite")
    return s0 * np.exp(scenarios.returns.sum(axis=1))
