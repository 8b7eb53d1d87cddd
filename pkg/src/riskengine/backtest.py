"""VaR backtesting: violation tests, loss scoring, goodness of fit.

Christoffersen framework: with x violations in n days at level p,

    LR_uc = -2 ln[(1-p)^(n-x) p^x] + 2 ln[(1-x/n)^(n-x) (x/n)^x]

tests unconditional coverage against the binomial likelihood, and the
independence statistic compares a first-order Markov chain of the hit
sequence against a constant violation probability:

    LR_ind = -2 ln[(1-pi2)^(n00+n10) pi2^(n01+n11)]
             + 2 ln[(1-pi01)^n00 pi01^n01 (1-pi11)^n10 pi11^n11]

with nab the count of transitions a -> b, pi01 = n01/(n00+n01),
pi11 = n11/(n10+n11) and pi2 = (n01+n11)/(n-1). Terms follow the
0 * ln 0 = 0 convention, so degenerate sequences (no hits at all) yield
LR_ind = 0 rather than NaN. LR_cc = LR_uc + LR_ind. Both LR statistics are
non-negative because each restricted model is nested in its alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .distributions import chi2_sf, kolmogorov_sf
from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    ShapeError,
    ValidationError,
)

VERDICT_REJECTED = "rejected"
VERDICT_NOT_REJECTED = "not_rejected"
VERDICT_INSUFFICIENT = "insufficient"


@dataclass(frozen=True, eq=False)
class HitSequence:
    """Boolean violation indicators, hit_t = (r_t <= VaR_t), plus the level."""

    hits: np.ndarray
    alpha: float

    def __post_init__(self):
        h = np.asarray(self.hits)
        if h.dtype != bool:
            raise ValidationError("hits must be a boolean array")
        if h.ndim != 1 or h.size < 1:
            raise ShapeError("hits must be a non-empty 1-D array")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "hits", h)

    @property
    def n(self) -> int:
        return self.hits.size

    @property
    def x(self) -> int:
        return int(self.hits.sum())


@dataclass(frozen=True)
class ChristoffersenResult:
    """Coverage test statistics for one hit sequence."""

    n: int
    x: int
    n00: int
    n01: int
    n10: int
    n11: int
    pi01: float
    pi11: float
    pi2: float
    lr_uc: float
    lr_ind: float
    lr_cc: float
    p_uc: float
    p_ind: float
    p_cc: float
    verdict: str

    def __post_init__(self):
        if self.n00 + self.n01 + self.n10 + self.n11 != self.n - 1:
            raise ValidationError("transition counts must sum to n - 1")
        for name in ("pi01", "pi11", "pi2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} = {v} outside [0, 1]")
        for name in ("lr_uc", "lr_ind", "lr_cc"):
            if getattr(self, name) < 0.0:
                raise ValidationError(f"{name} must be >= 0")
        for name in ("p_uc", "p_ind", "p_cc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} = {v} outside [0, 1]")
        if abs(self.lr_cc - (self.lr_uc + self.lr_ind)) > 1e-9:
            raise ValidationError("lr_cc must equal lr_uc + lr_ind")
        if self.verdict not in (VERDICT_REJECTED, VERDICT_NOT_REJECTED):
            raise ValidationError(f"unknown verdict {self.verdict!r}")


@dataclass(frozen=True, eq=False)
class LossResult:
    """Quadratic loss: per-day I(hit) * (1 + (r - VaR)^2) and its mean."""

    total: float
    per_day: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.per_day, dtype=float)
        if p.ndim != 1:
            raise ShapeError("per_day must be 1-D")
        if abs(self.total - float(p.mean())) > 1e-12 * max(1.0, abs(self.total)):
            raise ValidationError("total must be the mean of per_day")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "per_day", p)


@dataclass(frozen=True)
class GofResult:
    """Distribution-fit summary; rmse is None until a density grid is scored."""

    ks_stat: float
    ks_pvalue: float
    rmse: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ks_stat <= 1.0 + 1e-12:
            raise ValidationError(f"ks_stat {self.ks_stat} outside [0, 1]")
        if not 0.0 <= self.ks_pvalue <= 1.0:
            raise ValidationError(f"ks_pvalue {self.ks_pvalue} outside [0, 1]")
        if self.rmse is not None and self.rmse < 0:
            raise ValidationError(f"rmse must be >= 0, got {self.rmse}")


def hits(realized, var_series, alpha: float) -> HitSequence:
    """Violation indicators for a realized return series against its VaRs."""
    r = np.asarray(realized, dtype=float).ravel()
    v = np.asarray(var_series, dtype=float).ravel()
    if r.shape != v.shape:
        raise ShapeError(f"{r.size} realized returns but {v.size} VaR values")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
        raise ValidationError("realized/VaR series contain non-finite entries")
    return HitSequence(hits=r <= v, alpha=alpha)


def _transitions(h: np.ndarray) -> tuple[int, int, int, int]:
    prev = h[:-1]
    cur = h[1:]
    n00 = int(np.sum(~prev & ~cur))
    n01 = int(np.sum(~prev & cur))
    n10 = int(np.sum(prev & ~cur))
    n11 = int(np.sum(prev & cur))
    return n00, n01, n10, n11


def christoffersen(
    seq: HitSequence,
    df_uc: int = 1,
    df_ind: int = 1,
    df_cc: int = 2,
    reject_level: float = 0.01,
) -> ChristoffersenResult:
    """Unconditional-coverage, independence and combined LR tests.

    The verdict is "rejected" when min(p_uc, p_ind) < reject_level; the
    combined statistic is reported but does not join the verdict. Requires
    at least two observations (one transition).
    """
    if seq.n < 2:
        raise InsufficientDataError(
            f"independence statistics need n >= 2 days, got {seq.n}"
        )
    if not 0.0 < reject_level < 1.0:
        raise ValidationError(f"reject_level must be in (0, 1), got {reject_level}")
    h = seq.hits
    n, x = seq.n, seq.x
    p = seq.alpha

    phat = x / n
    lr_uc = -2.0 * (xlogy(n - x, 1.0 - p) + xlogy(x, p)) + 2.0 * (
        xlogy(n - x, 1.0 - phat) + xlogy(x, phat)
    )
    lr_uc = max(float(lr_uc), 0.0)

    n00, n01, n10, n11 = _transitions(h)
    pi01 = n01 / (n00 + n01) if n00 + n01 > 0 else 0.0
    pi11 = n11 / (n10 + n11) if n10 + n11 > 0 else 0.0
    pi2 = (n01 + n11) / (n - 1)
    log_l0 = xlogy(n00 + n10, 1.0 - pi2) + xlogy(n01 + n11, pi2)
    log_l1 = (
        xlogy(n00, 1.0 - pi01)
        + xlogy(n01, pi01)
        + xlogy(n10, 1.0 - pi11)
        + xlogy(n11, pi11)
    )
    lr_ind = max(float(2.0 * (log_l1 - log_l0)), 0.0)
    lr_cc = lr_uc + lr_ind

    p_uc = chi2_sf(lr_uc, df_uc)
    p_ind = chi2_sf(lr_ind, df_ind)
    p_cc = chi2_sf(lr_cc, df_cc)
    verdict = (
        VERDICT_REJECTED
        if min(p_uc, p_ind) < reject_level
        else VERDICT_NOT_REJECTED
    )
    return ChristoffersenResult(
        n=n,
        x=x,
        n00=n00,
        n01=n01,
        n10=n10,
        n11=n11,
        pi01=pi01,
        pi11=pi11,
        pi2=pi2,
        lr_uc=lr_uc,
        lr_ind=lr_ind,
        lr_cc=lr_cc,
        p_uc=p_uc,
        p_ind=p_ind,
        p_cc=p_cc,
        verdict=verdict,
    )


def quadratic_loss(realized, var_series) -> LossResult:
    """Mean quadratic loss; only violation days contribute, 1 + gap^2 each."""
    r = np.asarray(realized, dtype=float).ravel()
    v = np.asarray(var_series, dtype=float).ravel()
    if r.shape != v.shape:
        raise ShapeError(f"{r.size} realized returns but {v.size} VaR values")
    if r.size == 0:
        raise InsufficientDataError("empty realized series")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
        raise ValidationError("realized/VaR series contain non-finite entries")
    gap = r - v
    per_day = np.where(r <= v, 1.0 + gap * gap, 0.0)
    return LossResult(total=float(per_day.mean()), per_day=per_day)


def ks_test(samples, cdf) -> GofResult:
    """One-sample Kolmogorov-Smirnov test against a model CDF callable.

    D_n = max(D+, D-) over the order statistics, with the p-value from the
    asymptotic Kolmogorov distribution of sqrt(n) D_n. The callable must be
    a proper CDF on the sample range: values in [0, 1], non-decreasing.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 1:
        raise InsufficientDataError("KS test needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValidationError("samples contain non-finite entries")
    f = np.asarray(cdf(x), dtype=float)
    if f.shape != x.shape:
        raise ValidationError(
            f"cdf returned shape {f.shape} for {n} points"
        )
    if not np.all(np.isfinite(f)):
        raise ValidationError("cdf returned non-finite values")
    if np.any(f < -1e-9) or np.any(f > 1.0 + 1e-9):
        raise ValidationError("cdf values fall outside [0, 1]")
    if np.any(np.diff(f) < -1e-12):
        raise ValidationError("cdf callable is not non-decreasing on the sample")
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    d = max(d_plus, d_minus, 0.0)
    return GofResult(ks_stat=d, ks_pvalue=kolmogorov_sf(np.sqrt(n) * d))


def empirical_density(data, grid=None) -> tuple[np.ndarray, np.ndarray]:
    """Histogram density estimate evaluated at bin centers.

    With grid=None the bin width follows the Freedman-Diaconis rule
    (2 IQR / n^(1/3)) over the data range. An explicit grid (>= 2 equally
    spaced points) is interpreted as the desired bin centers.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 8:
        raise InsufficientDataError(
            f"density estimate needs at least 8 points, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("data contains non-finite entries")
    if grid is None:
        q25, q75 = np.percentile(x, [25.0, 75.0])
        width = 2.0 * (q75 - q25) / x.size ** (1.0 / 3.0)
        span = float(x.max() - x.min())
        if width <= 0.0 or span <= 0.0:
            raise DegenerateDataError(
                "data has no spread; histogram bin width is zero"
            )
        nbins = max(int(np.ceil(span / width)), 1)
        edges = np.linspace(x.min(), x.max(), nbins + 1)
    else:
        g = np.asarray(grid, dtype=float).ravel()
        if g.size < 2:
            raise ValidationError("grid needs at least 2 points")
        steps = np.diff(g)
        if np.any(steps <= 0):
            raise ValidationError("grid must be strictly increasing")
        if np.max(steps) - np.min(steps) > 1e-9 * np.max(steps):
            raise ValidationError("grid must be equally spaced")
        half = steps[0] / 2.0
        edges = np.concatenate(([g[0] - half], g + half))
    density, _ = np.histogram(x, bins=edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density


def pdf_rmse(model_pdf, data, grid=None) -> float:
    """RMSE between a model density and the histogram estimate of the data."""
    centers, emp = empirical_density(data, grid)
    mod = np.asarray(model_pdf(centers), dtype=float)
    if mod.shape != centers.shape:
        raise ValidationError(
            f"model pdf returned shape {mod.shape} for {centers.size} points"
        )
    if not np.all(np.isfinite(mod)):
        raise ValidationError("model pdf returned non-finite values")
    diff = mod - emp
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True, eq=False)
class BacktestReport:
    """Backtest outcome for one (model, target, level) combination."""

    model_tag: str
    ticker: str
    alpha: float
    hit_seq: HitSequence
    christoffersen: ChristoffersenResult | None
    loss: LossResult
    note: str = ""

    CSV_HEADER = (
        "model_tag,ticker,alpha,n,x,lr_uc,p_uc,lr_ind,p_ind,lr_cc,p_cc,"
        "quadratic_loss,verdict"
    )

    @property
    def n(self) -> int:
        return self.hit_seq.n

    @property
    def x(self) -> int:
        return self.hit_seq.x

    @property
    def verdict(self) -> str:
        if self.christoffersen is None:
            return VERDICT_INSUFFICIENT
        return self.christoffersen.verdict

    def to_csv_row(self) -> list[str]:
        c = self.christoffersen
        stats = (
            ["", "", "", "", "", ""]
            if c is None
            else [
                repr(c.lr_uc),
                repr(c.p_uc),
                repr(c.lr_ind),
                repr(c.p_ind),
                repr(c.lr_cc),
                repr(c.p_cc),
            ]
        )
        return [
            self.model_tag,
            self.ticker,
            repr(self.alpha),
            str(self.n),
            str(self.x),
            *stats,
            repr(self.loss.total),
            self.verdict,
        ]
