"""Price panels, log returns, rolling windows and descriptive statistics.

Moment conventions: all sample moments here are population-style (divide by
n, no bias correction). Skewness and kurtosis are standardized central
moments, kurtosis is reported in excess of 3, and the Jarque-Bera statistic
is n/6 * (S^2 + K^2/4) with K the excess kurtosis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import chi2_sf
from .errors import (
    DegenerateDataError,
    InsufficientDataError,
    ParseError,
    ShapeError,
    ValidationError,
)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    """Aligned close prices: one row per date, one column per ticker."""

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "prices", _readonly(self.prices))
        p = self.prices
        if p.ndim != 2:
            raise ShapeError(f"prices must be 2-D, got ndim={p.ndim}")
        if p.shape != (len(self.dates), len(self.tickers)):
            raise ShapeError(
                f"prices shape {p.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(self.dates) == 0:
            raise ValidationError("panel has no rows")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValidationError(
                    f"dates must be strictly increasing: {prev!r} then {cur!r}"
                )
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            bad = np.argwhere(~(np.isfinite(p) & (p > 0.0)))[0]
            raise ValidationError(
                f"price for {self.tickers[bad[1]]} on {self.dates[bad[0]]} "
                f"is not a positive finite number"
            )

    @property
    def n_rows(self) -> int:
        return self.prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class ReturnPanel:
    """Log-return panel; row t holds ln(S_t / S_{t-1}) labelled by date t."""

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "returns", _readonly(self.returns))
        r = self.returns
        if r.ndim != 2:
            raise ShapeError(f"returns must be 2-D, got ndim={r.ndim}")
        if r.shape != (len(self.dates), len(self.tickers)):
            raise ShapeError(
                f"returns shape {r.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if not np.all(np.isfinite(r)):
            raise ValidationError("returns contain non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class RollingWindow:
    """Estimation window ending just before row ``anchor`` of a return panel.

    The long window covers rows [anchor - long_len, anchor), the short one
    the trailing short_len rows of the same span. Row ``anchor`` itself is
    the out-of-sample observation the window is used to forecast.
    """

    anchor: int
    long_len: int = 252
    short_len: int = 70

    def __post_init__(self):
        if not 0 < self.short_len <= self.long_len:
            raise ValidationError(
                f"need 0 < short_len <= long_len, got "
                f"short={self.short_len} long={self.long_len}"
            )
        if self.anchor < self.long_len:
            raise ValidationError(
                f"anchor {self.anchor} precedes end of first full window "
                f"(long_len={self.long_len})"
            )


@dataclass(frozen=True)
class DescriptiveStats:
    """Population-moment summary of a univariate sample."""

    n: int
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    jarque_bera: float
    jb_pvalue: float
    max: float
    min: float

    def __post_init__(self):
        if not self.min <= self.mean <= self.max:
            raise ValidationError("mean falls outside [min, max]")
        expected = self.n / 6.0 * (self.skewness**2 + self.excess_kurtosis**2 / 4.0)
        if abs(self.jarque_bera - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValidationError("jarque_bera inconsistent with moment fields")
        if not 0.0 <= self.jb_pvalue <= 1.0:
            raise ValidationError(f"jb_pvalue {self.jb_pvalue} outside [0, 1]")


def load_prices(path_or_buffer) -> PricePanel:
    """Read a close-price CSV into a PricePanel.

    Expected layout: header ``date,<ticker>,...``; first column ISO-8601
    dates, remaining columns prices. Rows may arrive in any order and are
    sorted by date. Duplicate dates and non-positive prices are rejected.
    """
    if hasattr(path_or_buffer, "read"):
        rows = list(csv.reader(path_or_buffer))
    else:
        with open(path_or_buffer, newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty price file", line_no=1)

    header = [c.strip() for c in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise ParseError(
            "header must be 'date' followed by at least one ticker", line_no=1
        )
    tickers = tuple(header[1:])
    if len(set(tickers)) != len(tickers):
        raise ValidationError("duplicate ticker in header")

    parsed: list[tuple[str, list[float]]] = []
    seen: set[str] = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(row)}", line_no=line_no
            )
        date = row[0].strip()
        if not date:
            raise ParseError("empty date field", line_no=line_no)
        if date in seen:
            raise ValidationError(f"duplicate date {date!r}")
        seen.add(date)
        values = []
        for ticker, cell in zip(tickers, row[1:]):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric price {cell!r} for {ticker}", line_no=line_no
                ) from None
            if not np.isfinite(value) or value <= 0.0:
                raise ValidationError(
                    f"price for {ticker} on {date} must be positive and "
                    f"finite, got {cell!r}"
                )
            values.append(value)
        parsed.append((date, values))

    if not parsed:
        raise InsufficientDataError("price file contains no data rows")
    parsed.sort(key=lambda item: item[0])
    dates = tuple(date for date, _ in parsed)
    prices = np.array([values for _, values in parsed], dtype=float)
    return PricePanel(dates=dates, tickers=tickers, prices=prices)


def log_returns(panel: PricePanel) -> ReturnPanel:
    """Columnwise log returns ln(S_t / S_{t-1}); drops the first date."""
    if panel.n_rows < 2:
        raise InsufficientDataError("need at least 2 price rows for returns")
    r = np.diff(np.log(panel.prices), axis=0)
    return ReturnPanel(dates=panel.dates[1:], tickers=panel.tickers, returns=r)


def describe(series) -> DescriptiveStats:
    """Descriptive statistics of a univariate sample (population moments)."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 8:
        raise InsufficientDataError(
            f"descriptive statistics need at least 8 observations, got {n}"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("series contains non-finite entries")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        raise DegenerateDataError("series is constant; moments are degenerate")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    skew = m3 / m2**1.5
    kurt_ex = m4 / (m2 * m2) - 3.0
    jb = n / 6.0 * (skew**2 + kurt_ex**2 / 4.0)
    return DescriptiveStats(
        n=n,
        mean=mean,
        std=float(np.sqrt(m2)),
        skewness=skew,
        excess_kurtosis=kurt_ex,
        jarque_bera=jb,
        jb_pvalue=chi2_sf(jb, 2.0),
        max=float(np.max(x)),
        min=float(np.min(x)),
    )


def slice_window(
    returns: ReturnPanel, window: RollingWindow
) -> tuple[ReturnPanel, ReturnPanel]:
    """Extract the (long, short) estimation slices ending before the anchor.

    The short slice is the trailing suffix of the long one, so estimates on
    the two share their most recent observations by construction.
    """
    if window.anchor > returns.n_rows:
        raise ValidationError(
            f"anchor {window.anchor} outside return panel "
            f"({returns.n_rows} rows)"
        )
    lo = window.anchor - window.long_len
    long_slice = ReturnPanel(
        dates=returns.dates[lo : window.anchor],
        tickers=returns.tickers,
        returns=returns.returns[lo : window.anchor],
    )
    so = window.anchor - window.short_len
    short_slice = ReturnPanel(
        dates=returns.dates[so : window.anchor],
        tickers=returns.tickers,
        returns=returns.returns[so : window.anchor],
    )
    return long_slice, short_slice
