"""Nonstationary data sources.

``synthetic_stream`` draws 2-D Gaussian blocks whose mean and spread drift
linearly while a logistic labelling boundary rotates about the moving mean.

``csv_stream`` reads a local CSV (``date,close`` or ``date,views``, ascending
ISO dates) and builds the finance or page-view feature recipes. Every feature
on row ``t`` uses rows ``<= t`` only; the target peeks at row ``t + 1``.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .core import DEFAULT_SEED, DriftStream, StreamBatch, check_seed, make_rng

RSI_PERIOD = 14


class StreamConfigError(ValueError):
    """Bad stream configuration or unreadable input data."""


@dataclass(frozen=True)
class SyntheticDriftConfig:
    steps: int = 200
    batch_size: int = 100
    mean_velocity: tuple[float, float] = (0.02, 0.01)
    variance_growth: float = 0.005
    boundary_rotation: float = math.pi / 200
    initial_mean: tuple[float, float] = (0.0, 0.0)
    initial_std: float = 1.0
    label_sharpness: float = 2.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "mean_velocity", tuple(float(v) for v in self.mean_velocity))
        object.__setattr__(self, "initial_mean", tuple(float(v) for v in self.initial_mean))
        if len(self.mean_velocity) != 2 or len(self.initial_mean) != 2:
            raise StreamConfigError("mean_velocity and initial_mean must have length 2")
        if self.steps < 1:
            raise StreamConfigError(f"steps must be positive, got {self.steps}")
        if self.batch_size < 1:
            raise StreamConfigError(f"batch_size must be positive, got {self.batch_size}")
        if not self.initial_std > 0:
            raise StreamConfigError(f"initial_std must be positive, got {self.initial_std}")
        if not self.label_sharpness > 0:
            raise StreamConfigError(f"label_sharpness must be positive, got {self.label_sharpness}")
        # linear in t, so checking the end point covers every step
        if not self.initial_std + self.steps * self.variance_growth > 0:
            raise StreamConfigError(
                f"feature std reaches {self.initial_std + self.steps * self.variance_growth} "
                f"by step {self.steps}; variance_growth is too negative"
            )
        check_seed(self.seed)

    def mean_at(self, t: int) -> np.ndarray:
        return np.asarray(self.initial_mean) + t * np.asarray(self.mean_velocity)

    def std_at(self, t: int) -> float:
        return self.initial_std + t * self.variance_growth

    def normal_at(self, t: int) -> np.ndarray:
        theta = t * self.boundary_rotation
        return np.array([math.cos(theta), math.sin(theta)])


def label_probability(config: SyntheticDriftConfig, t: int, x) -> np.ndarray | float:
    """P(y = 1 | x) at step ``t``."""
    x = np.asarray(x, dtype=float)
    a = config.label_sharpness * ((x - config.mean_at(t)) @ config.normal_at(t))
    return 1.0 / (1.0 + np.exp(-a))


class SyntheticStream(DriftStream):
    def __init__(self, config: SyntheticDriftConfig):
        self.config = config

    @property
    def dimension(self) -> int:
        return 2

    def __iter__(self) -> Iterator[StreamBatch]:
        cfg = self.config
        rng = make_rng(cfg.seed)
        for t in range(cfg.steps):
            x = cfg.mean_at(t) + cfg.std_at(t) * rng.standard_normal((cfg.batch_size, 2))
            y = (rng.random(cfg.batch_size) < label_probability(cfg, t, x)).astype(np.int64)
            yield StreamBatch(t, x, y)


def synthetic_stream(config: SyntheticDriftConfig | None = None) -> SyntheticStream:
    return SyntheticStream(config or SyntheticDriftConfig())


class FeatureRecipe(str, enum.Enum):
    FINANCE = "finance"
    PAGEVIEWS = "pageviews"
    RAW = "raw"


_DEFAULT_VALUE_COLUMN = {FeatureRecipe.FINANCE: "close", FeatureRecipe.PAGEVIEWS: "views"}


@dataclass(frozen=True)
class CsvStreamConfig:
    """Local CSV input.

    For the finance and pageviews recipes ``target_column`` names the raw
    value column the features and target are derived from (``close`` or
    ``views`` by default). For the raw recipe it names a 0/1 label column and
    every other non-date column is used as a feature.
    """

    path: str
    feature_recipe: FeatureRecipe = FeatureRecipe.FINANCE
    target_column: str | None = None
    rolling_window: int = 10
    batch_size: int = 20

    def __post_init__(self):
        try:
            object.__setattr__(self, "feature_recipe", FeatureRecipe(self.feature_recipe))
        except ValueError:
            raise StreamConfigError(f"unknown feature_recipe {self.feature_recipe!r}") from None
        if self.target_column is None:
            if self.feature_recipe is FeatureRecipe.RAW:
                raise StreamConfigError("raw recipe needs target_column")
            object.__setattr__(self, "target_column", _DEFAULT_VALUE_COLUMN[self.feature_recipe])
        if self.rolling_window < 2:
            raise StreamConfigError(f"rolling_window must be at least 2, got {self.rolling_window}")
        if self.batch_size < 1:
            raise StreamConfigError(f"batch_size must be positive, got {self.batch_size}")


@dataclass
class CsvTable:
    dates: list[dt.date]
    columns: dict[str, np.ndarray] = field(default_factory=dict)


def read_csv_table(path, numeric_columns=None) -> CsvTable:
    """Parse a headered CSV with a ``date`` column and numeric value columns.

    Errors name the 1-based file row (header is row 1) and the column.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise StreamConfigError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise StreamConfigError(f"{path}: missing header row")
        if "date" not in header:
            raise StreamConfigError(f"{path}: missing column 'date'")
        wanted = [c for c in header if c != "date"] if numeric_columns is None else list(numeric_columns)
        for col in wanted:
            if col not in header:
                raise StreamConfigError(f"{path}: missing column {col!r}")
        dates: list[dt.date] = []
        values: dict[str, list[float]] = {c: [] for c in wanted}
        for row_no, row in enumerate(reader, start=2):
            raw_date = row.get("date")
            try:
                day = dt.date.fromisoformat((raw_date or "").strip())
            except ValueError:
                raise StreamConfigError(f"{path}: row {row_no}, column 'date': bad ISO date {raw_date!r}") from None
            if dates and day <= dates[-1]:
                raise StreamConfigError(f"{path}: row {row_no}, column 'date': dates must be strictly ascending")
            dates.append(day)
            for col in wanted:
                cell = row.get(col)
                try:
                    val = float(cell)
                except (TypeError, ValueError):
                    raise StreamConfigError(f"{path}: row {row_no}, column {col!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(val):
                    raise StreamConfigError(f"{path}: row {row_no}, column {col!r}: non-finite value {cell!r}")
                values[col].append(val)
    return CsvTable(dates, {c: np.asarray(v) for c, v in values.items()})


def rolling_std(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing sample std (ddof=1) over ``window`` values; NaN until full."""
    out = np.full(x.shape, np.nan)
    for t in range(window - 1, len(x)):
        if np.isfinite(x[t - window + 1 : t + 1]).all():
            out[t] = x[t - window + 1 : t + 1].std(ddof=1)
    return out


def rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    out = np.full(x.shape, np.nan)
    for t in range(window - 1, len(x)):
        out[t] = x[t - window + 1 : t + 1].mean()
    return out


def wilder_rsi(close: np.ndarray, period: int = RSI_PERIOD) -> np.ndarray:
    """RSI with Wilder smoothing; NaN before ``period`` price changes exist.

    The first average gain/loss is the simple mean of the first ``period``
    changes, later ones are ``(prev * (period - 1) + current) / period``.
    Zero average loss gives 100, or 50 when the average gain is also zero.
    """
    out = np.full(close.shape, np.nan)
    if len(close) <= period:
        return out
    delta = np.diff(close)
    gain = np.maximum(delta, 0.0)
    loss = np.maximum(-delta, 0.0)
    avg_g = gain[:period].mean()
    avg_l = loss[:period].mean()
    for t in range(period, len(close)):
        if t > period:
            avg_g = (avg_g * (period - 1) + gain[t - 1]) / period
            avg_l = (avg_l * (period - 1) + loss[t - 1]) / period
        if avg_l == 0.0:
            out[t] = 50.0 if avg_g == 0.0 else 100.0
        else:
            out[t] = 100.0 - 100.0 / (1.0 + avg_g / avg_l)
    return out


def finance_features(close: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Columns: return, rolling volatility, RSI(14), momentum. Target: next return > 0.

    Rows without a complete history or without a next row are NaN.
    """
    if np.any(close <= 0):
        raise StreamConfigError("close prices must be positive")
    n = len(close)
    ret = np.full(n, np.nan)
    ret[1:] = close[1:] / close[:-1] - 1.0
    vol = rolling_std(ret, window)
    rsi = wilder_rsi(close)
    mom = np.full(n, np.nan)
    mom[window:] = close[window:] / close[:-window] - 1.0
    target = np.full(n, np.nan)
    target[:-1] = (ret[1:] > 0).astype(float)
    return np.column_stack([ret, vol, rsi, mom]), target


def pageview_features(views: np.ndarray, day_index: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Columns: log1p views, rolling mean, rolling std, momentum, weekly sin, weekly cos.

    Target: next day's log views above today's rolling mean.
    """
    if np.any(views < 0):
        raise StreamConfigError("views must be nonnegative")
    n = len(views)
    lv = np.log1p(views)
    rmean = rolling_mean(lv, window)
    rstd = rolling_std(lv, window)
    mom = np.full(n, np.nan)
    mom[window:] = lv[window:] - lv[:-window]
    phase = 2.0 * np.pi * day_index / 7.0
    target = np.full(n, np.nan)
    target[:-1] = (lv[1:] > rmean[:-1]).astype(float)
    target[np.isnan(rmean)] = np.nan
    return np.column_stack([lv, rmean, rstd, mom, np.sin(phase), np.cos(phase)]), target


def build_features(config: CsvStreamConfig) -> tuple[np.ndarray, np.ndarray, list[dt.date]]:
    """Feature matrix, 0/1 targets and dates for rows with complete windows."""
    recipe = config.feature_recipe
    if recipe is FeatureRecipe.RAW:
        table = read_csv_table(config.path)
        if config.target_column not in table.columns:
            raise StreamConfigError(f"{config.path}: missing column {config.target_column!r}")
        feats = [c for c in table.columns if c != config.target_column]
        if not feats:
            raise StreamConfigError(f"{config.path}: no feature columns besides {config.target_column!r}")
        x = np.column_stack([table.columns[c] for c in feats])
        y = table.columns[config.target_column]
        bad = np.flatnonzero((y != 0) & (y != 1))
        if bad.size:
            raise StreamConfigError(
                f"{config.path}: row {bad[0] + 2}, column {config.target_column!r}: labels must be 0 or 1"
            )
    else:
        table = read_csv_table(config.path, [config.target_column])
        raw = table.columns[config.target_column]
        if recipe is FeatureRecipe.FINANCE:
            x, y = finance_features(raw, config.rolling_window)
        else:
            first = table.dates[0] if table.dates else None
            day_index = np.array([(d - first).days for d in table.dates], dtype=float)
            x, y = pageview_features(raw, day_index, config.rolling_window)
    keep = np.isfinite(x).all(axis=1) & np.isfinite(y)
    dates = [d for d, k in zip(table.dates, keep) if k]
    return x[keep], y[keep].astype(np.int64), dates


class CsvStream(DriftStream):
    def __init__(self, config: CsvStreamConfig):
        self.config = config
        self.features, self.labels, self.dates = build_features(config)
        n_batches = len(self.labels) // config.batch_size
        if n_batches < 1:
            raise StreamConfigError(
                f"{config.path}: {len(self.labels)} usable rows after warmup, "
                f"fewer than one batch of {config.batch_size}"
            )
        self.n_batches = n_batches

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    def __iter__(self) -> Iterator[StreamBatch]:
        b = self.config.batch_size
        # trailing partial batch is dropped
        for t in range(self.n_batches):
            yield StreamBatch(t, self.features[t * b : (t + 1) * b], self.labels[t * b : (t + 1) * b])


def csv_stream(config: CsvStreamConfig) -> CsvStream:
    return CsvStream(config)


def make_stream(config) -> DriftStream:
    if isinstance(config, SyntheticDriftConfig):
        return synthetic_stream(config)
    if isinstance(config, CsvStreamConfig):
        return csv_stream(config)
    raise TypeError(f"unsupported stream config {type(config).__name__}")
