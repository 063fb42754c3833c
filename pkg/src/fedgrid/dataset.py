"""Per-house 5-minute time series: CSV loading/saving, synthesis and normalization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

STEP_MINUTES = 5
STEPS_PER_DAY = 24 * 60 // STEP_MINUTES
COLUMNS = ("timestamp", "temperature_c", "consumption_kwh", "pv_kwh")
FEATURES = ("pv", "soc", "temperature", "consumption")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesRow:
    timestamp: datetime
    temperature_c: float
    consumption_kwh: float
    pv_kwh: float


@dataclass(frozen=True, eq=False)
class HouseSeries:
    """Validated, immutable columnar time series for one house."""

    house_id: str
    timestamps: tuple[datetime, ...]
    temperature_c: np.ndarray
    consumption_kwh: np.ndarray
    pv_kwh: np.ndarray
    step_minutes: int = STEP_MINUTES

    def __post_init__(self):
        for name in ("temperature_c", "consumption_kwh", "pv_kwh"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        _validate(self)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __eq__(self, other) -> bool:
        return (isinstance(other, HouseSeries) and self.house_id == other.house_id
                and self.timestamps == other.timestamps
                and np.array_equal(self.temperature_c, other.temperature_c)
                and np.array_equal(self.consumption_kwh, other.consumption_kwh)
                and np.array_equal(self.pv_kwh, other.pv_kwh))

    @property
    def rows(self) -> list[SeriesRow]:
        return [SeriesRow(ts, float(t), float(c), float(p)) for ts, t, c, p in
                zip(self.timestamps, self.temperature_c, self.consumption_kwh, self.pv_kwh)]

    @property
    def n_days(self) -> int:
        return len(self) // STEPS_PER_DAY

    def slice_rows(self, start: int, stop: int) -> "HouseSeries":
        return HouseSeries(self.house_id, self.timestamps[start:stop],
                           self.temperature_c[start:stop], self.consumption_kwh[start:stop],
                           self.pv_kwh[start:stop])

    def split(self, train_fraction: float = 0.8) -> tuple["HouseSeries", "HouseSeries | None"]:
        """Contiguous split on whole days; the evaluation part is ``None`` if no day is left."""
        n_train = max(1, int(self.n_days * train_fraction))
        cut = n_train * STEPS_PER_DAY
        train = self.slice_rows(0, cut)
        if self.n_days - n_train < 1:
            return train, None
        return train, self.slice_rows(cut, self.n_days * STEPS_PER_DAY)


def _validate(series: HouseSeries) -> None:
    n = len(series.timestamps)
    for name in ("temperature_c", "consumption_kwh", "pv_kwh"):
        if getattr(series, name).shape != (n,):
            raise DatasetError(f"column {name} has length {getattr(series, name).shape}, expected {n}")
    for name in ("temperature_c", "consumption_kwh", "pv_kwh"):
        bad = np.flatnonzero(~np.isfinite(getattr(series, name)))
        if bad.size:
            raise DatasetError(f"row {bad[0]}: non-finite {name}")
    for name in ("consumption_kwh", "pv_kwh"):
        bad = np.flatnonzero(getattr(series, name) < 0)
        if bad.size:
            raise DatasetError(f"row {bad[0]}: negative {name}")
    step = timedelta(minutes=series.step_minutes)
    for i in range(1, n):
        delta = series.timestamps[i] - series.timestamps[i - 1]
        if delta <= timedelta(0):
            raise DatasetError(f"row {i}: non-increasing timestamp")
        if delta != step:
            raise DatasetError(f"row {i}: non-constant spacing ({delta} instead of {step})")
    if n < STEPS_PER_DAY:
        raise DatasetError(f"series has {n} rows; at least one full day ({STEPS_PER_DAY}) required")


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp lacks a UTC offset")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_series(path: str | Path, house_id: str | None = None) -> HouseSeries:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COLUMNS:
            raise DatasetError(f"{path}: header must be {','.join(COLUMNS)}, got {header}")
        stamps, temp, cons, pv = [], [], [], []
        for i, row in enumerate(reader):
            if len(row) != len(COLUMNS):
                raise DatasetError(f"row {i}: expected {len(COLUMNS)} fields, got {len(row)}")
            try:
                stamps.append(parse_timestamp(row[0]))
                temp.append(float(row[1]))
                cons.append(float(row[2]))
                pv.append(float(row[3]))
            except ValueError as exc:
                raise DatasetError(f"row {i}: parse failure ({exc})") from None
    return HouseSeries(house_id or path.stem, tuple(stamps), np.array(temp), np.array(cons), np.array(pv))


def series_to_csv(series: HouseSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for ts, t, c, p in zip(series.timestamps, series.temperature_c, series.consumption_kwh, series.pv_kwh):
        writer.writerow((format_timestamp(ts), repr(float(t)), repr(float(c)), repr(float(p))))
    return buf.getvalue()


def save_series(series: HouseSeries, path: str | Path) -> None:
    Path(path).write_text(series_to_csv(series))


@dataclass(frozen=True)
class SynthProfile:
    """Shape parameters for synthetic houses; energies are kWh per 5-minute interval."""

    pv_peak_kwh: float = 0.18
    sunrise_hour: float = 6.0
    sunset_hour: float = 20.0
    base_load_kwh: float = 0.03
    morning_peak_kwh: float = 0.06
    morning_peak_hour: float = 7.5
    evening_peak_kwh: float = 0.09
    evening_peak_hour: float = 19.5
    temp_mean_c: float = 18.0
    temp_amplitude_c: float = 6.0
    noise_sigma: float = 0.1
    cloud_variability: float = 0.3
    house_spread: float = 0.15
    start: str = "2016-07-15T00:00:00Z"

    def __post_init__(self):
        if not 4.0 <= self.sunrise_hour < self.sunset_hour <= 24.0:
            raise ValueError("need 4 <= sunrise_hour < sunset_hour <= 24")
        if min(self.pv_peak_kwh, self.base_load_kwh, self.noise_sigma) < 0:
            raise ValueError("profile magnitudes must be non-negative")
        if not 0.0 <= self.cloud_variability < 1.0 or not 0.0 <= self.house_spread < 1.0:
            raise ValueError("cloud_variability and house_spread must lie in [0, 1)")


def synthesize_series(days: int, seed: int, profile: SynthProfile | None = None,
                      house_id: str = "house-0") -> HouseSeries:
    """Deterministic synthetic PV/load/temperature series of ``days`` whole days."""
    if days < 1:
        raise ValueError("days must be >= 1")
    profile = profile or SynthProfile()
    rng = np.random.default_rng(seed)
    n = days * STEPS_PER_DAY
    hour = (np.arange(n) % STEPS_PER_DAY) * (STEP_MINUTES / 60.0)
    day = np.arange(n) // STEPS_PER_DAY

    # house-level scale factors give heterogeneous houses under distinct seeds
    pv_scale, load_scale = 1.0 + profile.house_spread * rng.uniform(-1.0, 1.0, size=2)
    clouds = 1.0 - profile.cloud_variability * rng.uniform(0.0, 1.0, size=days)

    daylight = profile.sunset_hour - profile.sunrise_hour
    solar = np.sin(np.pi * (hour - profile.sunrise_hour) / daylight)
    solar = np.where((hour >= profile.sunrise_hour) & (hour <= profile.sunset_hour), solar, 0.0)
    pv = profile.pv_peak_kwh * pv_scale * clouds[day] * np.clip(solar, 0.0, None)

    def bump(center, width):
        return np.exp(-0.5 * ((hour - center) / width) ** 2)

    load = load_scale * (profile.base_load_kwh
                         + profile.morning_peak_kwh * bump(profile.morning_peak_hour, 1.0)
                         + profile.evening_peak_kwh * bump(profile.evening_peak_hour, 1.5))
    temp = profile.temp_mean_c + profile.temp_amplitude_c * np.sin(2 * np.pi * (hour - 9.0) / 24.0)

    sigma = profile.noise_sigma
    noise = np.exp(sigma * rng.standard_normal((3, n)) - 0.5 * sigma ** 2)
    pv = pv * noise[0]
    pv[hour < 4.0] = 0.0
    load = load * noise[1]
    temp = temp * noise[2]

    start = parse_timestamp(profile.start)
    step = timedelta(minutes=STEP_MINUTES)
    stamps = tuple(start + i * step for i in range(n))
    return HouseSeries(house_id, stamps, temp, load, pv)


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-feature min/max used for affine scaling into [0, 1]."""

    ranges: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for name in FEATURES:
            lo, hi = self.ranges[name]
            if not hi > lo:
                raise ValueError(f"degenerate range for {name}: ({lo}, {hi})")

    def normalize(self, feature: str, value):
        lo, hi = self.ranges[feature]
        return np.clip((np.asarray(value, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)

    def vector(self, pv: float, soc: float, temperature: float, consumption: float) -> np.ndarray:
        raw = np.array([pv, soc, temperature, consumption], dtype=np.float64)
        lo = np.array([self.ranges[f][0] for f in FEATURES])
        hi = np.array([self.ranges[f][1] for f in FEATURES])
        return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.ranges.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationSpec":
        return cls({k: (float(v[0]), float(v[1])) for k, v in d.items()})


def _widen(lo: float, hi: float) -> tuple[float, float]:
    return (lo, hi) if hi > lo else (lo, lo + 1.0)


def fit_normalization(series: HouseSeries, battery) -> NormalizationSpec:
    return NormalizationSpec({
        "pv": _widen(float(series.pv_kwh.min()), float(series.pv_kwh.max())),
        "soc": _widen(0.0, float(battery.capacity_kwh)),
        "temperature": _widen(float(series.temperature_c.min()), float(series.temperature_c.max())),
        "consumption": _widen(float(series.consumption_kwh.min()), float(series.consumption_kwh.max())),
    })
