"""Statistical process monitoring: X-bar chart, S-chart, trend detection,
and setpoint alarms over telemetry channels."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "ChartConfig",
    "SetpointConfig",
    "ControlLimits",
    "AlarmEvent",
    "c4",
    "s_chart_limits",
    "mean_chart_limits",
    "chart_limits",
    "trend_slope",
    "chart_statistics",
    "violation_mask",
    "scan",
    "setpoint_alarm",
    "calibrate_baseline",
    "write_alarms_csv",
    "ALARM_CSV_HEADER",
]

CHART_KINDS = ("mean", "s", "trend")
ALARM_CSV_HEADER = "t,channel,chart,value,limit,severity"


@dataclass(frozen=True)
class ChartConfig:
    channel: str
    kind: str  # mean | s | trend
    window: int = 20
    mu0: float = 0.0
    sigma0: float = 1.0
    k_sigma: float = 3.0

    def __post_init__(self):
        if self.kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}")
        if self.window < 2:
            raise ValueError("chart window must be >= 2")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.k_sigma < 0:
            raise ValueError("k_sigma must be nonnegative")


@dataclass(frozen=True)
class SetpointConfig:
    channel: str
    setpoint: float
    deadband: float = 1.0

    def __post_init__(self):
        if self.deadband < 0:
            raise ValueError("deadband must be nonnegative")


@dataclass(frozen=True)
class ControlLimits:
    center: float
    ucl: float
    lcl: float

    def __post_init__(self):
        if not self.lcl <= self.center <= self.ucl:
            raise ValueError(f"limits out of order: {self}")


@dataclass(frozen=True)
class AlarmEvent:
    t: float
    channel: str
    chart: str  # mean | s | trend | setpoint
    value: float
    limit: float
    severity: str  # warning | alarm


def c4(n: int) -> float:
    """Unbiasing constant E[s]/sigma for a normal sample of size n."""
    if n < 2:
        raise ValueError("c4 requires a window of at least 2 samples")
    return math.sqrt(2.0 / (n - 1)) * math.exp(gammaln(n / 2.0) - gammaln((n - 1) / 2.0))


def s_chart_limits(sigma0: float, n: int, k: float = 3.0) -> ControlLimits:
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    c = c4(n)
    spread = k * math.sqrt(1.0 - c * c)
    return ControlLimits(
        center=c * sigma0,
        ucl=sigma0 * (c + spread),
        lcl=max(0.0, sigma0 * (c - spread)),
    )


def mean_chart_limits(mu0: float, sigma0: float, n: int, k: float = 3.0) -> ControlLimits:
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    if n < 1:
        raise ValueError("window must be >= 1")
    half = k * sigma0 / math.sqrt(n)
    return ControlLimits(center=mu0, ucl=mu0 + half, lcl=mu0 - half)


def chart_limits(chart: ChartConfig) -> ControlLimits:
    if chart.kind == "mean":
        return mean_chart_limits(chart.mu0, chart.sigma0, chart.window, chart.k_sigma)
    if chart.kind == "s":
        return s_chart_limits(chart.sigma0, chart.window, chart.k_sigma)
    raise ValueError(f"{chart.kind} charts have no fixed control limits")


def trend_slope(samples) -> tuple[float, float, bool]:
    """Least-squares slope over a window.

    Returns (slope, standard error, flagged).  Flagged when |slope| exceeds
    3x its standard error (a constant window is never flagged).
    """
    y = np.asarray(samples, dtype=float)
    n = y.size
    if n < 2:
        raise ValueError("trend window must hold at least 2 samples")
    x = np.arange(n, dtype=float)
    x_centered = x - x.mean()
    sxx = float(x_centered @ x_centered)
    slope = float(x_centered @ (y - y.mean())) / sxx
    residuals = y - y.mean() - slope * x_centered
    dof = max(n - 2, 1)
    se = math.sqrt(max(float(residuals @ residuals), 0.0) / dof / sxx)
    flagged = abs(slope) > 3.0 * se
    return slope, se, flagged


def chart_statistics(values, chart: ChartConfig) -> np.ndarray:
    """Per-point chart statistic for sliding windows (NaN before the first
    full window)."""
    y = np.asarray(values, dtype=float)
    n = chart.window
    stats = np.full(y.size, np.nan)
    if y.size < n:
        return stats
    windows = np.lib.stride_tricks.sliding_window_view(y, n)
    if chart.kind == "mean":
        stats[n - 1 :] = windows.mean(axis=1)
    elif chart.kind == "s":
        stats[n - 1 :] = windows.std(axis=1, ddof=1)
    elif chart.kind == "trend":
        x = np.arange(n, dtype=float)
        xc = x - x.mean()
        sxx = float(xc @ xc)
        stats[n - 1 :] = (windows - windows.mean(axis=1, keepdims=True)) @ xc / sxx
    return stats


def violation_mask(values, chart: ChartConfig) -> np.ndarray:
    """Boolean per-point mask of limit violations for a sliding chart."""
    stats = chart_statistics(values, chart)
    if chart.kind == "trend":
        y = np.asarray(values, dtype=float)
        n = chart.window
        mask = np.zeros(y.size, dtype=bool)
        if y.size < n:
            return mask
        windows = np.lib.stride_tricks.sliding_window_view(y, n)
        x = np.arange(n, dtype=float)
        xc = x - x.mean()
        sxx = float(xc @ xc)
        slopes = stats[n - 1 :]
        fitted = windows.mean(axis=1, keepdims=True) + slopes[:, None] * xc
        rss = ((windows - fitted) ** 2).sum(axis=1)
        se = np.sqrt(np.maximum(rss, 0.0) / max(n - 2, 1) / sxx)
        mask[n - 1 :] = np.abs(slopes) > chart.k_sigma * se
        return mask
    limits = chart_limits(chart)
    with np.errstate(invalid="ignore"):
        return (stats < limits.lcl) | (stats > limits.ucl)


def scan(
    channels: dict[str, list[float]],
    charts: list[ChartConfig],
    times: list[float] | None = None,
) -> list[AlarmEvent]:
    """Evaluate every chart over its channel and emit first-crossing events.

    Deterministic for fixed input; channels missing from the stream are
    skipped.  An event is emitted whenever a window statistic crosses from
    inside the limits to outside.
    """
    events: list[AlarmEvent] = []
    for chart in charts:
        values = channels.get(chart.channel)
        if values is None:
            continue
        t_axis = times if times is not None else channels.get(
            "time", list(range(1, len(values) + 1))
        )
        mask = violation_mask(values, chart)
        stats = chart_statistics(values, chart)
        if chart.kind == "trend":
            severity = "warning"
            limit_for = lambda i: 0.0
        else:
            limits = chart_limits(chart)
            severity = "alarm"
            limit_for = lambda i: limits.ucl if stats[i] > limits.ucl else limits.lcl
        prev = False
        for i, bad in enumerate(mask):
            if bad and not prev:
                events.append(
                    AlarmEvent(
                        t=float(t_axis[i]),
                        channel=chart.channel,
                        chart=chart.kind,
                        value=float(stats[i]),
                        limit=float(limit_for(i)),
                        severity=severity,
                    )
                )
            prev = bool(bad)
    events.sort(key=lambda e: (e.t, e.channel, e.chart))
    return events


def setpoint_alarm(
    values,
    setpoint: float,
    deadband: float = 0.0,
    times=None,
    channel: str = "tank_temp",
) -> list[AlarmEvent]:
    """Alarm on upward crossings of setpoint + deadband."""
    y = list(values)
    t_axis = times if times is not None else list(range(1, len(y) + 1))
    threshold = setpoint + deadband
    events = []
    prev = False
    for i, v in enumerate(y):
        bad = v > threshold
        if bad and not prev:
            events.append(
                AlarmEvent(
                    t=float(t_axis[i]),
                    channel=channel,
                    chart="setpoint",
                    value=float(v),
                    limit=threshold,
                    severity="alarm",
                )
            )
        prev = bad
    return events


def calibrate_baseline(values) -> tuple[float, float]:
    """(mu0, sigma0) estimates from an in-control calibration series."""
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        raise ValueError("calibration series must hold at least 2 samples")
    return float(y.mean()), float(y.std(ddof=1))


def write_alarms_csv(events: list[AlarmEvent], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ALARM_CSV_HEADER.split(","))
        for e in events:
            writer.writerow([e.t, e.channel, e.chart, repr(e.value), repr(e.limit), e.severity])
