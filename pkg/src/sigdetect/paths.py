"""Multichannel time series viewed as piecewise-linear paths.

Provides time augmentation, first differences, [0,1] normalization and
sliding-window extraction.  All operations are pure: they return new
``PathSeries`` objects and never mutate their input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, NonIncreasingTime


@dataclass(frozen=True)
class PathSeries:
    """A finite multichannel series interpreted as a piecewise-linear path.

    ``values`` has shape (L, d).  If ``time_channel`` is set, that column is
    strictly increasing and represents physical time.
    """

    values: np.ndarray
    channel_names: tuple[str, ...] = ()
    time_channel: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("values must be a non-empty LxD matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)
        names = self.channel_names
        if not names:
            names = tuple(f"ch{i}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ValueError("channel_names length must match channel count")
        object.__setattr__(self, "channel_names", tuple(names))
        if self.time_channel is not None:
            col = values[:, self.time_channel]
            if np.any(np.diff(col) <= 0):
                raise NonIncreasingTime("time channel must be strictly increasing")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window parameters: ``window_size`` trades per window, advanced
    by ``offset`` trades between consecutive windows."""

    window_size: int
    offset: int

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError("window_size must be positive")
        if not 1 <= self.offset <= self.window_size:
            raise ValueError("offset must satisfy 1 <= offset <= window_size")


def augment_time(series: PathSeries, timestamps=None) -> PathSeries:
    """Prepend a time channel.

    Uses ``timestamps`` when given (must be strictly increasing), sample
    indices 0..L-1 otherwise.
    """
    if series.time_channel is not None:
        raise ValueError("series already has a time channel")
    if timestamps is None:
        t = np.arange(series.length, dtype=float)
    else:
        t = np.asarray(timestamps, dtype=float)
        if t.shape != (series.length,):
            raise ValueError("timestamps length must match series length")
        if np.any(np.diff(t) <= 0):
            raise NonIncreasingTime("timestamps must be strictly increasing")
    values = np.column_stack([t, series.values])
    return PathSeries(values, ("t",) + series.channel_names, time_channel=0)


def first_differences(series: PathSeries, channel: int) -> PathSeries:
    """Append a channel of first differences of ``channel`` (zero at j=0)."""
    if not 0 <= channel < series.channels:
        raise IndexError(f"channel {channel} out of range")
    col = series.values[:, channel]
    diff = np.concatenate([[0.0], np.diff(col)])
    values = np.column_stack([series.values, diff])
    names = series.channel_names + (f"d_{series.channel_names[channel]}",)
    return PathSeries(values, names, time_channel=series.time_channel)


def normalize_unit_interval(series: PathSeries, exclude=()) -> PathSeries:
    """Affinely map each non-excluded channel onto [0, 1].

    Constant channels map to all-zeros (their min-max affine map is
    undefined and the channel carries no information).
    """
    values = series.values.copy()
    exclude = set(exclude)
    time_channel = series.time_channel
    for j in range(series.channels):
        if j in exclude:
            continue
        lo, hi = values[:, j].min(), values[:, j].max()
        if hi > lo:
            values[:, j] = (values[:, j] - lo) / (hi - lo)
        else:
            values[:, j] = 0.0
            if j == time_channel:
                time_channel = None
    return PathSeries(values, series.channel_names, time_channel=time_channel)


def sliding_windows(series: PathSeries, cfg: WindowConfig) -> list[PathSeries]:
    """Extract ceil(L / offset) windows of exactly ``window_size`` samples.

    Window i starts at i * offset; a window that would run past the end of
    the series is clamped to the final ``window_size`` samples, so every
    window has full length (at the cost of duplicating some tail windows).
    """
    L, w, o = series.length, cfg.window_size, cfg.offset
    if L < w:
        raise InsufficientData(f"series length {L} < window size {w}")
    n_windows = -(-L // o)
    out = []
    for i in range(n_windows):
        start = min(i * o, L - w)
        values = series.values[start : start + w]
        out.append(PathSeries(values, series.channel_names, series.time_channel))
    return out


def window_starts(length: int, cfg: WindowConfig) -> list[int]:
    """Start indices produced by :func:`sliding_windows` (clamped)."""
    if length < cfg.window_size:
        raise InsufficientData(f"series length {length} < window size {cfg.window_size}")
    n_windows = -(-length // cfg.offset)
    return [min(i * cfg.offset, length - cfg.window_size) for i in range(n_windows)]
