"""Window-slice augmentation: random slice, spline upsample, z-normalize.

A selected sample is augmented by cutting a random contiguous window
(70% of the series by default), stretching it back to the original length
with a not-a-knot cubic spline, and z-normalizing the result.  The whole
procedure runs twice per sample with independent window draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .data_io import TimeSeriesSample, znormalize
from .errors import InterpolationError, ParameterError
from .rng import RngStream

DEFAULT_WINDOW_FRACTION = 0.7


@dataclass(frozen=True, eq=False)
class WindowSlice:
    """A contiguous sub-series: source start index, length, and the values."""

    start: int
    length: int
    values: np.ndarray


def window_length(n: int, fraction: float) -> int:
    """Slice length for a series of length n: floor(fraction * n)."""
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"window fraction must be in (0, 1], got {fraction}")
    return math.floor(fraction * n)


def slice_window(series, fraction: float, rng: RngStream) -> WindowSlice:
    """Cut a random window of floor(fraction*n) points from the series.

    The start index is drawn uniformly from the n - s + 1 valid positions.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[0]
    s = window_length(n, fraction)
    if n < 2 or s < 2:
        raise ParameterError(
            f"series of length {n} with fraction {fraction} gives window length {s}; "
            "need at least 2"
        )
    start = int(rng.generator().integers(0, n - s, endpoint=True))
    return WindowSlice(start, s, series[start : start + s].copy())


def enumerate_slices(series, s: int) -> list[WindowSlice]:
    """All n - s + 1 length-s slices in order (test support for the sample space)."""
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[0]
    if not 1 <= s <= n:
        raise ParameterError(f"slice length {s} out of range for series of length {n}")
    return [WindowSlice(i, s, series[i : i + s].copy()) for i in range(n - s + 1)]


def spline_resample(segment, target_len: int) -> np.ndarray:
    """Resample a segment to target_len points with a not-a-knot cubic spline.

    Knots sit at 0..m-1; the output grid spans [0, m-1] uniformly with both
    endpoints included, so input endpoints are reproduced exactly.
    """
    segment = np.asarray(segment, dtype=np.float64)
    m = segment.shape[0]
    if m < 4:
        raise InterpolationError(f"cubic spline needs at least 4 knots, got {m}")
    if target_len < 2:
        raise ParameterError(f"target length must be at least 2, got {target_len}")
    spline = CubicSpline(np.arange(m), segment, bc_type="not-a-knot")
    grid = np.linspace(0.0, float(m - 1), target_len)
    return spline(grid)


def augment_sample(
    sample: TimeSeriesSample, fraction: float, rng: RngStream
) -> tuple[TimeSeriesSample, TimeSeriesSample]:
    """Two independent slice -> upsample -> z-normalize passes over one sample.

    Both outputs have the source length and label.  The two windows are drawn
    independently and may coincide by chance.
    """
    n = sample.values.shape[0]
    out = []
    for p in range(2):
        window = slice_window(sample.values, fraction, rng.child("window", p))
        resampled = spline_resample(window.values, n)
        normalized, degenerate = znormalize(resampled)
        out.append(TimeSeriesSample(normalized, sample.label, degenerate))
    return out[0], out[1]
