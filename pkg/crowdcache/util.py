"""
Miscellaneous numeric helpers that don't have a better home.
"""
from __future__ import generator_stop

from typing import Iterable, Optional, Tuple

import numpy as np


def divide_or_zero(numerator, denominator, default=0.0):
    """
    @param numerator: numerator
    @param denominator: denominator
    @param default: returned when the denominator is zero
    @return: numerator / denominator
    """
    return numerator / denominator if denominator != 0 else default


def get_percentage(value, total, decimal_points=4):
    """
    @param value: value in int or double
    @param total: total in int or double
    @param decimal_points: how many decimal points for return result
    @return: the percentage: value of total.
    """
    return round(divide_or_zero(value * 1.0, total * 1.0) * 100.0, decimal_points)


def improvement_percentage(baseline, candidate, decimal_points=2):
    """
    Relative reduction of CANDIDATE with respect to BASELINE, in percent.
    Positive when the candidate is lower (better) than the baseline.
    """
    return get_percentage(baseline - candidate, baseline, decimal_points)


def mean_and_sem(values: Iterable[float]) -> Tuple[float, float]:
    """
    Mean and standard error of the mean. A single value has a standard
    error of 0.
    """
    data = np.asarray(list(values), dtype=float)
    if data.size == 0:
        raise ValueError('mean_and_sem() needs at least one value')
    if data.size == 1:
        return float(data[0]), 0.0
    return float(data.mean()), float(data.std(ddof=1) / np.sqrt(data.size))


def relative_difference(a: float, b: float, floor: Optional[float] = None) -> float:
    """|a - b| scaled by the larger magnitude (or FLOOR when both are tiny)."""
    scale = max(abs(a), abs(b))
    if floor is not None:
        scale = max(scale, floor)
    return divide_or_zero(abs(a - b), scale)


def loglog_slope(xs: Iterable[float], ys: Iterable[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(list(xs), dtype=float))
    ly = np.log(np.asarray(list(ys), dtype=float))
    if lx.size < 2 or lx.size != ly.size:
        raise ValueError('loglog_slope() needs at least two paired points')
    return float(np.polyfit(lx, ly, 1)[0])
