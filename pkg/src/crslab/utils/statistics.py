"""Confidence intervals for Bernoulli frequencies"""

import math
from typing import Tuple

from scipy.stats import norm


def z_value(confidence: float = 0.95) -> float:
    return float(norm.ppf(0.5 + confidence / 2.0))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval; (0, 1) when there are no trials"""
    if trials <= 0:
        return 0.0, 1.0
    z = z_value(confidence)
    p_hat = successes / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def wilson_half_width(successes: int, trials: int, confidence: float = 0.95) -> float:
    lo, hi = wilson_interval(successes, trials, confidence)
    return (hi - lo) / 2.0


def mean_interval(total: float, total_sq: float, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Normal-approximation interval for a sample mean from running sums"""
    if n <= 0:
        return math.nan, math.nan
    mean = total / n
    variance = max(0.0, total_sq / n - mean * mean) * n / max(1, n - 1)
    half = z_value(confidence) * math.sqrt(variance / n)
    return mean - half, mean + half
