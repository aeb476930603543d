"""Small statistical helpers: Wilson proportion intervals and percentile
bootstrap for moment ratios.  Normal approximations are deliberately avoided
in the small-probability regimes these feed."""

from __future__ import annotations

import math

import numpy as np

from .constants import Z95
from .errors import DomainError


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise DomainError(f"successes {successes} outside [0, {trials}]")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def bootstrap_ratio_ci(counts: np.ndarray, rng: np.random.Generator,
                       resamples: int = 1000,
                       quantiles: tuple[float, float] = (2.5, 97.5)) -> tuple[float, float]:
    """Percentile bootstrap CI for mean(X)^2 / mean(X^2) over disorder draws."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size < 2:
        raise DomainError("bootstrap needs at least 2 samples")
    idx = rng.integers(0, counts.size, size=(resamples, counts.size))
    draws = counts[idx]
    m1 = draws.mean(axis=1)
    m2 = (draws ** 2).mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(m2 > 0, m1 * m1 / m2, np.nan)
    ratios = ratios[np.isfinite(ratios)]
    if ratios.size == 0:
        return math.nan, math.nan
    lo, hi = np.percentile(ratios, quantiles)
    return float(lo), float(hi)
