"""Hamming balls and surfaces, exact volumes, and the binary entropy bound.

Surface cardinalities obey C(n, k) <= exp(n * binary_entropy(k/n)), which is
what turns set sizes into per-spin exponents everywhere downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Union

from scipy.special import xlogy

from .errors import CapacityExceeded, DomainError
from .model import SpinConfiguration

MAX_STREAM_SPINS = 20
MAX_VOLUME_SPINS = 62


@dataclass(frozen=True)
class BallSpec:
    """Hamming ball of integer radius k around a center state."""

    center: int
    k: int
    n: int

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise DomainError(f"radius k={self.k} outside [0, n={self.n}]")
        if not 0 <= self.center < (1 << self.n):
            raise DomainError(f"center {self.center} out of range for n={self.n}")

    @classmethod
    def around(cls, center: Union[SpinConfiguration, int], k: int, n: int = None) -> "BallSpec":
        if isinstance(center, SpinConfiguration):
            return cls(center=center.bits, k=k, n=center.n)
        return cls(center=int(center), k=k, n=int(n))


def surface_states(spec: BallSpec) -> Iterator[int]:
    """States at Hamming distance exactly k from the center, index-ascending."""
    if spec.n > MAX_STREAM_SPINS:
        raise CapacityExceeded(f"surface stream needs n <= {MAX_STREAM_SPINS}")
    states = sorted(
        spec.center ^ sum(1 << j for j in combo)
        for combo in combinations(range(spec.n), spec.k)
    )
    yield from states


def ball_states(spec: BallSpec) -> Iterator[int]:
    """States at Hamming distance <= k from the center, index-ascending."""
    if spec.n > MAX_STREAM_SPINS:
        raise CapacityExceeded(f"ball stream needs n <= {MAX_STREAM_SPINS}")
    states = []
    for j in range(spec.k + 1):
        states.extend(surface_states(BallSpec(spec.center, j, spec.n)))
    yield from sorted(states)


def ball_volume(n: int, k: int) -> int:
    """Exact number of states in a radius-k ball: sum_{j<=k} C(n, j)."""
    if not 0 <= k <= n:
        raise DomainError(f"radius k={k} outside [0, n={n}]")
    if n > MAX_VOLUME_SPINS:
        raise CapacityExceeded(
            f"exact ball volumes are limited to n <= {MAX_VOLUME_SPINS}")
    return sum(math.comb(n, j) for j in range(k + 1))


def binary_entropy(r: float) -> float:
    """gamma(r) = -r ln r - (1-r) ln(1-r); endpoints are 0 by continuity."""
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"binary entropy argument r={r} outside [0, 1]")
    return float(-xlogy(r, r) - xlogy(1.0 - r, 1.0 - r))
