"""Deep-energy sets, the uncorrelated-component decomposition, the two-part
landscape event, and Monte Carlo over disorder.

The deep set collects states with -H(s) > BETA_C (1-eps) n.  For a center c,
every other energy splits as

    H(t) = G_c(t) + H(c) * c_p(d(c,t)/n),

where G_c(t) is Gaussian with variance n (1 - c_p(r)^2) and uncorrelated
with H(c) (c_p is the model's distance-correlation profile, so this is the
orthogonal projection).  The event of interest requires the deep set to
outnumber a radius-2k ball and every deep center's surface-k minimum of G to
stay above -n BETA_C (1-eps) delta (1 - c_p(k/n)).

Monte Carlo runs only across disorder draws: within a single instance every
quantity is computed exactly from the full energy table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional, Union

import numpy as np

from .constants import BETA_C
from .errors import CapacityExceeded, DomainError
from .geometry import ball_volume, binary_entropy
from .model import (
    STREAM_ENSEMBLE,
    DisorderInstance,
    ModelParams,
    Repr,
    SpinConfiguration,
    correlation,
    energy_table,
    sample_disorder,
)
from .stats import bootstrap_ratio_ci, wilson_interval

MAX_DEEP_SPINS = 20

StateLike = Union[SpinConfiguration, int]


def _as_bits(state: StateLike) -> int:
    return state.bits if isinstance(state, SpinConfiguration) else int(state)


def deep_threshold(n: int, eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps} outside (0,1)")
    return BETA_C * (1.0 - eps) * n


@dataclass(frozen=True)
class DeepSet:
    eps: float
    threshold: float
    members: np.ndarray   # state indices, ascending
    energies: np.ndarray  # H at each member

    @property
    def size(self) -> int:
        return int(self.members.size)


def deep_states(inst: DisorderInstance, eps: float,
                table: Optional[np.ndarray] = None) -> DeepSet:
    """Exact enumeration of {s : -H(s) > BETA_C (1-eps) n} (strict inequality)."""
    if inst.n > MAX_DEEP_SPINS:
        raise CapacityExceeded(f"deep-set enumeration needs n <= {MAX_DEEP_SPINS}")
    thr = deep_threshold(inst.n, eps)
    if table is None:
        table = energy_table(inst)
    members = np.flatnonzero(-table > thr).astype(np.int64)
    return DeepSet(eps=eps, threshold=thr, members=members, energies=table[members])


def gaussian_component(inst: DisorderInstance, sigma0: StateLike,
                       tau: StateLike) -> float:
    """G_c(t) = H(t) - H(c) c_p(d(c,t)/n), the part of H(t) orthogonal to H(c)."""
    b0, bt = _as_bits(sigma0), _as_bits(tau)
    exp = inst.expansion
    d = (b0 ^ bt).bit_count()
    return exp.energy_bits(bt) - exp.energy_bits(b0) * correlation(inst.p, d / inst.n)


@lru_cache(maxsize=64)
def _surface_xors(n: int, k: int) -> np.ndarray:
    """XOR masks reaching every state at distance exactly k."""
    return np.array([sum(1 << j for j in combo)
                     for combo in combinations(range(n), k)], dtype=np.int64)


@dataclass(frozen=True)
class EventReport:
    """Per-instance verdict of the two-part landscape event."""

    eps: float
    delta: float
    k: int
    part1: bool
    part2: bool
    deep_count: int
    ball_volume_2k: int
    per_center_min_g: np.ndarray
    part2_threshold: float

    @property
    def holds(self) -> bool:
        return self.part1 and self.part2

    @property
    def min_g(self) -> float:
        return float(self.per_center_min_g.min()) if self.per_center_min_g.size else math.nan


def check_event(inst: DisorderInstance, eps: float, delta: float, k: int,
                table: Optional[np.ndarray] = None) -> EventReport:
    """Exact event check: part 1 compares the deep count against |B_2k|;
    part 2 quantifies the surface-minimum condition over every deep center."""
    n = inst.n
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not 2 * k <= n / 2:
        raise DomainError(f"event check requires 2k <= n/2, got k={k}, n={n}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta={delta} outside (0,1)")
    if table is None:
        table = energy_table(inst)
    deep = deep_states(inst, eps, table=table)
    vol = ball_volume(n, 2 * k)
    part1 = deep.size > vol
    c = correlation(inst.p, k / n)
    threshold = -n * BETA_C * (1.0 - eps) * delta * (1.0 - c)
    xors = _surface_xors(n, k)
    mins = np.empty(deep.size)
    for i, (center, h0) in enumerate(zip(deep.members, deep.energies)):
        surf = table[center ^ xors]
        mins[i] = (surf - h0 * c).min()
    part2 = bool(np.all(mins >= threshold)) if deep.size else True
    return EventReport(eps=eps, delta=delta, k=k, part1=bool(part1), part2=part2,
                       deep_count=deep.size, ball_volume_2k=vol,
                       per_center_min_g=mins, part2_threshold=threshold)


def ensemble_seeds(master_seed: int, samples: int) -> np.ndarray:
    """Per-draw instance seeds derived deterministically from a master seed."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(STREAM_ENSEMBLE,))
    return ss.generate_state(samples, dtype=np.uint64)


@dataclass(frozen=True)
class EventProbability:
    estimate: float
    wilson_low: float
    wilson_high: float
    successes: int
    samples: int
    part1_successes: int
    part2_violations: int


def event_probability(params: ModelParams, eps: float, delta: float, k: int,
                      samples: int, seed: int,
                      repr: Repr = Repr.PARITY) -> EventProbability:
    """Fraction of disorder draws on which the event holds, with Wilson 95% CI."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    hits = 0
    p1 = 0
    viol = 0
    for s in ensemble_seeds(seed, samples):
        inst = sample_disorder(params, int(s), repr=repr)
        rep = check_event(inst, eps, delta, k)
        hits += rep.holds
        p1 += rep.part1
        viol += not rep.part2
    lo, hi = wilson_interval(hits, samples)
    return EventProbability(estimate=hits / samples, wilson_low=lo, wilson_high=hi,
                            successes=hits, samples=samples,
                            part1_successes=p1, part2_violations=viol)


@dataclass(frozen=True)
class SecondMomentRatio:
    """Estimate of E[deep count]^2 / E[deep count^2] over disorder."""

    ratio: float
    ci_low: float
    ci_high: float
    degenerate: bool  # every sampled deep set was empty: 0/0
    mean_count: float
    samples: int


def second_moment_ratio(params: ModelParams, eps: float, samples: int, seed: int,
                        repr: Repr = Repr.PARITY,
                        resamples: int = 1000) -> SecondMomentRatio:
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples}")
    counts = np.empty(samples)
    for i, s in enumerate(ensemble_seeds(seed, samples)):
        inst = sample_disorder(params, int(s), repr=repr)
        counts[i] = deep_states(inst, eps).size
    m2 = float((counts ** 2).mean())
    if m2 == 0.0:
        return SecondMomentRatio(math.nan, math.nan, math.nan, True, 0.0, samples)
    ratio = float(counts.mean() ** 2 / m2)
    boot_rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                               spawn_key=(STREAM_ENSEMBLE, 0xB007))))
    lo, hi = bootstrap_ratio_ci(counts, boot_rng, resamples=resamples)
    return SecondMomentRatio(ratio=ratio, ci_low=lo, ci_high=hi, degenerate=False,
                             mean_count=float(counts.mean()), samples=samples)


def paley_zygmund_lower(theta: float, sm_ratio: float) -> float:
    """(1-theta)^2 * sm_ratio, a lower bound on P(deep count > theta * mean)."""
    if not 0.0 <= theta < 1.0:
        raise DomainError(f"theta={theta} outside [0, 1)")
    if not 0.0 < sm_ratio <= 1.0:
        raise DomainError(f"second-moment ratio {sm_ratio} outside (0, 1]")
    return (1.0 - theta) ** 2 * sm_ratio


@dataclass(frozen=True)
class UnionBound:
    """Closed-form bound on the probability of a part-2 violation."""

    log_bound: float
    bound: float
    log_prefactor: float
    exponent: float  # the full n-dependent exponent (not per spin)


def union_bound_rhs(n: int, p: int, eps: float, delta: float, r: float) -> UnionBound:
    """Probability bound for some deep center's surface-r minimum of G falling
    below its threshold:

      sqrt(1+c) / (2 pi n BETA_C^2 (1-eps)^2 delta sqrt(1-c))
        * exp(-(n/2) [BETA_C^2 ((1-eps)^2 delta^2 (1-c)/(1+c) - 2 eps (1-eps/2)) - 2 gamma(r)])

    with c = c_p(r).  Returned in log domain; the linear value may overflow
    to inf at configurations where the bound is vacuous.
    """
    if not 0.0 < r < 0.5:
        raise DomainError(f"r={r} outside (0, 1/2)")
    if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
        raise DomainError(f"eps={eps}, delta={delta} must lie in (0,1)")
    c = correlation(p, r)
    log_pref = (0.5 * math.log1p(c)
                - math.log(2.0 * math.pi * n * BETA_C ** 2 * (1.0 - eps) ** 2 * delta)
                - 0.5 * math.log(1.0 - c))
    bracket = (BETA_C ** 2 * ((1.0 - eps) ** 2 * delta ** 2 * (1.0 - c) / (1.0 + c)
                              - 2.0 * eps * (1.0 - 0.5 * eps))
               - 2.0 * binary_entropy(r))
    exponent = -0.5 * n * bracket
    log_bound = log_pref + exponent
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    return UnionBound(log_bound=log_bound, bound=bound,
                      log_prefactor=log_pref, exponent=exponent)
