"""Bottleneck (conductance) certificates for slow mixing.

For any state set A with pi(A) <= 1/2, the normalized stationary outflow

    ratio(A) = (1/pi(A)) * sum_{s in A, t not in A} pi(s) P(s, t)

lower-bounds the mixing time via t_mix >= 1/(4 * ratio(A)).  For Hamming
balls the outflow is carried entirely by the surface, and a chain of four
successively coarser estimates turns the exact ratio into a closed-form
per-spin exponent:

    (i) ratio <= (ii) pi(S_k)/pi(B_k)
              <= (iii) |S_k| exp(beta [H(c) - min_{S_k} H])
              <= (iv) exp(n gamma(k/n) + beta [H(c)(1 - c_p(k/n)) - min_{S_k} G_c])

where G_c(t) = H(t) - H(c) c_p(d/n) is the component of H(t) uncorrelated
with H(c).  All masses are accumulated in log domain: deep centers
concentrate the measure and linear sums underflow at large beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .constants import BETA_C, LN4
from .errors import DomainError, InvalidSet, NoValidSet
from .exact import GibbsDistribution, TransitionKernel, build_kernel, gibbs_distribution
from .geometry import binary_entropy
from .model import DisorderInstance, correlation, energy_table

_PI_HALF_TOL = 1e-12


def _log_set_mass(pi: GibbsDistribution, states: np.ndarray) -> float:
    return float(logsumexp(pi.log_probs[states]))


def bottleneck_ratio(kernel: TransitionKernel, pi: GibbsDistribution,
                     states: Iterable[int]) -> float:
    """Normalized stationary outflow of the set; requires pi(set) <= 1/2."""
    idx = np.unique(np.fromiter(states, dtype=np.int64))
    if idx.size == 0:
        raise InvalidSet("bottleneck set is empty")
    log_flow, log_mass = _log_flow_and_mass(kernel, pi, idx)
    return math.exp(log_flow - log_mass)


def _log_flow_and_mass(kernel: TransitionKernel, pi: GibbsDistribution,
                       idx: np.ndarray) -> tuple[float, float]:
    log_mass = _log_set_mass(pi, idx)
    if math.exp(log_mass) > 0.5 + _PI_HALF_TOL:
        raise InvalidSet(f"pi(A) = {math.exp(log_mass):.6f} exceeds 1/2")
    member = np.zeros(kernel.n_states, dtype=bool)
    member[idx] = True
    log_np = kernel.log_neighbor_probs()
    log_pi = pi.log_probs
    pieces = []
    for j in range(kernel.n):
        out = idx[~member[idx ^ (1 << j)]]
        if out.size:
            pieces.append(log_pi[out] + log_np[out, j])
    log_flow = float(logsumexp(np.concatenate(pieces))) if pieces else -math.inf
    return log_flow, log_mass


def jsds_lower_bound(ratio: float) -> float:
    """Mixing-time lower bound 1/(4 * ratio)."""
    if not ratio > 0.0:
        raise DomainError(f"ratio must be > 0, got {ratio}")
    return 1.0 / (4.0 * ratio)


@dataclass(frozen=True)
class ChainTerms:
    """The four estimates of the ball-bottleneck chain, in log domain.

    Ordering flags use a 1e-9 relative tolerance on the log scale.
    """

    log_ratio: float
    log_surface_over_ball: float
    log_energy_count_bound: float
    log_entropy_component_bound: float
    center_energy: float
    min_surface_energy: float
    min_surface_component: float
    surface_size: int
    flags: tuple[bool, bool, bool]

    _TOL = 1e-9

    @property
    def all_ordered(self) -> bool:
        return all(self.flags)

    @staticmethod
    def _leq(a: float, b: float) -> bool:
        return a <= b + ChainTerms._TOL * max(1.0, abs(a), abs(b))

    def to_payload(self) -> dict:
        return {
            "log_ratio": self.log_ratio,
            "log_surface_over_ball": self.log_surface_over_ball,
            "log_energy_count_bound": self.log_energy_count_bound,
            "log_entropy_component_bound": self.log_entropy_component_bound,
            "center_energy": self.center_energy,
            "min_surface_energy": self.min_surface_energy,
            "min_surface_component": self.min_surface_component,
            "surface_size": self.surface_size,
            "flags": list(self.flags),
        }


def _ball_geometry(n: int, center: int) -> np.ndarray:
    states = np.arange(1 << n, dtype=np.int64)
    return np.bitwise_count((states ^ center).astype(np.uint64)).astype(np.int64)


def deterministic_chain(inst: DisorderInstance, beta: float, pi: GibbsDistribution,
                        center: int, k: int,
                        kernel: Optional[TransitionKernel] = None) -> ChainTerms:
    """Evaluate the four-term estimate chain for the ball B_k(center)."""
    n = inst.n
    if not 1 <= k <= n:
        raise DomainError(f"radius k={k} outside [1, n]")
    if kernel is None:
        kernel = build_kernel(inst, beta)
    dist = _ball_geometry(n, center)
    ball = np.flatnonzero(dist <= k)
    surface = np.flatnonzero(dist == k)
    log_flow, log_ball = _log_flow_and_mass(kernel, pi, ball)
    log_ratio = log_flow - log_ball
    log_surface = _log_set_mass(pi, surface)
    energies = energy_table(inst)
    h0 = float(energies[center])
    min_h = float(energies[surface].min())
    c = correlation(inst.p, k / n)
    min_g = float((energies[surface] - h0 * c).min())
    size = surface.size
    log_iii = math.log(size) + beta * (h0 - min_h)
    log_iv = n * binary_entropy(k / n) + beta * (h0 * (1.0 - c) - min_g)
    log_ii = log_surface - log_ball
    flags = (
        ChainTerms._leq(log_ratio, log_ii),
        ChainTerms._leq(log_ii, log_iii),
        ChainTerms._leq(log_iii, log_iv),
    )
    return ChainTerms(
        log_ratio=log_ratio,
        log_surface_over_ball=log_ii,
        log_energy_count_bound=log_iii,
        log_entropy_component_bound=log_iv,
        center_energy=h0,
        min_surface_energy=min_h,
        min_surface_component=min_g,
        surface_size=int(size),
        flags=flags,
    )


def lemma_exponent(beta: float, eps: float, delta: float, p: int,
                   k_over_n: float) -> float:
    """Per-spin exponent of the certified bound 4 t_mix >= exp(n * exponent):

    beta * BETA_C (1-eps)(1-delta)(1 - c_p(r)) - gamma(r),  r = k/n.
    """
    if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
        raise DomainError(f"eps={eps}, delta={delta} must lie in (0,1)")
    if not 0.0 < k_over_n < 0.5:
        raise DomainError(f"k/n={k_over_n} outside (0, 1/2)")
    if beta < 0.0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    r = k_over_n
    return (beta * BETA_C * (1.0 - eps) * (1.0 - delta) * (1.0 - correlation(p, r))
            - binary_entropy(r))


def lemma_exponent_beta_threshold(eps: float, delta: float, p: int,
                                  k_over_n: float) -> float:
    """The beta at which lemma_exponent crosses zero for this profile:
    gamma(r) / (BETA_C (1-eps)(1-delta)(1 - c_p(r)))."""
    r = k_over_n
    if not 0.0 < r < 0.5:
        raise DomainError(f"k/n={r} outside (0, 1/2)")
    return binary_entropy(r) / (BETA_C * (1.0 - eps) * (1.0 - delta)
                                * (1.0 - correlation(p, r)))


@dataclass(frozen=True)
class BoundCertificate:
    """A (center, radius) bottleneck certificate with its implied lower bound."""

    center: int
    k: int
    ratio: float
    tmix_lower: float
    pi_ball: float
    log_ratio: float
    log_tmix_lower: float
    chain_terms: ChainTerms

    def to_payload(self) -> dict:
        return {
            "center": self.center,
            "k": self.k,
            "ratio": self.ratio,
            "tmix_lower": self.tmix_lower,
            "pi_ball": self.pi_ball,
            "log_ratio": self.log_ratio,
            "log_tmix_lower": self.log_tmix_lower,
            "chain_terms": self.chain_terms.to_payload(),
            "flags": list(self.chain_terms.flags),
        }


def default_radii(n: int, extended: bool = False) -> list[int]:
    """Radii 1..floor(n/4) by default (the regime the exponent chain uses);
    extended mode allows up to floor((n-1)/2)."""
    top = (n - 1) // 2 if extended else n // 4
    return list(range(1, max(top, 1) + 1))


def ball_scan(inst: DisorderInstance, beta: float, centers: Sequence[int],
              radii: Sequence[int],
              kernel: Optional[TransitionKernel] = None,
              pi: Optional[GibbsDistribution] = None) -> BoundCertificate:
    """Best ball certificate over (center, k) with pi(ball) <= 1/2.

    Deterministic: the winner maximizes tmix_lower, with ties broken by
    smaller ratio, then smaller center index, then smaller radius.
    """
    if kernel is None:
        kernel = build_kernel(inst, beta)
    if pi is None:
        pi = gibbs_distribution(inst, beta)
    n = inst.n
    log_pi = pi.log_probs
    log_np = kernel.log_neighbor_probs()
    best = None
    for center in centers:
        dist = _ball_geometry(n, int(center))
        shell_log = np.array([
            logsumexp(log_pi[dist == d]) if np.any(dist == d) else -math.inf
            for d in range(n + 1)
        ])
        for k in radii:
            if not 1 <= k < n:
                continue
            log_ball = float(logsumexp(shell_log[:k + 1]))
            if math.exp(log_ball) > 0.5 + _PI_HALF_TOL:
                continue
            surface = np.flatnonzero(dist == k)
            xor = (surface ^ center)
            bits = np.arange(n)
            outward = ((xor[:, None] >> bits) & 1) == 0
            vals = np.where(outward, log_pi[surface, None] + log_np[surface], -np.inf)
            log_flow = float(logsumexp(vals))
            log_ratio = log_flow - log_ball
            key = (log_ratio, int(center), int(k))
            if best is None or key < best[0]:
                best = (key, int(center), int(k), log_ball)
    if best is None:
        raise NoValidSet("every candidate ball exceeds half the stationary mass")
    _, center, k, log_ball = best
    chain = deterministic_chain(inst, beta, pi, center, k, kernel=kernel)
    log_ratio = chain.log_ratio
    log_tmix = -LN4 - log_ratio
    return BoundCertificate(
        center=center,
        k=k,
        ratio=math.exp(log_ratio),
        tmix_lower=math.exp(log_tmix) if log_tmix < 700 else math.inf,
        pi_ball=math.exp(log_ball),
        log_ratio=log_ratio,
        log_tmix_lower=log_tmix,
        chain_terms=chain,
    )
