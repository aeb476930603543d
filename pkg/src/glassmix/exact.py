"""Exact full-state-space analysis of the single-flip chain at small n.

Provides the dense transition kernel, the stationary Gibbs law, detailed
balance and stationarity residuals, the spectral gap of the symmetrized
kernel, the exact worst-start mixing time (or a capped verdict), and the
two-sided spectral estimate

    ln(2) (1/gap - 1)  <=  t_mix  <=  (ln 4 - ln min_s pi(s)) / gap.

The mixing time is found by repeated squaring of the dense kernel plus a
binary refinement; total-variation distance from a point mass under a fixed
kernel is non-increasing in t, which makes the bracketing search exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .constants import LN2, LN4
from .errors import CapacityExceeded, DimensionMismatch, DomainError, NotReversible
from .model import DisorderInstance, energy_table

MAX_KERNEL_SPINS = 14
MAX_GIBBS_SPINS = 20
REVERSIBILITY_GATE = 1e-8
MEMORY_BUDGET_BYTES = 6 * 1024**3


def _vector_flip_prob(rule: str, x: np.ndarray) -> np.ndarray:
    if rule == "heat_bath":
        return expit(-x)
    if rule == "metropolis":
        return np.minimum(1.0, np.exp(-np.maximum(x, 0.0)))
    raise DomainError(f"unknown flip rule {rule!r}")


@dataclass
class TransitionKernel:
    """Single-flip kernel: nonzeros only on Hamming-1 neighbors and the diagonal."""

    n: int
    beta: float
    neighbor_probs: np.ndarray  # (2^n, n): P(s -> s with bit j flipped)
    diagonal: np.ndarray        # (2^n,)
    deltas: np.ndarray          # (2^n, n): energy change of flipping bit j
    instance: DisorderInstance
    rule: str = "heat_bath"

    @property
    def n_states(self) -> int:
        return 1 << self.n

    def log_neighbor_probs(self) -> np.ndarray:
        """log P(s, s^j), computed overflow-free from the energy deltas."""
        return -math.log(self.n) - np.logaddexp(0.0, self.beta * self.deltas)

    def dense(self) -> np.ndarray:
        size = self.n_states
        mat = np.zeros((size, size))
        states = np.arange(size)
        mat[states, states] = self.diagonal
        for j in range(self.n):
            mat[states, states ^ (1 << j)] = self.neighbor_probs[:, j]
        return mat

    def row_sum_error(self) -> float:
        return float(np.abs(self.diagonal + self.neighbor_probs.sum(axis=1) - 1.0).max())


def build_kernel(inst: DisorderInstance, beta: float,
                 rule: str = "heat_bath") -> TransitionKernel:
    """Assemble the kernel from the energy table: flip probability
    rule(beta * dH) / n per neighbor, diagonal as the complement."""
    if inst.n > MAX_KERNEL_SPINS:
        raise CapacityExceeded(f"kernel needs n <= {MAX_KERNEL_SPINS}, got {inst.n}")
    table = energy_table(inst)
    states = np.arange(1 << inst.n)
    deltas = np.empty((states.size, inst.n))
    for j in range(inst.n):
        deltas[:, j] = table[states ^ (1 << j)] - table[states]
    neighbor = _vector_flip_prob(rule, beta * deltas) / inst.n
    diagonal = 1.0 - neighbor.sum(axis=1)
    np.maximum(diagonal, 0.0, out=diagonal)
    return TransitionKernel(n=inst.n, beta=beta, neighbor_probs=neighbor,
                            diagonal=diagonal, deltas=deltas, instance=inst,
                            rule=rule)


@dataclass
class GibbsDistribution:
    """Stationary law pi(s) proportional to exp(-beta H(s)), log-normalized."""

    log_weights: np.ndarray
    log_z: float
    probabilities: np.ndarray

    @property
    def log_probs(self) -> np.ndarray:
        return self.log_weights - self.log_z

    @property
    def min_log_prob(self) -> float:
        return float(self.log_probs.min())


def gibbs_distribution(inst: DisorderInstance, beta: float) -> GibbsDistribution:
    if inst.n > MAX_GIBBS_SPINS:
        raise CapacityExceeded(f"Gibbs law needs n <= {MAX_GIBBS_SPINS}, got {inst.n}")
    log_w = -beta * energy_table(inst)
    log_z = float(logsumexp(log_w))
    return GibbsDistribution(log_weights=log_w, log_z=log_z,
                             probabilities=np.exp(log_w - log_z))


def verify_detailed_balance(kernel: TransitionKernel, pi: GibbsDistribution) -> float:
    """Max relative residual |pi(s)P(s,t) - pi(t)P(t,s)| / pi(s)P(s,t) over edges."""
    if pi.probabilities.size != kernel.n_states:
        raise DimensionMismatch("kernel and distribution sizes differ")
    states = np.arange(kernel.n_states)
    log_np = kernel.log_neighbor_probs()
    log_pi = pi.log_probs
    worst = 0.0
    for j in range(kernel.n):
        flipped = states ^ (1 << j)
        log_fwd = log_pi + log_np[:, j]
        log_rev = log_pi[flipped] + log_np[flipped, j]
        worst = max(worst, float(np.abs(np.expm1(log_rev - log_fwd)).max()))
    return worst


def stationarity_error(kernel: TransitionKernel, pi: GibbsDistribution) -> float:
    """L1 residual ||pi P - pi||_1, accumulated over the neighbor structure."""
    probs = pi.probabilities
    states = np.arange(kernel.n_states)
    evolved = probs * kernel.diagonal
    for j in range(kernel.n):
        flipped = states ^ (1 << j)
        evolved += probs[flipped] * kernel.neighbor_probs[flipped, j]
    return float(np.abs(evolved - probs).sum())


def _symmetrized(kernel: TransitionKernel, pi: GibbsDistribution) -> np.ndarray:
    size = kernel.n_states
    states = np.arange(size)
    log_pi = pi.log_probs
    mat = np.zeros((size, size))
    mat[states, states] = kernel.diagonal
    log_np = kernel.log_neighbor_probs()
    for j in range(kernel.n):
        flipped = states ^ (1 << j)
        mat[states, flipped] = np.exp(log_np[:, j] + 0.5 * (log_pi - log_pi[flipped]))
    return 0.5 * (mat + mat.T)


def spectral_gap(kernel: TransitionKernel, pi: GibbsDistribution) -> tuple[float, float]:
    """(lambda2, 1 - lambda2) of the similarity-symmetrized kernel.

    Symmetrization is only valid for reversible chains, so the detailed
    balance residual is gated at 1e-8 first.
    """
    if kernel.n > MAX_KERNEL_SPINS:
        raise CapacityExceeded(f"dense eigensolve needs n <= {MAX_KERNEL_SPINS}")
    residual = verify_detailed_balance(kernel, pi)
    if residual > REVERSIBILITY_GATE:
        raise NotReversible(
            f"detailed-balance residual {residual:.3e} exceeds {REVERSIBILITY_GATE:.0e}")
    eigs = np.linalg.eigvalsh(_symmetrized(kernel, pi))
    if eigs[-1] > 1.0 + 1e-9 or eigs[0] < -1.0 - 1e-9:
        raise NotReversible(f"eigenvalues escape [-1, 1]: [{eigs[0]}, {eigs[-1]}]")
    lambda2 = float(eigs[-2])
    return lambda2, 1.0 - lambda2


class MixingKind(str, enum.Enum):
    EXACT = "exact"
    CAPPED_LOWER_BOUND = "capped_lower_bound"


@dataclass(frozen=True)
class MixingResult:
    kind: MixingKind
    t_mix: int           # exact value, or the cap when capped
    worst_start: int
    tv_at_t: float


def _worst_tv(power: np.ndarray, probs: np.ndarray) -> tuple[float, int]:
    tv = 0.5 * np.abs(power - probs).sum(axis=1)
    start = int(np.argmax(tv))
    return float(tv[start]), start


def exact_mixing_time(kernel: TransitionKernel, pi: GibbsDistribution,
                      cap: int = 10**6,
                      memory_budget: int = MEMORY_BUDGET_BYTES) -> MixingResult:
    """Minimal t with max-over-starts TV(P^t(s, .), pi) <= 1/4, or a capped verdict.

    Point-mass starts attain the sup over initial laws (TV to stationarity is
    convex in the initial distribution).  Dense powers P^(2^k) are stored for
    the bracketing search; memory is gated up front.
    """
    if cap < 1:
        raise DomainError(f"cap must be >= 1, got {cap}")
    size = kernel.n_states
    n_powers = max(cap.bit_length(), 1) + 1
    need = size * size * 8 * (n_powers + 2)
    if need > memory_budget:
        raise CapacityExceeded(
            f"mixing-time search needs ~{need/1e9:.1f} GB (budget "
            f"{memory_budget/1e9:.1f} GB); lower n or the cap")
    probs = pi.probabilities
    pows = [kernel.dense()]
    while (1 << len(pows)) <= cap:
        pows.append(pows[-1] @ pows[-1])

    prefix = None
    for j in range(cap.bit_length()):
        if (cap >> j) & 1:
            prefix = pows[j] if prefix is None else prefix @ pows[j]
    tv_cap, start_cap = _worst_tv(prefix, probs)
    if tv_cap > 0.25:
        return MixingResult(MixingKind.CAPPED_LOWER_BOUND, cap, start_cap, tv_cap)

    k_hit = None
    for k in range(len(pows)):
        tv, _ = _worst_tv(pows[k], probs)
        if tv <= 0.25:
            k_hit = k
            break
    if k_hit is None:
        # d(cap) <= 1/4 guarantees some power of two at most 2*cap also mixes
        raise AssertionError("no mixed power found despite d(cap) <= 1/4")
    if k_hit == 0:
        tv1, start1 = _worst_tv(pows[0], probs)
        return MixingResult(MixingKind.EXACT, 1, start1, tv1)

    t_lo = 1 << (k_hit - 1)
    m_lo = pows[k_hit - 1]
    for j in range(k_hit - 2, -1, -1):
        cand = m_lo @ pows[j]
        tv, _ = _worst_tv(cand, probs)
        if tv > 0.25:
            t_lo += 1 << j
            m_lo = cand
    final = m_lo @ pows[0]
    tv_final, start_final = _worst_tv(final, probs)
    tv_before, _ = _worst_tv(m_lo, probs)
    if not (tv_final <= 0.25 < tv_before):
        raise AssertionError(
            f"TV bracketing inconsistent: d({t_lo})={tv_before}, d({t_lo+1})={tv_final}")
    return MixingResult(MixingKind.EXACT, t_lo + 1, start_final, tv_final)


def tv_curve(kernel: TransitionKernel, pi: GibbsDistribution, t_max: int) -> np.ndarray:
    """d(t) = worst-start TV after t steps, for t = 0..t_max (direct evolution)."""
    mat = np.eye(kernel.n_states)
    dense = kernel.dense()
    out = np.empty(t_max + 1)
    out[0], _ = _worst_tv(mat, pi.probabilities)
    for t in range(1, t_max + 1):
        mat = mat @ dense
        out[t], _ = _worst_tv(mat, pi.probabilities)
    return out


def spectral_sandwich(gap: float, pi: GibbsDistribution) -> tuple[float, float]:
    """Two-sided mixing-time estimate from the spectral gap:
    (ln 2 (1/gap - 1), (ln 4 - ln min pi)/gap)."""
    if not 0.0 < gap <= 1.0:
        raise DomainError(f"gap must lie in (0, 1], got {gap}")
    lower = LN2 * (1.0 / gap - 1.0)
    upper = (LN4 - pi.min_log_prob) / gap
    return lower, upper
