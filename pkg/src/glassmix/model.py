"""Spin configurations, Gaussian disorder, and energy evaluation.

The energy landscape is a centered Gaussian process H on {-1,+1}^n whose
covariance depends only on the Hamming distance d between configurations:

    E[H(sigma) H(tau)] = n * (1 - d/(2n))**p = n * correlation(p, d/n)

The process is realized as a p-fold tensor contraction against i.i.d.
standard-normal couplings over an augmented index alphabet of size 2n: each
interaction slot attaches either to a site's spin value sigma_j (symbols
0..n-1) or to a constant reference channel of weight sqrt(3) (symbols
n..2n-1).  Summing feature products over the alphabet gives
sigma.tau + 3n per slot, hence the half-distance correlation profile above.
A plain spin-only alphabet cannot produce this profile: its monomials carry
a single parity, while (1 - d/(2n))**p has nonvanishing Fourier weight on
both parities.

Internally every representation is collapsed once into a parity expansion

    H(sigma) = sum_S c_S * chi_S(sigma),      chi_S = prod_{j in S} sigma_j

over spin subsets S of size <= p, which supports O(#terms) evaluation,
O(#terms containing j) single-flip updates, and a Gray-code sweep for full
energy tables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import (
    CapacityExceeded,
    DimensionMismatch,
    DisorderSanityError,
    DomainError,
    EnergyDriftError,
    IndexOutOfRange,
    InvalidParams,
)

MAX_SPINS = 30
MAX_COUPLINGS = 10**8
_COUPLING_BLOCK = 1 << 16

# Substream tags for the counter-based generator; one tag per purpose so
# streams never collide across representations or modules.
STREAM_DISORDER_FULL = 101
STREAM_DISORDER_MULTISET = 102
STREAM_DISORDER_PARITY = 103
STREAM_TRAJECTORY = 201
STREAM_ENSEMBLE = 301


class Repr(str, enum.Enum):
    """Storage layout of the coupling randomness; all three are equal in law."""

    FULL_ORDERED = "full_ordered"          # one normal per ordered slot tuple
    COLLAPSED_MULTISET = "collapsed_multiset"  # one normal per sorted multiset
    PARITY = "parity"                      # one normal per spin subset

    @property
    def stream_tag(self) -> int:
        return {
            Repr.FULL_ORDERED: STREAM_DISORDER_FULL,
            Repr.COLLAPSED_MULTISET: STREAM_DISORDER_MULTISET,
            Repr.PARITY: STREAM_DISORDER_PARITY,
        }[self]


def substream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for substream (tag, index) of a master seed."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def _blocked_normals(seed: int, tag: int, count: int) -> np.ndarray:
    """i.i.d. standard normals, one Philox substream per 2^16-value block."""
    out = np.empty(count, dtype=np.float64)
    for block, start in enumerate(range(0, count, _COUPLING_BLOCK)):
        stop = min(start + _COUPLING_BLOCK, count)
        out[start:stop] = substream(seed, tag, block).standard_normal(stop - start)
    return out


@dataclass(frozen=True)
class SpinConfiguration:
    """Bit-packed configuration: bit j set <=> sigma_j = +1; index = bits."""

    bits: int
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_SPINS:
            raise InvalidParams(f"spin count must be in [1, {MAX_SPINS}], got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise InvalidParams(f"bits 0x{self.bits:x} out of range for n={self.n}")

    @classmethod
    def from_index(cls, index: int, n: int) -> "SpinConfiguration":
        return cls(bits=index, n=n)

    @classmethod
    def all_plus(cls, n: int) -> "SpinConfiguration":
        return cls(bits=(1 << n) - 1, n=n)

    @classmethod
    def all_minus(cls, n: int) -> "SpinConfiguration":
        return cls(bits=0, n=n)

    @property
    def index(self) -> int:
        return self.bits

    def spin(self, j: int) -> int:
        if not 0 <= j < self.n:
            raise IndexOutOfRange(f"site {j} out of range for n={self.n}")
        return 1 if (self.bits >> j) & 1 else -1

    def flip(self, j: int) -> "SpinConfiguration":
        if not 0 <= j < self.n:
            raise IndexOutOfRange(f"site {j} out of range for n={self.n}")
        return SpinConfiguration(bits=self.bits ^ (1 << j), n=self.n)

    def to_pm1(self) -> np.ndarray:
        j = np.arange(self.n)
        return np.where((self.bits >> j) & 1, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class ModelParams:
    n: int
    p: int
    beta: float = 0.0

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidParams(f"n must be >= 1, got {self.n}")
        if int(self.p) < 2:
            raise InvalidParams(f"interaction order p must be >= 2, got {self.p}")
        if not (self.beta >= 0.0):
            raise InvalidParams(f"beta must be >= 0, got {self.beta}")


def hamming(sigma: SpinConfiguration, tau: SpinConfiguration) -> int:
    """Number of differing spins; symmetric, satisfies the triangle inequality."""
    if sigma.n != tau.n:
        raise DimensionMismatch(f"configurations have n={sigma.n} and n={tau.n}")
    return (sigma.bits ^ tau.bits).bit_count()


def correlation(p: int, r: float) -> float:
    """Distance-correlation profile (1 - r/2)**p of the energy process.

    Defined formally on r in [0, 2]; configurations only ever realize
    r = d/n in [0, 1].
    """
    if int(p) < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if not 0.0 <= r <= 2.0:
        raise DomainError(f"correlation argument r={r} outside [0, 2]")
    return (1.0 - 0.5 * r) ** int(p)


@dataclass(frozen=True)
class CorrelationProfile:
    p: int

    def __call__(self, r: float) -> float:
        return correlation(self.p, r)


# ---------------------------------------------------------------------------
# Parity expansion: exact subset-coefficient form shared by all representations


def _subset_masks(n: int, max_size: int) -> np.ndarray:
    """All bitmasks over n sites with popcount <= max_size, ascending."""
    if max_size >= n:
        return np.arange(1 << n, dtype=np.int64)
    from itertools import combinations

    masks = [0]
    for m in range(1, max_size + 1):
        masks.extend(sum(1 << j for j in combo) for combo in combinations(range(n), m))
    return np.sort(np.array(masks, dtype=np.int64))


def _krawtchouk(n: int, m: int, k: int) -> int:
    """Sum of chi_S over weight-k sign vectors, |S| = m (exact integer)."""
    return sum((-1) ** j * math.comb(m, j) * math.comb(n - m, k - j)
               for j in range(max(0, m + k - n), min(m, k) + 1))


@lru_cache(maxsize=None)
def _parity_level_variances(n: int, p: int) -> tuple:
    """Variance of the coefficient on each subset size m under the coupling law.

    v_m = kappa^2 * 2^-n * sum_k (4n-2k)^p * K_m(k), computed in exact integer
    arithmetic; v_m = 0 for m > p and sum_m C(n,m) v_m = n.
    """
    log_kappa_sq = math.log(n) - p * math.log(4 * n)
    out = []
    for m in range(n + 1):
        num = sum((4 * n - 2 * k) ** p * _krawtchouk(n, m, k) for k in range(n + 1))
        if num % (1 << n):
            raise AssertionError("parity variance numerator not divisible by 2^n")
        v_int = num >> n
        if v_int < 0:
            raise AssertionError("negative parity variance")
        if m > p and v_int != 0:
            raise AssertionError("nonzero variance above interaction order")
        out.append(0.0 if v_int == 0 else math.exp(math.log(v_int) + log_kappa_sq))
    total = sum(math.comb(n, m) * v for m, v in enumerate(out))
    if abs(total - n) > 1e-9 * n:
        raise AssertionError(f"parity variances sum to {total}, expected {n}")
    return tuple(out)


@lru_cache(maxsize=None)
def _parity_basis(n: int, p: int) -> tuple:
    """(masks, per-mask coefficient scales) for the fully collapsed layout."""
    masks = _subset_masks(n, min(n, p))
    variances = _parity_level_variances(n, p)
    sizes = np.bitwise_count(masks.astype(np.uint64)).astype(np.int64)
    scales = np.sqrt(np.array([variances[int(m)] for m in sizes]))
    return masks, scales


@njit(cache=True)
def _gray_table(n, site_ptr, site_idx, signed0, e0):
    size = 1 << n
    out = np.empty(size, dtype=np.float64)
    signed = signed0.copy()
    e = e0
    out[0] = e
    g = 0
    for i in range(1, size):
        t = i & (-i)
        s = 0
        while not (t >> s) & 1:
            s += 1
        sub = 0.0
        for q in range(site_ptr[s], site_ptr[s + 1]):
            sub += signed[site_idx[q]]
        e -= 2.0 * sub
        for q in range(site_ptr[s], site_ptr[s + 1]):
            signed[site_idx[q]] = -signed[site_idx[q]]
        g ^= t
        out[g] = e
    return out


@dataclass
class ParityExpansion:
    """H(sigma) = sum_m coeffs[m] * chi(masks[m], sigma), masks ascending."""

    n: int
    masks: np.ndarray
    coeffs: np.ndarray
    _site_csr: tuple = field(default=None, repr=False)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def chi(self, bits: int) -> np.ndarray:
        off = np.bitwise_count((self.masks & ~bits & self.full_mask).astype(np.uint64))
        return 1.0 - 2.0 * (off & 1).astype(np.float64)

    def energy_bits(self, bits: int) -> float:
        return float(self.coeffs @ self.chi(bits))

    def energies(self, bits: np.ndarray) -> np.ndarray:
        """Energies at an array of state indices (vectorized over states)."""
        bits = np.asarray(bits, dtype=np.int64)
        off = np.bitwise_count(
            (self.masks[None, :] & ~bits[:, None] & self.full_mask).astype(np.uint64))
        signs = 1.0 - 2.0 * (off & 1).astype(np.float64)
        return signs @ self.coeffs

    def signed_at(self, bits: int) -> np.ndarray:
        return self.coeffs * self.chi(bits)

    def site_csr(self):
        if self._site_csr is None:
            cols = []
            ptr = [0]
            for s in range(self.n):
                idx = np.flatnonzero((self.masks >> s) & 1)
                cols.append(idx)
                ptr.append(ptr[-1] + idx.size)
            site_idx = (np.concatenate(cols) if cols else np.empty(0, np.int64)).astype(np.int64)
            self._site_csr = (np.array(ptr, dtype=np.int64), site_idx)
        return self._site_csr

    def delta_bits(self, bits: int, site: int) -> float:
        if not 0 <= site < self.n:
            raise IndexOutOfRange(f"site {site} out of range for n={self.n}")
        ptr, idx = self.site_csr()
        members = idx[ptr[site]:ptr[site + 1]]
        sub = self.coeffs[members] @ self.chi(bits)[members]
        return float(-2.0 * sub)

    def table(self) -> np.ndarray:
        ptr, idx = self.site_csr()
        signed0 = self.signed_at(0)
        table = _gray_table(self.n, ptr, idx, signed0, float(signed0.sum()))
        # guard against accumulation drift along the 2^n-step walk
        last = (1 << self.n) - 1
        last_gray = last ^ (last >> 1)
        direct = self.energy_bits(last_gray)
        if abs(table[last_gray] - direct) > 1e-9 * max(1.0, abs(direct)):
            raise EnergyDriftError("Gray-code energy walk drifted beyond 1e-9")
        return table


# ---------------------------------------------------------------------------
# Disorder sampling


@dataclass(frozen=True)
class DisorderInstance:
    """One draw of the coupling randomness defining a Hamiltonian.

    Identity (hashing, file naming) is (n, p, repr, seed); beta is a property
    of the dynamics, not of the disorder.
    """

    params: ModelParams
    repr: Repr
    couplings: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def identity(self) -> tuple:
        return (self.params.n, self.params.p, self.repr.value, self.seed)

    def __hash__(self):
        return hash(self.identity)

    def __eq__(self, other):
        return isinstance(other, DisorderInstance) and self.identity == other.identity

    @property
    def expansion(self) -> ParityExpansion:
        exp = self.__dict__.get("_expansion")
        if exp is None:
            exp = _build_expansion(self)
            object.__setattr__(self, "_expansion", exp)
        return exp


def _full_ordered_size(n: int, p: int) -> int:
    return (2 * n) ** p


def _multiset_size(n: int, p: int) -> int:
    return math.comb(2 * n + p - 1, p)


@lru_cache(maxsize=32)
def _multiset_layout(n: int, p: int) -> tuple:
    """(parity masks, sqrt(multiplicity)*3^(c/2) weights) per sorted multiset."""
    from itertools import combinations_with_replacement

    masks = np.empty(_multiset_size(n, p), dtype=np.int64)
    weights = np.empty(masks.size, dtype=np.float64)
    fact_p = math.factorial(p)
    for i, combo in enumerate(combinations_with_replacement(range(2 * n), p)):
        mask = 0
        const = 0
        mult_den = 1
        run = 1
        for a, sym in enumerate(combo):
            if a and sym == combo[a - 1]:
                run += 1
            else:
                run = 1
            mult_den = mult_den * run
            if sym < n:
                mask ^= 1 << sym
            else:
                const += 1
        masks[i] = mask
        weights[i] = math.sqrt(fact_p / mult_den) * 3.0 ** (0.5 * const)
    return masks, weights


def sample_disorder(params: ModelParams, seed: int,
                    repr: Repr = Repr.FULL_ORDERED) -> DisorderInstance:
    """Draw couplings deterministically from (params, seed, repr).

    Identical inputs yield bit-identical arrays.  The coupling array is
    gated at generation time: its empirical mean must lie within
    5/sqrt(count) of zero.
    """
    n, p = params.n, params.p
    if n > MAX_SPINS:
        raise CapacityExceeded(f"n={n} exceeds the {MAX_SPINS}-spin limit")
    repr = Repr(repr)
    if repr is Repr.FULL_ORDERED:
        count = _full_ordered_size(n, p)
    elif repr is Repr.COLLAPSED_MULTISET:
        count = _multiset_size(n, p)
    else:
        count = int(sum(math.comb(n, m) for m in range(min(n, p) + 1)))
    if count > MAX_COUPLINGS:
        raise CapacityExceeded(
            f"{repr.value} storage needs {count} couplings (limit {MAX_COUPLINGS})")
    couplings = _blocked_normals(seed, repr.stream_tag, count)
    gate = 5.0 / math.sqrt(count)
    mean = float(couplings.mean())
    if abs(mean) > gate:
        raise DisorderSanityError(
            f"coupling mean {mean:.3e} exceeds sanity gate {gate:.3e}")
    couplings.setflags(write=False)
    return DisorderInstance(params=params, repr=repr, couplings=couplings, seed=int(seed))


def _build_expansion(inst: DisorderInstance) -> ParityExpansion:
    n, p = inst.n, inst.p
    masks, scales = _parity_basis(n, p)
    kappa = math.exp(0.5 * math.log(n) - 0.5 * p * math.log(4 * n))
    coeffs = np.zeros(masks.size, dtype=np.float64)
    if inst.repr is Repr.PARITY:
        coeffs = -scales * inst.couplings
    elif inst.repr is Repr.COLLAPSED_MULTISET:
        mmasks, weights = _multiset_layout(n, p)
        pos = np.searchsorted(masks, mmasks)
        np.add.at(coeffs, pos, weights * inst.couplings)
        coeffs *= -kappa
    else:
        total = _full_ordered_size(n, p)
        chunk = 1 << 20
        alphabet = 2 * n
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            mask = np.zeros(idx.size, dtype=np.int64)
            const = np.zeros(idx.size, dtype=np.int64)
            rem = idx.copy()
            for _ in range(p):
                dig = rem % alphabet
                rem //= alphabet
                spin = dig < n
                mask ^= np.where(spin, np.int64(1) << dig, 0)
                const += ~spin
            w = inst.couplings[idx] * 3.0 ** (0.5 * const)
            np.add.at(coeffs, np.searchsorted(masks, mask), w)
        coeffs *= -kappa
    return ParityExpansion(n=n, masks=masks, coeffs=coeffs)


# ---------------------------------------------------------------------------
# Energy evaluation


def _check_config(inst: DisorderInstance, sigma: SpinConfiguration):
    if sigma.n != inst.n:
        raise DimensionMismatch(f"configuration has n={sigma.n}, instance n={inst.n}")


def energy(inst: DisorderInstance, sigma: SpinConfiguration) -> float:
    """H(sigma): the coupling contraction, evaluated via the parity expansion."""
    _check_config(inst, sigma)
    return inst.expansion.energy_bits(sigma.bits)


def energy_delta(inst: DisorderInstance, sigma: SpinConfiguration, site: int) -> float:
    """H(sigma with `site` flipped) - H(sigma), in O(#terms containing site)."""
    _check_config(inst, sigma)
    return inst.expansion.delta_bits(sigma.bits, site)


MAX_TABLE_SPINS = 20


def energy_table(inst: DisorderInstance) -> np.ndarray:
    """Energies of all 2^n states, indexed by configuration bits.

    Built by a Gray-code walk of 2^n single-flip updates with an endpoint
    drift check against direct evaluation.
    """
    if inst.n > MAX_TABLE_SPINS:
        raise CapacityExceeded(
            f"energy table needs n <= {MAX_TABLE_SPINS}, got {inst.n}")
    return inst.expansion.table()
