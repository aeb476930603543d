"""Single-flip heat-bath dynamics and trajectory simulation.

Each step picks a site uniformly at random and flips it with probability
1/(1 + exp(beta * dH)), so the Gibbs distribution is stationary.  The flip
rule is pluggable: any map beta*dH -> flip probability that preserves
detailed balance defines a valid single-flip chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import EnergyDriftError, InvalidParams, NotAdjacent
from .model import (
    STREAM_TRAJECTORY,
    DisorderInstance,
    SpinConfiguration,
    energy_delta,
    hamming,
    substream,
)

FlipRule = Callable[[float], float]


def heat_bath_flip(beta_dh: float) -> float:
    """Heat-bath acceptance 1/(1 + e^x), evaluated overflow-free."""
    if beta_dh > 0:
        z = math.exp(-beta_dh)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(beta_dh))


def metropolis_flip(beta_dh: float) -> float:
    """Metropolis acceptance min(1, e^-x); an alternative single-flip rule."""
    return 1.0 if beta_dh <= 0 else math.exp(-beta_dh)


def transition_probability(inst: DisorderInstance, beta: float,
                           sigma: SpinConfiguration,
                           tau: SpinConfiguration) -> float:
    """Heat-bath transition kernel entry P(sigma, tau).

    For Hamming distance 1 this is (1/n) / (1 + exp(beta*(H(tau)-H(sigma))));
    the diagonal is the complement of the n neighbor probabilities.
    """
    d = hamming(sigma, tau)
    if d > 1:
        raise NotAdjacent(f"states at Hamming distance {d} > 1")
    n = inst.n
    if d == 1:
        site = (sigma.bits ^ tau.bits).bit_length() - 1
        return heat_bath_flip(beta * energy_delta(inst, sigma, site)) / n
    total = sum(heat_bath_flip(beta * energy_delta(inst, sigma, j)) for j in range(n))
    return 1.0 - total / n


def step(inst: DisorderInstance, beta: float, sigma: SpinConfiguration,
         rng: np.random.Generator, rule: FlipRule = heat_bath_flip) -> SpinConfiguration:
    """One dynamics step: uniform site choice, then accept/reject the flip."""
    site = int(rng.integers(0, inst.n))
    u = float(rng.random())
    if u < rule(beta * energy_delta(inst, sigma, site)):
        return sigma.flip(site)
    return sigma


@dataclass(frozen=True)
class TrajectorySummary:
    final_state: SpinConfiguration
    energy_series: np.ndarray  # energies at steps 0, subsample, 2*subsample, ...
    steps: int
    seed: int


_CHUNK = 1 << 16
_DRIFT_RTOL = 1e-6


@njit(cache=True)
def _run_chunk(beta, site_ptr, site_idx, signed, bits, e, sites, us, nsteps,
               chunk_start, subsample, series):
    for t in range(nsteps):
        s = sites[t]
        sub = 0.0
        for q in range(site_ptr[s], site_ptr[s + 1]):
            sub += signed[site_idx[q]]
        de = -2.0 * sub
        x = beta * de
        if x > 0.0:
            z = math.exp(-x)
            pflip = z / (1.0 + z)
        else:
            pflip = 1.0 / (1.0 + math.exp(x))
        if us[t] < pflip:
            bits ^= np.int64(1) << s
            e += de
            for q in range(site_ptr[s], site_ptr[s + 1]):
                signed[site_idx[q]] = -signed[site_idx[q]]
        gstep = chunk_start + t + 1
        if gstep % subsample == 0:
            series[gstep // subsample] = e
    return bits, e


def simulate(inst: DisorderInstance, beta: float, sigma0: SpinConfiguration,
             horizon: int, subsample: int = 1,
             seed: int = 0) -> TrajectorySummary:
    """Run `horizon` steps from sigma0, recording the energy every `subsample`
    steps (step 0 included).  Deterministic given (inst, beta, sigma0, seed).

    Randomness is drawn in fixed 2^16-step blocks (site indices first, then
    uniforms), so a shorter horizon with the same seed follows the same path.
    Every block boundary recomputes the energy from scratch and raises if the
    incremental value drifted beyond 1e-6 relative.
    """
    if horizon < 0:
        raise InvalidParams(f"horizon must be >= 0, got {horizon}")
    if subsample < 1:
        raise InvalidParams(f"subsample must be >= 1, got {subsample}")
    if sigma0.n != inst.n:
        raise InvalidParams("start configuration size differs from instance")
    exp = inst.expansion
    ptr, idx = exp.site_csr()
    signed = exp.signed_at(sigma0.bits).copy()
    bits = np.int64(sigma0.bits)
    e = float(signed.sum())
    series = np.full(horizon // subsample + 1, np.nan)
    series[0] = e
    rng = substream(seed, STREAM_TRAJECTORY)
    for chunk_start in range(0, horizon, _CHUNK):
        nsteps = min(_CHUNK, horizon - chunk_start)
        # full-size draws keep the stream layout independent of the horizon
        sites = rng.integers(0, inst.n, size=_CHUNK)
        us = rng.random(_CHUNK)
        bits, e = _run_chunk(beta, ptr, idx, signed, bits, e, sites, us,
                             nsteps, chunk_start, subsample, series)
        direct = exp.energy_bits(int(bits))
        if abs(e - direct) > _DRIFT_RTOL * max(1.0, abs(direct)):
            raise EnergyDriftError(
                f"incremental energy {e!r} vs direct {direct!r} after "
                f"{chunk_start + nsteps} steps")
        e = direct
        signed = exp.signed_at(int(bits)).copy()
    return TrajectorySummary(
        final_state=SpinConfiguration(bits=int(bits), n=inst.n),
        energy_series=series,
        steps=horizon,
        seed=int(seed),
    )
