"""Closed-form threshold calculators for the slow-mixing parameter regime.

Everything here is exact scalar arithmetic in (eps, delta, p): the Gaussian
tail integral and its two-sided envelope, the expected size of the deep set,
the admissible interaction order, the inverse-temperature cutoff above which
the bottleneck exponent turns positive, and the large-p constant
C = lim beta_cutoff * p / ln p.

Exponentially large or small quantities carry log-domain companions as the
primary representation; linear values are best effort and may overflow to
inf (never silently wrap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar
from scipy.special import log_ndtr

from .constants import BETA_C
from .errors import DomainError, InvalidX, NotAdmissible
from .geometry import ball_volume, binary_entropy


def phi(u: float) -> float:
    """Gaussian upper-tail integral Phi(u) = P(Z > u), accurate to >= 12 digits."""
    return 0.5 * math.erfc(u / math.sqrt(2.0))


def log_phi(u: float) -> float:
    """log Phi(u), stable for arbitrarily large u."""
    return float(log_ndtr(-u))


def phi_bounds(u: float) -> tuple[float, float]:
    """Two-sided envelope of Phi(u) for u > 0:

    (1 - u^-2) e^{-u^2/2} / (sqrt(2 pi) u)  <=  Phi(u)  <=  e^{-u^2/2} / (sqrt(2 pi) u)
    """
    if not u > 0.0:
        raise DomainError(f"phi_bounds requires u > 0, got {u}")
    upper = math.exp(-0.5 * u * u) / (math.sqrt(2.0 * math.pi) * u)
    return ((1.0 - u ** -2) * upper, upper)


@dataclass(frozen=True)
class DeepCountMoment:
    """First moment of the deep-set size and its explicit exponential minorant."""

    exact: float
    lower_bound: float
    log_exact: float
    log_lower_bound: float
    lower_bound_valid: bool  # the (1 - u^-2) factor is positive


def expected_deep_count(n: int, eps: float) -> DeepCountMoment:
    """E[#states with -H > BETA_C (1-eps) n] = 2^n Phi(sqrt(n) BETA_C (1-eps)).

    The minorant substitutes the lower Gaussian-tail envelope, yielding
    exp(n BETA_C^2 eps (2-eps) / 2) up to an explicit polynomial prefactor;
    exact >= lower_bound always holds (trivially so when the envelope factor
    is nonpositive).
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps} outside (0,1)")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    u = math.sqrt(n) * BETA_C * (1.0 - eps)
    log_exact = n * math.log(2.0) + log_phi(u)
    valid = u > 1.0
    if valid:
        log_lower = (-0.5 * math.log(2.0 * math.pi * n) - math.log(BETA_C * (1.0 - eps))
                     + math.log1p(-(u ** -2))
                     + 0.5 * n * BETA_C ** 2 * eps * (2.0 - eps))
    else:
        log_lower = -math.inf
    exact = math.exp(log_exact) if log_exact < 700 else math.inf
    lower = math.exp(log_lower) if -math.inf < log_lower < 700 else (
        0.0 if log_lower == -math.inf else math.inf)
    if log_exact < log_lower - 1e-12:
        raise AssertionError("deep-count minorant exceeded the exact moment")
    return DeepCountMoment(exact, lower, log_exact, log_lower, valid)


@dataclass(frozen=True)
class ThetaRatio:
    value: float
    log_value: float


def theta(n: int, eps: float, k: int) -> ThetaRatio:
    """Volume-to-deep-count ratio |B_{2k}| / E[deep count], in log domain.

    No clamping: the caller checks theta < 1 before using it in the
    second-moment lower bound.
    """
    if not 2 * k <= n / 2:
        raise DomainError(f"theta requires 2k <= n/2, got k={k}, n={n}")
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    moment = expected_deep_count(n, eps)
    log_theta = math.log(ball_volume(n, 2 * k)) - moment.log_exact
    value = math.exp(log_theta) if log_theta < 700 else math.inf
    return ThetaRatio(value, log_theta)


def x_param(eps: float, delta: float) -> float:
    """x = 3 eps / ((1-eps)^2 delta^2); valid for downstream use only when < 1."""
    if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
        raise DomainError(f"eps={eps}, delta={delta} must lie in (0,1)")
    return 3.0 * eps / ((1.0 - eps) ** 2 * delta ** 2)


def is_valid_x(eps: float, delta: float) -> bool:
    return x_param(eps, delta) < 1.0


def radius(eps: float, delta: float, p: int) -> float:
    """Scan radius r = arctanh(x)/p, the distance scale of the bottleneck ball.

    By construction tanh(p r) = x exactly, i.e. the decay profile e^{-2 p r}
    equals (1-x)/(1+x) and (1-eps)^2 delta^2 (1-e^{-2pr})/(1+e^{-2pr}) = 3 eps.
    """
    x = x_param(eps, delta)
    if x >= 1.0:
        raise InvalidX(f"x={x:.6g} >= 1; shrink eps or grow delta")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    r = math.atanh(x) / p
    decay = math.exp(-2.0 * p * r)
    target = (1.0 - x) / (1.0 + x)
    if abs(decay - target) > 1e-12 * max(target, 1e-300):
        raise AssertionError("radius identity e^{-2pr} = (1-x)/(1+x) violated")
    return r


def profile_radius(eps: float, delta: float, p: int) -> float:
    """Smallest r with (1 - r/2)**p <= (1-x)/(1+x): the scan radius matched to
    the model's own correlation profile (radius() targets the decay profile
    e^{-2pr} instead).  r = 2 (1 - ((1-x)/(1+x))^(1/p)) ~ 4 arctanh(x)/p."""
    x = x_param(eps, delta)
    if x >= 1.0:
        raise InvalidX(f"x={x:.6g} >= 1")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    return 2.0 * (1.0 - ((1.0 - x) / (1.0 + x)) ** (1.0 / p))


_P_SCAN_LIMIT = 10**7


def admissible_p(eps: float, delta: float) -> int:
    """Smallest p with radius(p) < 1/4 and binary_entropy(radius(p)) <= BETA_C^2 eps / 4."""
    x = x_param(eps, delta)
    if x >= 1.0:
        raise InvalidX(f"x={x:.6g} >= 1")
    gate = BETA_C ** 2 * eps / 4.0
    for p in range(2, _P_SCAN_LIMIT):
        r = radius(eps, delta, p)
        if r < 0.25 and binary_entropy(r) <= gate:
            return p
    raise RuntimeError("admissible p not found below scan limit")


def beta_cutoff(eps: float, delta: float, p: int) -> float:
    """Inverse-temperature cutoff gamma(r) (1+x) / (BETA_C (1-eps)(1-delta) 2x).

    Requires p at or above the admissible order; scales as
    asymptotic_constant(eps, delta) * ln(p)/p for large p.
    """
    if p < admissible_p(eps, delta):
        raise NotAdmissible(
            f"p={p} below admissible order {admissible_p(eps, delta)}")
    x = x_param(eps, delta)
    r = radius(eps, delta, p)
    return (binary_entropy(r) * (1.0 + x)
            / (BETA_C * (1.0 - eps) * (1.0 - delta) * 2.0 * x))


def asymptotic_constant(eps: float, delta: float) -> float:
    """C = arctanh(x)(1+x) / (2 BETA_C (1-eps)(1-delta) x) >= 1/(2 BETA_C).

    This is the exact large-p limit of beta_cutoff * p / ln p.
    """
    x = x_param(eps, delta)
    if x >= 1.0:
        raise InvalidX(f"x={x:.6g} >= 1")
    return (math.atanh(x) * (1.0 + x)
            / (2.0 * BETA_C * (1.0 - eps) * (1.0 - delta) * x))


@dataclass(frozen=True)
class OptimizedConstant:
    delta_prescribed: float
    c_prescribed: float
    delta_refined: float
    c_refined: float


def optimize_constant(eps: float) -> OptimizedConstant:
    """Evaluate the prescription delta = (6 eps)^(1/3) and refine it numerically.

    The refinement is a bounded 1-D minimization of asymptotic_constant over
    the validity interval delta in (sqrt(3 eps)/(1-eps), 1); it can only
    improve on the prescription.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps} outside (0,1)")
    delta_star = (6.0 * eps) ** (1.0 / 3.0)
    if delta_star >= 1.0 or not is_valid_x(eps, delta_star):
        raise DomainError(
            f"prescription delta=(6 eps)^(1/3)={delta_star:.4g} invalid at eps={eps}")
    c_star = asymptotic_constant(eps, delta_star)
    lo = math.sqrt(3.0 * eps) / (1.0 - eps)
    if lo >= 1.0:
        raise DomainError(f"no valid delta exists at eps={eps}")
    res = minimize_scalar(lambda d: asymptotic_constant(eps, d),
                          bounds=(lo * (1.0 + 1e-9) + 1e-12, 1.0 - 1e-9),
                          method="bounded",
                          options={"xatol": 1e-12})
    if res.fun <= c_star:
        return OptimizedConstant(delta_star, c_star, float(res.x), float(res.fun))
    return OptimizedConstant(delta_star, c_star, delta_star, c_star)


@dataclass(frozen=True)
class ReferenceTemperatures:
    """Leading-order reference scales; o(1) corrections in p are omitted."""

    beta_c: float
    beta_sh: float
    leading_order_only: bool = True


def reference_temperatures(p: int) -> ReferenceTemperatures:
    if p < 2:
        raise DomainError(f"p must be >= 2, got {p}")
    return ReferenceTemperatures(beta_c=BETA_C,
                                 beta_sh=math.sqrt(2.0 * math.log(p) / p))


@dataclass(frozen=True)
class TheoryParams:
    """Derived parameter tuple for one (eps, delta, p) point."""

    eps: float
    delta: float
    p: int
    x: float
    r: float
    beta_cut: float
    admissible: bool

    @classmethod
    def derive(cls, eps: float, delta: float, p: int) -> "TheoryParams":
        x = x_param(eps, delta)
        if x >= 1.0:
            raise InvalidX(f"x={x:.6g} >= 1 at eps={eps}, delta={delta}")
        r = radius(eps, delta, p)
        admissible = p >= admissible_p(eps, delta)
        cut = beta_cutoff(eps, delta, p) if admissible else math.nan
        return cls(eps=eps, delta=delta, p=p, x=x, r=r, beta_cut=cut,
                   admissible=admissible)
