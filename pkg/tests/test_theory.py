import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from glassmix.constants import BETA_C
from glassmix.errors import DomainError, InvalidX, NotAdmissible
from glassmix.geometry import binary_entropy
from glassmix.model import correlation
from glassmix import theory


def test_beta_c_value():
    assert BETA_C == math.sqrt(2 * math.log(2))
    assert f"{BETA_C:.7f}" == "1.1774100"


# ---------------------------------------------------------------------------
# Gaussian tail


def test_phi_basic_values():
    assert theory.phi(0.0) == 0.5
    assert theory.phi(2.0) == pytest.approx(0.02275013194817921, rel=1e-12)


def test_phi_reflection():
    for u in (0.5, 1.0, 3.0):
        assert theory.phi(u) + theory.phi(-u) == pytest.approx(1.0, abs=1e-12)


def test_phi_against_quadrature():
    for u in (0.3, 1.7, 4.0):
        val, err = quad(lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi),
                        u, np.inf, epsabs=1e-14, epsrel=1e-13)
        assert theory.phi(u) == pytest.approx(val, rel=1e-11)


def test_phi_bounds_contain():
    for u in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        lo, hi = theory.phi_bounds(u)
        assert lo < theory.phi(u) < hi
    lo, hi = theory.phi_bounds(2.0)
    assert hi == pytest.approx(0.02699548325659403, rel=1e-12)
    assert lo == pytest.approx(0.02024661244244552, rel=1e-12)
    with pytest.raises(DomainError):
        theory.phi_bounds(0.0)


def test_log_phi_extreme():
    # log Phi stays finite far beyond double underflow of Phi itself
    assert theory.log_phi(100.0) == pytest.approx(-5005.524, rel=1e-4)


# ---------------------------------------------------------------------------
# deep-count first moment


def test_expected_deep_count_against_quadrature():
    m = theory.expected_deep_count(20, 0.5)
    u = math.sqrt(20) * BETA_C * 0.5
    val, _ = quad(lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi), u, np.inf,
                  epsabs=1e-16, epsrel=1e-13)
    assert m.exact == pytest.approx(2 ** 20 * val, rel=1e-9)


def test_expected_deep_count_dominates_minorant():
    for n in (4, 10, 30, 200, 2000):
        for eps in (0.05, 0.3, 0.6, 0.9):
            m = theory.expected_deep_count(n, eps)
            assert m.log_exact >= m.log_lower_bound - 1e-12
            if m.lower_bound_valid:
                assert m.exact >= m.lower_bound


def test_expected_deep_count_log_companions():
    m = theory.expected_deep_count(10_000, 0.5)
    assert math.isinf(m.exact)  # linear overflow is explicit
    assert math.isfinite(m.log_exact) and math.isfinite(m.log_lower_bound)


# ---------------------------------------------------------------------------
# theta ratio


def test_theta_log_negative_case():
    assert theory.theta(30, 0.3, 1).log_value < 0.0


def test_theta_decreasing_in_n_when_admissible():
    """theta shrinks with n whenever gamma(2k/n)-ish cost stays under the
    deep-count rate; finite differences on a valid grid."""
    eps = 0.4
    for k in (1, 2):
        vals = []
        for n in (16, 20, 24, 28):
            if binary_entropy(k / n) <= BETA_C ** 2 * eps / 4:
                vals.append(theory.theta(n, eps, k).log_value)
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_theta_can_exceed_one():
    t = theory.theta(8, 0.02, 2)
    assert t.value > 1.0  # no clamping


def test_theta_domain():
    with pytest.raises(DomainError):
        theory.theta(8, 0.3, 3)  # 2k > n/2


# ---------------------------------------------------------------------------
# parameter chain


def test_x_param_values():
    assert theory.x_param(0.1, 0.9) == pytest.approx(0.3 / 0.6561, rel=1e-12)
    assert theory.x_param(0.25, 0.5) == pytest.approx(16 / 3, rel=1e-12)
    assert not theory.is_valid_x(0.25, 0.5)
    assert theory.is_valid_x(0.1, 0.9)
    with pytest.raises(DomainError):
        theory.x_param(0.0, 0.5)


def test_x_param_small_eps_limit():
    assert theory.x_param(1e-9, 0.5) == pytest.approx(0.0, abs=1e-7)


def test_radius_against_mpmath():
    mpmath.mp.dps = 40
    x = mpmath.mpf(3) * mpmath.mpf("0.1") / ((1 - mpmath.mpf("0.1")) ** 2
                                             * mpmath.mpf("0.9") ** 2)
    expected = float(mpmath.atanh(x) / 100)
    assert theory.radius(0.1, 0.9, 100) == pytest.approx(expected, rel=1e-13)


def test_radius_identities_on_grid():
    """tanh(p r) = x exactly, hence (1-eps)^2 delta^2 tanh(p r) = 3 eps."""
    rng = np.random.default_rng(4)
    done = 0
    while done < 20:
        eps = float(rng.uniform(0.01, 0.4))
        delta = float(rng.uniform(0.3, 0.99))
        if not theory.is_valid_x(eps, delta):
            continue
        p = int(rng.integers(2, 500))
        r = theory.radius(eps, delta, p)
        x = theory.x_param(eps, delta)
        assert math.tanh(p * r) == pytest.approx(x, rel=1e-12)
        assert (1 - eps) ** 2 * delta ** 2 * math.tanh(p * r) == pytest.approx(
            3 * eps, rel=1e-12)
        done += 1


def test_radius_invalid_x():
    with pytest.raises(InvalidX):
        theory.radius(0.25, 0.5, 10)


def test_radius_vanishes_with_x():
    assert theory.radius(1e-8, 0.9, 10) == pytest.approx(0.0, abs=1e-6)


def test_profile_radius_matches_model_profile():
    """profile_radius is the exact crossing of c_p(r) = (1-x)/(1+x)."""
    eps, delta, p = 0.05, 0.8, 40
    r = theory.profile_radius(eps, delta, p)
    x = theory.x_param(eps, delta)
    assert correlation(p, r) == pytest.approx((1 - x) / (1 + x), rel=1e-10)
    # about 4x the decay-profile radius at large p
    assert r == pytest.approx(4 * theory.radius(eps, delta, p), rel=0.05)


def test_admissible_p_bracketing():
    for eps, delta in ((0.1, 0.9), (0.05, 0.7), (0.15, 0.95)):
        p_star = theory.admissible_p(eps, delta)
        gate = BETA_C ** 2 * eps / 4
        r = theory.radius(eps, delta, p_star)
        assert r < 0.25 and binary_entropy(r) <= gate
        if p_star > 2:
            r_prev = theory.radius(eps, delta, p_star - 1)
            assert r_prev >= 0.25 or binary_entropy(r_prev) > gate


def test_beta_cutoff_value():
    assert theory.beta_cutoff(0.1, 0.9, 100) == pytest.approx(0.46845, rel=1e-3)
    with pytest.raises(NotAdmissible):
        theory.beta_cutoff(0.1, 0.9, 2)


def test_beta_cutoff_linear_in_entropy():
    """cutoff / gamma(r) is a constant of (eps, delta) across p."""
    eps, delta = 0.1, 0.9
    consts = []
    for p in (100, 200, 400, 1000):
        cut = theory.beta_cutoff(eps, delta, p)
        r = theory.radius(eps, delta, p)
        consts.append(cut / binary_entropy(r))
    assert np.ptp(consts) < 1e-10 * consts[0]


def test_entropy_upper_bound_in_p():
    """gamma(r_p) <= (2 arctanh(x)/p) ln(p / arctanh(x)) on a p grid."""
    eps, delta = 0.1, 0.9
    x = theory.x_param(eps, delta)
    at = math.atanh(x)
    for p in (10, 100, 1000, 10_000):
        r = theory.radius(eps, delta, p)
        assert binary_entropy(r) <= (2 * at / p) * math.log(p / at) * (1 + 1e-12)


def test_asymptotic_constant_floor():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 1000:
        eps = float(rng.uniform(1e-4, 0.5))
        delta = float(rng.uniform(1e-3, 1 - 1e-3))
        if not theory.is_valid_x(eps, delta):
            continue
        c = theory.asymptotic_constant(eps, delta)
        assert c >= 1 / (2 * BETA_C) - 1e-15
        checked += 1


def test_asymptotic_constant_small_x_limit():
    # arctanh(x)/x -> 1: C -> (1+x) / (2 bc (1-eps)(1-delta)) -> 1/(2 bc)
    eps, delta = 1e-12, 1e-3
    c = theory.asymptotic_constant(eps, delta)
    x = theory.x_param(eps, delta)
    exact_factor = (1 + x) / ((1 - eps) * (1 - delta))
    assert c == pytest.approx(exact_factor / (2 * BETA_C), rel=1e-9)
    assert c == pytest.approx(1 / (2 * BETA_C), rel=2e-3)


def test_cutoff_scaling_converges_to_constant():
    """beta_cutoff * p / ln p -> asymptotic_constant; the 5%-at-1e4 window
    needs arctanh(x) near e, e.g. (eps, delta) = (0.15, 0.8)."""
    eps, delta = 0.15, 0.8
    c = theory.asymptotic_constant(eps, delta)
    p_lo = theory.admissible_p(eps, delta)
    ratios = []
    for p in (max(400, p_lo), 10**3, 10**4):
        ratios.append(theory.beta_cutoff(eps, delta, p) * p / math.log(p) / c)
    errs = [abs(r - 1) for r in ratios]
    assert errs[-1] < 0.05
    assert errs[0] > errs[-1]  # converging


def test_optimize_constant_prescription():
    opt = theory.optimize_constant(1e-3)
    assert opt.delta_prescribed == pytest.approx(0.006 ** (1 / 3), rel=1e-12)
    assert opt.delta_prescribed == pytest.approx(0.18171, rel=1e-4)
    assert opt.c_refined <= opt.c_prescribed + 1e-12
    assert opt.c_refined >= 1 / (2 * BETA_C)


def test_optimized_constant_shrinks_with_eps():
    """C decreases toward 1/(2 BETA_C) as eps -> 0 along delta = (6 eps)^(1/3).

    That delta minimizes delta + x (x ~ 3 eps/delta^2), so the leading gap is
    floor * (6^(1/3) + 3*6^(-2/3)) eps^(1/3) = floor * 9/6^(2/3) * eps^(1/3).
    """
    floor = 1 / (2 * BETA_C)
    coeff = 9 / 6 ** (2 / 3)
    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        opt = theory.optimize_constant(eps)
        gap = opt.c_prescribed - floor
        assert gap > 0
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]
    scaled = [g / (floor * e ** (1 / 3)) for g, e in zip(gaps, (1e-2, 1e-3, 1e-4))]
    assert scaled[0] > scaled[1] > scaled[2] > coeff  # approaching from above
    assert scaled[2] == pytest.approx(coeff, rel=0.15)


def test_reference_temperatures():
    temps = theory.reference_temperatures(3)
    assert temps.beta_c == BETA_C
    assert temps.beta_sh == pytest.approx(math.sqrt(2 * math.log(3) / 3), rel=1e-12)
    assert temps.beta_sh == pytest.approx(0.85581, rel=1e-4)
    vals = [theory.reference_temperatures(p).beta_sh for p in range(8, 200, 8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_theory_params_derive():
    tp = theory.TheoryParams.derive(0.1, 0.9, 100)
    assert tp.admissible
    assert tp.x == pytest.approx(0.457247, rel=1e-5)
    assert tp.beta_cut == pytest.approx(0.4685, rel=1e-3)
    tp2 = theory.TheoryParams.derive(0.1, 0.9, 10)
    assert not tp2.admissible and math.isnan(tp2.beta_cut)


def test_thresholds_finite_over_wide_range():
    for n in (10, 100, 10_000):
        m = theory.expected_deep_count(n, 0.3)
        assert math.isfinite(m.log_exact)
    for p in (10, 10**3, 10**6):
        r = theory.radius(0.1, 0.9, p)
        assert math.isfinite(r) and r > 0
        assert math.isfinite(theory.reference_temperatures(p).beta_sh)
