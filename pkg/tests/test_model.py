import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glassmix.errors import (
    CapacityExceeded,
    DimensionMismatch,
    DomainError,
    InvalidParams,
)
from glassmix.model import (
    DisorderInstance,
    ModelParams,
    Repr,
    SpinConfiguration,
    _krawtchouk,
    _multiset_layout,
    _parity_basis,
    _parity_level_variances,
    correlation,
    energy,
    energy_delta,
    energy_table,
    hamming,
    sample_disorder,
)

from conftest import zero_disorder


# ---------------------------------------------------------------------------
# configurations and distance


@given(st.integers(1, 30), st.data())
def test_flip_is_involution(n, data):
    bits = data.draw(st.integers(0, (1 << n) - 1))
    j = data.draw(st.integers(0, n - 1))
    sigma = SpinConfiguration(bits=bits, n=n)
    assert sigma.flip(j).flip(j) == sigma
    assert sigma.flip(j) != sigma


def test_configuration_validation():
    with pytest.raises(InvalidParams):
        SpinConfiguration(bits=0, n=0)
    with pytest.raises(InvalidParams):
        SpinConfiguration(bits=0, n=31)
    with pytest.raises(InvalidParams):
        SpinConfiguration(bits=1 << 5, n=5)
    sigma = SpinConfiguration(bits=0b101, n=3)
    assert sigma.spin(0) == 1 and sigma.spin(1) == -1 and sigma.spin(2) == 1
    assert list(sigma.to_pm1()) == [1, -1, 1]


def test_hamming_trivial_and_full_flip():
    s = SpinConfiguration(bits=0b0110, n=4)
    assert hamming(s, s) == 0
    a = SpinConfiguration.all_plus(7)
    b = SpinConfiguration.all_minus(7)
    assert hamming(a, b) == 7


def test_hamming_bit_loop_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        x, y = rng.integers(0, 1 << 10, size=2)
        a = SpinConfiguration(bits=int(x), n=10)
        b = SpinConfiguration(bits=int(y), n=10)
        expected = sum((x >> j) & 1 != (y >> j) & 1 for j in range(10))
        assert hamming(a, b) == expected == hamming(b, a)


@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_hamming_triangle(x, y, z):
    a, b, c = (SpinConfiguration(bits=v, n=8) for v in (x, y, z))
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


def test_hamming_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        hamming(SpinConfiguration(0, 4), SpinConfiguration(0, 5))


# ---------------------------------------------------------------------------
# correlation profile


def test_correlation_values():
    assert correlation(5, 0.0) == 1.0
    assert correlation(5, 1.0) == 2.0 ** -5
    assert correlation(3, 0.5) == pytest.approx(27 / 64, rel=0, abs=1e-15)


def test_correlation_domain():
    with pytest.raises(DomainError):
        correlation(3, -0.1)
    with pytest.raises(DomainError):
        correlation(3, 2.1)
    with pytest.raises(DomainError):
        correlation(0, 0.5)


def test_correlation_monotone_in_r_and_p():
    rs = np.linspace(0.01, 1.99, 60)
    for p in (1, 2, 3, 7):
        vals = [correlation(p, r) for r in rs]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)
    for r in (0.1, 0.5, 1.0, 1.7):
        assert correlation(2, r) > correlation(3, r) > correlation(9, r)


# ---------------------------------------------------------------------------
# disorder sampling


def test_sample_counts_and_determinism():
    params = ModelParams(n=8, p=3)
    inst = sample_disorder(params, seed=9, repr=Repr.FULL_ORDERED)
    assert inst.couplings.size == 16 ** 3
    twice = sample_disorder(params, seed=9, repr=Repr.FULL_ORDERED)
    assert np.array_equal(inst.couplings, twice.couplings)
    multi = sample_disorder(params, seed=9, repr=Repr.COLLAPSED_MULTISET)
    assert multi.couplings.size == math.comb(16 + 2, 3)
    assert not np.array_equal(multi.couplings[:10], inst.couplings[:10])
    par = sample_disorder(params, seed=9, repr=Repr.PARITY)
    assert par.couplings.size == sum(math.comb(8, m) for m in range(4))


def test_single_spin_instance():
    inst = sample_disorder(ModelParams(n=1, p=2), seed=4)
    assert inst.couplings.size == 4  # (2n)^p with the constant channel
    # energy splits into a level and a field: both states finite
    e0 = energy(inst, SpinConfiguration(0, 1))
    e1 = energy(inst, SpinConfiguration(1, 1))
    assert math.isfinite(e0) and math.isfinite(e1)


def test_capacity_errors():
    with pytest.raises(CapacityExceeded):
        sample_disorder(ModelParams(n=30, p=7), seed=0, repr=Repr.FULL_ORDERED)
    with pytest.raises(InvalidParams):
        ModelParams(n=4, p=1)
    with pytest.raises(InvalidParams):
        ModelParams(n=0, p=2)


def test_identity_excludes_beta():
    a = sample_disorder(ModelParams(n=4, p=2, beta=0.5), seed=3)
    b = sample_disorder(ModelParams(n=4, p=2, beta=2.5), seed=3)
    assert a == b and hash(a) == hash(b)
    assert np.array_equal(a.couplings, b.couplings)


# ---------------------------------------------------------------------------
# energies


def test_zero_disorder_energy(zero_inst):
    for bits in (0, 5, 63):
        assert energy(zero_inst, SpinConfiguration(bits, 6)) == 0.0
        for j in range(6):
            assert energy_delta(zero_inst, SpinConfiguration(bits, 6), j) == 0.0
    assert np.all(energy_table(zero_inst) == 0.0)


def test_energy_matches_naive_contraction():
    """Independent oracle: contract the stored full tuple array slot by slot."""
    n, p = 3, 2
    inst = sample_disorder(ModelParams(n=n, p=p), seed=77, repr=Repr.FULL_ORDERED)
    alphabet = 2 * n
    kappa = math.sqrt(n) / (4 * n) ** (p / 2)

    def feat(sym, sigma):
        return sigma[sym] if sym < n else math.sqrt(3.0)

    for bits in range(1 << n):
        sigma = [1 if (bits >> j) & 1 else -1 for j in range(n)]
        acc = 0.0
        for flat, g in enumerate(inst.couplings):
            term = g
            rem = flat
            for _ in range(p):
                term *= feat(rem % alphabet, sigma)
                rem //= alphabet
            acc += term
        expected = -kappa * acc
        got = energy(inst, SpinConfiguration(bits, n))
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_energy_delta_two_evaluation_oracle(inst_n8p3):
    rng = np.random.default_rng(2)
    for _ in range(40):
        bits = int(rng.integers(0, 256))
        site = int(rng.integers(0, 8))
        sigma = SpinConfiguration(bits, 8)
        d = energy_delta(inst_n8p3, sigma, site)
        ref = energy(inst_n8p3, sigma.flip(site)) - energy(inst_n8p3, sigma)
        assert abs(d - ref) <= 1e-9 * max(1.0, abs(ref))


def test_energy_delta_consistency_many_instances():
    rng = np.random.default_rng(3)
    for trial in range(25):
        n = int(rng.integers(3, 9))
        p = int(rng.integers(2, 5))
        inst = sample_disorder(ModelParams(n=n, p=p), seed=trial,
                               repr=Repr.PARITY)
        for _ in range(40):
            bits = int(rng.integers(0, 1 << n))
            site = int(rng.integers(0, n))
            sigma = SpinConfiguration(bits, n)
            d = energy_delta(inst, sigma, site)
            ref = energy(inst, sigma.flip(site)) - energy(inst, sigma)
            assert abs(d - ref) <= 1e-9 * max(1.0, abs(ref))


def test_energy_table_per_state_oracle():
    inst = sample_disorder(ModelParams(n=4, p=3), seed=13)
    table = energy_table(inst)
    for bits in range(16):
        assert table[bits] == pytest.approx(
            energy(inst, SpinConfiguration(bits, 4)), rel=1e-11, abs=1e-11)


def test_energy_table_gray_identity(inst_n8p3):
    table = energy_table(inst_n8p3)
    for i in range(1, 256):
        prev = (i - 1) ^ ((i - 1) >> 1)
        cur = i ^ (i >> 1)
        site = (prev ^ cur).bit_length() - 1
        d = energy_delta(inst_n8p3, SpinConfiguration(prev, 8), site)
        assert table[cur] - table[prev] == pytest.approx(d, rel=1e-9, abs=1e-9)


def test_energy_table_capacity():
    with pytest.raises(CapacityExceeded):
        energy_table(sample_disorder(ModelParams(n=22, p=2), seed=0,
                                     repr=Repr.PARITY))


def test_batch_energies_match_scalar(inst_n10p3):
    states = np.arange(0, 1024, 7)
    batch = inst_n10p3.expansion.energies(states)
    for s, e in zip(states, batch):
        assert e == pytest.approx(energy(inst_n10p3, SpinConfiguration(int(s), 10)),
                                  rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# the law of the process


def test_parity_variances_exact_properties():
    for n, p in ((4, 2), (6, 3), (5, 7), (12, 4)):
        v = _parity_level_variances(n, p)
        assert all(x >= 0 for x in v)
        assert all(v[m] == 0.0 for m in range(min(n, p) + 1, n + 1))
        total = sum(math.comb(n, m) * v[m] for m in range(n + 1))
        assert total == pytest.approx(n, rel=1e-12)


def test_parity_variances_match_enumeration():
    """Cross-check the Krawtchouk transform against direct alphabet enumeration."""
    n, p = 3, 3
    alphabet = 2 * n
    acc = {}
    for flat in range(alphabet ** p):
        mask, const, rem = 0, 0, flat
        for _ in range(p):
            sym = rem % alphabet
            rem //= alphabet
            if sym < n:
                mask ^= 1 << sym
            else:
                const += 1
        acc[mask] = acc.get(mask, 0) + 3 ** const
    kappa_sq = n / (4 * n) ** p
    v = _parity_level_variances(n, p)
    for mask, total in acc.items():
        m = bin(mask).count("1")
        assert kappa_sq * total == pytest.approx(v[m], rel=1e-12)


def test_krawtchouk_orthogonality_row():
    # sum over k of K_m(k) C(n,k)-weighted equals 2^n delta_{m,0} analogue:
    # K_0(k) = C(n, k); spot-check a closed case
    n = 7
    for k in range(n + 1):
        assert _krawtchouk(n, 0, k) == math.comb(n, k)


def test_multiset_layout_weights():
    masks, weights = _multiset_layout(2, 2)  # alphabet {s0, s1, c0, c1}, p=2
    assert masks.size == math.comb(4 + 1, 2)
    # diagonal multiset {s0, s0}: multiplicity 1, no consts, parity cancels
    # off-diagonal {s0, s1}: multiplicity 2
    total_weight_sq = float((weights ** 2).sum())
    # sum over multisets of mult * 3^c equals alphabet mass (2n + ... )^p at
    # sigma = tau = all-plus: (n + 3n)^p / ... = (4n)^p... here (8)^2 = 64
    assert total_weight_sq == pytest.approx(64.0, rel=1e-12)


@pytest.mark.slow
def test_representation_equivalence_in_law():
    """Variance of H at fixed states agrees across representations (4 SE)."""
    params = ModelParams(n=6, p=3)
    m = 4000
    probes = np.array([0, 21, 63])
    stats = {}
    for rep in Repr:
        vals = np.empty((m, probes.size))
        for i in range(m):
            inst = sample_disorder(params, seed=50_000 + i, repr=rep)
            vals[i] = inst.expansion.energies(probes)
        stats[rep] = vals.var(axis=0)
    se = 6.0 * math.sqrt(2.0 / m)  # var(H) = n; sd of sample variance ~ n sqrt(2/m)
    for rep, var in stats.items():
        assert np.all(np.abs(var - 6.0) < 4 * se), (rep, var)


@pytest.mark.slow
def test_covariance_law_small():
    """Sample covariance matches n(1 - d/2n)^p at every distance (4 SE)."""
    n, p, m = 6, 3, 8000
    params = ModelParams(n=n, p=p)
    ref = (1 << n) - 1
    probes = np.array([ref ^ ((1 << d) - 1) for d in range(n + 1)])
    vals = np.empty((m, probes.size))
    for i in range(m):
        inst = sample_disorder(params, seed=90_000 + i, repr=Repr.PARITY)
        vals[i] = inst.expansion.energies(probes)
    h_ref = vals[:, 0]
    for d in range(n + 1):
        prod = (h_ref - h_ref.mean()) * (vals[:, d] - vals[:, d].mean())
        cov = prod.mean()
        se = prod.std(ddof=1) / math.sqrt(m)
        target = n * correlation(p, d / n)
        assert abs(cov - target) < 4 * se, (d, cov, target, se)


def test_mean_sanity_gate(monkeypatch):
    """A biased coupling stream (probability ~6e-7 for honest draws) is rejected."""
    import glassmix.model as model_mod
    from glassmix.errors import DisorderSanityError

    monkeypatch.setattr(model_mod, "_blocked_normals",
                        lambda seed, tag, count: np.full(count, 1.0))
    with pytest.raises(DisorderSanityError):
        model_mod.sample_disorder(ModelParams(n=4, p=2), seed=0)
