import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from glassmix.errors import CapacityExceeded, DomainError
from glassmix.geometry import (
    BallSpec,
    ball_states,
    ball_volume,
    binary_entropy,
    surface_states,
)
from glassmix.model import SpinConfiguration, hamming


def test_surface_trivial_radii():
    spec = BallSpec(center=0b1011, k=0, n=4)
    assert list(surface_states(spec)) == [0b1011]
    spec = BallSpec(center=0b1011, k=4, n=4)
    assert list(surface_states(spec)) == [0b0100]


def test_surface_exhaustive_distance_check():
    spec = BallSpec(center=0b100110, k=2, n=6)
    states = list(surface_states(spec))
    assert len(states) == math.comb(6, 2) == 15
    assert states == sorted(states)
    center = SpinConfiguration(spec.center, 6)
    for s in states:
        assert hamming(center, SpinConfiguration(s, 6)) == 2


def test_ball_counts():
    assert len(list(ball_states(BallSpec(0, 0, 4)))) == 1
    assert len(list(ball_states(BallSpec(3, 1, 4)))) == 5
    states = list(ball_states(BallSpec(17, 3, 10)))
    assert len(states) == 176  # 1 + 10 + 45 + 120
    assert states == sorted(states)


def test_ball_volume_values():
    assert ball_volume(9, 0) == 1
    assert ball_volume(9, 9) == 2 ** 9
    assert ball_volume(20, 5) == 21700
    with pytest.raises(DomainError):
        ball_volume(5, 6)
    with pytest.raises(CapacityExceeded):
        ball_volume(63, 2)


def test_stream_capacity():
    with pytest.raises(CapacityExceeded):
        list(surface_states(BallSpec(0, 2, 21)))


def test_binary_entropy_values():
    assert binary_entropy(0.5) == pytest.approx(math.log(2), rel=1e-15)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.25) == pytest.approx(0.5623351446188083, rel=1e-12)
    with pytest.raises(DomainError):
        binary_entropy(-0.01)
    with pytest.raises(DomainError):
        binary_entropy(1.01)


def test_entropy_bound_on_binomials():
    """C(n, k) <= exp(n * gamma(k/n)) for all n <= 30."""
    for n in range(1, 31):
        for k in range(n + 1):
            assert math.comb(n, k) <= math.exp(n * binary_entropy(k / n)) * (1 + 1e-12)


def test_ball_volume_entropy_chain():
    """|B_2k| <= (2k+1) C(n, 2k) <= (2k+1) e^{2 n gamma(k/n)} for 2k <= n/2."""
    for n in range(2, 31):
        for k in range(1, n // 4 + 1):
            vol = ball_volume(n, 2 * k)
            mid = (2 * k + 1) * math.comb(n, 2 * k)
            top = (2 * k + 1) * math.exp(2 * n * binary_entropy(k / n))
            assert vol <= mid <= top * (1 + 1e-12)


def test_entropy_concavity_grid():
    rng = np.random.default_rng(8)
    a = rng.uniform(0, 1, 10_000)
    b = rng.uniform(0, 1, 10_000)
    for x, y in zip(a, b):
        lhs = binary_entropy((x + y) / 2)
        rhs = 0.5 * (binary_entropy(x) + binary_entropy(y))
        assert lhs >= rhs - 1e-12


@given(st.integers(2, 12), st.data())
def test_disjoint_balls(n, data):
    k = data.draw(st.integers(0, max(0, n // 2 - 1)))
    c1 = data.draw(st.integers(0, (1 << n) - 1))
    c2 = data.draw(st.integers(0, (1 << n) - 1))
    d = bin(c1 ^ c2).count("1")
    b1 = set(ball_states(BallSpec(c1, k, n)))
    b2 = set(ball_states(BallSpec(c2, k, n)))
    if d > 2 * k:
        assert not (b1 & b2)
    else:
        assert b1 & b2  # triangle inequality makes overlap unavoidable


def test_ballspec_around_configuration():
    sigma = SpinConfiguration(0b110, 3)
    spec = BallSpec.around(sigma, k=1)
    assert spec.center == 0b110 and spec.n == 3
    with pytest.raises(DomainError):
        BallSpec(center=0, k=5, n=4)
