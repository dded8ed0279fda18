import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewens_spectra.ewens import (
    CycleLengths,
    ThetaParam,
    batch_cycle_counts,
    batch_trajectories,
    crp_grow,
    derived_r,
    expected_stick,
    ewens_type_probability,
    integer_partitions,
    normalize,
    sample_virtual,
)
from ewens_spectra.harness import ewens_chi_square
from ewens_spectra.streams import make_rng


class FixedStream:
    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return self.value


def test_theta_validation():
    assert ThetaParam(2).theta == 2.0
    for bad in (0, -1, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            ThetaParam(bad)


def test_cycle_lengths_validation():
    with pytest.raises(ValueError):
        CycleLengths(3, (1, 1))
    with pytest.raises(ValueError):
        CycleLengths(2, (2, 0))
    c = CycleLengths(5, (3, 2))
    assert CycleLengths.from_json(c.to_json()) == c


def test_grow_forced_new_cycle():
    # x = u * (n + theta) = 0.1 * 2 < theta = 1
    assert crp_grow(CycleLengths(1, (1,)), 1.0, FixedStream(0.1)).lengths == (1, 1)


def test_grow_forced_join():
    assert crp_grow(CycleLengths(1, (1,)), 1.0, FixedStream(0.9)).lengths == (2,)


def test_grow_new_cycle_frequency():
    rng = make_rng(1, "grow")
    state = CycleLengths(1, (1,))
    trials = 200_000
    new = sum(crp_grow(state, 2.0, rng).num_cycles == 2 for _ in range(trials))
    p = 2.0 / 3.0
    assert abs(new / trials - p) < 3 * math.sqrt(p * (1 - p) / trials)


@given(st.integers(1, 40), st.floats(0.1, 10.0), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_virtual_consistency(n_max, theta, seed):
    traj = sample_virtual(n_max, theta, make_rng(seed, "prop"))
    assert traj[0].lengths == (1,)
    for prev, cur in zip(traj, traj[1:]):
        assert cur.n == prev.n + 1 and sum(cur.lengths) == cur.n
        k = len(prev.lengths)
        if len(cur.lengths) == k + 1:
            assert cur.lengths[:k] == prev.lengths and cur.lengths[-1] == 1
        else:
            diff = [c - p for c, p in zip(cur.lengths, prev.lengths)]
            assert sorted(diff) == [0] * (k - 1) + [1]


def test_sample_virtual_trivial():
    assert sample_virtual(1, 1.0, make_rng(0)) == [CycleLengths(1, (1,))]


def test_three_cycle_probability():
    reps = 100_000
    lengths = batch_cycle_counts(3, 1.0, reps, make_rng(3, "three"))
    frac = np.mean(lengths[:, 0] == 3)
    assert abs(frac - 1 / 3) < 3 * math.sqrt((1 / 3) * (2 / 3) / reps)


def test_mean_cycle_count_large_theta():
    reps = 50_000
    lengths = batch_cycle_counts(5, 100.0, reps, make_rng(4, "k"))
    k = (lengths > 0).sum(axis=1)
    expected = sum(100 / (100 + i) for i in range(5))
    assert abs(k.mean() - expected) < 3 * k.std() / math.sqrt(reps)


def test_normalize_exact():
    assert normalize(CycleLengths(3, (2, 1))).values == (2 / 3, 1 / 3)
    assert normalize(CycleLengths(5, (5,))).values == (1.0,)


def test_first_cycle_mean_at_n_1000():
    reps = 4000
    lengths = batch_cycle_counts(1000, 1.0, reps, make_rng(5, "y1"))
    y1 = lengths[:, 0] / 1000
    assert abs(y1.mean() - 0.5) < 3 * y1.std() / math.sqrt(reps) + 1e-3


@pytest.mark.parametrize("theta,r", [(1, 0.5), (3, 0.75), (1 / 3, 0.75)])
def test_derived_r(theta, r):
    assert derived_r(theta) == pytest.approx(r)
    for j in range(1, 30):
        assert expected_stick(theta, j) <= r**j + 1e-15


def test_partitions_and_esf_normalize():
    assert len(list(integer_partitions(6))) == 11
    for theta in (0.5, 1.0, 2.0):
        total = sum(ewens_type_probability(p, theta) for p in integer_partitions(6))
        assert total == pytest.approx(1.0, abs=1e-12)
    # Ewens(1) is uniform: 2 of the 6 permutations of S_3 are 3-cycles
    assert ewens_type_probability((3,), 1.0) == pytest.approx(1 / 3)


@pytest.mark.slow
@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_marginal_chi_square_exhaustive(theta):
    for n in range(2, 7):
        res = ewens_chi_square(n, theta, 1_000_000, 11)
        assert res.p_value > 1e-3, res


def test_trajectory_oscillation_small():
    # y_j^{(n)} settles: oscillation over n in [1e4, 1e5] below 0.05 for j <= 3
    rng = make_rng(6, "osc")
    osc = []
    for _ in range(4):
        _, o = batch_trajectories(100_000, 1.0, 25, rng, track=3, track_from=10_000)
        osc.append(o)
    osc = np.concatenate(osc)
    assert osc.shape == (100, 3)
    assert osc.max() < 0.05
