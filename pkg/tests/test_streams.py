import numpy as np
import pytest

from ewens_spectra.streams import BLOCK_SIZE, block_ranges, make_rng, stable_hash


def test_same_path_same_stream():
    a = make_rng(42, "x", 3).random(5)
    b = make_rng(42, "x", 3).random(5)
    assert np.array_equal(a, b)


def test_distinct_paths_differ():
    assert not np.array_equal(make_rng(42, "x", 3).random(5), make_rng(42, "x", 4).random(5))
    assert not np.array_equal(make_rng(42, "x").random(5), make_rng(43, "x").random(5))


def test_stable_hash_is_fixed():
    # BLAKE2 is unsalted: the value is the same in every process
    assert stable_hash("xtilde") == stable_hash("xtilde")
    assert stable_hash("a") != stable_hash("b")
    assert 0 <= stable_hash("anything") < 2**64


def test_bad_paths():
    with pytest.raises(ValueError):
        make_rng(-1)
    with pytest.raises(ValueError):
        make_rng(1, -3)


def test_block_ranges_cover():
    blocks = list(block_ranges(10_000))
    assert blocks[0] == (0, 0, BLOCK_SIZE)
    assert blocks[-1][2] == 10_000
    assert sum(stop - start for _, start, stop in blocks) == 10_000
