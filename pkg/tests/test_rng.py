import numpy as np
import pytest

from zigzag import rng


def test_same_seed_same_stream():
    a = rng.stream(3, "duel", 2, 1).random(5)
    b = rng.stream(3, "duel", 2, 1).random(5)
    np.testing.assert_array_equal(a, b)


def test_roles_and_indices_are_separate_streams():
    draws = [rng.stream(3, "duel", 0, 0).random(8), rng.stream(3, "duel", 0, 1).random(8),
             rng.stream(3, "main", 0).random(8), rng.stream(4, "duel", 0, 0).random(8)]
    for i in range(len(draws)):
        for j in range(i):
            assert not np.array_equal(draws[i], draws[j])


def test_replicates_are_order_free():
    forward = [g.random() for g in rng.replicate_generators(9, 4)]
    assert rng.replicate_generator(9, 3).random() == forward[3]


def test_seed_required():
    with pytest.raises(ValueError, match="seed"):
        rng.generator(None)


def test_philox_backend():
    assert isinstance(rng.generator(1).bit_generator, np.random.Philox)
