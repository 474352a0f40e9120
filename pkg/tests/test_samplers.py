import numpy as np
import pytest

from zigzag import model, samplers
from zigzag.nuts import NutsConfig

TG = model.compound_symmetric_target(3, 0.5, orthant=1)


def test_markovian_chain_lengths():
    c = samplers.markovian_chain(TG, np.random.default_rng(0), 0.3, 50)
    assert c.samples.shape == (50, 3) and c.sampler == "markovian"
    assert c.total_events == c.events_per_sample.sum()
    b = samplers.markovian_chain(TG, np.random.default_rng(0), 0.3, event_budget=400)
    assert b.total_events >= 400 > b.total_events - b.events_per_sample[-1]
    assert np.all(b.samples >= 0)


def test_markovian_chain_argument_checks():
    g = np.random.default_rng(1)
    with pytest.raises(ValueError):
        samplers.markovian_chain(TG, g, 0.3)
    with pytest.raises(ValueError):
        samplers.markovian_chain(TG, g, 0.3, 10, event_budget=10)
    with pytest.raises(ValueError):
        samplers.markovian_chain(TG, g, 0.0, 10)
    with pytest.raises(ValueError, match="support"):
        samplers.markovian_chain(TG, g, 0.3, 10, x0=[-1.0, 1.0, 1.0])


def test_hamiltonian_and_nuts_chains():
    h = samplers.hamiltonian_chain(TG, np.random.default_rng(2), 1.0, 40)
    assert h.samples.shape == (40, 3) and h.total_events > 0
    n = samplers.nuts_chain(TG, np.random.default_rng(3), NutsConfig.for_target(TG), 40)
    assert n.samples.shape == (40, 3) and n.metadata["depths"].min() >= 1
    assert np.all(n.samples >= 0) and np.all(h.samples >= 0)


def test_chains_are_seed_deterministic():
    cfg = NutsConfig.for_target(TG)
    a = samplers.nuts_chain(TG, np.random.default_rng(4), cfg, 20)
    b = samplers.nuts_chain(TG, np.random.default_rng(4), cfg, 20)
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.events_per_sample, b.events_per_sample)
