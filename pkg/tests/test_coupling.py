import math

import numpy as np
import pytest
from scipy import stats

from zigzag import coupling as C
from zigzag import model
from zigzag.markovian import MarkovianProcess

from oracles import divergence_probability_1d

STD_1D = model.dense_target([0.0], [[1.0]])


class FixedUniforms:
    """Generator stand-in: ``first`` for vectors of length ``d``, real draws otherwise."""

    def __init__(self, first, d, seed=0):
        self.first = np.asarray(first, dtype=float)
        self.d = d
        self.rng = np.random.default_rng(seed)

    def random(self, size=None):
        if size == self.d:
            return self.first.copy()
        return self.rng.random(size)


def test_no_events_means_no_divergence():
    tg = model.compound_symmetric_target(3, 0.5)
    rng = FixedUniforms(np.full(3, 1e-300), 3)
    run = C.simulate_coupled([0.1, -0.2, 0.3], [1.0, -1.0, 1.0], 0.1, 0.5, tg, rng)
    assert not run.diverged and run.t_div is None
    assert run.hamiltonian_events == run.markovian_events == 0
    assert run.intervals == 5


def test_single_shared_flip_1d():
    # x=0.5, v=+1: rate 0.5 + s; budget 0.375 gives a flip at s=0.5; the path
    # then heads back to zero, reached at s=1.5, after the interval ends
    rng = FixedUniforms([math.exp(-0.375)], 1)
    run = C.simulate_coupled([0.5], [1.0], 1.0, 1.0, STD_1D, rng)
    assert not run.diverged
    assert run.hamiltonian_events == run.markovian_events == 1


def test_negative_rate_start_diverges_on_any_event():
    # v x < 0: the Markovian clock starts at the crossing, the Hamiltonian
    # one only after the momentum gained on the way down is spent again
    rng = FixedUniforms([math.exp(-0.02)], 1)
    run = C.simulate_coupled([-0.5], [1.0], 1.0, 1.0, STD_1D, rng)
    assert run.diverged
    assert 0.5 < run.t_div < 1.0


def test_large_dt_diverges_often():
    tg = model.compound_symmetric_target(2, 0.8)
    rng = np.random.default_rng(1)
    hits = sum(C.simulate_coupled(C.stationary_draw(tg, rng), [1.0, 1.0], 2.0, 8.0, tg, rng).diverged
               for _ in range(200))
    assert hits > 100


def test_argument_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="untruncated"):
        C.simulate_coupled([1.0], [1.0], 0.1, 1.0, STD_1D.with_orthant(1), rng)
    with pytest.raises(ValueError):
        C.simulate_coupled([1.0], [1.0], 0.0, 1.0, STD_1D, rng)
    with pytest.raises(ValueError, match="100"):
        C.divergence_rate([0.0], [1.0], [0.1], 1.0, STD_1D, 99, seed=1)


@pytest.mark.parametrize("dt", [0.8, 0.4])
def test_matches_1d_semi_analytic_oracle(dt):
    T, n = 4.0, 3000
    est = C.divergence_rate([0.5], [1.0], [dt], T, STD_1D, n, seed=3)[0]
    p, se = divergence_probability_1d(0.5, 1.0, dt, round(T / dt), 40_000, np.random.default_rng(4))
    assert abs(est.p_hat - p) <= 3 * math.hypot(est.std_err, se)
    assert est.invariant_violations == 0


def test_divergence_rate_is_reproducible_and_order_free():
    tg = model.compound_symmetric_target(4, 0.6)
    grid, T = C.default_grid(tg, scales=(0.8, 0.4))
    a = C.divergence_rate(None, None, grid, T, tg, 150, seed=5)
    b = C.divergence_rate(None, None, grid, T, tg, 150, seed=5, workers=2)
    assert [e.row() for e in a] == [e.row() for e in b]
    for e in a:
        assert 0 <= e.p_hat <= 1
        assert e.std_err == pytest.approx(math.sqrt(e.p_hat * (1 - e.p_hat) / 150))
        assert e.invariant_violations == 0
    # common random numbers across the grid keep the estimates ordered
    assert a[0].p_hat >= a[1].p_hat - 2 * a[1].std_err


def test_default_grid_units():
    tg = model.compound_symmetric_target(16, 0.9)
    rate = C.mean_event_rate(tg)
    assert rate == pytest.approx(16 * math.sqrt(tg.precision.diagonal()[0] / (2 * math.pi)))
    grid, T = C.default_grid(tg)
    np.testing.assert_allclose(grid, np.array(C.GRID_SCALES) / rate)
    assert T == pytest.approx(4.0 / rate)
    grid, T = C.default_grid(tg, scales=(0.4, 0.2, 0.1, 0.05), unit="width")
    width = math.sqrt(1 + 15 * 0.9)
    np.testing.assert_allclose(grid, np.array([0.4, 0.2, 0.1, 0.05]) * width, rtol=1e-6)
    assert T == pytest.approx(4 * width, rel=1e-6)
    with pytest.raises(ValueError):
        C.default_grid(tg, unit="seconds")


def test_mean_event_rate_matches_simulation():
    tg = model.compound_symmetric_target(16, 0.9)
    rng = np.random.default_rng(6)
    proc = MarkovianProcess(tg, C.stationary_draw(tg, rng), rng.choice([-1.0, 1.0], 16), rng)
    proc.run(2000.0)
    assert proc.events / 2000.0 == pytest.approx(C.mean_event_rate(tg), rel=0.03)


def test_stationary_draw_covariance():
    tg = model.compound_symmetric_target(3, 0.7)
    rng = np.random.default_rng(7)
    draws = np.array([C.stationary_draw(tg, rng) for _ in range(20_000)])
    cov = 0.3 * np.eye(3) + 0.7
    np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.04)
    with pytest.raises(ValueError):
        C.stationary_draw(tg.with_orthant(1), rng)


def test_coupled_markovian_marginal_is_markovian():
    # the coupling restarts the Markovian path every interval with shared
    # first uniforms; its law must match a plain uninterrupted run
    tg = model.compound_symmetric_target(2, 0.5)
    n, dt, T = 1500, 0.25, 2.0
    coupled = np.empty(n)
    plain = np.empty(n)
    for k in range(n):
        g = np.random.default_rng(k)
        proc = MarkovianProcess(tg, [0.5, -0.5], [1.0, 1.0], g)
        for _ in range(round(T / dt)):
            proc.run(dt, first_uniforms=g.random(2))
        coupled[k] = proc.x[0]
        q = MarkovianProcess(tg, [0.5, -0.5], [1.0, 1.0], np.random.default_rng(10**6 + k))
        q.run(T)
        plain[k] = q.x[0]
    assert stats.ks_2samp(coupled, plain).pvalue > 1e-3


def test_estimate_row_layout():
    e = C.DivergenceEstimate(0.1, 200, 50)
    assert e.row() == [0.1, 200, 50, 0.25, math.sqrt(0.25 * 0.75 / 200)]
    assert len(e.row()) == len(C.DIVERGENCE_HEADER)
