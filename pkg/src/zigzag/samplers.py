"""Chains built from the three kernels, all returning :class:`ChainOutput`.

* Markovian zigzag is observed every ``spacing`` units of process time.
* Fixed-T Hamiltonian zigzag refreshes the full Laplace momentum, runs for
  ``T`` and keeps the state at each refresh boundary.
* Zigzag-NUTS keeps one state per transition.

Event counts exclude momentum refreshes, which need no root solves.
"""

from __future__ import annotations

import time

import numpy as np

from .diagnostics import ChainOutput
from .hamiltonian import ExactFlow
from .markovian import MarkovianProcess
from .model import TruncatedGaussianTarget
from .nuts import NutsConfig, NutsSampler

__all__ = ["markovian_chain", "hamiltonian_chain", "nuts_chain", "SAMPLERS"]

SAMPLERS = ("markovian", "hzz-fixed-T", "zigzag-nuts")


def _start(target, x0):
    x0 = target.default_start() if x0 is None else np.array(x0, dtype=float)
    if not target.in_support(x0):
        raise ValueError("starting point lies outside the target's support")
    return x0


def markovian_chain(target: TruncatedGaussianTarget, rng, spacing: float, n_samples: int | None = None,
                    *, x0=None, v0=None, event_budget: int | None = None,
                    max_samples: int = 10**7) -> ChainOutput:
    """Observe a Markovian path every ``spacing``.

    Stops after ``n_samples`` observations or, with ``event_budget``, at the
    first observation by which the path has used that many events.
    """
    if (n_samples is None) == (event_budget is None):
        raise ValueError("give exactly one of n_samples and event_budget")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    x0 = _start(target, x0)
    v0 = rng.choice([-1.0, 1.0], size=target.dim) if v0 is None else v0
    proc = MarkovianProcess(target, x0, v0, rng)
    limit = n_samples if n_samples is not None else max_samples
    samples, counts = [], []
    t0 = time.perf_counter()
    before = 0
    while len(samples) < limit:
        proc.run(spacing)
        samples.append(proc.x.copy())
        counts.append(proc.events - before)
        before = proc.events
        if event_budget is not None and proc.events >= event_budget:
            break
    return ChainOutput(np.array(samples), np.array(counts), "markovian", time.perf_counter() - t0,
                       {"spacing": spacing})


def hamiltonian_chain(target: TruncatedGaussianTarget, rng, T: float, n_samples: int, *, x0=None) -> ChainOutput:
    """Fixed integration time ``T`` with full Laplace momentum refresh."""
    if T <= 0:
        raise ValueError("T must be positive")
    x = _start(target, x0)
    flow = ExactFlow(target)
    samples = np.empty((n_samples, target.dim))
    counts = np.empty(n_samples, dtype=np.int64)
    t0 = time.perf_counter()
    for k in range(n_samples):
        flow.reset_counts()
        p = rng.laplace(0.0, 1.0, size=target.dim)
        x, _ = flow.step(x, p, T)
        samples[k] = x
        counts[k] = flow.events
    return ChainOutput(samples, counts, "hzz-fixed-T", time.perf_counter() - t0, {"T": T})


def nuts_chain(target: TruncatedGaussianTarget, rng, config: NutsConfig, n_samples: int, *, x0=None) -> ChainOutput:
    x = _start(target, x0)
    sampler = NutsSampler(target, config)
    samples = np.empty((n_samples, target.dim))
    counts = np.empty(n_samples, dtype=np.int64)
    depths = np.empty(n_samples, dtype=np.int64)
    t0 = time.perf_counter()
    for k in range(n_samples):
        x, stats = sampler.transition(x, rng)
        samples[k] = x
        counts[k] = stats.events
        depths[k] = stats.depth
    return ChainOutput(samples, counts, "zigzag-nuts", time.perf_counter() - t0,
                       {"delta_T": config.delta_T, "depths": depths})

