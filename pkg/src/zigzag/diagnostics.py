"""Chain-quality metrics: ESS, ESS per event, squared distance, projections."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import TruncatedGaussianTarget

__all__ = [
    "ChainOutput",
    "ess",
    "ess_per_event",
    "relative_ess_per_event",
    "squared_distance_curve",
    "expected_squared_distance",
    "expected_squared_distance_mc",
    "project",
    "principal_component",
    "diagnostics_rows",
    "DIAGNOSTICS_HEADER",
    "ConstantSeriesWarning",
]


class ConstantSeriesWarning(UserWarning):
    """ESS requested for a series with zero variance."""


@dataclass
class ChainOutput:
    """Samples (one row each) and the velocity-switch events spent on each."""

    samples: np.ndarray
    events_per_sample: np.ndarray
    sampler: str = ""
    wall_time: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        self.events_per_sample = np.asarray(self.events_per_sample, dtype=np.int64)
        if self.events_per_sample.shape != (self.samples.shape[0],):
            raise ValueError("need one event count per sample")
        if np.any(self.events_per_sample < 0):
            raise ValueError("event counts must be non-negative")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def total_events(self) -> int:
        return int(self.events_per_sample.sum())

    def discard(self, fraction: float = 0.1) -> "ChainOutput":
        """Drop the leading ``fraction`` of samples together with their events."""
        if not 0 <= fraction < 1:
            raise ValueError("burn-in fraction must lie in [0, 1)")
        k = int(math.floor(fraction * self.n_samples))
        return ChainOutput(self.samples[k:], self.events_per_sample[k:], self.sampler,
                           self.wall_time, dict(self.metadata, burn_in=k))


def _autocovariance(x):
    n = x.size
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    return np.fft.irfft(f * np.conj(f), size)[:n] / n


def ess(series) -> float:
    """Effective sample size by Geyer's initial monotone sequence.

    Autocovariances are summed in adjacent pairs while the pair sums stay
    positive, and the pair sums are forced to be non-increasing. The result
    is clipped to ``[1, n log10 n]``: antithetic chains legitimately exceed
    ``n``, and the cap only guards against a vanishing denominator.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise ValueError("ESS needs at least 10 values")
    if not np.all(np.isfinite(x)):
        raise ValueError("ESS needs finite values")
    gamma = _autocovariance(x)
    if gamma[0] <= 0 or gamma[0] <= 1e-300 or np.ptp(x) == 0:
        warnings.warn("constant series; ESS reported as n", ConstantSeriesWarning, stacklevel=2)
        return float(n)
    m = (n - 1) // 2
    pairs = gamma[0 : 2 * m : 2] + gamma[1 : 2 * m + 1 : 2]
    positive = pairs > 0
    k = int(np.argmin(positive)) if not positive.all() else pairs.size
    pairs = np.minimum.accumulate(pairs[:k])
    tau = (-gamma[0] + 2.0 * pairs.sum()) / gamma[0]
    upper = n * math.log10(n)
    if tau <= 0:
        return upper
    return float(min(max(n / tau, 1.0), upper))


def project(samples, u) -> np.ndarray:
    """Inner product of each sample with the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise ValueError("projection vector must have unit norm")
    return np.atleast_2d(np.asarray(samples, dtype=float)) @ u


def principal_component(d: int) -> np.ndarray:
    """Leading direction of a compound-symmetric covariance, ones / sqrt(d)."""
    return np.full(d, 1.0 / math.sqrt(d))


def _series(chain, which):
    if isinstance(which, (int, np.integer)):
        return chain.samples[:, int(which)]
    return project(chain.samples, which)


def ess_per_event(chain: ChainOutput, coord_or_projection) -> float:
    """ESS of a coordinate (int) or projection (unit vector) per velocity switch."""
    events = chain.total_events
    if events <= 0:
        raise ValueError("chain recorded no events")
    return ess(_series(chain, coord_or_projection)) / events


def relative_ess_per_event(chain: ChainOutput, reference: ChainOutput, coord_or_projection) -> float:
    return ess_per_event(chain, coord_or_projection) / ess_per_event(reference, coord_or_projection)


def squared_distance_curve(positions, x0):
    """``(index, ||x_k - x0||^2)`` for positions recorded at successive events."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    diff = pos - np.asarray(x0, dtype=float)
    return np.arange(1, pos.shape[0] + 1), np.einsum("ij,ij->i", diff, diff)


def expected_squared_distance(target: TruncatedGaussianTarget, x0) -> float:
    """``E||X - x0||^2`` for ``X`` drawn from an untruncated target."""
    if target.truncated:
        raise ValueError("no closed form under truncation; use expected_squared_distance_mc")
    r = target.mean - np.asarray(x0, dtype=float)
    return target.precision.trace_inverse() + float(r @ r)


def expected_squared_distance_mc(samples, x0) -> tuple[float, float]:
    """Monte Carlo estimate of ``E||X - x0||^2`` and its standard error (ESS based)."""
    _, sq = squared_distance_curve(samples, x0)
    n_eff = ess(sq) if sq.size >= 10 else sq.size
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(n_eff))


DIAGNOSTICS_HEADER = ["sampler", "direction", "ess", "events", "ess_per_event"]


def diagnostics_rows(chain: ChainOutput, directions: dict):
    """Rows of ``DIAGNOSTICS_HEADER`` for each named coordinate or projection."""
    rows = []
    for name, which in directions.items():
        e = ess(_series(chain, which))
        rows.append([chain.sampler, name, e, chain.total_events, e / chain.total_events])
    return rows
