"""Coupling Hamiltonian zigzag with momentum refreshment to Markovian zigzag.

On each interval ``[n dt, (n+1) dt]`` one vector of uniforms ``u`` drives
both processes from a common state ``(x, v)``:

* the Hamiltonian path restarts with momentum ``p = v * (-log u)``, same
  signs and fresh Exp(1) magnitudes, and runs deterministically;
* the Markovian path uses the same ``u`` for its first event-time draws and
  independent uniforms after its first event.

Coordinate ``i`` flips for the Hamiltonian path once ``int v_i d_iU`` reaches
``-log u_i`` and for the Markovian path once ``int [v_i d_iU]^+`` does, so an
interval with no Markovian event leaves the two paths identical, and with
one event they almost always flip together. The paths part ways only through
two or more events in one interval, which has probability ``O(dt^2)``; over
``T / dt`` intervals the chance of ever diverging is ``O(dt)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import rng as _rng
from .hamiltonian import DEFAULT_MAX_EVENTS, SimulationError, _Recorder
from .markovian import MarkovianProcess
from .model import TruncatedGaussianTarget, min_eigenvalue

__all__ = [
    "CoupledRun",
    "DivergenceEstimate",
    "simulate_coupled",
    "divergence_rate",
    "stationary_draw",
    "default_grid",
    "mean_event_rate",
    "DIVERGENCE_HEADER",
    "DIVERGENCE_TOL",
]

DIVERGENCE_TOL = 1e-12
DIVERGENCE_HEADER = ["dt", "replicates", "n_diverged", "p_hat", "std_err"]

# an interval with this many events in either path has already diverged
_INTERVAL_LOG = 64


@dataclass(frozen=True)
class CoupledRun:
    dt: float
    T: float
    diverged: bool
    t_div: float | None
    hamiltonian_events: int
    markovian_events: int
    intervals: int
    # intervals where the Hamiltonian path flipped but the Markovian did not
    invariant_violations: int = 0


@dataclass(frozen=True)
class DivergenceEstimate:
    dt: float
    replicates: int
    n_diverged: int
    invariant_violations: int = 0

    @property
    def p_hat(self) -> float:
        return self.n_diverged / self.replicates

    @property
    def std_err(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.replicates)

    def row(self):
        return [self.dt, self.replicates, self.n_diverged, self.p_hat, self.std_err]


def stationary_draw(target: TruncatedGaussianTarget, rng) -> np.ndarray:
    """Exact draw from the untruncated Gaussian ``N(mean, precision^-1)``."""
    if target.truncated:
        raise ValueError("exact stationary draws are only available without truncation")
    chol = np.linalg.cholesky(target.precision.to_dense())
    z = rng.standard_normal(target.dim)
    # Phi = L L^T, so L^-T z has covariance Phi^-1
    return target.mean + np.linalg.solve(chol.T, z)


def mean_event_rate(target: TruncatedGaussianTarget) -> float:
    """Stationary Markovian event rate ``sum_i E[v_i d_iU]^+``.

    At stationarity ``d_iU ~ N(0, Phi_ii)`` independently of ``v_i``, so each
    coordinate contributes ``sqrt(Phi_ii / (2 pi))``.
    """
    return float(np.sum(np.sqrt(target.precision.diagonal() / (2.0 * math.pi))))


GRID_SCALES = (0.2, 0.1, 0.05, 0.025)


def default_grid(target: TruncatedGaussianTarget, scales=GRID_SCALES, horizon=4.0, unit="events"):
    """``(dt_grid, T)`` as multiples of a time unit of the target.

    ``unit="events"`` measures time by the mean gap between Markovian events,
    ``1 / mean_event_rate``; the divergence probability then stays in its
    linear range across the grid. ``unit="width"`` uses the widest scale
    ``nu_min^{-1/2}``; on strongly correlated targets events are so frequent
    on that scale that nearly every replicate diverges at every grid point.
    """
    if unit == "events":
        scale = 1.0 / mean_event_rate(target)
    elif unit == "width":
        scale = 1.0 / math.sqrt(min_eigenvalue(target.precision).nu_min)
    else:
        raise ValueError(f"unknown time unit {unit!r}")
    return [s * scale for s in scales], horizon * scale


def _events_differ(ta, ca, na, tb, cb, nb):
    """Index of the first differing event, or -1 when both logs agree."""
    for k in range(min(na, nb)):
        if ca[k] != cb[k] or abs(ta[k] - tb[k]) > DIVERGENCE_TOL * max(1.0, abs(ta[k])):
            return k
    return -1 if na == nb else min(na, nb)


def simulate_coupled(x0, v0, dt: float, T: float, target: TruncatedGaussianTarget, rng,
                     *, max_events: int = DEFAULT_MAX_EVENTS) -> CoupledRun:
    """Run the coupled pair until the first divergence or ``T``."""
    if target.truncated:
        raise ValueError("the coupling needs an untruncated target (smooth potential)")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T < 0:
        raise ValueError("T must be non-negative")
    d = target.dim
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    n_intervals = math.ceil(T / dt - 1e-12) if T > 0 else 0
    args = target.kernel_args()
    phix = np.empty(d)
    phiv = np.empty(d)
    rec_h = _Recorder(d, _INTERVAL_LOG)
    rec_m = _Recorder(d, _INTERVAL_LOG)
    mzz = MarkovianProcess(target, x, v, rng, max_events=max_events)
    h_events = m_events = violations = 0
    for n in range(n_intervals):
        start = n * dt
        length = min(dt, T - start)
        u = rng.random(d)
        xh = x.copy()
        vh = v.copy()
        with np.errstate(divide="ignore"):
            ph = vh * -np.log(u)
        _, ng, nb, status = K.hamiltonian_run(
            xh, ph, vh, phix, phiv, target.mean, target.orthant, length, *args,
            max_events, 0, *rec_h.kernel_args(), *rec_h.tail_args(),
        )
        if status == K.EVENT_CAP:
            raise SimulationError("event budget exhausted in a coupled interval")
        nh = ng + nb
        mzz.x[:] = x
        mzz.v[:] = v
        mzz.gradient_events = mzz.boundary_events = 0
        mzz.run(length, first_uniforms=u, recorder=rec_m)
        nm = mzz.events
        h_events += nh
        m_events += nm
        if nm == 0 and nh > 0:
            violations += 1
        k = _events_differ(rec_h.time, rec_h.coord, min(nh, _INTERVAL_LOG),
                           rec_m.time, rec_m.coord, min(nm, _INTERVAL_LOG))
        if k < 0 and (nh > _INTERVAL_LOG or nm > _INTERVAL_LOG):
            k = _INTERVAL_LOG
        state_gap = max(float(np.max(np.abs(xh - mzz.x))), float(np.max(np.abs(vh - mzz.v))))
        if k >= 0 or state_gap > DIVERGENCE_TOL:
            if k < 0:
                t_local = length
            else:
                cands = [rec.time[k] for rec, cnt in ((rec_h, nh), (rec_m, nm)) if k < min(cnt, _INTERVAL_LOG)]
                t_local = min(cands) if cands else length
            return CoupledRun(dt, T, True, start + float(t_local), h_events, m_events, n + 1, violations)
        x = xh
        v = vh
    return CoupledRun(dt, T, False, None, h_events, m_events, n_intervals, violations)


def _replicate(args):
    x0, v0, dt, T, target, seed, k = args
    g = _rng.replicate_generator(seed, k)
    if x0 is None:
        x_start = stationary_draw(target, g)
    else:
        x_start = np.asarray(x0, dtype=float)
    v_start = g.choice([-1.0, 1.0], size=target.dim) if v0 is None else np.asarray(v0, dtype=float)
    return simulate_coupled(x_start, v_start, dt, T, target, g)


def divergence_rate(x0, v0, dt_grid, T: float, target: TruncatedGaussianTarget, replicates: int,
                    seed: int, *, workers: int = 1) -> list[DivergenceEstimate]:
    """Estimated probability of divergence on ``[0, T]`` for each ``dt``.

    Replicate ``k`` draws from its own stream of ``seed`` and is reused at
    every grid point (common random numbers across ``dt``). ``x0`` or
    ``v0`` set to ``None`` starts each replicate from an exact stationary
    draw or uniformly random velocities.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    if target.truncated:
        raise ValueError("the coupling needs an untruncated target (smooth potential)")
    out = []
    for dt in dt_grid:
        jobs = [(x0, v0, float(dt), float(T), target, seed, k) for k in range(replicates)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                runs = list(pool.map(_replicate, jobs))
        else:
            runs = [_replicate(j) for j in jobs]
        out.append(DivergenceEstimate(float(dt), replicates, sum(r.diverged for r in runs),
                                      sum(r.invariant_violations for r in runs)))
    return out
