"""Markovian zigzag on truncated Gaussians.

Coordinate ``i`` flips at Poisson rate ``[v_i d_i U(x)]^+``. Along a
segment the rate is linear in time, ``v_i (phi_x,i + s phi_v,i)``, so each
candidate event time inverts a quadratic once the rate has turned positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .hamiltonian import (
    CACHE_REFRESH_EVERY,
    DEFAULT_MAX_EVENTS,
    EventLog,
    SimulationError,
    _Recorder,
    boundary_event_times,
)
from .model import TruncatedGaussianTarget

# uniforms drawn from the generator per refill of the kernel's buffer
UNIFORM_CHUNK = 1 << 16

__all__ = [
    "MzzState",
    "first_positive_time",
    "markovian_event_times",
    "boundary_event_times",
    "simulate",
    "MarkovianProcess",
    "run_events",
]


@dataclass(frozen=True)
class MzzState:
    x: np.ndarray
    v: np.ndarray
    phix: np.ndarray
    phiv: np.ndarray
    tau: float = 0.0

    @classmethod
    def start(cls, target: TruncatedGaussianTarget, x, v) -> "MzzState":
        x = np.array(x, dtype=float)
        v = np.array(v, dtype=float)
        return cls(x, v, target.gradient(x), target.precision.matvec(v))


def first_positive_time(v, phix, phiv):
    """Earliest ``s >= 0`` at which ``v (phix + s phiv)`` is non-negative."""
    v, phix, phiv = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (v, phix, phiv)))
    out = np.array([K.first_positive_time(a, b, c) for a, b, c in zip(v.ravel(), phix.ravel(), phiv.ravel())])
    return out.reshape(v.shape) if v.ndim else float(out[0])


def markovian_event_times(state: MzzState, u) -> np.ndarray:
    """Candidate event times given one uniform per coordinate."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        budget = np.where(u > 0, -np.log(u), np.inf)
    return np.array(
        [K.markovian_time(a, b, c, e) for a, b, c, e in zip(state.v, state.phix, state.phiv, budget)]
    )


class MarkovianProcess:
    """A Markovian zigzag path that can be advanced piece by piece.

    The uniform buffer persists between calls to :meth:`run`, so cutting a
    path into many short pieces does not waste draws. Each piece starts a
    new segment with fresh uniforms; by memorylessness the law of the path
    is unchanged, though it is not the same path as one uninterrupted run.
    """

    def __init__(self, target: TruncatedGaussianTarget, x0, v0, rng: np.random.Generator,
                 *, max_events: int = DEFAULT_MAX_EVENTS, refresh_every: int = CACHE_REFRESH_EVERY):
        d = target.dim
        x = np.array(x0, dtype=float)
        v = np.array(v0, dtype=float)
        if x.shape != (d,) or v.shape != (d,):
            raise ValueError(f"x0 and v0 must have length {d}")
        if not np.all(np.abs(v) == 1.0):
            raise ValueError("velocity entries must be +1 or -1")
        self.target = target
        self.x = x
        self.v = v
        self.rng = rng
        self.max_events = int(max_events)
        self.refresh_every = int(refresh_every)
        self.tau = 0.0
        self.gradient_events = 0
        self.boundary_events = 0
        self._phix = np.empty(d)
        self._phiv = np.empty(d)
        self._chunk = max(UNIFORM_CHUNK - UNIFORM_CHUNK % d, d)
        self._ubuf = np.zeros(0)
        self._upos = 0

    @property
    def events(self) -> int:
        return self.gradient_events + self.boundary_events

    def run(self, T: float, *, first_uniforms=None, recorder: _Recorder | None = None) -> None:
        """Advance the path by ``T``; event counters keep accumulating.

        A ``recorder`` indexes its rows by the running event count, so give
        it capacity for the whole path when it is reused across calls.
        """
        if T < 0:
            raise ValueError("T must be non-negative")
        d = self.target.dim
        if first_uniforms is None:
            first = np.zeros(0)
            use_first = False
        else:
            first = np.ascontiguousarray(first_uniforms, dtype=float)
            if first.shape != (d,):
                raise ValueError(f"first_uniforms must have length {d}")
            use_first = True
        rec = _Recorder.disabled(d) if recorder is None else recorder
        tau, horizon = 0.0, float(T)
        n_grad, n_bdry = self.gradient_events, self.boundary_events
        while True:
            tau, n_grad, n_bdry, status, self._upos = K.markovian_run(
                self.x, self.v, self._phix, self._phiv, self.target.mean, self.target.orthant,
                tau, horizon, *self.target.kernel_args(), self._ubuf, self._upos, first, use_first,
                n_grad, n_bdry, self.max_events, self.refresh_every,
                *rec.kernel_args(), rec.budget, *rec.tail_args(),
            )
            use_first = False
            if status != K.NEED_UNIFORMS:
                break
            # bulk draws give the same stream as one-at-a-time draws
            self._ubuf = self.rng.random(self._chunk)
            self._upos = 0
        self.gradient_events, self.boundary_events = n_grad, n_bdry
        self.tau += tau
        if status == K.EVENT_CAP:
            raise SimulationError(
                f"event budget of {self.max_events} exhausted at tau={tau:.6g} of T={T:.6g}"
            )


def simulate(
    x0,
    v0,
    T: float,
    target: TruncatedGaussianTarget,
    rng: np.random.Generator,
    *,
    first_uniforms=None,
    max_events: int = DEFAULT_MAX_EVENTS,
    log_capacity: int = 0,
    sqdist_ref=None,
    track=None,
    refresh_every: int = CACHE_REFRESH_EVERY,
    return_counts: bool = False,
):
    """Markovian zigzag trajectory on ``[0, T]``; returns ``(x, v, log)``.

    Each segment consumes ``d`` uniforms from ``rng`` in coordinate order
    (drawn ahead in blocks, so the generator ends up advanced past the last
    segment used). ``first_uniforms`` replaces the draws of the first
    segment (used by the coupling construction). Gradient-event logs carry
    ``budget``, the value of ``-log u`` that triggered the flip.
    """
    proc = MarkovianProcess(target, x0, v0, rng, max_events=max_events, refresh_every=refresh_every)
    rec = _Recorder(target.dim, log_capacity, sqdist_ref, track)
    proc.run(T, first_uniforms=first_uniforms, recorder=rec)
    log = rec.log(proc.events)
    log.budget = rec.budget[: len(log)].copy()
    out = (proc.x, proc.v, log)
    if return_counts:
        out = out + ((proc.gradient_events, proc.boundary_events),)
    return out


def run_events(x0, v0, n_events: int, target: TruncatedGaussianTarget, rng, *, sqdist_ref=None, track=None):
    """Follow the Markovian path for exactly ``n_events`` velocity switches."""
    proc = MarkovianProcess(target, x0, v0, rng, max_events=n_events)
    rec = _Recorder(target.dim, n_events, sqdist_ref, track)
    try:
        proc.run(np.inf, recorder=rec)
    except SimulationError:
        pass
    log = rec.log(proc.events)
    log.budget = rec.budget[: len(log)].copy()
    return proc.x, proc.v, log
