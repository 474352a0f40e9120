"""Exact Hamiltonian zigzag (Laplace momentum) on truncated Gaussians.

Between events the position moves linearly, ``x(t) = x + t v``, and the
momentum integrates the gradient analytically,
``p(t) = p - t phi_x - t^2/2 phi_v`` with ``phi_x = Phi (x - mu)`` and
``phi_v = Phi v``. A velocity coordinate flips when its momentum crosses zero
(gradient event) or when the position hits a constraint hyperplane
(boundary event, which also reflects the momentum).

The step functions below operate on :class:`HzzState` values and are meant
for inspection and testing; :func:`simulate` runs the same recursion in a
compiled loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .model import TruncatedGaussianTarget

__all__ = [
    "HzzState",
    "EventLog",
    "SimulationError",
    "sign",
    "min_positive_root",
    "initial_state",
    "gradient_event_times",
    "boundary_event_times",
    "advance",
    "apply_gradient_event",
    "apply_boundary_event",
    "simulate",
    "refresh_momentum",
    "energy",
    "ExactFlow",
    "run_events",
    "DEFAULT_MAX_EVENTS",
    "CACHE_REFRESH_EVERY",
]

DEFAULT_MAX_EVENTS = 10**8
CACHE_REFRESH_EVERY = 1000

KIND_NAMES = {K.GRADIENT: "gradient", K.BOUNDARY: "boundary"}


class SimulationError(RuntimeError):
    """Raised when a trajectory exceeds its event budget."""


def sign(a) -> np.ndarray:
    """Elementwise sign with ``sign(0) = +1``."""
    return np.where(np.asarray(a) < 0, -1.0, 1.0)


def min_positive_root(a, b, c):
    """Smaller positive root of ``a t^2 + b t + c``; ``inf`` when there is none.

    Accepts scalars or equally shaped arrays.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(c) == 0:
        return K.min_positive_root(float(a), float(b), float(c))
    a, b, c = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (a, b, c)))
    out = np.empty(a.size)
    K.min_positive_root_array(a.ravel().copy(), b.ravel().copy(), c.ravel().copy(), out)
    return out.reshape(a.shape)


@dataclass(frozen=True)
class HzzState:
    x: np.ndarray
    p: np.ndarray
    v: np.ndarray
    phix: np.ndarray
    phiv: np.ndarray
    tau: float = 0.0


def initial_state(target: TruncatedGaussianTarget, x, p) -> HzzState:
    x = np.array(x, dtype=float)
    p = np.array(p, dtype=float)
    v = sign(p)
    return HzzState(x, p, v, target.gradient(x), target.precision.matvec(v))


def gradient_event_times(state: HzzState) -> np.ndarray:
    """Per-coordinate first ``t > 0`` with ``p_i = t phi_x,i + t^2/2 phi_v,i``.

    A momentum already at or past zero against its velocity gives ``0``.
    """
    out = np.empty(state.p.size)
    K.gradient_times(*(np.ascontiguousarray(z, dtype=float) for z in (state.p, state.v, state.phix, state.phiv)), out)
    return out


def boundary_event_times(state, orthant) -> np.ndarray:
    """Wall-hit times of constrained coordinates moving outward, else ``inf``."""
    orthant = np.asarray(orthant, dtype=float)
    outward = (orthant != 0) & (orthant * state.v < 0)
    return np.where(outward, np.maximum(orthant * state.x, 0.0), np.inf)


def advance(state: HzzState, t: float) -> HzzState:
    if t < 0:
        raise ValueError("cannot advance by a negative time")
    return replace(
        state,
        x=state.x + t * state.v,
        p=state.p - t * state.phix - 0.5 * t * t * state.phiv,
        phix=state.phix + t * state.phiv,
        tau=state.tau + t,
    )


def _flip(state, target, i, p):
    v = state.v.copy()
    v[i] = -v[i]
    # Phi v_new = Phi v_old + 2 v_new,i Phi e_i
    phiv = state.phiv + 2.0 * v[i] * target.precision.column(i)
    return replace(state, v=v, p=p, phiv=phiv)


def apply_gradient_event(state: HzzState, target: TruncatedGaussianTarget, i: int) -> HzzState:
    p = state.p.copy()
    if abs(p[i]) > 1e-12 * max(1.0, float(np.max(np.abs(p)))):
        raise ValueError(f"momentum {p[i]!r} of coordinate {i} is not at zero")
    p[i] = 0.0
    return _flip(state, target, i, p)


def apply_boundary_event(state: HzzState, target: TruncatedGaussianTarget, i: int) -> HzzState:
    if abs(state.x[i]) > 1e-12:
        raise ValueError(f"coordinate {i} is not on its boundary (x = {state.x[i]!r})")
    x = state.x.copy()
    x[i] = 0.0
    p = state.p.copy()
    p[i] = -p[i]
    return _flip(replace(state, x=x), target, i, p)


def energy(target: TruncatedGaussianTarget, x, p) -> float:
    """Total energy ``U(x) + sum |p_i|``."""
    return target.potential(x) + float(np.sum(np.abs(p)))


def refresh_momentum(state_or_dim, rng, target: TruncatedGaussianTarget | None = None):
    """Draw fresh Laplace(1) momentum.

    Given an integer, returns the momentum vector; given an :class:`HzzState`
    (and its target), returns the refreshed state with ``v`` and ``phi_v``
    recomputed.
    """
    if isinstance(state_or_dim, (int, np.integer)):
        return rng.laplace(0.0, 1.0, size=int(state_or_dim))
    state = state_or_dim
    if target is None:
        raise ValueError("refreshing a state needs its target")
    p = rng.laplace(0.0, 1.0, size=state.x.size)
    v = sign(p)
    return replace(state, p=p, v=v, phiv=target.precision.matvec(v))


@dataclass
class EventLog:
    """Per-event records; ``kind`` codes map through :data:`KIND_NAMES`."""

    time: np.ndarray
    kind: np.ndarray
    coord: np.ndarray
    sqdist: np.ndarray | None = None
    track: np.ndarray | None = None
    budget: np.ndarray | None = None

    def __len__(self):
        return self.time.size

    def kinds(self) -> list[str]:
        return [KIND_NAMES[int(k)] for k in self.kind]


class _Recorder:
    """Preallocated log buffers handed to the compiled loops."""

    def __init__(self, d, capacity, ref=None, track=None):
        n = int(capacity)
        self.time = np.empty(n)
        self.kind = np.empty(n, dtype=np.int8)
        self.coord = np.empty(n, dtype=np.int64)
        self.budget = np.empty(n)
        self.ref = np.zeros(0) if ref is None else np.ascontiguousarray(ref, dtype=float)
        self.sqdist = np.empty(n if ref is not None else 0)
        self.track_idx = np.zeros(0, dtype=np.int64) if track is None else np.asarray(track, dtype=np.int64)
        self.track = np.empty((n if track is not None else 0, self.track_idx.size))

    @classmethod
    def disabled(cls, d):
        return cls(d, 0)

    def kernel_args(self):
        return (self.time, self.kind, self.coord)

    def tail_args(self):
        return (self.ref, self.sqdist, self.track_idx, self.track)

    def log(self, n) -> EventLog:
        n = min(n, self.time.size)
        return EventLog(
            self.time[:n].copy(),
            self.kind[:n].copy(),
            self.coord[:n].copy(),
            self.sqdist[:n].copy() if self.sqdist.size else None,
            self.track[:n].copy() if self.track.shape[0] else None,
        )


def simulate(
    x0,
    p0,
    T: float,
    target: TruncatedGaussianTarget,
    *,
    max_events: int = DEFAULT_MAX_EVENTS,
    log_capacity: int = 0,
    sqdist_ref=None,
    track=None,
    refresh_every: int = CACHE_REFRESH_EVERY,
    return_counts: bool = False,
):
    """Deterministic Hamiltonian zigzag trajectory on ``[0, T]``.

    Returns ``(x, p, log)``; ``log`` holds up to ``log_capacity`` events
    (optionally the squared distance to ``sqdist_ref`` and the coordinates
    listed in ``track`` at each event). With ``return_counts`` a fourth item
    ``(n_gradient, n_boundary)`` is appended.

    An event landing exactly at ``T`` is still applied.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    d = target.dim
    if x.shape != (d,) or p.shape != (d,):
        raise ValueError(f"x0 and p0 must have length {d}")
    v = sign(p)
    phix = np.empty(d)
    phiv = np.empty(d)
    rec = _Recorder(d, log_capacity, sqdist_ref, track)
    tau, n_grad, n_bdry, status = K.hamiltonian_run(
        x, p, v, phix, phiv, target.mean, target.orthant, float(T),
        *target.kernel_args(), int(max_events), int(refresh_every),
        *rec.kernel_args(), *rec.tail_args(),
    )
    if status == K.EVENT_CAP:
        raise SimulationError(
            f"event budget of {max_events} exhausted at tau={tau:.6g} of T={T:.6g}"
        )
    out = (x, p, rec.log(n_grad + n_bdry))
    if return_counts:
        out = out + ((n_grad, n_bdry),)
    return out


class ExactFlow:
    """Reusable exact flow for one target, forward or backward in time.

    Going backward by ``dt`` runs the forward flow from ``(x, -p)`` and
    negates the resulting momentum. Event counts accumulate in
    ``events`` and ``boundary_events`` until reset by the caller.
    """

    def __init__(self, target: TruncatedGaussianTarget, max_events: int = DEFAULT_MAX_EVENTS):
        d = target.dim
        self.target = target
        self.max_events = int(max_events)
        self._v = np.empty(d)
        self._phix = np.empty(d)
        self._phiv = np.empty(d)
        self._no_log = _Recorder.disabled(d)
        self.events = 0
        self.boundary_events = 0

    def reset_counts(self):
        self.events = 0
        self.boundary_events = 0

    def step(self, x, p, dt: float, direction: int = 1):
        """Return ``(x, p)`` at time ``dt`` away; inputs are not modified."""
        x = np.array(x, dtype=float)
        p = np.array(p, dtype=float) if direction > 0 else -np.asarray(p, dtype=float)
        np.copyto(self._v, sign(p))
        tau, n_grad, n_bdry, status = K.hamiltonian_run(
            x, p, self._v, self._phix, self._phiv, self.target.mean, self.target.orthant, float(dt),
            *self.target.kernel_args(), self.max_events, CACHE_REFRESH_EVERY,
            *self._no_log.kernel_args(), *self._no_log.tail_args(),
        )
        if status == K.EVENT_CAP:
            raise SimulationError(f"event budget of {self.max_events} exhausted within one step")
        self.events += n_grad + n_bdry
        self.boundary_events += n_bdry
        if direction < 0:
            p = -p
        return x, p


def run_events(x0, p0, n_events: int, target: TruncatedGaussianTarget, *, sqdist_ref=None, track=None):
    """Follow the trajectory for exactly ``n_events`` velocity switches.

    Returns ``(x, p, log)`` with the state at the last event.
    """
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    d = target.dim
    rec = _Recorder(d, n_events, sqdist_ref, track)
    tau, n_grad, n_bdry, _ = K.hamiltonian_run(
        x, p, sign(p), np.empty(d), np.empty(d), target.mean, target.orthant, np.inf,
        *target.kernel_args(), int(n_events), CACHE_REFRESH_EVERY, *rec.kernel_args(), *rec.tail_args(),
    )
    return x, p, rec.log(n_grad + n_bdry)
