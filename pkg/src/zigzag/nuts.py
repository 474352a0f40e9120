"""No-U-turn integration-time selection for Hamiltonian zigzag.

A transition refreshes the Laplace momentum and grows a binary tree of
states spaced ``delta_T`` apart in process time, doubling in a random
direction until the ends of some balanced subtree turn back on each other.

Because the dynamics are simulated exactly, every state in the tree carries
the same total energy, so the multinomial weights of generalized NUTS are
all equal and the candidate is a uniformly chosen leaf. Inside a subtree the
choice is uniform; when a finished subtree is merged into the trajectory its
candidate replaces the current one with probability ``min(1, n_new/n_old)``
(the usual biased progressive sampling, which favours states far from the
start and keeps the uniform distribution as its invariant). A subtree that
is stopped by a U-turn is discarded whole.

Going backward in time is the same exact flow run on ``(x, -p)``, followed
by negating the momentum again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import DEFAULT_MAX_EVENTS, ExactFlow, SimulationError, energy, sign
from .model import TruncatedGaussianTarget, base_integration_time

U_TURN_CRITERIA = ("velocity", "momentum")

__all__ = ["U_TURN_CRITERIA", "NutsConfig", "TransitionStats", "TrajectoryTree", "u_turn", "nuts_transition", "NutsSampler"]


@dataclass(frozen=True)
class NutsConfig:
    """Tuning knobs. ``max_depth = D`` allows ``D + 1`` doublings.

    ``criterion="momentum"`` is the default: with ``"velocity"`` the sign
    vectors of strongly correlated targets turn back after a few events,
    long before the position has moved along the main axis.
    """

    delta_T: float
    t_rel: float = 0.1
    max_depth: int = 10
    energy_tol: float = 1e-8
    max_events: int = DEFAULT_MAX_EVENTS
    criterion: str = "momentum"

    def __post_init__(self):
        if self.criterion not in U_TURN_CRITERIA:
            raise ValueError(f"criterion must be one of {U_TURN_CRITERIA}, got {self.criterion!r}")
        if not self.delta_T > 0:
            raise ValueError(f"delta_T must be positive, got {self.delta_T}")
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")

    @classmethod
    def for_target(cls, target: TruncatedGaussianTarget, t_rel: float = 0.1, **kw) -> "NutsConfig":
        return cls(base_integration_time(target.precision, t_rel), t_rel=t_rel, **kw)


@dataclass
class TransitionStats:
    depth: int = 0
    leaves: int = 1
    events: int = 0
    boundary_events: int = 0
    terminated_reason: str = "depth_cap"
    energy_error: float = 0.0


@dataclass
class TrajectoryTree:
    """A time-ordered stretch of leaves ``[minus, ..., plus]``."""

    x_minus: np.ndarray
    p_minus: np.ndarray
    x_plus: np.ndarray
    p_plus: np.ndarray
    candidate: np.ndarray
    leaves: int = 1
    depth: int = 0
    terminated: bool = False


def u_turn(x_minus, p_minus, x_plus, p_plus, criterion: str = "momentum") -> bool:
    """True when the displacement opposes either end.

    ``"velocity"`` dots the displacement with ``sign(p)``, the direction of
    motion; ``"momentum"`` dots it with ``p`` itself, as in Gaussian-momentum
    NUTS, so ends with large momentum carry more weight.
    """
    dx = np.asarray(x_plus, dtype=float) - np.asarray(x_minus, dtype=float)
    if criterion == "velocity":
        a, b = sign(p_minus), sign(p_plus)
    elif criterion == "momentum":
        a, b = np.asarray(p_minus, dtype=float), np.asarray(p_plus, dtype=float)
    else:
        raise ValueError(f"unknown U-turn criterion {criterion!r}")
    return bool(dx @ a < 0.0 or dx @ b < 0.0)


def _build(flow, x, p, direction, depth, cfg, rng, h0, stats):
    """Grow a subtree of ``2**depth`` leaves beyond ``(x, p)``.

    Returns ``(outer_x, outer_p, inner_x, inner_p, candidate, n, stopped)``;
    "outer" is the end furthest from the existing trajectory.
    """
    if depth == 0:
        x1, p1 = flow.step(x, p, cfg.delta_T, direction)
        err = abs(energy(flow.target, x1, p1) - h0) / max(abs(h0), 1.0)
        stats.energy_error = max(stats.energy_error, err)
        if err > cfg.energy_tol:
            raise SimulationError(f"energy drifted by {err:.3g} (relative) inside a NUTS tree")
        return x1, p1, x1, p1, x1, 1, False
    ox, op, ix, ip, cand, n, stop = _build(flow, x, p, direction, depth - 1, cfg, rng, h0, stats)
    if stop:
        return ox, op, ix, ip, cand, n, True
    ox2, op2, _, _, cand2, n2, stop2 = _build(flow, ox, op, direction, depth - 1, cfg, rng, h0, stats)
    if stop2:
        return ox2, op2, ix, ip, cand, n + n2, True
    if rng.random() * (n + n2) < n2:
        cand = cand2
    if direction > 0:
        stop = u_turn(ix, ip, ox2, op2, cfg.criterion)
    else:
        stop = u_turn(ox2, op2, ix, ip, cfg.criterion)
    return ox2, op2, ix, ip, cand, n + n2, stop


def nuts_transition(x0, target: TruncatedGaussianTarget, config: NutsConfig, rng, *, flow=None):
    """One Zigzag-NUTS transition; returns ``(x1, TransitionStats)``."""
    x0 = np.array(x0, dtype=float)
    if not target.in_support(x0):
        raise ValueError("starting point lies outside the target's support")
    flow = ExactFlow(target, config.max_events) if flow is None else flow
    flow.reset_counts()
    p0 = rng.laplace(0.0, 1.0, size=target.dim)
    h0 = energy(target, x0, p0)
    stats = TransitionStats()
    tree = TrajectoryTree(x0, p0, x0, p0, x0)
    for depth in range(config.max_depth + 1):
        direction = 1 if rng.random() < 0.5 else -1
        if direction > 0:
            ox, op, _, _, cand, n, stop = _build(flow, tree.x_plus, tree.p_plus, 1, depth, config, rng, h0, stats)
        else:
            ox, op, _, _, cand, n, stop = _build(flow, tree.x_minus, tree.p_minus, -1, depth, config, rng, h0, stats)
        stats.depth = depth + 1
        if stop:
            stats.terminated_reason = "subtree_u_turn"
            tree.terminated = True
            break
        if rng.random() * tree.leaves < n:
            tree.candidate = cand
        tree.leaves += n
        tree.depth = depth + 1
        if direction > 0:
            tree.x_plus, tree.p_plus = ox, op
        else:
            tree.x_minus, tree.p_minus = ox, op
        if u_turn(tree.x_minus, tree.p_minus, tree.x_plus, tree.p_plus, config.criterion):
            stats.terminated_reason = "u_turn"
            tree.terminated = True
            break
    stats.leaves = tree.leaves
    stats.events = flow.events
    stats.boundary_events = flow.boundary_events
    return np.array(tree.candidate), stats


@dataclass
class NutsSampler:
    """Convenience wrapper that reuses one flow across transitions."""

    target: TruncatedGaussianTarget
    config: NutsConfig
    _flow: ExactFlow = field(init=False, repr=False)

    def __post_init__(self):
        self._flow = ExactFlow(self.target, self.config.max_events)

    def transition(self, x, rng):
        return nuts_transition(x, self.target, self.config, rng, flow=self._flow)
