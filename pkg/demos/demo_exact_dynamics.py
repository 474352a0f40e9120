"""
Exact zigzag dynamics on a truncated Gaussian
=============================================

The Hamiltonian zigzag moves along straight lines and turns exactly when a
momentum coordinate hits zero or the path reaches the orthant wall. Here we
follow one trajectory, check that the energy is unchanged, then run it
backward to get the start again.
"""

import numpy as np

from zigzag import hamiltonian, markovian, model

####################################################################
# A 3-d AR(1) target restricted to ``x1 > 0``. The other two coordinates
# are unconstrained.

target = model.ar1_target(3, 0.8, orthant=[1, 0, 0])
x0 = np.array([0.5, -0.2, 0.3])
p0 = np.array([-1.5, 0.4, 0.9])

x, p, log = hamiltonian.simulate(x0, p0, 6.0, target, log_capacity=100, track=[0, 1, 2])
print(f"{len(log)} events: {log.kinds().count('boundary')} at the wall")
for t, kind, i in zip(log.time[:6], log.kinds()[:6], log.coord[:6]):
    print(f"  t={t:7.4f}  {kind:8s} coordinate {i}")

####################################################################
# The total energy is conserved to rounding error.

h0 = hamiltonian.energy(target, x0, p0)
h1 = hamiltonian.energy(target, x, p)
print(f"energy before {h0:.12f}, after {h1:.12f}")

####################################################################
# Flipping the momentum and running for the same time retraces the path.

xb, pb, _ = hamiltonian.simulate(x, -p, 6.0, target)
print("round-trip error:", np.max(np.abs(xb - x0)), np.max(np.abs(-pb - p0)))

####################################################################
# The Markovian zigzag flips velocities at random instead. Its event count
# over the same time is of the same order, but the flips undo each other.

rng = np.random.default_rng(0)
_, _, mlog = markovian.simulate(x0, np.sign(p0), 6.0, target, rng, log_capacity=10_000)
print(f"Markovian path over the same time: {len(mlog)} events")
