"""
How the Markovian zigzag approaches the Hamiltonian one
=======================================================

Refreshing the momentum magnitudes of the Hamiltonian zigzag every ``dt``
gives a process that tends to the Markovian zigzag as ``dt`` shrinks. We
couple the two so that they share their random numbers and record how often
their paths split before a fixed horizon. Halving ``dt`` roughly halves the
divergence probability.
"""

from zigzag import coupling, model

####################################################################
# The grid is measured in mean event spacings of the stationary process.

target = model.compound_symmetric_target(16, 0.9)
grid, T = coupling.default_grid(target)
print("dt grid:", [round(dt, 4) for dt in grid], "horizon", round(T, 3))

####################################################################
# 300 coupled pairs per grid point, each started from the stationary law.

table = coupling.divergence_rate(None, None, grid, T, target, 300, seed=2)
for e in table:
    print(f"dt={e.dt:.4f}  P(diverge)={e.p_hat:.3f} +- {e.std_err:.3f}")
for a, b in zip(table, table[1:]):
    if b.n_diverged:
        print(f"ratio {a.p_hat / b.p_hat:.2f}")
