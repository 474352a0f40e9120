"""
Zigzag-NUTS against the Markovian zigzag
========================================

On a strongly correlated target the deterministic dynamics travel along the
long axis, and NUTS picks how far to go. We compare the ESS per event of both
samplers along the first coordinate and along the principal component.
This is a scaled-down version of ``zigzag duel`` (d=64 instead of 256).
"""

from zigzag import diagnostics, model, rng, samplers
from zigzag.nuts import NutsConfig

####################################################################
# Compound-symmetric target with correlation 0.99 on the positive orthant.

target = model.compound_symmetric_target(64, 0.99, orthant=1)
config = NutsConfig.for_target(target, t_rel=0.1)
print(f"base integration time {config.delta_T:.3f}")

####################################################################
# NUTS first, then a Markovian run given the same event budget and
# observed every ``delta_T``.

nuts = samplers.nuts_chain(target, rng.stream(1, "duel", 0, 0), config, 1000)
mzz = samplers.markovian_chain(target, rng.stream(1, "duel", 0, 1), config.delta_T,
                               event_budget=nuts.total_events)
nuts, mzz = nuts.discard(0.1), mzz.discard(0.1)
print(f"events: NUTS {nuts.total_events}, Markovian {mzz.total_events}")

####################################################################
# Relative ESS per event above 1 favours NUTS.

pc = diagnostics.principal_component(target.dim)
for name, direction in (("x1", 0), ("pc", pc)):
    rel = diagnostics.relative_ess_per_event(nuts, mzz, direction)
    print(f"{name}: relative ESS per event {rel:.2f}")
