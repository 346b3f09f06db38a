#!/usr/bin/env python3
"""Token waves on a static graph.

A stimulus appears at one end of a path of agents.  The witness generates
alert tokens that random-walk across Aware agents until an Unaware neighbor
consumes one; awareness creeps down the path.  When the stimulus disappears,
the flagged agent floods all-clear tokens and the collective resets -- and
the reset wave always wins, even though awareness was still spreading.

Run:  python demos/01_token_waves.py
"""

from swarmphase import (GraphSnapshot, ProtocolParams, RngStream, WitnessEvent,
                        WitnessSchedule, World, potential, step)

n = 24
graph = GraphSnapshot.path(n)
params = ProtocolParams(w=1, delta_max=graph.max_degree())
world = World.all_unaware(graph.adjacency(), params)
world.schedule = WitnessSchedule([
    WitnessEvent(0, True, 0),        # stimulus lands on agent 0
    WitnessEvent(6000, False, 0),    # and disappears later
])
rng = RngStream(2718)

print(f"path of {n} agents, stimulus on agent 0 until t=6000, p={params.p}")
print(f"{'iter':>6}  {'aware':>5}  {'tokens':>6}  {'phi':>4}  wave")
marks = {0}
for t in range(1, 14001):
    step(world, rng)
    if t % 1000 == 0:
        pot = potential(world)
        bar = "".join("#" if s else "." for s in (world.states != 0))
        print(f"{t:>6}  {pot.phi_a:>5}  {pot.phi_at:>6}  {pot.phi:>4}  {bar}")
    if world.all_aware() and "aware" not in marks:
        marks.add("aware")
        print(f"{t:>6}  -- every agent is Aware --")
    if t > 6000 and world.all_unaware_now():
        print(f"{t:>6}  -- every agent is back to Unaware --")
        break
