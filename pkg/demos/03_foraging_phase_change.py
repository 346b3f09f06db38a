#!/usr/bin/env python3
"""Foraging phase changes on the periodic triangular lattice, desk scale.

Four phases mirroring the headline simulation (which used 5625 agents on a
150x150 lattice -- pass --full to run that size):

  (a) food appears: the collective turns Aware and gathers around it,
  (b) the food is shifted: the cluster follows,
  (c) food removed: all-clear waves win and everyone turns Unaware,
  (d) free dispersal back toward uniform occupancy.

Run:  python demos/03_foraging_phase_change.py [--full]
"""

import argparse

import numpy as np

from swarmphase import _accel
from swarmphase.lattice import (FoodEvent, LatticeWorld, apply_food_event,
                                foraging_world)
from swarmphase.metrics import perimeter
from swarmphase.rng import RngStream
from swarmphase.states import ProtocolParams

parser = argparse.ArgumentParser()
parser.add_argument("--full", action="store_true",
                    help="5625 agents on 150x150 instead of the desk default")
args = parser.parse_args()

side, n = (150, 5625) if args.full else (60, 400)
params = ProtocolParams(w=5, delta_max=6)
lat = LatticeWorld(side, n, params, lam=4.0)
rng = RngStream(42)
lat.place_agents_random(rng)
world = foraging_world(lat)
st = rng.state_array()
counters = np.array([0, 0], dtype=np.int64)
wz = np.zeros(n, dtype=np.uint8)
scratch = np.zeros(64, dtype=np.int32)


def run(iters, stop_code=0):
    used, sat, _, _ = _accel.lattice_run(
        lat.grid, lat.pos, world.states, lat.food, lat.nbr, params.p, 6.0,
        lat.lam_pow, st, iters, stop_code, counters, wz, scratch, False)
    world.iteration += int(used)
    return int(used), bool(sat)


def witness_cluster():
    wits = sorted(lat.current_witnesses())
    if not wits:
        return []
    comp, seen = {wits[0]}, {int(lat.pos[wits[0]])}
    stack = [int(lat.pos[wits[0]])]
    while stack:
        s = stack.pop()
        for nb in lat.nbr[s]:
            a = int(lat.grid[int(nb)])
            if a >= 0 and world.states[a] != 0 and int(nb) not in seen:
                seen.add(int(nb))
                comp.add(a)
                stack.append(int(nb))
    return sorted(comp)


def status(label):
    aware = int((world.states != 0).sum())
    line = f"[{label}] t={world.iteration:>12,}  aware {aware}/{n}"
    cluster = witness_cluster()
    if len(cluster) > 1:
        try:
            r = perimeter(lat, cluster)
            line += f"  witness cluster {len(cluster)} agents, alpha {r.alpha_ratio:.2f}"
        except Exception:
            pass
    print(line)


center = (side // 2, side // 2)
print(f"{n} agents on a {side}x{side} lattice, lambda=4, p={params.p}")

print("\n(a) food appears at", center)
apply_food_event(lat, FoodEvent(0, "place", center))
used, sat = run(2 * 10 ** 8, stop_code=1)
status("gather")
print(f"    all Aware after {used:,} iterations" if sat else "    cap reached")

print("\n    compressing around the food ...")
run(3 * 10 ** 7)
status("compress")

shifted = ((side // 2 + side // 4) % side, side // 2)
print("\n(b) food shifts to", shifted)
apply_food_event(lat, FoodEvent(0, "shift", center, shifted))
run(3 * 10 ** 7)
status("follow")

print("\n(c) food removed")
apply_food_event(lat, FoodEvent(0, "remove", shifted))
used, sat = run(10 ** 8, stop_code=2)
status("reset")
print(f"    all Unaware after {used:,} more iterations" if sat else "    cap reached")

print("\n(d) dispersing ...")
run(2 * 10 ** 7)
occupied_rows = len({int(p) // side for p in lat.pos})
status("search")
print(f"    agents spread over {occupied_rows}/{side} rows of the lattice")
