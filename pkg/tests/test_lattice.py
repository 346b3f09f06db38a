import numpy as np
import pytest

from swarmphase import hexgeom
from swarmphase.errors import ScenarioViolation, StructuralError
from swarmphase.graphs import GraphSnapshot, validate_local_reconfiguration
from swarmphase.lattice import (FoodEvent, LatticeWorld, MoveProposal, apply_food_event,
                                compression_move_ok, execute_gather, execute_search,
                                foraging_step, foraging_world, is_valid_compression_move,
                                neighbor_table, snapshot, snapshot_json)
from swarmphase.rng import RngStream
from swarmphase.states import ProtocolParams

U, A0, AA, AW, AAW, AC = range(6)


def lattice_with(coords, side=12, lam=4.0, w=1):
    lat = LatticeWorld(side, len(coords), ProtocolParams(w=w, delta_max=6), lam=lam)
    lat.place_agents_at(coords)
    return lat


class ScriptedRng:
    def __init__(self, randoms=(), belows=()):
        self.randoms = list(randoms)
        self.belows = list(belows)

    def random(self):
        return self.randoms.pop(0)

    def randbelow(self, n):
        v = self.belows.pop(0)
        assert 0 <= v < n
        return v


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def test_six_distinct_neighbors_and_symmetry():
    for side in (3, 5, 8):
        tbl = neighbor_table(side)
        for s in range(side * side):
            nbrs = [int(x) for x in tbl[s]]
            assert len(set(nbrs)) == 6
            assert s not in nbrs
            for t in nbrs:
                assert s in [int(x) for x in tbl[t]]


def test_direction_offsets_close_a_loop():
    assert tuple(map(sum, zip(*hexgeom.DIRECTIONS))) == (0, 0)
    lat = lattice_with([(4, 4)])
    s = lat.site_of((4, 4))
    cur = s
    for d in range(6):
        cur = int(lat.nbr[cur, d])
    assert cur == s


def test_side_too_small_rejected():
    with pytest.raises(ScenarioViolation):
        neighbor_table(2)


def test_occupancy_injective_after_random_placement():
    lat = LatticeWorld(9, 30, ProtocolParams(w=1, delta_max=6))
    lat.place_agents_random(RngStream(1))
    occupied = [int(s) for s in lat.pos]
    assert len(set(occupied)) == 30


# ---------------------------------------------------------------------------
# Valid compression moves
# ---------------------------------------------------------------------------

def brute_move_ok(lat, states, l_coord, lp_coord):
    """Independent statement of the movement rule via networkx."""
    import networkx as nx

    l = lat.site_of(l_coord)
    lp = lat.site_of(lp_coord)

    def aware_sites(site, excl):
        out = set()
        for s in lat.nbr[site]:
            s = int(s)
            if s == excl:
                continue
            a = int(lat.grid[s])
            if a >= 0 and (states is None or states[a] != U):
                out.add(s)
        return out

    na_l = aware_sites(l, lp)
    na_lp = aware_sites(lp, l)
    if len(na_l) >= 5:
        return False
    union = na_l | na_lp
    g = nx.Graph()
    g.add_nodes_from(union)
    for a in union:
        for b in lat.nbr[a]:
            if int(b) in union:
                g.add_edge(a, int(b))
    inter = na_l & na_lp
    if inter:
        return all(any(nx.has_path(g, x, i) for i in inter) for x in union)
    if not na_l or not na_lp:
        return False
    ga = g.subgraph(na_l)
    gb = g.subgraph(na_lp)
    return nx.is_connected(ga) if na_l else True and (nx.is_connected(gb) if na_lp else True)


def test_boundary_slide_with_shared_neighbor_is_valid():
    # slide along the edge of a filled hexagon: the moving agent shares one
    # neighbor with the target site and everything stays locally linked
    center = (6, 6)
    cells = [center] + [hexgeom.add(center, d) for d in hexgeom.DIRECTIONS]
    lat = lattice_with(cells)
    agent_coord = hexgeom.add(center, hexgeom.DIRECTIONS[0])          # (7,6)
    target = hexgeom.add(agent_coord, hexgeom.DIRECTIONS[1])          # off the blob
    agent = int(lat.grid[lat.site_of(agent_coord)])
    prop = MoveProposal(agent, agent_coord, target, 1)
    assert is_valid_compression_move(lat, prop) is True
    assert brute_move_ok(lat, None, agent_coord, target) is True


def test_departure_that_disconnects_t_is_invalid():
    # a T junction: removing the stem strands the two arms (no local path)
    cells = [(5, 5), (6, 5), (4, 6), (5, 4)]
    lat = lattice_with(cells)
    agent = int(lat.grid[lat.site_of((5, 5))])
    target = (4, 5)  # direction 3 from (5,5): still adjacent to (4,6) only
    prop = MoveProposal(agent, (5, 5), target, 3)
    assert is_valid_compression_move(lat, prop) is False
    assert brute_move_ok(lat, None, (5, 5), target) is False


def test_five_aware_neighbors_blocks_the_move():
    center = (6, 6)
    cells = [center] + [hexgeom.add(center, hexgeom.DIRECTIONS[d]) for d in range(5)]
    lat = lattice_with(cells)
    agent = int(lat.grid[lat.site_of(center)])
    target = hexgeom.add(center, hexgeom.DIRECTIONS[5])
    prop = MoveProposal(agent, center, target, 5)
    assert is_valid_compression_move(lat, prop) is False


def test_move_rule_matches_brute_force_randomized():
    rng = RngStream(404)
    checked = 0
    for trial in range(300):
        k = 3 + rng.randbelow(8)
        cells = {(6, 6)}
        while len(cells) < k:
            frontier = sorted({hexgeom.add(c, d) for c in cells for d in hexgeom.DIRECTIONS}
                              - cells)
            cells.add(frontier[rng.randbelow(len(frontier))])
        lat = lattice_with(sorted(cells), side=16)
        states = np.array([rng.randbelow(2) for _ in range(k)], dtype=np.int8)
        for agent in range(k):
            coord = lat.coord_of(int(lat.pos[agent]))
            for d in range(6):
                target = lat.coord_of(int(lat.nbr[lat.site_of(coord), d]))
                if lat.grid[lat.site_of(target)] != -1:
                    continue
                got = compression_move_ok(lat, states, lat.site_of(coord),
                                          lat.site_of(target))
                want = brute_move_ok(lat, states, coord, target)
                assert got == want
                checked += 1
    assert checked > 1000


def test_structural_error_on_non_adjacent_proposal():
    lat = lattice_with([(2, 2)])
    with pytest.raises(StructuralError):
        is_valid_compression_move(lat, MoveProposal(0, (2, 2), (5, 5), 0))


# ---------------------------------------------------------------------------
# Gather / search moves
# ---------------------------------------------------------------------------

def test_gather_rejects_on_probability_draw():
    # mover (5,5) -> (6,5): shared aware neighbor (5,6), extra origin contact
    # (4,6); contacts go 2 -> 1, so acceptance is 4^-1 = 0.25
    cells = [(5, 5), (5, 6), (4, 6)]
    lat = lattice_with(cells, lam=4.0)
    states = np.array([A0, A0, A0], dtype=np.int8)
    moved = execute_gather(lat, states, 0, ScriptedRng(randoms=[0.3], belows=[0]))
    assert moved is None           # 0.3 > 0.25: rejected
    moved = execute_gather(lat, states, 0, ScriptedRng(randoms=[0.2], belows=[0]))
    assert moved is not None       # 0.2 <= 0.25: accepted
    assert moved.to == (6, 5)


def test_gather_always_accepts_uphill():
    # mover (5,5) -> (6,5): shared neighbor (5,6), target-side contacts
    # (6,6) and (7,5); contacts go 1 -> 3, acceptance min{1, 16} = 1
    cells = [(5, 5), (5, 6), (6, 6), (7, 5)]
    lat = lattice_with(cells, lam=4.0)
    states = np.array([A0, A0, A0, A0], dtype=np.int8)
    before = int(lat.pos[0])
    moved = execute_gather(lat, states, 0, ScriptedRng(randoms=[0.999999], belows=[0]))
    assert moved is not None
    assert int(lat.pos[0]) == lat.site_of((6, 5)) != before


def test_gather_blocked_by_occupied_target():
    cells = [(5, 5), (6, 5)]
    lat = lattice_with(cells, lam=4.0)
    states = np.array([A0, A0], dtype=np.int8)
    moved = execute_gather(lat, states, 0, ScriptedRng(belows=[0]))  # dir 0 occupied
    assert moved is None


def test_search_moves_iff_target_free():
    lat = lattice_with([(4, 4)])
    moved = execute_search(lat, 0, ScriptedRng(belows=[2]))
    assert moved is not None
    # fully surrounded agent never moves
    center = (6, 6)
    cells = [center] + [hexgeom.add(center, d) for d in hexgeom.DIRECTIONS]
    lat = lattice_with(cells)
    agent = int(lat.grid[lat.site_of(center)])
    for d in range(6):
        assert execute_search(lat, agent, ScriptedRng(belows=[d])) is None


def test_exclusion_invariant_under_fuzzing():
    rng = RngStream(12)
    lat = LatticeWorld(8, 20, ProtocolParams(w=1, delta_max=6))
    lat.place_agents_random(rng)
    world = foraging_world(lat)
    world.states[:] = [rng.randbelow(3) for _ in range(20)]
    for _ in range(4000):
        foraging_step(lat, world, rng)
        assert len({int(s) for s in lat.pos}) == 20
        occupied = np.flatnonzero(lat.grid >= 0)
        assert len(occupied) == 20


# ---------------------------------------------------------------------------
# Combined foraging step
# ---------------------------------------------------------------------------

def test_witness_never_moves():
    lat = lattice_with([(5, 5), (6, 5)])
    apply_food_event(lat, FoodEvent(0, "place", (5, 5)))
    world = foraging_world(lat)
    world.states[:] = [AW, A0]
    pos_before = int(lat.pos[0])
    # force: select agent 0, move branch, any direction
    rng = ScriptedRng(randoms=[0.9], belows=[0])
    foraging_step(lat, world, rng)
    assert int(lat.pos[0]) == pos_before


def test_flagged_and_clear_agents_never_move():
    for state in (AW, AAW, AC):
        lat = lattice_with([(5, 5)])
        world = foraging_world(lat)
        world.states[:] = [state]
        rng = ScriptedRng(randoms=[0.9], belows=[0])
        foraging_step(lat, world, rng)
        assert int(lat.pos[0]) == lat.site_of((5, 5))


def test_all_clear_state_branch_broadcasts():
    lat = lattice_with([(5, 5), (6, 5)])
    world = foraging_world(lat)
    world.states[:] = [AC, A0]
    rng = ScriptedRng(randoms=[0.2], belows=[0])  # pick agent 0, state branch
    foraging_step(lat, world, rng)
    assert list(world.states) == [U, AC]


def test_isolated_unaware_state_branch_is_noop():
    lat = lattice_with([(2, 2)])
    world = foraging_world(lat)
    rng = ScriptedRng(randoms=[0.2], belows=[0])
    foraging_step(lat, world, rng)
    assert world.states[0] == U
    assert world.iteration == 1


def test_witness_on_food_becomes_flagged_via_own_activation():
    lat = lattice_with([(5, 5)])
    apply_food_event(lat, FoodEvent(0, "place", (5, 5)))
    world = foraging_world(lat)
    rng = ScriptedRng(randoms=[0.2, 0.1], belows=[0])  # agent 0, state branch, flag draw ok
    foraging_step(lat, world, rng)
    assert world.states[0] == AW
    assert world.witnesses == {0}


# ---------------------------------------------------------------------------
# Food events
# ---------------------------------------------------------------------------

def test_food_bound_enforced():
    lat = lattice_with([(1, 1)], w=1)
    apply_food_event(lat, FoodEvent(0, "place", (2, 2)))
    with pytest.raises(ScenarioViolation):
        apply_food_event(lat, FoodEvent(0, "place", (3, 3)))
    # a shift never raises the count
    apply_food_event(lat, FoodEvent(0, "shift", (2, 2), (4, 4)))
    assert lat.food_sites == {(4, 4)}


def test_remove_missing_food_rejected():
    lat = lattice_with([(1, 1)])
    with pytest.raises(ScenarioViolation):
        apply_food_event(lat, FoodEvent(0, "remove", (2, 2)))


def test_place_on_empty_site_makes_no_witness():
    lat = lattice_with([(1, 1)])
    apply_food_event(lat, FoodEvent(0, "place", (5, 5)))
    assert lat.current_witnesses() == set()


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

def test_snapshot_format_and_stability():
    lat = lattice_with([(1, 2), (3, 4)], side=6)
    apply_food_event(lat, FoodEvent(0, "place", (2, 2)))
    states = np.array([AA, U], dtype=np.int8)
    snap = snapshot(lat, states, tick=7)
    assert snap["side"] == 6 and snap["tick"] == 7
    assert snap["agents"][0] == {"id": 0, "q": 1, "r": 2, "state": "AA"}
    assert snap["food"] == [{"q": 2, "r": 2}]
    a = snapshot_json(snap)
    b = snapshot_json(snapshot(lat, states, tick=7))
    assert a == b
    assert '"lambda":4.0' in a


# ---------------------------------------------------------------------------
# Simple connectivity and local connectivity of accepted moves
# ---------------------------------------------------------------------------

def _setup_cluster(seed, k=18, side=14):
    rng = RngStream(seed)
    cells = {(7, 7)}
    while len(cells) < k:
        frontier = sorted({hexgeom.add(c, d) for c in cells for d in hexgeom.DIRECTIONS}
                          - cells)
        cells.add(frontier[rng.randbelow(len(frontier))])
    # fill any enclosed cavities: the simple-connectivity property assumes a
    # hole-free start
    while hexgeom.outer_boundary(cells)[1]:
        qs = [q for q, _ in cells]
        rs = [r for _, r in cells]
        box = {(q, r) for q in range(min(qs) - 1, max(qs) + 2)
               for r in range(min(rs) - 1, max(rs) + 2)}
        outside = {c for c in box if c not in cells}
        reach = {(min(qs) - 1, min(rs) - 1)}
        stack = list(reach)
        while stack:
            c = stack.pop()
            for nb in hexgeom.neighbors6(c):
                if nb in outside and nb not in reach:
                    reach.add(nb)
                    stack.append(nb)
        hole_cells = sorted(outside - reach)
        cells.add(hole_cells[0])
    filled = sorted(cells)
    lat = lattice_with(filled, side=side)
    apply_food_event(lat, FoodEvent(0, "place", filled[0]))
    world = foraging_world(lat)
    world.states[:] = A0
    witness = int(lat.grid[lat.site_of(filled[0])])
    world.states[witness] = AW
    return lat, world, rng, witness


def _witness_component_sites(lat, world, witness):
    sites = set()
    stack = [int(lat.pos[witness])]
    sites.add(stack[0])
    while stack:
        s = stack.pop()
        for nb in lat.nbr[s]:
            nb = int(nb)
            a = int(lat.grid[nb])
            if a >= 0 and world.states[a] != U and nb not in sites:
                sites.add(nb)
                stack.append(nb)
    return sites


def test_witness_component_stays_simply_connected():
    # accepted compression moves never punch a hole into the witness cluster
    lat, world, rng, witness = _setup_cluster(21)
    assert not hexgeom.outer_boundary(lat.planar_sites(range(lat.n))[0])[1]
    moves = 0
    for _ in range(30000):
        log = []
        foraging_step(lat, world, rng, move_log=log)
        if log:
            moves += 1
            pieces = lat.planar_sites([int(lat.grid[s]) for s in
                                       _witness_component_sites(lat, world, witness)])
            assert len(pieces) == 1
            assert not hexgeom.outer_boundary(pieces[0])[1]
    assert moves > 300


def test_accepted_gathers_are_locally_connected_reconfigurations():
    # every accepted move, replayed as a graph rewiring, passes the validator
    lat, world, rng, witness = _setup_cluster(33, k=14)
    checked = 0
    for _ in range(20000):
        before = _lattice_graph(lat)
        groups = world.behavior_groups()
        log = []
        foraging_step(lat, world, rng, move_log=log)
        if log:
            after = _lattice_graph(lat)
            assert validate_local_reconfiguration(before, after, log[0].agent, groups)
            checked += 1
    assert checked > 200


def _lattice_graph(lat):
    edges = set()
    for s in np.flatnonzero(lat.grid >= 0):
        a = int(lat.grid[s])
        for nb in lat.nbr[int(s)]:
            b = int(lat.grid[int(nb)])
            if b >= 0 and a < b:
                edges.add((a, b))
    return GraphSnapshot(lat.n, frozenset(edges))


# ---------------------------------------------------------------------------
# Metropolis stationarity (smoke scale; the full run lives in acceptance)
# ---------------------------------------------------------------------------

def test_gather_chain_matches_biased_distribution_smoke():
    from collections import Counter

    side = 10
    cells = [(5, 5), (6, 5), (5, 6), (4, 5)]
    lat = lattice_with(cells, side=side, lam=3.0)
    apply_food_event(lat, FoodEvent(0, "place", (5, 5)))
    world = foraging_world(lat)
    world.states[:] = [AW, A0, A0, A0]
    rng = RngStream(99)

    def key():
        return frozenset(int(p) for p in lat.pos)

    counts = Counter()
    steps = 200_000
    for _ in range(steps):
        u = rng.randbelow(4)
        if u != 0:
            execute_gather(lat, world.states, u, rng)
        counts[key()] += 1

    # enumerate the reachable set and exact weights
    def edges_of(state):
        occ = set(state)
        return sum(1 for s in occ for nb in lat.nbr[s] if int(nb) in occ) // 2

    pi = {st: lat.lam ** edges_of(st) for st in counts}
    z = sum(pi.values())
    tv = 0.5 * sum(abs(counts[st] / steps - pi[st] / z) for st in pi)
    assert tv < 0.08, tv
