import math

import pytest

from conftest import random_connected_graph
from swarmphase import hexgeom
from swarmphase.engine import World
from swarmphase.errors import StructuralError
from swarmphase.graphs import GraphSnapshot
from swarmphase.lattice import LatticeWorld
from swarmphase.metrics import (DriftChainSpec, convergence_report,
                                drift_absorption_trials, p_min, perimeter, potential,
                                residual_components, state_invariant_ok)
from swarmphase.rng import RngStream
from swarmphase.states import ProtocolParams

U, A0, AA, AW, AAW, AC = range(6)


def world_of(graph, states, witnesses=()):
    params = ProtocolParams(w=max(len(witnesses), 1), delta_max=max(graph.max_degree(), 1))
    w = World.all_unaware(graph.adjacency(), params, witnesses=witnesses)
    w.states[:] = states
    return w


# ---------------------------------------------------------------------------
# Potential
# ---------------------------------------------------------------------------

def test_potential_all_unaware():
    w = world_of(GraphSnapshot.path(4), [U, U, U, U])
    reading = potential(w)
    assert (reading.phi_a, reading.phi_at, reading.phi) == (0, 0, 0)


def test_potential_counts():
    w = world_of(GraphSnapshot.path(5), [A0, AA, AW, U, U])
    reading = potential(w)
    assert (reading.phi_a, reading.phi_at, reading.phi) == (3, 1, 4)


def test_potential_single_flagged_holder():
    # one agent carrying both flags among two Unaware: counts once as Aware
    # and once as holder
    w = world_of(GraphSnapshot.path(3), [AAW, U, U])
    reading = potential(w)
    assert (reading.phi_a, reading.phi_at, reading.phi) == (1, 1, 2)


# ---------------------------------------------------------------------------
# Residual components
# ---------------------------------------------------------------------------

def brute_residuals(world):
    """networkx-based reference."""
    import networkx as nx

    g = nx.Graph()
    aware = [u for u in range(world.n) if world.states[u] != U]
    g.add_nodes_from(aware)
    for u in aware:
        for v in world.adjacency.neighbors(u):
            if world.states[v] != U:
                g.add_edge(u, int(v))
    out = []
    for comp in nx.connected_components(g):
        for u in comp:
            s = world.states[u]
            if s == AC or (s in (AW, AAW) and u not in world.witnesses):
                out.append(frozenset(comp))
                break
    return sorted(out, key=sorted)


def test_residuals_match_brute_force_randomized():
    rng = RngStream(8)
    for _ in range(300):
        n = 3 + rng.randbelow(5)  # up to 7 agents
        g = random_connected_graph(n, rng, extra=rng.randbelow(3))
        states = [rng.randbelow(6) for _ in range(n)]
        witnesses = {u for u in range(n) if rng.randbelow(4) == 0}
        w = world_of(g, states, witnesses=witnesses)
        mine = sorted((frozenset(c) for c in residual_components(w)), key=sorted)
        assert mine == brute_residuals(w)


def test_two_residual_components_both_flagged():
    # one component holds a true witness but also an all-clear agent; the
    # other holds a stale witness flag: both are residual
    edges = [(0, 1), (1, 2), (3, 4)]
    g = GraphSnapshot.from_edges(5, edges)
    w = world_of(g, [AW, A0, AC, AW, A0], witnesses={0})
    comps = residual_components(w)
    assert sorted(sorted(c) for c in comps) == [[0, 1, 2], [3, 4]]


def test_component_with_true_witness_not_residual():
    g = GraphSnapshot.path(3)
    w = world_of(g, [AW, A0, AA], witnesses={0})
    assert residual_components(w) == []
    assert state_invariant_ok(w)


def test_all_unaware_no_components():
    g = GraphSnapshot.path(3)
    w = world_of(g, [U, U, U])
    assert residual_components(w) == []


# ---------------------------------------------------------------------------
# Perimeter and p_min
# ---------------------------------------------------------------------------

def lattice_with(coords, side=16):
    lat = LatticeWorld(side, len(coords), ProtocolParams(w=1, delta_max=6))
    lat.place_agents_at(coords)
    return lat


def test_single_agent_boundary_walk_is_six():
    lat = lattice_with([(5, 5)])
    reading = perimeter(lat, [0])
    assert reading.boundary_walk_length == 6
    assert reading.p_min == 6
    assert reading.alpha_ratio == pytest.approx(1.0)


def test_hexagon_of_seven_achieves_p_min():
    cells = [(8, 8)] + [hexgeom.add((8, 8), d) for d in hexgeom.DIRECTIONS]
    lat = lattice_with(cells)
    reading = perimeter(lat, range(7))
    assert reading.boundary_walk_length == p_min(7) == 18
    assert reading.alpha_ratio == pytest.approx(1.0)
    assert not reading.has_hole


def test_straight_line_alpha_maximal_for_small_k():
    # The line attains the maximum walk length for its size; the only shapes
    # that tie it are the other chains with exactly k-1 internal adjacencies
    # (any denser shape is strictly below).
    for k in range(4, 9):
        shapes = hexgeom.enumerate_polyforms(k)
        line = frozenset((i, 0) for i in range(k))
        line_len = hexgeom.outer_boundary(line)[0]
        assert line_len == 6 * k - 2 * (k - 1)
        assert line_len == max(hexgeom.outer_boundary(s)[0] for s in shapes)
        for s in shapes:
            length = hexgeom.outer_boundary(s)[0]
            assert length <= line_len
            if hexgeom.internal_edges(s) > k - 1:
                assert length < line_len


def test_p_min_frozen_table_matches_enumeration():
    for k in range(1, 9):  # larger sizes covered by the formula cross-check below
        best = min(hexgeom.outer_boundary(s)[0] for s in hexgeom.enumerate_polyforms(k))
        assert p_min(k) == best


def test_p_min_spiral_and_formula_agree():
    for k in range(1, 200):
        spiral_len = hexgeom.outer_boundary(hexgeom.spiral(k))[0]
        formula = 6 * k - 2 * math.floor(3 * k - math.sqrt(12 * k - 3))
        assert spiral_len == formula
        assert p_min(k) == formula


def test_p_min_monotone():
    values = [p_min(k) for k in range(1, 120)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_perimeter_hole_flag_and_alpha_undefined():
    ring = [hexgeom.add((8, 8), d) for d in hexgeom.DIRECTIONS]
    lat = lattice_with(ring)
    reading = perimeter(lat, range(6))
    assert reading.has_hole
    assert reading.boundary_walk_length == 18  # outer walk only
    assert math.isnan(reading.alpha_ratio)


def test_perimeter_disconnected_component_rejected():
    lat = lattice_with([(1, 1), (5, 5)])
    with pytest.raises(StructuralError, match="disconnected"):
        perimeter(lat, [0, 1])


def test_perimeter_wrap_rejected():
    side = 5
    coords = [(q, 2) for q in range(side)]  # a band around the torus
    lat = lattice_with(coords, side=side)
    with pytest.raises(StructuralError, match="wraps"):
        perimeter(lat, range(side))


# ---------------------------------------------------------------------------
# Drift chain
# ---------------------------------------------------------------------------

def test_drift_eta_zero_forced_single_step():
    spec = DriftChainSpec(eta=0.0, n=1, x0=1)
    mean = drift_absorption_trials(spec, trials=50, rng=RngStream(3))
    assert mean == pytest.approx(1.0)


def test_drift_closed_form_small():
    spec = DriftChainSpec(eta=0.5, n=10, x0=5)
    assert spec.exact_mean_absorption() == pytest.approx(100.0)
    mean = drift_absorption_trials(spec, trials=20000, rng=RngStream(4))
    assert mean == pytest.approx(100.0, rel=0.07)


def test_drift_spec_validation():
    with pytest.raises(ValueError):
        DriftChainSpec(eta=1.0, n=5, x0=2)
    with pytest.raises(ValueError):
        DriftChainSpec(eta=0.5, n=0, x0=2)
    with pytest.raises(ValueError):
        drift_absorption_trials(DriftChainSpec(0.5, 5, 2), trials=0, rng=RngStream(1))


# ---------------------------------------------------------------------------
# Convergence report
# ---------------------------------------------------------------------------

class _Rec:
    def __init__(self, n, converged, iterations):
        self.n = n
        self.converged = converged
        self.iterations = iterations


def test_convergence_report_single_row_no_fit():
    rep = convergence_report([_Rec(8, True, 120)])
    assert len(rep.rows) == 1
    assert rep.loglog_slope is None
    assert "8,1,1,120.0,120.0" in rep.to_csv()


def test_convergence_report_recovers_known_slope():
    records = []
    for n in (8, 16, 32, 64):
        for _ in range(4):
            records.append(_Rec(n, True, 3.0 * n ** 2))
    rep = convergence_report(records)
    assert rep.loglog_slope == pytest.approx(2.0, abs=1e-6)


def test_convergence_report_skips_unconverged_means():
    rep = convergence_report([_Rec(8, False, 10 ** 6), _Rec(8, True, 50)])
    row = rep.rows[0]
    assert row.trials == 2 and row.converged == 1
    assert row.mean_iterations == pytest.approx(50.0)
