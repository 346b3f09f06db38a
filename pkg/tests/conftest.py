"""Shared test fixtures and independent oracles.

The chain enumerator here re-derives the activation rules from scratch as
explicit transition distributions (no RNG, no shared code with the engine);
absorption times computed from it by linear solve are the reference values
the simulator is checked against.
"""

from __future__ import annotations

import numpy as np
import pytest

from swarmphase.graphs import GraphSnapshot
from swarmphase.rng import RngStream

U, A0, AA, AW, AAW, AC = range(6)


def transition_dist(states: tuple, witnesses: frozenset, neighbors: dict,
                    p: float, delta: int) -> list:
    """Exact one-iteration distribution [(prob, next_states)] over joint states.

    Independent re-derivation of the activation rules: uniform agent choice,
    flag reconciliation first, then the per-state dispatch.
    """
    n = len(states)
    out: dict[tuple, float] = {}

    def put(prob, st):
        if prob > 0:
            out[st] = out.get(st, 0.0) + prob

    for u in range(n):
        pu = 1.0 / n
        s = states[u]
        nbrs = sorted(neighbors[u])
        is_wit = u in witnesses
        if is_wit and s not in (AW, AAW):
            nxt = list(states)
            nxt[u] = AW
            put(pu * p, tuple(nxt))
            put(pu * (1 - p), states)
        elif (not is_wit) and s in (AW, AAW):
            nxt = list(states)
            for v in nbrs:
                if nxt[v] != U:
                    nxt[v] = AC
            nxt[u] = U
            put(pu, tuple(nxt))
        elif s == U:
            holders = [v for v in nbrs if states[v] in (AA, AAW)]
            if holders:
                v = min(holders)
                nxt = list(states)
                nxt[v] = A0 if states[v] == AA else AW
                nxt[u] = A0
                put(pu, tuple(nxt))
            else:
                put(pu, states)
        elif s in (AA, AAW):
            d = len(nbrs)
            walk = d / delta
            stay = 1.0 - walk
            put(pu * stay, states)
            if d:
                for v in nbrs:
                    if states[v] in (A0, AW):
                        nxt = list(states)
                        nxt[u] = A0 if s == AA else AW
                        nxt[v] = AA if states[v] == A0 else AAW
                        put(pu * walk / d, tuple(nxt))
                    else:
                        put(pu * walk / d, states)
        elif s == AW:
            nxt = list(states)
            nxt[u] = AAW
            put(pu * p, tuple(nxt))
            put(pu * (1 - p), states)
        elif s == AC:
            nxt = list(states)
            for v in nbrs:
                if nxt[v] != U:
                    nxt[v] = AC
            nxt[u] = U
            put(pu, tuple(nxt))
        else:
            put(pu, states)
    return [(prob, st) for st, prob in out.items()]


def exact_absorption_time(start: tuple, witnesses: frozenset, neighbors: dict,
                          p: float, delta: int, absorbed) -> float:
    """Expected iterations from `start` until `absorbed(states)` first holds."""
    if absorbed(start):
        return 0.0
    index: dict[tuple, int] = {}
    frontier = [start]
    index[start] = 0
    rows = []
    while frontier:
        st = frontier.pop()
        dist = transition_dist(st, witnesses, neighbors, p, delta)
        row = []
        for prob, nxt in dist:
            if absorbed(nxt):
                row.append((prob, None))
                continue
            if nxt not in index:
                index[nxt] = len(index)
                frontier.append(nxt)
            row.append((prob, index[nxt]))
        rows.append((index[st], row))
    m = len(index)
    Q = np.zeros((m, m))
    for i, row in rows:
        for prob, j in row:
            if j is not None:
                Q[i, j] += prob
    t = np.linalg.solve(np.eye(m) - Q, np.ones(m))
    return float(t[0])


def neighbors_of(graph: GraphSnapshot) -> dict:
    return {u: sorted(graph.neighbors_set(u)) for u in range(graph.n)}


def random_connected_graph(n: int, rng: RngStream, extra: int = 0) -> GraphSnapshot:
    return GraphSnapshot.random_connected(n, rng, extra_edges=extra)


def all_aware_tuple(states: tuple) -> bool:
    return all(s != U for s in states)


def all_unaware_tuple(states: tuple) -> bool:
    return all(s == U for s in states)


@pytest.fixture(scope="session")
def warm_kernels():
    from swarmphase import _accel
    _accel.warmup()
    return _accel
