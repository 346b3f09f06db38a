"""Graph providers for the engine: snapshots, reconfiguration rules, adversaries.

A reconfiguration rewires the edges incident to a single vertex.  Whether a
rewiring is allowed depends only on the vertex's behavior group: Immobile
agents may not reconfigure at all, Unaware agents are unrestricted, and
Mobile agents must keep their Aware neighborhood locally connected.
Adversaries generate the per-iteration graph sequence from the behavior
group vector alone; they never see token positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ScenarioViolation, StructuralError
from .states import BehaviorGroup


class Adjacency:
    """CSR neighbor lists with ascending ids per row."""

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = n
        self.indptr = indptr
        self.indices = indices

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    def max_degree(self) -> int:
        return int(np.max(np.diff(self.indptr))) if self.n else 0


@dataclass(frozen=True)
class GraphSnapshot:
    """An undirected simple graph on agents 0..n-1."""

    n: int
    edges: frozenset

    def __post_init__(self):
        for (a, b) in self.edges:
            if a == b:
                raise StructuralError(f"self-loop at vertex {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise StructuralError(f"edge ({a},{b}) out of range for n={self.n}")
            if a > b:
                raise StructuralError(f"edge ({a},{b}) must be stored low-high")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "GraphSnapshot":
        return cls(n, frozenset((min(a, b), max(a, b)) for a, b in edges))

    @classmethod
    def path(cls, n: int) -> "GraphSnapshot":
        return cls.from_edges(n, ((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "GraphSnapshot":
        edges = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            edges.append((0, n - 1))
        return cls.from_edges(n, edges)

    @classmethod
    def complete(cls, n: int) -> "GraphSnapshot":
        return cls.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def random_connected(cls, n: int, rng, extra_edges: int = 0) -> "GraphSnapshot":
        """Random spanning tree plus `extra_edges` random chords."""
        edges = set()
        order = list(range(n))
        # Fisher-Yates with the shared stream keeps trials reproducible.
        for i in range(n - 1, 0, -1):
            j = rng.randbelow(i + 1)
            order[i], order[j] = order[j], order[i]
        for i in range(1, n):
            j = order[rng.randbelow(i)]
            a, b = order[i], j
            edges.add((min(a, b), max(a, b)))
        tries = 0
        while len(edges) < n - 1 + extra_edges and tries < 50 * (extra_edges + 1):
            a = rng.randbelow(n)
            b = rng.randbelow(n)
            tries += 1
            if a != b:
                edges.add((min(a, b), max(a, b)))
        return cls(n, frozenset(edges))

    def adjacency(self) -> Adjacency:
        deg = np.zeros(self.n, dtype=np.int64)
        for (a, b) in self.edges:
            deg[a] += 1
            deg[b] += 1
        indptr = np.zeros(self.n + 1, dtype=np.int32)
        np.cumsum(deg, out=indptr[1:])
        indices = np.zeros(len(self.edges) * 2, dtype=np.int32)
        fill = indptr[:-1].copy()
        for (a, b) in sorted(self.edges):
            indices[fill[a]] = b
            fill[a] += 1
            indices[fill[b]] = a
            fill[b] += 1
        for u in range(self.n):
            row = indices[indptr[u]:indptr[u + 1]]
            row.sort()
        return Adjacency(self.n, indptr, indices)

    def degree(self, u: int) -> int:
        return sum(1 for (a, b) in self.edges if a == u or b == u)

    def max_degree(self) -> int:
        deg = [0] * self.n
        for (a, b) in self.edges:
            deg[a] += 1
            deg[b] += 1
        return max(deg) if deg else 0

    def neighbors_set(self, u: int) -> set:
        return {b if a == u else a for (a, b) in self.edges if a == u or b == u}

    def check_degree_bound(self, delta_max: int) -> None:
        d = self.max_degree()
        if d > delta_max:
            raise ScenarioViolation(f"graph max degree {d} exceeds delta_max={delta_max}")


def _paths_within(vertex_set: frozenset, edges: frozenset, a: int, b: int) -> bool:
    """Is b reachable from a inside the induced subgraph on vertex_set?"""
    if a == b:
        return True
    adj = {v: [] for v in vertex_set}
    for (x, y) in edges:
        if x in adj and y in adj:
            adj[x].append(y)
            adj[y].append(x)
    stack, seen = [a], {a}
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w == b:
                return True
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def validate_local_reconfiguration(before: GraphSnapshot, after: GraphSnapshot,
                                   u: int, groups) -> bool:
    """Check one single-vertex rewiring against the movement rules.

    `groups` is the behavior-group vector (indexable by agent id).  Raises
    StructuralError when the diff touches edges not incident to u; otherwise
    returns whether the reconfiguration is valid for u's group.
    """
    if before.n != after.n:
        raise StructuralError("vertex count changed")
    diff = before.edges.symmetric_difference(after.edges)
    for (a, b) in diff:
        if a != u and b != u:
            raise StructuralError(
                f"reconfiguration of vertex {u} also changed edge ({a},{b})")
    if not diff:
        return True  # no-op rewiring is always fine
    g = BehaviorGroup(int(groups[u]))
    if g == BehaviorGroup.IMMOBILE:
        return False
    if g == BehaviorGroup.UNAWARE:
        return True
    # Mobile: local connectivity over the Aware neighborhood in `before`.
    aware = lambda v: int(groups[v]) != int(BehaviorGroup.UNAWARE)
    na = frozenset(v for v in before.neighbors_set(u) if aware(v))
    if not any(aware(v) for v in after.neighbors_set(u)):
        return False
    closed = na | {u}
    for v1 in na:
        for v2 in na:
            if v1 < v2 and _paths_within(closed, before.edges, v1, v2):
                if not _paths_within(closed, after.edges, v1, v2):
                    return False
    return True


# Adversaries ---------------------------------------------------------------

class StaticAdversary:
    """Identity adversary: G_t = G_0 forever."""

    def __init__(self, graph: GraphSnapshot):
        self.graph = graph
        self._adj = graph.adjacency()

    def next_graph(self, groups, rng) -> Adjacency:
        return self._adj

    def current(self) -> GraphSnapshot:
        return self.graph


class ScriptedAdversary:
    """Oblivious adversary reading a pre-determined graph sequence.

    `timeline` maps iteration index to GraphSnapshot; iterations without an
    entry repeat the previous graph.
    """

    def __init__(self, n: int, timeline: dict[int, GraphSnapshot], start: GraphSnapshot | None = None):
        self.n = n
        self.timeline = dict(timeline)
        self.t = 0
        g0 = self.timeline.get(0, start)
        if g0 is None:
            raise ScenarioViolation("scripted sequence needs a graph for t=0 or an explicit start")
        self.graph = g0
        self._adj = g0.adjacency()

    def next_graph(self, groups, rng) -> Adjacency:
        g = self.timeline.get(self.t)
        if g is not None and g is not self.graph:
            self.graph = g
            self._adj = g.adjacency()
        self.t += 1
        return self._adj

    def current(self) -> GraphSnapshot:
        return self.graph


class CustomAdversary:
    """State-carrying adversary defined by a callback.

    fn(state, groups, rng) -> (GraphSnapshot, new_state, micro_steps) where
    micro_steps is a list of (vertex, intermediate GraphSnapshot) describing
    the single-vertex decomposition; with validate=True every micro-step is
    checked and an invalid one aborts the run naming the vertex.
    """

    def __init__(self, fn, state, start: GraphSnapshot, validate: bool = False):
        self.fn = fn
        self.state = state
        self.graph = start
        self._adj = start.adjacency()
        self.validate = validate

    def next_graph(self, groups, rng) -> Adjacency:
        g, self.state, micro = self.fn(self.state, groups, rng)
        if self.validate and micro:
            prev = self.graph
            for (vertex, stage) in micro:
                if not validate_local_reconfiguration(prev, stage, vertex, groups):
                    raise ScenarioViolation(
                        f"adversary emitted an invalid reconfiguration of vertex {vertex}")
                prev = stage
            if prev.edges != g.edges:
                raise StructuralError("micro-steps do not compose to the emitted graph")
        if g is not self.graph:
            self.graph = g
            self._adj = g.adjacency()
        return self._adj

    def current(self) -> GraphSnapshot:
        return self.graph


class LatticeMovementAdversary:
    """Graph source induced by lattice occupancy.

    The foraging loop already owns movement; this adapter exposes the
    resulting adjacency sequence through the adversary interface for code
    that wants to treat the lattice as a reconfigurable graph.
    """

    def __init__(self, lattice):
        self.lattice = lattice

    def current(self) -> GraphSnapshot:
        import numpy as np

        lat = self.lattice
        edges = set()
        for s in np.flatnonzero(lat.grid >= 0):
            a = int(lat.grid[int(s)])
            for nb in lat.nbr[int(s)]:
                b = int(lat.grid[int(nb)])
                if b >= 0 and a < b:
                    edges.add((a, b))
        return GraphSnapshot(lat.n, frozenset(edges))

    def next_graph(self, groups, rng) -> Adjacency:
        return self.current().adjacency()


def load_scripted_sequence(path) -> tuple[int, dict[int, GraphSnapshot]]:
    """Read a scripted-sequence file: one JSON record {"t":..,"edges":[[a,b],..]} per line."""
    timeline = {}
    n = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScenarioViolation(f"{path}:{lineno}: bad record: {exc}") from exc
            edges = [tuple(e) for e in rec["edges"]]
            hi = max((max(e) for e in edges), default=-1) + 1
            n = max(n, hi)
            timeline[int(rec["t"])] = edges
    graphs = {t: GraphSnapshot.from_edges(n, e) for t, e in timeline.items()}
    return n, graphs


# Recurrence instrumentation -------------------------------------------------

@dataclass
class RecurrenceLedger:
    """Batch bookkeeping for how often Unaware agents touch Aware ones.

    A batch runs until (step 1) a movement first places an Unaware agent u
    next to an Aware agent v, and then (step 2) a later movement selects u or
    v again; the iteration in which step 2 lands closes the batch.  D_k is
    the batch length in iterations, C_k the total of per-iteration active
    counts inside it (an Unaware agent is active while adjacent to an Aware
    agent).
    """

    batches: list = field(default_factory=list)   # (D_k, C_k)
    open_duration: int = 0
    open_active: int = 0
    _phase: int = 1
    _pair: tuple | None = None
    _close_pending: bool = False

    def note_contact(self, u: int, v: int) -> None:
        if self._phase == 1:
            self._pair = (u, v)
            self._phase = 2

    def note_selection(self, agent: int) -> None:
        if self._phase == 2 and self._pair is not None and agent in self._pair:
            self._close_pending = True

    def record_iteration(self, active_count: int) -> None:
        self.open_duration += 1
        self.open_active += int(active_count)
        if self._close_pending:
            self.batches.append((self.open_duration, self.open_active))
            self.open_duration = 0
            self.open_active = 0
            self._phase = 1
            self._pair = None
            self._close_pending = False

    def estimates(self, n: int) -> tuple[float, float]:
        """(mean D_k, mean (1-1/n)^{C_k}) over closed batches."""
        if not self.batches:
            return float("nan"), float("nan")
        ds = np.array([d for d, _ in self.batches], dtype=float)
        cs = np.array([c for _, c in self.batches], dtype=float)
        return float(ds.mean()), float(np.mean((1.0 - 1.0 / n) ** cs))

    def table(self) -> np.ndarray:
        """Columnar (k, D_k, C_k)."""
        return np.array([(k + 1, d, c) for k, (d, c) in enumerate(self.batches)],
                        dtype=np.int64).reshape(-1, 3)


def active_agents(world) -> list[int]:
    """Unaware agents currently adjacent to at least one Aware agent."""
    out = []
    states = world.states
    for u in range(world.n):
        if states[u] == 0:
            for v in world.adjacency.neighbors(u):
                if states[v] != 0:
                    out.append(u)
                    break
    return out


def record_recurrence(ledger: RecurrenceLedger, world) -> RecurrenceLedger:
    """Per-iteration hook: counts active agents and closes a due batch."""
    ledger.record_iteration(len(active_agents(world)))
    return ledger
