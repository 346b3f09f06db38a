"""Random-sequential execution of the token-passing awareness protocol.

One iteration activates a single uniformly chosen agent and applies its
action: witness flag reconciliation first (that branch preempts everything),
then the per-state dispatch -- token pickup by Unaware agents, the
degree-normalized token walk, token generation at witnesses, and the
all-clear broadcast.  Only the activated agent's own neighborhood is ever
mutated, which is what the sequential scheduler buys us.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ScenarioViolation
from .states import AgentState, ProtocolParams

U = int(AgentState.U)
A0 = int(AgentState.A0)
AA = int(AgentState.AA)
AW = int(AgentState.AW)
AAW = int(AgentState.AAW)
AC = int(AgentState.AC)


@dataclass
class WitnessEvent:
    iteration: int
    add: bool          # True: stimulus appears at agent; False: it disappears
    agent: int

    def __repr__(self):
        verb = "add" if self.add else "remove"
        return f"WitnessEvent(t={self.iteration}, {verb} agent {self.agent})"


class WitnessSchedule:
    """Sorted witness events with a cursor; applied ahead of each activation."""

    def __init__(self, events: Iterable[WitnessEvent] = ()):
        self.events = sorted(events, key=lambda e: e.iteration)
        self._cursor = 0

    def reset(self):
        self._cursor = 0

    def due(self, iteration: int) -> list[WitnessEvent]:
        out = []
        while self._cursor < len(self.events) and self.events[self._cursor].iteration <= iteration:
            out.append(self.events[self._cursor])
            self._cursor += 1
        return out

    def max_concurrent(self, initial: set[int] | None = None) -> int:
        """Peak stimulus count if the schedule runs from `initial`."""
        current = set(initial or ())
        peak = len(current)
        for ev in self.events:
            if ev.add:
                current.add(ev.agent)
            else:
                current.discard(ev.agent)
            peak = max(peak, len(current))
        return peak


@dataclass
class World:
    """One configuration: states + witness set + the iteration's adjacency view.

    `adjacency` is any object with neighbors(u) -> sequence of agent ids in
    ascending id order and degree(u) -> int; graph mode hands in a
    GraphSnapshot adjacency, lattice mode a view over the occupancy grid.
    `graph_source`, when set, supplies the next iteration's graph before each
    activation (the reconfiguration adversary).
    """

    n: int
    states: np.ndarray
    adjacency: object
    params: ProtocolParams
    witnesses: set = field(default_factory=set)
    iteration: int = 0
    graph_source: object | None = None
    schedule: WitnessSchedule | None = None

    @classmethod
    def all_unaware(cls, adjacency, params: ProtocolParams, witnesses=(),
                    graph_source=None, schedule=None) -> "World":
        n = adjacency.n
        return cls(n=n, states=np.zeros(n, dtype=np.int8), adjacency=adjacency,
                   params=params, witnesses=set(witnesses),
                   graph_source=graph_source, schedule=schedule)

    def behavior_groups(self) -> np.ndarray:
        """sigma-hat: the group vector the reconfiguration adversary may read."""
        lut = np.array([0, 1, 1, 2, 2, 2], dtype=np.int8)
        return lut[self.states]

    def aware_count(self) -> int:
        return int(np.count_nonzero(self.states))

    def all_aware(self) -> bool:
        return self.aware_count() == self.n

    def all_unaware_now(self) -> bool:
        return self.aware_count() == 0

    def copy(self) -> "World":
        return World(n=self.n, states=self.states.copy(), adjacency=self.adjacency,
                     params=self.params, witnesses=set(self.witnesses),
                     iteration=self.iteration, graph_source=self.graph_source,
                     schedule=self.schedule)


def activate(states, u: int, neighbors: Sequence[int], is_witness: bool,
             params: ProtocolParams, rng, changed: list | None = None):
    """Run one activation of agent u against an explicit neighbor list.

    `neighbors` must be in ascending agent-id order: the Unaware branch
    consumes from the lowest-id token holder (the tie-break rule), and the
    walk's neighbor draw indexes into this list.
    """
    s = int(states[u])
    p = params.p

    def set_state(a, new):
        old = int(states[a])
        if old != new:
            states[a] = new
            if changed is not None:
                changed.append((a, old, new))

    if is_witness and s != AW and s != AAW:
        # Stimulus present but flag unset: adopt the witness flag with prob p.
        # Any token the agent held is overwritten along with the rest of its state.
        if rng.random() < p:
            set_state(u, AW)
    elif (not is_witness) and (s == AW or s == AAW):
        # Stimulus gone: clear out.  Every Aware neighbor gets the all-clear,
        # overriding whatever token it held; u itself drops to Unaware.
        for v in neighbors:
            if states[v] != U:
                set_state(v, AC)
        set_state(u, U)
    elif s == U:
        best = -1
        for v in neighbors:
            sv = states[v]
            if sv == AA or sv == AAW:
                best = v
                break  # neighbors ascend by id, so the first hit is the lowest
        if best >= 0:
            set_state(best, int(states[best]) - 1)  # AA->A0, AAW->AW
            set_state(u, A0)
    elif s == AA or s == AAW:
        # Token walk, normalized by the degree bound: step with prob d/Delta,
        # otherwise the token stays put this activation.
        x = rng.random()
        d = len(neighbors)
        if d > 0 and x <= d / params.delta_max:
            v = neighbors[rng.randbelow(d)]
            sv = int(states[v])
            if sv == A0 or sv == AW:
                set_state(u, s - 1)
                set_state(v, sv + 1)
    elif s == AW:
        if rng.random() < p:
            set_state(u, AAW)
    elif s == AC:
        for v in neighbors:
            if states[v] != U:
                set_state(v, AC)
        set_state(u, U)
    # s == A0: no enabled transition.
    return changed


def apply_witness_schedule(world: World, events: Iterable[WitnessEvent]) -> World:
    """Apply stimulus arrivals/departures to the witness set.

    Membership changes immediately; the agent's *flag* only changes later,
    through the flag-reconciliation branch of its own activation.
    """
    for ev in events:
        if ev.add:
            world.witnesses.add(ev.agent)
            if len(world.witnesses) > world.params.w:
                raise ScenarioViolation(
                    f"{ev!r} raises concurrent stimuli to {len(world.witnesses)} > w={world.params.w}")
        else:
            world.witnesses.discard(ev.agent)
    return world


def step(world: World, rng, changed: list | None = None) -> World:
    """Advance the world by one iteration (graph update, due events, activation)."""
    if len(world.witnesses) > world.params.w:
        raise ScenarioViolation(
            f"witness set has {len(world.witnesses)} members but w={world.params.w}")
    if world.graph_source is not None:
        world.adjacency = world.graph_source.next_graph(world.behavior_groups(), rng)
    if world.schedule is not None:
        due = world.schedule.due(world.iteration)
        if due:
            apply_witness_schedule(world, due)
    u = rng.randbelow(world.n)
    activate(world.states, u, world.adjacency.neighbors(u),
             u in world.witnesses, world.params, rng, changed)
    world.iteration += 1
    return world


def run_until(world: World, rng, predicate: Callable[[World], bool],
              max_iters: int) -> tuple[World, int, bool]:
    """Step until `predicate` holds or `max_iters` iterations elapse.

    The predicate is evaluated before the first step, so an already-satisfied
    condition reports zero iterations used.
    """
    if max_iters <= 0:
        raise ValueError("max_iters must be positive")
    start = world.iteration
    if predicate(world):
        return world, 0, True
    while world.iteration - start < max_iters:
        step(world, rng)
        if predicate(world):
            return world, world.iteration - start, True
    return world, max_iters, False


# Common stop predicates ----------------------------------------------------

def all_aware(world: World) -> bool:
    return world.all_aware()


def all_unaware(world: World) -> bool:
    return world.all_unaware_now()
