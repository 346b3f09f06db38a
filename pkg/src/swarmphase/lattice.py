"""Foraging world: periodic triangular lattice, biased compression moves,
and the exclusion-walk search process.

Agents occupy distinct sites of a side x side patch of the triangular
lattice with both axial axes wrapped modulo the side.  A witness is simply
an agent standing on a food site; that fact is re-derived from the occupancy
at every activation, never cached.  Movement follows the half/half split:
a state update of the token-passing protocol, or a move -- the biased
compression step for Mobile agents, the plain exclusion walk for Unaware
ones, and nothing at all for witnesses and flagged/all-clear agents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import hexgeom
from .engine import World, activate
from .errors import ScenarioViolation, StructuralError
from .states import STATE_TAGS, AgentState, ProtocolParams

U = int(AgentState.U)
A0 = int(AgentState.A0)
AA = int(AgentState.AA)
AW = int(AgentState.AW)
AAW = int(AgentState.AAW)
AC = int(AgentState.AC)


def neighbor_table(side: int) -> np.ndarray:
    """site x 6 torus neighbor sites, direction order as in hexgeom.DIRECTIONS."""
    if side < 3:
        raise ScenarioViolation(f"side must be >= 3 for six distinct neighbors, got {side}")
    tbl = np.empty((side * side, 6), dtype=np.int32)
    for q in range(side):
        for r in range(side):
            s = q * side + r
            for d, (dq, dr) in enumerate(hexgeom.DIRECTIONS):
                tbl[s, d] = ((q + dq) % side) * side + ((r + dr) % side)
    return tbl


@dataclass
class MoveProposal:
    agent: int
    frm: tuple          # axial (q, r)
    to: tuple           # axial (q, r)
    direction: int      # 0..5


@dataclass
class FoodEvent:
    iteration: int
    action: str                 # "place" | "remove" | "shift"
    site: tuple                 # axial (q, r)
    to: tuple | None = None     # for "shift"

    def __repr__(self):
        tail = f"->{self.to}" if self.action == "shift" else ""
        return f"FoodEvent(t={self.iteration}, {self.action} {self.site}{tail})"


class LatticeWorld:
    """Occupancy + food on the periodic lattice (geometry only; states live
    in the paired engine World)."""

    def __init__(self, side: int, n: int, params: ProtocolParams, lam: float = 4.0):
        self.side = side
        self.n = n
        if n > side * side:
            raise ScenarioViolation(f"{n} agents cannot occupy a lattice of {side * side} sites")
        self.params = params
        self.nbr = neighbor_table(side)
        self.grid = np.full(side * side, -1, dtype=np.int32)
        self.pos = np.full(n, -1, dtype=np.int32)
        self.food = np.zeros(side * side, dtype=np.uint8)
        self.lam = lam  # builds the acceptance table

    @property
    def lam(self) -> float:
        return self._lam

    @lam.setter
    def lam(self, value: float) -> None:
        if value <= 0:
            raise ScenarioViolation(f"lambda must be positive, got {value}")
        self._lam = float(value)
        # One shared acceptance table lambda^(d'-d) for d'-d in [-6, 6]; the
        # interpreted and compiled paths index the same doubles so their
        # accept/reject decisions agree bit for bit.
        self.lam_pow = np.array([self._lam ** k for k in range(-6, 7)], dtype=np.float64)

    # -- coordinates ---------------------------------------------------------

    def site_of(self, coord) -> int:
        q, r = coord
        return (q % self.side) * self.side + (r % self.side)

    def coord_of(self, site: int) -> tuple:
        return (site // self.side, site % self.side)

    # -- population ----------------------------------------------------------

    def place_agents_random(self, rng) -> None:
        """Uniform placement on distinct sites (partial Fisher-Yates)."""
        sites = np.arange(self.side * self.side, dtype=np.int32)
        for i in range(self.n):
            j = i + rng.randbelow(len(sites) - i)
            sites[i], sites[j] = sites[j], sites[i]
            self.pos[i] = sites[i]
            self.grid[sites[i]] = i
        self._check_population()

    def place_agents_blob(self, center=None) -> None:
        """Compressed start: a spiral blob, for dispersion experiments."""
        if center is None:
            center = (self.side // 2, self.side // 2)
        for i, cell in enumerate(hexgeom.spiral(self.n)):
            site = self.site_of((center[0] + cell[0], center[1] + cell[1]))
            if self.grid[site] != -1:
                raise ScenarioViolation("blob start wraps onto itself; lattice too small")
            self.pos[i] = site
            self.grid[site] = i
        self._check_population()

    def place_agents_at(self, coords: Iterable[tuple]) -> None:
        for i, c in enumerate(coords):
            site = self.site_of(c)
            if self.grid[site] != -1:
                raise ScenarioViolation(f"two agents on site {c}")
            self.pos[i] = site
            self.grid[site] = i
        self._check_population()

    def _check_population(self):
        if np.count_nonzero(self.grid >= 0) != self.n:
            raise ScenarioViolation("occupancy is not injective")

    # -- food and witnesses ----------------------------------------------------

    @property
    def food_sites(self) -> set:
        return {self.coord_of(int(s)) for s in np.flatnonzero(self.food)}

    def current_witnesses(self) -> set:
        out = set()
        for s in np.flatnonzero(self.food):
            a = int(self.grid[s])
            if a >= 0:
                out.add(a)
        return out

    def is_witness(self, agent: int) -> bool:
        return bool(self.food[self.pos[agent]])

    # -- engine adjacency view ---------------------------------------------------

    def agent_neighbors(self, u: int) -> list:
        """Agents on the six sites around u, ascending by id."""
        out = []
        for s in self.nbr[self.pos[u]]:
            a = int(self.grid[s])
            if a >= 0:
                out.append(a)
        out.sort()
        return out

    def adjacency_view(self) -> "LatticeAdjacency":
        return LatticeAdjacency(self)

    # -- planar unrolling (for perimeter / oracle handoff) -------------------------

    def planar_sites(self, agents) -> list:
        """Planar embeddings of the given agents, one coordinate set per
        torus-connected piece.  Raises if a piece wraps around the torus."""
        remaining = {int(a) for a in agents}
        pieces = []
        while remaining:
            seed = min(remaining)
            start_site = int(self.pos[seed])
            planar = {start_site: self.coord_of(start_site)}
            stack = [start_site]
            remaining.discard(seed)
            agent_sites = {int(self.pos[a]) for a in remaining} | {start_site}
            while stack:
                s = stack.pop()
                pq, pr = planar[s]
                for d, nb in enumerate(self.nbr[s]):
                    nb = int(nb)
                    if nb not in agent_sites:
                        continue
                    dq, dr = hexgeom.DIRECTIONS[d]
                    cand = (pq + dq, pr + dr)
                    if nb in planar:
                        if planar[nb] != cand:
                            raise StructuralError("component wraps around the torus")
                    else:
                        planar[nb] = cand
                        a = int(self.grid[nb])
                        remaining.discard(a)
                        stack.append(nb)
            pieces.append(set(planar.values()))
        return pieces


class LatticeAdjacency:
    """Engine-facing neighbor view over the occupancy grid."""

    def __init__(self, lattice: LatticeWorld):
        self.lattice = lattice
        self.n = lattice.n

    def neighbors(self, u: int):
        return self.lattice.agent_neighbors(u)

    def degree(self, u: int) -> int:
        return len(self.lattice.agent_neighbors(u))


def foraging_world(lattice: LatticeWorld, witnesses=None) -> World:
    """Engine world paired with a lattice (states all Unaware)."""
    w = World.all_unaware(lattice.adjacency_view(), lattice.params)
    w.witnesses = set(witnesses) if witnesses is not None else lattice.current_witnesses()
    return w


# -- compression moves ------------------------------------------------------------

def _aware_neighbor_sites(lattice, states, site: int, exclude_site: int) -> set:
    """Sites adjacent to `site` holding an Aware agent, minus `exclude_site`."""
    out = set()
    for s in lattice.nbr[site]:
        s = int(s)
        if s == exclude_site:
            continue
        a = int(lattice.grid[s])
        if a >= 0 and (states is None or states[a] != U):
            out.add(s)
    return out


def _connected_within(lattice, sites: set) -> bool:
    if len(sites) <= 1:
        return True
    start = next(iter(sites))
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        for nb in lattice.nbr[s]:
            nb = int(nb)
            if nb in sites and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(sites)


def _reachable_from(lattice, sources: set, allowed: set) -> set:
    seen = set(sources)
    stack = list(sources)
    while stack:
        s = stack.pop()
        for nb in lattice.nbr[s]:
            nb = int(nb)
            if nb in allowed and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen


def compression_move_ok(lattice: LatticeWorld, states, l: int, lp: int) -> bool:
    """Movement rule on raw site indices; states=None treats every occupant
    as Aware (the planner/verifier setting)."""
    na_l = _aware_neighbor_sites(lattice, states, l, exclude_site=lp)
    if len(na_l) >= 5:
        return False
    na_lp = _aware_neighbor_sites(lattice, states, lp, exclude_site=l)
    inter = na_l & na_lp
    if inter:
        union = na_l | na_lp
        return _reachable_from(lattice, inter, union) == union
    if not na_l or not na_lp:
        return False
    return _connected_within(lattice, na_l) and _connected_within(lattice, na_lp)


def is_valid_compression_move(lattice: LatticeWorld, proposal: MoveProposal,
                              states=None) -> bool:
    """Check a proposed slide of one agent to an adjacent empty site."""
    l = lattice.site_of(proposal.frm)
    lp = lattice.site_of(proposal.to)
    if lp not in set(int(s) for s in lattice.nbr[l]):
        raise StructuralError(f"sites {proposal.frm} and {proposal.to} are not adjacent")
    if int(lattice.grid[l]) != proposal.agent:
        raise StructuralError(f"agent {proposal.agent} does not occupy {proposal.frm}")
    if lattice.grid[lp] != -1:
        return False
    return compression_move_ok(lattice, states, l, lp)


def execute_gather(lattice: LatticeWorld, states, agent: int, rng):
    """One biased compression attempt; returns the accepted MoveProposal or None.

    Direction uniform over the six; if the slide is a valid compression move
    it is accepted with probability min{1, lambda^(d' - d)} where d and d'
    count Aware neighbors at the origin and target sites (the local form of
    the global edge-count difference).
    """
    d = rng.randbelow(6)
    l = int(lattice.pos[agent])
    lp = int(lattice.nbr[l, d])
    if lattice.grid[lp] != -1:
        return None
    if not compression_move_ok(lattice, states, l, lp):
        return None
    deg_l = len(_aware_neighbor_sites(lattice, states, l, exclude_site=lp))
    deg_lp = len(_aware_neighbor_sites(lattice, states, lp, exclude_site=l))
    accept = rng.random() <= lattice.lam_pow[deg_lp - deg_l + 6]
    if not accept:
        return None
    lattice.grid[l] = -1
    lattice.grid[lp] = agent
    lattice.pos[agent] = lp
    return MoveProposal(agent, lattice.coord_of(l), lattice.coord_of(lp), d)


def execute_search(lattice: LatticeWorld, agent: int, rng):
    """Exclusion-walk step: uniform direction, move iff the target is free."""
    d = rng.randbelow(6)
    l = int(lattice.pos[agent])
    lp = int(lattice.nbr[l, d])
    if lattice.grid[lp] != -1:
        return None
    lattice.grid[l] = -1
    lattice.grid[lp] = agent
    lattice.pos[agent] = lp
    return MoveProposal(agent, lattice.coord_of(l), lattice.coord_of(lp), d)


def foraging_step(lattice: LatticeWorld, world: World, rng,
                  ledger=None, move_log: list | None = None):
    """One iteration of the combined protocol.

    Half the time the activated agent runs its token-passing action against
    the current lattice adjacency; otherwise it attempts a move according to
    its behavior group, with witnesses pinned regardless of state.  Witness
    membership is re-derived from food/occupancy at the activation itself.
    """
    u = rng.randbelow(world.n)
    is_wit = lattice.is_witness(u)
    coin = rng.random()
    if coin <= 0.5:
        activate(world.states, u, lattice.agent_neighbors(u), is_wit,
                 world.params, rng)
    else:
        s = int(world.states[u])
        if is_wit or s == AW or s == AAW or s == AC:
            pass  # immobile
        elif s == A0 or s == AA:
            if ledger is not None:
                ledger.note_selection(u)
            moved = execute_gather(lattice, world.states, u, rng)
            if moved is not None:
                if move_log is not None:
                    move_log.append(moved)
                if ledger is not None:
                    _note_contacts(lattice, world.states, u, ledger)
        else:
            if ledger is not None:
                ledger.note_selection(u)
            moved = execute_search(lattice, u, rng)
            if moved is not None and ledger is not None:
                _note_contacts(lattice, world.states, u, ledger)
    world.iteration += 1
    world.witnesses = lattice.current_witnesses()
    if ledger is not None:
        ledger.record_iteration(_active_count(lattice, world.states))
    return lattice, world


def _note_contacts(lattice, states, mover: int, ledger):
    """After a move, report any fresh Unaware/Aware adjacency involving the mover."""
    mover_aware = states[mover] != U
    for a in lattice.agent_neighbors(mover):
        if mover_aware and states[a] == U:
            ledger.note_contact(a, mover)
            return
        if (not mover_aware) and states[a] != U:
            ledger.note_contact(mover, a)
            return


def _active_count(lattice, states) -> int:
    count = 0
    for u in range(lattice.n):
        if states[u] != U:
            continue
        for s in lattice.nbr[lattice.pos[u]]:
            a = int(lattice.grid[s])
            if a >= 0 and states[a] != U:
                count += 1
                break
    return count


# -- food events ---------------------------------------------------------------

def apply_food_event(lattice: LatticeWorld, event: FoodEvent) -> LatticeWorld:
    """Apply one stimulus event; witness recomputation happens lazily at the
    next activation's isWitness evaluation."""
    if event.action == "place":
        site = lattice.site_of(event.site)
        if not lattice.food[site] and int(lattice.food.sum()) + 1 > lattice.params.w:
            raise ScenarioViolation(f"{event!r} exceeds w={lattice.params.w} concurrent stimuli")
        lattice.food[site] = 1
    elif event.action == "remove":
        site = lattice.site_of(event.site)
        if not lattice.food[site]:
            raise ScenarioViolation(f"{event!r} removes food that is not there")
        lattice.food[site] = 0
    elif event.action == "shift":
        src = lattice.site_of(event.site)
        dst = lattice.site_of(event.to)
        if not lattice.food[src]:
            raise ScenarioViolation(f"{event!r} shifts food that is not there")
        lattice.food[src] = 0
        lattice.food[dst] = 1
    else:
        raise ScenarioViolation(f"unknown food action {event.action!r}")
    return lattice


# -- snapshots -------------------------------------------------------------------

def snapshot(lattice: LatticeWorld, states, tick: int) -> dict:
    agents = []
    for i in range(lattice.n):
        q, r = lattice.coord_of(int(lattice.pos[i]))
        agents.append({"id": i, "q": q, "r": r, "state": STATE_TAGS[int(states[i])]})
    food = [{"q": q, "r": r} for (q, r) in sorted(lattice.food_sites)]
    return {"side": lattice.side, "agents": agents, "food": food,
            "lambda": lattice.lam, "tick": tick}


def snapshot_json(snap: dict) -> str:
    """Canonical byte-stable serialization shared by file dumps and the wire."""
    return json.dumps(snap, separators=(",", ":"), sort_keys=False)
