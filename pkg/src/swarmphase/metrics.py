"""Quantities the correctness arguments reason about.

Potential (Aware count plus held-token count), residual components, the
boundary-walk perimeter with its minimum-perimeter normalizer, the dominating
drift chain used for absorption-time bounds, and cross-trial convergence
summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hexgeom
from .errors import StructuralError
from .states import AgentState

AC = int(AgentState.AC)
AW = int(AgentState.AW)
AAW = int(AgentState.AAW)


# Potential ------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialReading:
    phi_a: int    # Aware agents
    phi_at: int   # Aware agents holding an alert token
    phi: int      # phi_a + phi_at


def potential(world) -> PotentialReading:
    states = np.asarray(world.states)
    phi_a = int(np.count_nonzero(states))
    phi_at = int(np.count_nonzero((states == 2) | (states == 4)))
    return PotentialReading(phi_a, phi_at, phi_a + phi_at)


# Components and residuals -----------------------------------------------------

def aware_components(world) -> list[set]:
    """Connected components of the subgraph induced by Aware agents."""
    states = world.states
    seen = [False] * world.n
    comps = []
    for start in range(world.n):
        if states[start] == 0 or seen[start]:
            continue
        comp = {start}
        seen[start] = True
        stack = [start]
        while stack:
            u = stack.pop()
            for v in world.adjacency.neighbors(u):
                v = int(v)
                if states[v] != 0 and not seen[v]:
                    seen[v] = True
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


def residual_components(world) -> list[set]:
    """Aware components containing an all-clear agent or a stale witness flag."""
    states = world.states
    witnesses = world.witnesses
    out = []
    for comp in aware_components(world):
        residual = False
        for u in comp:
            s = states[u]
            if s == AC or ((s == AW or s == AAW) and u not in witnesses):
                residual = True
                break
        if residual:
            out.append(comp)
    return out


def residual_agent_exists(world) -> bool:
    """Cheap equivalent of `residual_components(world) != []`."""
    states = world.states
    for u in range(world.n):
        s = states[u]
        if s == AC or ((s == AW or s == AAW) and u not in world.witnesses):
            return True
    return False


def state_invariant_ok(world) -> bool:
    """Every Aware component contains a flagged or all-clear agent."""
    states = world.states
    for comp in aware_components(world):
        if not any(states[u] in (AW, AAW, AC) for u in comp):
            return False
    return True


# Perimeter -------------------------------------------------------------------

#: Minimum boundary-walk length over all connected k-cell shapes, k = 1..10,
#: frozen from exhaustive enumeration (tests re-derive the same numbers from
#: scratch and cross-check the spiral construction against them).
_PMIN_SMALL = (6, 10, 12, 14, 16, 18, 18, 20, 22, 22)


def p_min(k: int) -> int:
    """Minimum boundary-walk length of a connected k-agent component."""
    if k < 1:
        raise ValueError("component size must be positive")
    if k <= len(_PMIN_SMALL):
        return _PMIN_SMALL[k - 1]
    # Edge-maximal spiral; equals 6k - 2*floor(3k - sqrt(12k-3)).
    return 6 * k - 2 * math.floor(3 * k - math.sqrt(12 * k - 3))


@dataclass(frozen=True)
class PerimeterReading:
    boundary_walk_length: int
    p_min: int
    alpha_ratio: float
    has_hole: bool = False


def perimeter(world, component) -> PerimeterReading:
    """Boundary-walk perimeter of a connected lattice component of agents.

    `world` must expose planar_sites(agents) -> planar axial coordinates with
    the torus unrolled (LatticeWorld does).  Disconnected components are
    rejected naming the split; components with cavities report the outer walk
    only and raise the hole flag (alpha is undefined for them).
    """
    component = list(component)
    if not component:
        raise StructuralError("empty component")
    pieces = world.planar_sites(component)
    if len(pieces) > 1:
        sizes = sorted(len(p) for p in pieces)
        raise StructuralError(
            f"component is disconnected: {len(pieces)} pieces of sizes {sizes}")
    length, hole = hexgeom.outer_boundary(pieces[0])
    pm = p_min(len(component))
    alpha = float("nan") if hole else length / pm
    return PerimeterReading(length, pm, alpha, hole)


# Drift chain ------------------------------------------------------------------

@dataclass(frozen=True)
class DriftChainSpec:
    """Dominating birth-death chain: down 1/n, up eta/n, else hold."""

    eta: float
    n: int
    x0: int

    def __post_init__(self):
        if not (0.0 <= self.eta < 1.0):
            raise ValueError(f"eta must lie in [0,1), got {self.eta}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.x0 < 0:
            raise ValueError(f"x0 must be >= 0, got {self.x0}")

    def exact_mean_absorption(self) -> float:
        """Closed form x0 * n / (1 - eta)."""
        return self.x0 * self.n / (1.0 - self.eta)


def drift_absorption_trials(spec: DriftChainSpec, trials: int, rng) -> float:
    """Empirical mean hitting time of 0 for the dominating chain.

    Vectorized over trials with a numpy generator seeded from the shared
    stream (the chain itself is an analysis harness, not part of any
    replayable trajectory).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gen = np.random.Generator(np.random.PCG64(rng.next_u64()))
    x = np.full(trials, spec.x0, dtype=np.int64)
    t = np.zeros(trials, dtype=np.int64)
    down = 1.0 / spec.n
    up = down + spec.eta / spec.n
    alive = x > 0
    while np.any(alive):
        m = int(np.count_nonzero(alive))
        u = gen.random(m)
        dx = np.where(u < down, -1, np.where(u < up, 1, 0)).astype(np.int64)
        x[alive] += dx
        t[alive] += 1
        alive = x > 0
    return float(t.mean())


# Convergence summaries ---------------------------------------------------------

@dataclass
class ConvergenceRow:
    n: int
    trials: int
    converged: int
    mean_iterations: float
    median_iterations: float


@dataclass
class ConvergenceReport:
    rows: list
    loglog_slope: float | None

    def to_csv(self) -> str:
        lines = ["n,trials,converged,mean_iterations,median_iterations"]
        for r in self.rows:
            lines.append(f"{r.n},{r.trials},{r.converged},{r.mean_iterations},{r.median_iterations}")
        lines.append(f"# loglog_slope,{'' if self.loglog_slope is None else self.loglog_slope}")
        return "\n".join(lines) + "\n"


def convergence_report(records) -> ConvergenceReport:
    """Aggregate per-trial convergence outcomes across a scenario family.

    Records need .n, .converged and .iterations, grouped by n; the fitted
    log-log slope of mean iterations against n is reported when at least two
    sizes contributed converged trials.
    """
    by_n: dict[int, list] = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec)
    rows = []
    for n in sorted(by_n):
        recs = by_n[n]
        done = [r.iterations for r in recs if r.converged]
        rows.append(ConvergenceRow(
            n=n, trials=len(recs), converged=len(done),
            mean_iterations=float(np.mean(done)) if done else float("nan"),
            median_iterations=float(np.median(done)) if done else float("nan")))
    fit_rows = [r for r in rows if r.converged > 0]
    slope = None
    if len(fit_rows) >= 2:
        xs = np.log([r.n for r in fit_rows])
        ys = np.log([r.mean_iterations for r in fit_rows])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return ConvergenceReport(rows, slope)
