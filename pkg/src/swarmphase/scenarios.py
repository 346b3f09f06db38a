"""Scenario documents and the batch trial runner.

A scenario is a JSON document selecting graph or lattice mode, a topology,
protocol constants, a timed stimulus schedule, and a stop rule.  Trials run
with per-trial derived seeds; sampling is strided but the stopping iteration
is always recorded exactly.  The hot loops run in the compiled kernels,
chunked at event and sampling boundaries, which leaves the draw sequence
identical to an unchunked run.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .engine import WitnessEvent, WitnessSchedule, World, all_aware, all_unaware, step
from .errors import ScenarioViolation
from .graphs import GraphSnapshot, ScriptedAdversary, StaticAdversary, load_scripted_sequence
from .lattice import (FoodEvent, LatticeWorld, apply_food_event, foraging_step,
                      foraging_world, snapshot, snapshot_json)
from .rng import RngStream, trial_seed
from .states import STATE_FROM_TAG, ProtocolParams

STOP_PREDICATES = ("all_aware", "all_unaware", "none")
_STOP_CODES = {"all_aware": 1, "all_unaware": 2, "none": 0}


@dataclass
class MetricSample:
    iteration: int
    phi_a: int
    phi_at: int
    phi: int
    residuals: int
    aware_frac: float
    perimeter: Optional[int] = None
    alpha: Optional[float] = None


@dataclass
class TrialRecord:
    trial: int
    seed: int
    n: int
    mode: str
    converged: bool
    iterations: int
    samples: list = field(default_factory=list)
    final_snapshot: Optional[dict] = None


@dataclass
class Scenario:
    mode: str
    n: int
    params: ProtocolParams
    stop_predicate: str
    max_iters: int
    trials: int
    seed: int
    metric_stride: int
    # lattice mode
    side: Optional[int] = None
    lam: float = 4.0
    init: object = "random"
    food_schedule: list = field(default_factory=list)
    # graph mode
    graph: Optional[GraphSnapshot] = None
    scripted: Optional[dict] = None
    init_states: object = "unaware"
    witness_schedule: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


def _err(path: str, msg: str) -> ScenarioViolation:
    return ScenarioViolation(f"scenario field '{path}': {msg}")


def _take(d: dict, path: str, key: str, required=False, default=None):
    if key in d:
        return d.pop(key)
    if required:
        raise _err(f"{path}.{key}" if path else key, "missing required field")
    return default


def parse_scenario(text: str, base_dir: str = ".") -> Scenario:
    """Parse and fully validate a scenario document.

    Syntax errors carry the parser's line/column; semantic errors name the
    offending field or schedule entry.  Unknown fields are rejected.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioViolation(
            f"scenario is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ScenarioViolation("scenario document must be a JSON object")
    raw = json.loads(text)
    doc = dict(doc)

    mode = _take(doc, "", "mode", required=True)
    if mode not in ("graph", "lattice"):
        raise _err("mode", f"must be 'graph' or 'lattice', got {mode!r}")

    seed = int(_take(doc, "", "seed", default=0))
    trials = int(_take(doc, "", "trials", default=1))
    if trials < 0:
        raise _err("trials", "must be >= 0")

    pdoc = _take(doc, "", "params", default={}) or {}
    if not isinstance(pdoc, dict):
        raise _err("params", "must be an object")
    pdoc = dict(pdoc)
    w = int(_take(pdoc, "params", "w", default=1))
    p = _take(pdoc, "params", "p", default=None)
    delta_default = 6 if mode == "lattice" else 0  # graph default filled below
    delta = _take(pdoc, "params", "delta_max", default=delta_default)
    if pdoc:
        raise _err(f"params.{next(iter(pdoc))}", "unknown field")

    sdoc = _take(doc, "", "stop", default={"predicate": "none", "max_iters": 10000}) or {}
    sdoc = dict(sdoc)
    predicate = _take(sdoc, "stop", "predicate", default="none")
    if predicate not in STOP_PREDICATES:
        raise _err("stop.predicate", f"must be one of {STOP_PREDICATES}")
    max_iters = int(_take(sdoc, "stop", "max_iters", required=True))
    if max_iters <= 0:
        raise _err("stop.max_iters", "must be positive")
    if sdoc:
        raise _err(f"stop.{next(iter(sdoc))}", "unknown field")

    stride = _take(doc, "", "metric_stride", default=None)

    scenario_kwargs = dict(mode=mode, seed=seed, trials=trials,
                           stop_predicate=predicate, max_iters=max_iters, raw=raw)

    if mode == "lattice":
        side = int(_take(doc, "", "side", required=True))
        n = int(_take(doc, "", "agents", required=True))
        if n > side * side:
            raise _err("agents", f"{n} agents exceed {side * side} sites")
        lam = float(_take(doc, "", "lambda", default=4.0))
        init = _take(doc, "", "init", default="random")
        if isinstance(init, list):
            init = [tuple(c) for c in init]
            if len(init) != n:
                raise _err("init", f"expected {n} coordinates, got {len(init)}")
        elif init not in ("random", "blob"):
            raise _err("init", "must be 'random', 'blob' or a coordinate list")
        schedule_doc = _take(doc, "", "schedule", default=[]) or []
        events = []
        for i, ev in enumerate(schedule_doc):
            ev = dict(ev)
            t = int(_take(ev, f"schedule[{i}]", "t", required=True))
            action = _take(ev, f"schedule[{i}]", "action", required=True)
            if action in ("place", "remove"):
                site = tuple(_take(ev, f"schedule[{i}]", "site", required=True))
                events.append(FoodEvent(t, action, site))
            elif action == "shift":
                site = tuple(_take(ev, f"schedule[{i}]", "site", required=True))
                to = tuple(_take(ev, f"schedule[{i}]", "to", required=True))
                events.append(FoodEvent(t, action, site, to))
            elif action == "set_lambda":
                value = float(_take(ev, f"schedule[{i}]", "value", required=True))
                events.append(("set_lambda", t, value))
            else:
                raise _err(f"schedule[{i}].action", f"unknown action {action!r}")
            if ev:
                raise _err(f"schedule[{i}].{next(iter(ev))}", "unknown field")
        _check_food_bound(events, w)
        params = ProtocolParams(w=w, p=p, delta_max=int(delta))
        scenario_kwargs.update(side=side, n=n, lam=lam, init=init,
                               food_schedule=sorted(events, key=_event_time),
                               params=params)
    else:
        gdoc = _take(doc, "", "graph", required=True)
        gdoc = dict(gdoc)
        kind = _take(gdoc, "graph", "kind", required=True)
        scripted = None
        if kind == "path":
            n = int(_take(gdoc, "graph", "n", required=True))
            graph = GraphSnapshot.path(n)
        elif kind == "cycle":
            n = int(_take(gdoc, "graph", "n", required=True))
            graph = GraphSnapshot.cycle(n)
        elif kind == "complete":
            n = int(_take(gdoc, "graph", "n", required=True))
            graph = GraphSnapshot.complete(n)
        elif kind == "edges":
            n = int(_take(gdoc, "graph", "n", required=True))
            edges = _take(gdoc, "graph", "edges", required=True)
            graph = GraphSnapshot.from_edges(n, [tuple(e) for e in edges])
        elif kind == "scripted":
            fname = _take(gdoc, "graph", "file", required=True)
            path = os.path.join(base_dir, fname)
            if not os.path.exists(path):
                raise ScenarioViolation(f"scripted graph file not found: {path}")
            n, timeline = load_scripted_sequence(path)
            graph = timeline.get(0)
            scripted = timeline
        else:
            raise _err("graph.kind", f"unknown kind {kind!r}")
        if gdoc:
            raise _err(f"graph.{next(iter(gdoc))}", "unknown field")
        if delta == 0:
            degrees = [graph.max_degree()]
            if scripted is not None:
                degrees.extend(g.max_degree() for g in scripted.values())
            delta = max(max(degrees), 1)
        params = ProtocolParams(w=w, p=p, delta_max=int(delta))
        graph.check_degree_bound(params.delta_max)
        if scripted is not None:
            for t, g in scripted.items():
                g.check_degree_bound(params.delta_max)

        init_states = _take(doc, "", "init_states", default="unaware")
        if isinstance(init_states, list):
            if len(init_states) != n:
                raise _err("init_states", f"expected {n} tags, got {len(init_states)}")
            for i, tag in enumerate(init_states):
                if tag not in STATE_FROM_TAG:
                    raise _err(f"init_states[{i}]", f"unknown state tag {tag!r}")
        elif init_states not in ("unaware", "aware_flagged"):
            raise _err("init_states", "must be 'unaware', 'aware_flagged' or a tag list")

        schedule_doc = _take(doc, "", "schedule", default=[]) or []
        events = []
        for i, ev in enumerate(schedule_doc):
            ev = dict(ev)
            t = int(_take(ev, f"schedule[{i}]", "t", required=True))
            action = _take(ev, f"schedule[{i}]", "action", required=True)
            agent = int(_take(ev, f"schedule[{i}]", "agent", required=True))
            if action not in ("add", "remove"):
                raise _err(f"schedule[{i}].action", f"unknown action {action!r}")
            if not (0 <= agent < n):
                raise _err(f"schedule[{i}].agent", f"agent {agent} out of range")
            events.append(WitnessEvent(t, action == "add", agent))
            if ev:
                raise _err(f"schedule[{i}].{next(iter(ev))}", "unknown field")
        peak = WitnessSchedule(events).max_concurrent()
        if peak > w:
            raise ScenarioViolation(
                f"witness schedule reaches {peak} concurrent stimuli > w={w}")
        scenario_kwargs.update(n=n, graph=graph, scripted=scripted,
                               init_states=init_states,
                               witness_schedule=sorted(events, key=lambda e: e.iteration),
                               params=params)

    if doc:
        raise _err(next(iter(doc)), "unknown field")

    n = scenario_kwargs["n"]
    if stride is None:
        stride = 1 if n <= 64 else 64
    stride = int(stride)
    if stride < 1:
        raise _err("metric_stride", "must be >= 1")
    scenario_kwargs["metric_stride"] = stride
    return Scenario(**scenario_kwargs)


def _event_time(ev):
    return ev[1] if isinstance(ev, tuple) else ev.iteration


def _check_food_bound(events, w: int):
    current: set = set()
    for ev in sorted(events, key=_event_time):
        if isinstance(ev, tuple):
            continue
        if ev.action == "place":
            current.add(ev.site)
            if len(current) > w:
                raise ScenarioViolation(f"{ev!r} raises concurrent stimuli above w={w}")
        elif ev.action == "remove":
            current.discard(ev.site)
        elif ev.action == "shift":
            current.discard(ev.site)
            current.add(ev.to)
            if len(current) > w:
                raise ScenarioViolation(f"{ev!r} raises concurrent stimuli above w={w}")


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Trial runners
# ---------------------------------------------------------------------------

def _witness_component(world) -> set:
    """Aware component(s) containing at least one witness, merged."""
    comp: set = set()
    states = world.states
    stack = [w for w in world.witnesses if states[w] != 0]
    comp.update(stack)
    while stack:
        u = stack.pop()
        for v in world.adjacency.neighbors(u):
            v = int(v)
            if states[v] != 0 and v not in comp:
                comp.add(v)
                stack.append(v)
    return comp


def _sample(world, lattice=None) -> MetricSample:
    pot = metrics.potential(world)
    res = len(metrics.residual_components(world))
    samp = MetricSample(iteration=world.iteration, phi_a=pot.phi_a, phi_at=pot.phi_at,
                        phi=pot.phi, residuals=res,
                        aware_frac=pot.phi_a / world.n)
    if lattice is not None:
        comp = _witness_component(world)
        if comp:
            try:
                reading = metrics.perimeter(lattice, comp)
                samp.perimeter = reading.boundary_walk_length
                samp.alpha = reading.alpha_ratio
            except Exception:
                pass  # wrapped or split component: leave perimeter unset
    return samp


def _lattice_trial(sc: Scenario, trial: int, engine: str, trace=None) -> TrialRecord:
    seed = trial_seed(sc.seed, trial)
    rng = RngStream(seed)
    lat = LatticeWorld(sc.side, sc.n, sc.params, lam=sc.lam)
    if sc.init == "random":
        lat.place_agents_random(rng)
    elif sc.init == "blob":
        lat.place_agents_blob()
    else:
        lat.place_agents_at(sc.init)
    world = foraging_world(lat)
    events = list(sc.food_schedule)
    rec = TrialRecord(trial=trial, seed=seed, n=sc.n, mode="lattice",
                      converged=False, iterations=sc.max_iters)

    stop_code = _STOP_CODES[sc.stop_predicate]
    pred = {"all_aware": all_aware, "all_unaware": all_unaware, "none": lambda w: False}[sc.stop_predicate]
    cursor = 0
    t = 0
    rec.samples.append(_sample(world, lat))
    if pred(world) and sc.stop_predicate != "none":
        rec.converged = True
        rec.iterations = 0
    else:
        if engine == "kernel":
            from . import _accel
            rng_state = rng.state_array()
            counters = np.array([world.aware_count(), 0], dtype=np.int64)
            wz = np.zeros(sc.n, dtype=np.uint8)
            scratch = np.zeros(64, dtype=np.int32)
        while t < sc.max_iters:
            while cursor < len(events) and _event_time(events[cursor]) <= t:
                ev = events[cursor]
                if isinstance(ev, tuple):
                    lat.lam = ev[2]
                else:
                    apply_food_event(lat, ev)
                cursor += 1
            next_event = _event_time(events[cursor]) if cursor < len(events) else sc.max_iters
            next_stride = t + (sc.metric_stride - t % sc.metric_stride)
            boundary = min(max(next_event, t + 1), next_stride, sc.max_iters)
            chunk = boundary - t
            if engine == "kernel":
                used, satisfied, _, _ = _accel.lattice_run(
                    lat.grid, lat.pos, world.states, lat.food, lat.nbr,
                    sc.params.p, float(sc.params.delta_max), lat.lam_pow,
                    rng_state, chunk, stop_code, counters, wz, scratch, False)
                t += int(used)
                world.iteration = t
                satisfied = bool(satisfied)
            else:
                satisfied = False
                for _ in range(chunk):
                    if trace is not None:
                        before = world.states.copy()
                    foraging_step(lat, world, rng)
                    if trace is not None:
                        _trace_diff(trace, world.iteration - 1, before, world.states)
                    t = world.iteration
                    if sc.stop_predicate != "none" and pred(world):
                        satisfied = True
                        break
            world.witnesses = lat.current_witnesses()
            if satisfied:
                rec.converged = True
                rec.iterations = t
                rec.samples.append(_sample(world, lat))
                break
            if t % sc.metric_stride == 0 or t >= sc.max_iters:
                rec.samples.append(_sample(world, lat))
        if engine == "kernel":
            rng.sync_from(rng_state)
    rec.final_snapshot = snapshot(lat, world.states, world.iteration)
    return rec


def _graph_trial(sc: Scenario, trial: int, engine: str, trace=None) -> TrialRecord:
    seed = trial_seed(sc.seed, trial)
    rng = RngStream(seed)
    if sc.scripted is not None:
        adversary = ScriptedAdversary(sc.n, sc.scripted)
        engine = "python"
    else:
        adversary = StaticAdversary(sc.graph)
    world = World.all_unaware(adversary.current().adjacency(), sc.params)
    if sc.init_states == "aware_flagged":
        world.states[:] = 1
        world.states[0] = 3
    elif isinstance(sc.init_states, list):
        for i, tag in enumerate(sc.init_states):
            world.states[i] = int(STATE_FROM_TAG[tag])
    if sc.scripted is not None:
        world.graph_source = adversary

    events = list(sc.witness_schedule)
    rec = TrialRecord(trial=trial, seed=seed, n=sc.n, mode="graph",
                      converged=False, iterations=sc.max_iters)
    pred = {"all_aware": all_aware, "all_unaware": all_unaware, "none": lambda w: False}[sc.stop_predicate]
    stop_code = _STOP_CODES[sc.stop_predicate]
    cursor = 0
    t = 0
    rec.samples.append(_sample(world))
    if pred(world) and sc.stop_predicate != "none":
        rec.converged = True
        rec.iterations = 0
        return rec

    if engine == "kernel":
        from . import _accel
        adj = adversary.current().adjacency()
        wit = np.zeros(sc.n, dtype=np.uint8)
        rng_state = rng.state_array()
        counters = np.array([world.aware_count(), _marker_count(world)], dtype=np.int64)
        while t < sc.max_iters:
            while cursor < len(events) and events[cursor].iteration <= t:
                ev = events[cursor]
                if ev.add:
                    world.witnesses.add(ev.agent)
                    wit[ev.agent] = 1
                else:
                    world.witnesses.discard(ev.agent)
                    wit[ev.agent] = 0
                cursor += 1
            if len(world.witnesses) > sc.params.w:
                raise ScenarioViolation("schedule exceeded the stimulus bound")
            counters[1] = _marker_count(world)
            next_event = events[cursor].iteration if cursor < len(events) else sc.max_iters
            next_stride = t + (sc.metric_stride - t % sc.metric_stride)
            boundary = min(max(next_event, t + 1), next_stride, sc.max_iters)
            used, satisfied = _accel.graph_run(
                world.states, adj.indptr, adj.indices, wit, sc.params.p,
                float(sc.params.delta_max), rng_state, boundary - t, stop_code, counters)
            t += int(used)
            world.iteration = t
            if satisfied:
                rec.converged = True
                rec.iterations = t
                rec.samples.append(_sample(world))
                break
            if t % sc.metric_stride == 0 or t >= sc.max_iters:
                rec.samples.append(_sample(world))
        rng.sync_from(rng_state)
    else:
        world.schedule = WitnessSchedule(events)
        while t < sc.max_iters:
            changed = [] if trace is not None else None
            step(world, rng, changed=changed)
            if changed:
                for (agent, old, new) in changed:
                    trace.append({"iteration": world.iteration - 1, "agent": int(agent),
                                  "old_state": _TAG[old], "new_state": _TAG[new]})
            t = world.iteration
            if sc.stop_predicate != "none" and pred(world):
                rec.converged = True
                rec.iterations = t
                rec.samples.append(_sample(world))
                break
            if t % sc.metric_stride == 0 or t >= sc.max_iters:
                rec.samples.append(_sample(world))
    return rec


_TAG = ("U", "A0", "AA", "AW", "AAW", "AC")


def _trace_diff(trace: list, iteration: int, before, after) -> None:
    for agent in range(len(before)):
        if before[agent] != after[agent]:
            trace.append({"iteration": iteration, "agent": agent,
                          "old_state": _TAG[int(before[agent])],
                          "new_state": _TAG[int(after[agent])]})


def _marker_count(world) -> int:
    states = world.states
    count = 0
    for u in range(world.n):
        s = int(states[u])
        if s == 5 or ((s == 3 or s == 4) and u not in world.witnesses):
            count += 1
    return count


def run_trial(sc: Scenario, trial: int, engine: str = "kernel",
              trace: list | None = None) -> TrialRecord:
    if trace is not None:
        engine = "python"  # tracing reads per-step diffs
    if sc.mode == "lattice":
        return _lattice_trial(sc, trial, engine, trace)
    return _graph_trial(sc, trial, engine, trace)


def run_scenario(scenario: Scenario, engine: str = "kernel", jobs: int = 1) -> list:
    """Execute all trials; seeds derive from the scenario seed per trial."""
    trials = list(range(scenario.trials))
    if jobs > 1 and len(trials) > 1:
        import multiprocessing as mp
        with mp.Pool(processes=jobs) as pool:
            return pool.starmap(run_trial, [(scenario, i, engine) for i in trials])
    return [run_trial(scenario, i, engine) for i in trials]


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def write_outputs(records: list, outdir: str) -> None:
    """metrics.csv, summary.csv and per-trial final snapshots."""
    os.makedirs(outdir, exist_ok=True)
    snapdir = os.path.join(outdir, "snapshots")
    lines = ["trial,iteration,phi_a,phi_at,phi,residuals,aware_frac,perimeter,alpha"]
    for rec in records:
        for s in rec.samples:
            perim = "" if s.perimeter is None else s.perimeter
            alpha = "" if s.alpha is None or s.alpha != s.alpha else f"{s.alpha:.6f}"
            lines.append(f"{rec.trial},{s.iteration},{s.phi_a},{s.phi_at},{s.phi},"
                         f"{s.residuals},{s.aware_frac:.6f},{perim},{alpha}")
    with open(os.path.join(outdir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    lines = ["trial,seed,n,mode,converged,iterations"]
    for rec in records:
        lines.append(f"{rec.trial},{rec.seed},{rec.n},{rec.mode},"
                     f"{int(rec.converged)},{rec.iterations}")
    with open(os.path.join(outdir, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    for rec in records:
        if rec.final_snapshot is not None:
            os.makedirs(snapdir, exist_ok=True)
            path = os.path.join(snapdir, f"trial{rec.trial:04d}_final.json")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(snapshot_json(rec.final_snapshot) + "\n")
