"""Compiled kernels for the hot loops.

Each kernel reimplements its interpreted counterpart over flat arrays with
the exact same draw sequence from the shared counter-based stream, so a
trajectory can cross between the interpreted and compiled paths at chunk
boundaries without changing.  Equivalence is pinned by tests that run both
paths in lockstep from the same stream state.

Kernel state conventions:
  rng       uint64[2]  = [stream base, draw counter], mutated in place
  counters  int64[2]   = [aware agent count, residual-marker count]
  scratch   int32[64]  scratch space for neighborhood work
"""

from __future__ import annotations

import numpy as np
from numba import njit

# RNG ------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _next_u64(rng):
    rng[1] += _ONE
    z = rng[0] + rng[1] * _GOLDEN
    z ^= z >> _S30
    z *= _MUL1
    z ^= z >> _S27
    z *= _MUL2
    z ^= z >> _S31
    return z


@njit(cache=True, inline="always")
def _rand(rng):
    return np.float64(_next_u64(rng) >> _S11) * _INV53


@njit(cache=True, inline="always")
def _below(rng, n):
    return np.int64(_next_u64(rng) % np.uint64(n))


# Shared state bookkeeping ------------------------------------------------------

@njit(cache=True, inline="always")
def _marker(s, is_wit):
    # residual markers: all-clear agents and stale witness flags
    if s == 5:
        return 1
    if (s == 3 or s == 4) and not is_wit:
        return 1
    return 0


@njit(cache=True, inline="always")
def _set_state(states, wit, a, new, counters):
    old = states[a]
    if old == new:
        return
    counters[0] += (1 if new != 0 else 0) - (1 if old != 0 else 0)
    isw = wit[a] != 0
    counters[1] += _marker(new, isw) - _marker(old, isw)
    states[a] = new


# Graph-mode activation ------------------------------------------------------------

@njit(cache=True)
def _graph_activate(states, indptr, indices, wit, u, p, delta_max, rng, counters):
    s = states[u]
    is_wit = wit[u] != 0
    lo = indptr[u]
    hi = indptr[u + 1]
    if is_wit and s != 3 and s != 4:
        if _rand(rng) < p:
            _set_state(states, wit, u, 3, counters)
    elif (not is_wit) and (s == 3 or s == 4):
        for k in range(lo, hi):
            v = indices[k]
            if states[v] != 0:
                _set_state(states, wit, v, 5, counters)
        _set_state(states, wit, u, 0, counters)
    elif s == 0:
        best = -1
        for k in range(lo, hi):
            v = indices[k]
            sv = states[v]
            if sv == 2 or sv == 4:
                best = v
                break
        if best >= 0:
            _set_state(states, wit, best, states[best] - 1, counters)
            _set_state(states, wit, u, 1, counters)
    elif s == 2 or s == 4:
        x = _rand(rng)
        d = hi - lo
        if d > 0 and x <= d / delta_max:
            v = indices[lo + _below(rng, d)]
            sv = states[v]
            if sv == 1 or sv == 3:
                _set_state(states, wit, u, s - 1, counters)
                _set_state(states, wit, v, sv + 1, counters)
    elif s == 3:
        if _rand(rng) < p:
            _set_state(states, wit, u, 4, counters)
    elif s == 5:
        for k in range(lo, hi):
            v = indices[k]
            if states[v] != 0:
                _set_state(states, wit, v, 5, counters)
        _set_state(states, wit, u, 0, counters)


@njit(cache=True)
def graph_run(states, indptr, indices, wit, p, delta_max, rng, max_iters,
              stop_code, counters):
    """Run up to max_iters static-graph iterations.

    stop_code: 0 none, 1 all Aware, 2 all Unaware, 3 no residual markers.
    Returns (iterations_done, satisfied).
    """
    n = states.shape[0]
    for i in range(max_iters):
        u = _below(rng, n)
        _graph_activate(states, indptr, indices, wit, u, p, delta_max, rng, counters)
        if stop_code == 1:
            if counters[0] == n:
                return i + 1, 1
        elif stop_code == 2:
            if counters[0] == 0:
                return i + 1, 1
        elif stop_code == 3:
            if counters[1] == 0:
                return i + 1, 1
    return max_iters, 0


@njit(cache=True)
def _invariant_ok(states, indptr, indices, visited, stack):
    """Every Aware component contains a flagged or all-clear member."""
    n = states.shape[0]
    for i in range(n):
        visited[i] = 0
    for start in range(n):
        if states[start] == 0 or visited[start] != 0:
            continue
        ok = False
        top = 0
        stack[top] = start
        top += 1
        visited[start] = 1
        while top > 0:
            top -= 1
            u = stack[top]
            su = states[u]
            if su >= 3:  # AW, AAW or AC
                ok = True
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if states[v] != 0 and visited[v] == 0:
                    visited[v] = 1
                    stack[top] = v
                    top += 1
        if not ok:
            return False
    return True


@njit(cache=True)
def graph_run_checked(states, indptr, indices, wit, p, delta_max, rng, iters,
                      counters, visited, stack):
    """Run `iters` iterations, re-checking the component invariant after every
    activation that changed the configuration.  Returns violation count."""
    n = states.shape[0]
    violations = 0
    for _ in range(iters):
        a0 = counters[0]
        m0 = counters[1]
        u = _below(rng, n)
        _graph_activate(states, indptr, indices, wit, u, p, delta_max, rng, counters)
        if counters[0] != a0 or counters[1] != m0:
            if not _invariant_ok(states, indptr, indices, visited, stack):
                violations += 1
    return violations


# Lattice kernels -------------------------------------------------------------------

@njit(cache=True)
def _lat_activate(grid, pos, states, food, nbr, u, is_wit, p, delta_max, rng,
                  counters, wit0, scratch):
    # wit0 is a zero uint8 view letting _set_state's marker math stay inert
    # (lattice stop conditions only use the aware count).
    l = pos[u]
    m = 0
    for d in range(6):
        a = grid[nbr[l, d]]
        if a >= 0:
            k = m
            while k > 0 and scratch[k - 1] > a:
                scratch[k] = scratch[k - 1]
                k -= 1
            scratch[k] = a
            m += 1
    s = states[u]
    if is_wit and s != 3 and s != 4:
        if _rand(rng) < p:
            _set_state(states, wit0, u, 3, counters)
    elif (not is_wit) and (s == 3 or s == 4):
        for i in range(m):
            v = scratch[i]
            if states[v] != 0:
                _set_state(states, wit0, v, 5, counters)
        _set_state(states, wit0, u, 0, counters)
    elif s == 0:
        best = -1
        for i in range(m):
            v = scratch[i]
            sv = states[v]
            if sv == 2 or sv == 4:
                best = v
                break
        if best >= 0:
            _set_state(states, wit0, best, states[best] - 1, counters)
            _set_state(states, wit0, u, 1, counters)
    elif s == 2 or s == 4:
        x = _rand(rng)
        if m > 0 and x <= m / delta_max:
            v = scratch[_below(rng, m)]
            sv = states[v]
            if sv == 1 or sv == 3:
                _set_state(states, wit0, u, s - 1, counters)
                _set_state(states, wit0, v, sv + 1, counters)
    elif s == 3:
        if _rand(rng) < p:
            _set_state(states, wit0, u, 4, counters)
    elif s == 5:
        for i in range(m):
            v = scratch[i]
            if states[v] != 0:
                _set_state(states, wit0, v, 5, counters)
        _set_state(states, wit0, u, 0, counters)


@njit(cache=True)
def _move_ok(grid, states, nbr, l, lp, scratch):
    """Movement rule over site indices; returns (ok, deg_l, deg_lp).

    scratch layout: [0:6] aware sites around l, [6:12] around lp,
    [12:24] deduped union.
    """
    nl = 0
    for d in range(6):
        s2 = nbr[l, d]
        if s2 == lp:
            continue
        a = grid[s2]
        if a >= 0 and states[a] != 0:
            scratch[nl] = s2
            nl += 1
    if nl >= 5:
        return False, nl, 0
    nlp = 0
    for d in range(6):
        s2 = nbr[lp, d]
        if s2 == l:
            continue
        a = grid[s2]
        if a >= 0 and states[a] != 0:
            scratch[6 + nlp] = s2
            nlp += 1
    m = 0
    inter = 0
    for i in range(nl):
        scratch[12 + m] = scratch[i]
        m += 1
    for j in range(nlp):
        s2 = scratch[6 + j]
        dup = -1
        for i in range(nl):
            if scratch[i] == s2:
                dup = i
                break
        if dup >= 0:
            inter |= 1 << dup
        else:
            scratch[12 + m] = s2
            m += 1
    if inter != 0:
        visited = inter
        frontier = inter
        full = (1 << m) - 1
        while frontier != 0 and visited != full:
            nxt = 0
            for i in range(m):
                if frontier & (1 << i):
                    si = scratch[12 + i]
                    for d in range(6):
                        t2 = nbr[si, d]
                        for j in range(m):
                            if (visited & (1 << j)) == 0 and scratch[12 + j] == t2:
                                visited |= 1 << j
                                nxt |= 1 << j
            frontier = nxt
        return visited == full, nl, nlp
    if nl == 0 or nlp == 0:
        return False, nl, nlp
    ok_l = _conn_subset(nbr, scratch, 0, nl)
    ok_lp = _conn_subset(nbr, scratch, 6, nlp)
    return ok_l and ok_lp, nl, nlp


@njit(cache=True)
def _conn_subset(nbr, scratch, off, cnt):
    if cnt <= 1:
        return True
    visited = 1
    frontier = 1
    full = (1 << cnt) - 1
    while frontier != 0 and visited != full:
        nxt = 0
        for i in range(cnt):
            if frontier & (1 << i):
                si = scratch[off + i]
                for d in range(6):
                    t2 = nbr[si, d]
                    for j in range(cnt):
                        if (visited & (1 << j)) == 0 and scratch[off + j] == t2:
                            visited |= 1 << j
                            nxt |= 1 << j
        frontier = nxt
    return visited == full


@njit(cache=True)
def _local_conn_ok(grid, states, nbr, l, lp, scratch):
    """Single-vertex reconfiguration rule for the slide l -> lp of a Mobile
    agent: it keeps an Aware neighbor, and its old Aware neighborhood stays
    internally connected within the 1-hop induced subgraph after the move."""
    has_aware_after = False
    for d in range(6):
        s2 = nbr[lp, d]
        if s2 == l:
            continue
        a = grid[s2]
        if a >= 0 and states[a] != 0:
            has_aware_after = True
            break
    if not has_aware_after:
        return False
    na = 0
    for d in range(6):
        s2 = nbr[l, d]
        if s2 == lp:
            continue
        a = grid[s2]
        if a >= 0 and states[a] != 0:
            scratch[32 + na] = s2
            na += 1
    if na <= 1:
        return True
    # nodes: na old-neighborhood sites plus the new site lp
    scratch[32 + na] = lp
    total = na + 1
    visited = 1
    frontier = 1
    want = (1 << na) - 1
    full = (1 << total) - 1
    while frontier != 0 and (visited & want) != want:
        nxt = 0
        for i in range(total):
            if frontier & (1 << i):
                si = scratch[32 + i]
                for d in range(6):
                    t2 = nbr[si, d]
                    for j in range(total):
                        if (visited & (1 << j)) == 0 and scratch[32 + j] == t2:
                            visited |= 1 << j
                            nxt |= 1 << j
        frontier = nxt
    return (visited & want) == want


@njit(cache=True)
def _lat_move(grid, pos, states, nbr, u, lam_pow, rng, scratch, validate):
    """Gather/search dispatch for the move branch.  Returns
    0 no move, 1 search move, 2 accepted gather, -2 accepted gather that
    failed the local-connectivity validation (validate=True only)."""
    s = states[u]
    d = _below(rng, 6)
    l = pos[u]
    lp = nbr[l, d]
    if grid[lp] != -1:
        return 0
    if s == 0:
        grid[l] = -1
        grid[lp] = u
        pos[u] = lp
        return 1
    ok, dl, dlp = _move_ok(grid, states, nbr, l, lp, scratch)
    if not ok:
        return 0
    a = _rand(rng)
    if a > lam_pow[dlp - dl + 6]:
        return 0
    result = 2
    if validate:
        if not _local_conn_ok(grid, states, nbr, l, lp, scratch):
            result = -2
    grid[l] = -1
    grid[lp] = u
    pos[u] = lp
    return result


@njit(cache=True)
def lattice_run(grid, pos, states, food, nbr, p, delta_max, lam_pow, rng,
                max_iters, stop_code, counters, wit0, scratch, validate):
    """Run up to max_iters foraging iterations.

    stop_code: 0 none, 1 all Aware, 2 all Unaware.
    Returns (iterations_done, satisfied, accepted_gathers, validation_failures).
    """
    n = pos.shape[0]
    accepted = 0
    bad = 0
    for i in range(max_iters):
        u = _below(rng, n)
        is_wit = food[pos[u]] != 0
        coin = _rand(rng)
        if coin <= 0.5:
            _lat_activate(grid, pos, states, food, nbr, u, is_wit, p, delta_max,
                          rng, counters, wit0, scratch)
        else:
            s = states[u]
            if is_wit or s == 3 or s == 4 or s == 5:
                pass
            else:
                res = _lat_move(grid, pos, states, nbr, u, lam_pow, rng, scratch, validate)
                if res == 2:
                    accepted += 1
                elif res == -2:
                    accepted += 1
                    bad += 1
        if stop_code == 1:
            if counters[0] == n:
                return i + 1, 1, accepted, bad
        elif stop_code == 2:
            if counters[0] == 0:
                return i + 1, 1, accepted, bad
    return max_iters, 0, accepted, bad


def warmup():
    """Compile the kernels on a toy instance (cache-backed, so cheap after
    the first process)."""
    import numpy as _np

    rng = _np.array([1, 0], dtype=_np.uint64)
    states = _np.zeros(3, dtype=_np.int8)
    indptr = _np.array([0, 1, 3, 4], dtype=_np.int32)
    indices = _np.array([1, 0, 2, 1], dtype=_np.int32)
    wit = _np.zeros(3, dtype=_np.uint8)
    wit[0] = 1
    counters = _np.zeros(2, dtype=_np.int64)
    graph_run(states, indptr, indices, wit, 0.25, 2.0, rng, 10, 0, counters)
    visited = _np.zeros(3, dtype=_np.int32)
    stack = _np.zeros(3, dtype=_np.int32)
    graph_run_checked(states, indptr, indices, wit, 0.25, 2.0, rng, 10,
                      counters, visited, stack)
    from .lattice import neighbor_table
    side = 4
    nbr = neighbor_table(side)
    grid = _np.full(side * side, -1, dtype=_np.int32)
    pos = _np.zeros(2, dtype=_np.int32)
    lstates = _np.zeros(2, dtype=_np.int8)
    food = _np.zeros(side * side, dtype=_np.uint8)
    grid[0] = 0
    grid[1] = 1
    pos[0] = 0
    pos[1] = 1
    lam_pow = _np.array([4.0 ** k for k in range(-6, 7)], dtype=_np.float64)
    cnt = _np.zeros(2, dtype=_np.int64)
    wz = _np.zeros(2, dtype=_np.uint8)
    scratch = _np.zeros(64, dtype=_np.int32)
    lattice_run(grid, pos, lstates, food, nbr, 0.5, 6.0, lam_pow, rng,
                20, 0, cnt, wz, scratch, True)
