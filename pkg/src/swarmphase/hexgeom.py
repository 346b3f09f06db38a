"""Axial-coordinate geometry for the triangular lattice.

Sites are (q, r) pairs; the six neighbor offsets are closed under negation
and sum to zero, so the neighbor relation is symmetric and walking all six
directions in order returns to the start.  Direction i+3 (mod 6) is the
exact opposite of direction i.  All planar helpers here work on unbounded
integer coordinates; the periodic lattice wraps them modulo the side length
(see lattice.py).
"""

from __future__ import annotations

DIRECTIONS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))
N_DIRS = 6


def neighbor(c, d: int):
    dq, dr = DIRECTIONS[d]
    return (c[0] + dq, c[1] + dr)


def neighbors6(c):
    q, r = c
    return ((q + 1, r), (q, r + 1), (q - 1, r + 1), (q - 1, r), (q, r - 1), (q + 1, r - 1))


def hex_distance(a, b=(0, 0)) -> int:
    dq = a[0] - b[0]
    dr = a[1] - b[1]
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def rot60cw(c):
    """Rotate about the origin so DIRECTIONS[i] maps to DIRECTIONS[i+1]."""
    q, r = c
    return (-r, q + r)


def reflect_axis0(c):
    """Reflect across the DIRECTIONS[0] axis (swaps the two chiralities)."""
    q, r = c
    return (q + r, -r)


def add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def scale(c, k: int):
    return (c[0] * k, c[1] * k)


def is_connected(sites) -> bool:
    sites = set(sites)
    if not sites:
        return True
    start = next(iter(sites))
    seen = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for nb in neighbors6(c):
            if nb in sites and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(sites)


def components(sites):
    sites = set(sites)
    out = []
    while sites:
        start = next(iter(sites))
        comp = {start}
        stack = [start]
        sites.discard(start)
        while stack:
            c = stack.pop()
            for nb in neighbors6(c):
                if nb in sites:
                    sites.discard(nb)
                    comp.add(nb)
                    stack.append(nb)
        out.append(comp)
    return out


def outer_boundary(sites) -> tuple[int, bool]:
    """(outer boundary walk length, hole flag) for a set of occupied cells.

    Convention (frozen; the one reference tracer): the walk follows the
    outline of the union of unit hexagonal cells, so its length equals the
    number of occupied/empty adjacencies on the outer boundary.  A single
    cell has length 6; two adjacent cells 10.  Interior cavities are not
    part of the walk; their presence is reported through the flag.
    """
    sites = set(sites)
    if not sites:
        return 0, False
    qs = [q for q, _ in sites]
    rs = [r for _, r in sites]
    q0, q1 = min(qs) - 1, max(qs) + 1
    r0, r1 = min(rs) - 1, max(rs) + 1
    in_box = lambda c: q0 <= c[0] <= q1 and r0 <= c[1] <= r1
    start = (q0, r0)
    outside = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for nb in neighbors6(c):
            if in_box(nb) and nb not in sites and nb not in outside:
                outside.add(nb)
                stack.append(nb)
    length = 0
    for c in sites:
        for nb in neighbors6(c):
            if nb in outside:
                length += 1
    n_empty = (q1 - q0 + 1) * (r1 - r0 + 1) - len(sites)
    has_hole = len(outside) < n_empty
    return length, has_hole


def has_hole(sites) -> bool:
    return outer_boundary(sites)[1]


def ring(rho: int):
    """Cells at hex distance exactly rho from the origin, in cyclic order.

    The cycle starts at (rho-1, 1): for rho >= 2 that cell touches two cells
    of ring rho-1, which is what makes spiral prefixes edge-maximal.
    """
    if rho == 0:
        return [(0, 0)]
    cells = []
    c = scale(DIRECTIONS[0], rho)  # corner (rho, 0)
    for d in (2, 3, 4, 5, 0, 1):
        for _ in range(rho):
            cells.append(c)
            c = neighbor(c, d)
    start = cells.index((rho - 1, 1)) if rho >= 1 else 0
    return cells[start:] + cells[:start]


def spiral(k: int):
    """First k cells of the edge-maximal hexagonal spiral around the origin.

    Every prefix attains the maximum number of internal adjacencies for its
    size, hence the minimum boundary-walk length.
    """
    out = [(0, 0)]
    rho = 1
    while len(out) < k:
        for c in ring(rho):
            if len(out) >= k:
                break
            out.append(c)
        rho += 1
    return out[:k]


def internal_edges(sites) -> int:
    """Number of adjacent occupied pairs."""
    sites = set(sites)
    count = 0
    for c in sites:
        for d in (0, 1, 2):  # one representative of each opposite pair
            if neighbor(c, d) in sites:
                count += 1
    return count


def enumerate_polyforms(k: int):
    """All connected k-cell shapes up to translation (canonical frozensets).

    Plain level-by-level growth with canonicalization; exact but exponential,
    intended for the k <= 10 cross-checks.
    """
    def canon(cells):
        mq = min(q for q, _ in cells)
        mr = min(r for _, r in cells)
        return frozenset((q - mq, r - mr) for q, r in cells)

    level = {frozenset({(0, 0)})}
    for _ in range(k - 1):
        nxt = set()
        for shape in level:
            for c in shape:
                for nb in neighbors6(c):
                    if nb not in shape:
                        nxt.add(canon(shape | {nb}))
        level = nxt
    return level
