"""Brute-force ground truth at tiny scale.

Nothing here calls the pipelines or their search helpers; each oracle keeps
its own edge lookup so a shared bug cannot hide on both sides.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from ..hcore import RGraph


class OracleCapExceeded(ValueError):
    pass


def _edges(g: RGraph) -> set[frozenset[int]]:
    return {frozenset(e) for e in g.edges}


def oracle_perfect_matching(host: RGraph, cap: int = 18) -> list[tuple[int, ...]] | None:
    """Perfect matching by branching on the lowest uncovered vertex, or None."""
    n, r = host.n, host.r
    if n > cap:
        raise OracleCapExceeded(f"n={n} exceeds the oracle cap {cap}")
    if n % r:
        return None
    E = _edges(host)
    at: dict[int, list[frozenset[int]]] = {v: [] for v in range(n)}
    for e in E:
        at[min(e)].append(e)
    free = [True] * n
    out: list[frozenset[int]] = []

    def go() -> bool:
        try:
            v = free.index(True)
        except ValueError:
            return True
        for e in at[v]:
            if all(free[x] for x in e):
                for x in e:
                    free[x] = False
                out.append(e)
                if go():
                    return True
                out.pop()
                for x in e:
                    free[x] = True
        return False

    return sorted(tuple(sorted(e)) for e in out) if go() else None


def oracle_tree_embed(
    host: RGraph,
    guest: RGraph,
    sides: Sequence[tuple[Iterable[int], Iterable[int]]] = (),
    cap: int = 12,
) -> dict[int, int] | None:
    """Injective map of guest into host sending edges to edges, or None.

    Guest vertices are assigned one at a time in BFS order; a guest edge is
    checked as soon as all its vertices are placed.
    """
    if host.n > cap:
        raise OracleCapExceeded(f"n={host.n} exceeds the oracle cap {cap}")
    if guest.n > host.n:
        return None
    E = _edges(host)
    hdeg = [0] * host.n
    for e in E:
        for v in e:
            hdeg[v] += 1
    gdeg = [0] * guest.n
    gadj: list[list[int]] = [[] for _ in range(guest.n)]
    for e in guest.edges:
        for v in e:
            gdeg[v] += 1
            gadj[v].extend(w for w in e if w != v)
    leafcount = [sum(1 for w in gadj[v] if gdeg[w] == 1) for v in range(guest.n)]
    allowed: dict[int, set[int]] = {}
    for A, X in sides:
        for v in A:
            allowed[v] = set(X) & allowed.get(v, set(X))
    order: list[int] = []
    seen = set()
    for s in sorted(range(guest.n), key=lambda v: -gdeg[v]):
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        while queue:
            a = queue.pop(0)
            order.append(a)
            for b in gadj[a]:
                if b not in seen:
                    seen.add(b)
                    queue.append(b)
    pos = {v: i for i, v in enumerate(order)}
    # edges to test once their last vertex (in order) is placed
    closing: dict[int, list[tuple[int, ...]]] = {v: [] for v in range(guest.n)}
    for e in guest.edges:
        closing[max(e, key=lambda v: pos[v])].append(e)
    phi: dict[int, int] = {}
    taken = [False] * host.n

    def go(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for x in range(host.n):
            if taken[x] or hdeg[x] < gdeg[v]:
                continue
            if v in allowed and x not in allowed[v]:
                continue
            if leafcount[v] and hdeg[x] < 1:
                continue
            phi[v] = x
            if all(frozenset(phi[w] for w in e) in E for e in closing[v]):
                taken[x] = True
                if go(i + 1):
                    return True
                taken[x] = False
            del phi[v]
        return False

    return dict(phi) if go(0) else None


def oracle_loose_hamilton(host: RGraph, cap: int = 12) -> tuple[int, ...] | None:
    """Vertex order of a loose Hamilton cycle found by trying every ordering."""
    n, r = host.n, host.r
    if n > cap:
        raise OracleCapExceeded(f"n={n} exceeds the oracle cap {cap}")
    if n % (r - 1) or n // (r - 1) < 3:
        return None
    E = _edges(host)
    L = n // (r - 1)
    for rest in itertools.permutations(range(1, n)):
        seq = (0,) + rest
        if all(frozenset(seq[((r - 1) * i + j) % n] for j in range(r)) in E for i in range(L)):
            return seq
    return None


def oracle_hole(host: RGraph, cap: int = 10) -> int:
    """Largest t with r (not necessarily disjoint) t-sets spanning no crossing edge.

    Enumerates the first r-1 sets; the last one can be any t vertices that no
    edge completes from them, so it is counted rather than enumerated.
    """
    n, r = host.n, host.r
    if n > cap:
        raise OracleCapExceeded(f"n={n} exceeds the oracle cap {cap}")
    E = [tuple(e) for e in host.edges]
    best = 0
    for t in range(1, n + 1):
        if not _hole_of_size(E, n, r, t):
            break
        best = t
    return best


def _hole_of_size(E, n: int, r: int, t: int) -> bool:
    masks = [sum(1 << v for v in c) for c in itertools.combinations(range(n), t)]
    # (z, orderings of the other r-1 vertices) for every edge
    probes = [(z, list(itertools.permutations([v for v in e if v != z]))) for e in E for z in e]
    for choice in itertools.combinations_with_replacement(masks, r - 1):
        blocked = 0
        for z, perms in probes:
            if blocked >> z & 1:
                continue
            for perm in perms:
                if all(m >> v & 1 for v, m in zip(perm, choice)):
                    blocked |= 1 << z
                    break
        if n - bin(blocked).count("1") >= t:
            return True
    return False


def _crosses(e: tuple[int, ...], X: list[frozenset[int]]) -> bool:
    return any(all(v in s for v, s in zip(perm, X)) for perm in itertools.permutations(e))


def oracle_transversal_factor(
    host: RGraph, F_edges: Sequence[Sequence[int]], parts: Sequence[Iterable[int]], cover: Iterable[int]
) -> list[tuple[int, ...]] | None:
    """Transversal copies of the pattern (edges over positions 0..k-1) covering ``cover``."""
    E = _edges(host)
    parts = [set(p) for p in parts]
    k = len(parts)
    left = set(cover)
    by_part = [sorted(left & p) for p in parts]
    if len({len(b) for b in by_part}) > 1 or sum(map(len, by_part)) != len(left):
        return None
    out: list[tuple[int, ...]] = []

    def go() -> bool:
        if not left:
            return True
        v = min(x for x in left if x in parts[0])
        pools = [[v]] + [sorted(left & parts[j]) for j in range(1, k)]
        for x in itertools.product(*pools):
            if all(frozenset(x[j] for j in f) in E for f in F_edges):
                left.difference_update(x)
                out.append(x)
                if go():
                    return True
                out.pop()
                left.update(x)
        return False

    return list(out) if go() else None


def oracle_rainbow(system: Sequence[RGraph], tree: RGraph) -> tuple[dict[int, int], dict] | None:
    """Rainbow copy of ``tree``: vertex map plus injective edge colouring."""
    n = system[0].n
    m = len(system)
    sets = [_edges(g) for g in system]
    T = list(tree.edges)
    if len(T) > m:
        return None
    for img in itertools.permutations(range(n), tree.n):
        need = [frozenset(img[v] for v in e) for e in T]
        options = [[c for c in range(m) if need[i] in sets[c]] for i in range(len(T))]
        for cols in itertools.product(*options):
            if len(set(cols)) == len(cols):
                return dict(enumerate(img)), {T[i]: cols[i] for i in range(len(T))}
    return None
