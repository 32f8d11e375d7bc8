"""Core r-uniform hypergraph type, degree queries, crossing counts and hole numbers.

Vertices are the integers ``0..n-1``. Edges are stored sorted, the edge list
is sorted lexicographically, so two graphs are equal exactly when their
canonical serializations agree.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .seeding import rng

Edge = tuple[int, ...]


class HypergraphError(ValueError):
    pass


@dataclass(frozen=True)
class RGraph:
    r: int
    n: int
    edges: tuple[Edge, ...]

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def incidence(self) -> tuple[tuple[Edge, ...], ...]:
        inc: list[list[Edge]] = [[] for _ in range(self.n)]
        for e in self.edges:
            for v in e:
                inc[v].append(e)
        return tuple(tuple(x) for x in inc)

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, vs: Iterable[int]) -> bool:
        return tuple(sorted(vs)) in self.edge_set

    def vertex_degree(self, v: int) -> int:
        return len(self.incidence[v])

    def to_dict(self) -> dict:
        return {"r": self.r, "n": self.n, "edges": [list(e) for e in self.edges]}


def validate(r: int, n: int, edges: Iterable[Iterable[int]]) -> RGraph:
    """Check and canonicalize an r-graph given as raw edge lists."""
    if not isinstance(r, int) or r < 2:
        raise HypergraphError(f"uniformity must be an integer >= 2, got {r!r}")
    if not isinstance(n, int) or n < 0:
        raise HypergraphError(f"vertex count must be a non-negative integer, got {n!r}")
    canon = []
    for raw in edges:
        e = tuple(sorted(int(x) for x in raw))
        if len(e) != r:
            raise HypergraphError(f"edge {list(raw)} has arity {len(e)}, expected {r}")
        if len(set(e)) != r:
            raise HypergraphError(f"repeated vertex in edge {list(raw)}")
        if e[0] < 0 or e[-1] >= n:
            raise HypergraphError(f"edge {list(raw)} has a vertex outside [0, {n})")
        canon.append(e)
    canon.sort()
    for a, b in zip(canon, canon[1:]):
        if a == b:
            raise HypergraphError(f"duplicate edge {list(a)}")
    return RGraph(r, n, tuple(canon))


def from_dict(d: dict) -> RGraph:
    try:
        return validate(d["r"], d["n"], d["edges"])
    except KeyError as exc:
        raise HypergraphError(f"missing field {exc}") from None


def _check_subset(g: RGraph, S: Iterable[int]) -> tuple[int, ...]:
    S = tuple(sorted(set(S)))
    for v in S:
        if not 0 <= v < g.n:
            raise HypergraphError(f"vertex {v} not in the vertex set")
    return S


def degree(g: RGraph, S: Iterable[int]) -> int:
    """Number of edges containing every vertex of ``S``."""
    S = _check_subset(g, S)
    if len(S) > g.r:
        raise HypergraphError("|S| exceeds the uniformity")
    if not S:
        return g.m
    pivot = min(S, key=g.vertex_degree)
    want = set(S)
    return sum(1 for e in g.incidence[pivot] if want.issubset(e))


def min_codegree(g: RGraph, k: int) -> int:
    if not 1 <= k <= g.r - 1:
        raise HypergraphError(f"k must lie in [1, {g.r - 1}]")
    if g.n < k:
        raise HypergraphError("fewer than k vertices")
    if k == 1:
        return min(g.vertex_degree(v) for v in range(g.n))
    counts: Counter = Counter()
    for e in g.edges:
        counts.update(itertools.combinations(e, k))
    if len(counts) < math.comb(g.n, k):
        return 0
    return min(counts.values())


def _as_sets(g: RGraph, parts: Sequence[Iterable[int]]) -> list[frozenset[int]]:
    out = []
    for p in parts:
        p = frozenset(p)
        for v in p:
            if not 0 <= v < g.n:
                raise HypergraphError(f"vertex {v} not in the vertex set")
        out.append(p)
    return out


def _ordered_hits(e: Edge, sets: Sequence[frozenset[int]]) -> int:
    # number of orderings of e that put its i-th vertex into sets[i]
    return sum(1 for perm in itertools.permutations(e) if all(x in s for x, s in zip(perm, sets)))


def crossing_count(g: RGraph, parts: Sequence[Iterable[int]]) -> int:
    """Ordered-tuple crossing count; one edge may be counted several times."""
    if len(parts) != g.r:
        raise HypergraphError(f"need {g.r} parts, got {len(parts)}")
    sets = _as_sets(g, parts)
    if any(not s for s in sets):
        return 0
    union = frozenset().union(*sets)
    total = 0
    for e in g.edges:
        if all(v in union for v in e):
            total += _ordered_hits(e, sets)
    return total


def tuple_degree(g: RGraph, v: int, parts: Sequence[Iterable[int]]) -> int:
    """Ordered count of (y_1..y_{r-1}) with y_i in parts[i] and {v, y_1..} an edge."""
    if len(parts) != g.r - 1:
        raise HypergraphError(f"need {g.r - 1} parts, got {len(parts)}")
    sets = _as_sets(g, parts)
    total = 0
    for e in g.incidence[v]:
        rest = tuple(x for x in e if x != v)
        total += _ordered_hits(rest, sets)
    return total


def is_crossing(e: Iterable[int], parts: Sequence[Iterable[int]]) -> bool:
    e = tuple(e)
    sets = [frozenset(p) for p in parts]
    return len(e) == len(sets) and _ordered_hits(e, sets) > 0


@dataclass(frozen=True)
class Restricted:
    graph: RGraph
    labels: tuple[int, ...]  # labels[i] is the host vertex behind local vertex i

    def lift(self, e: Iterable[int]) -> Edge:
        return tuple(sorted(self.labels[x] for x in e))


def restrict(g: RGraph, parts: Sequence[Iterable[int]]) -> Restricted:
    """Subgraph on the union of ``parts`` keeping exactly the crossing edges."""
    if len(parts) != g.r:
        raise HypergraphError(f"need {g.r} parts, got {len(parts)}")
    sets = _as_sets(g, parts)
    labels = tuple(sorted(frozenset().union(*sets)))
    local = {v: i for i, v in enumerate(labels)}
    keep = []
    for e in g.edges:
        if all(v in local for v in e) and _ordered_hits(e, sets):
            keep.append([local[v] for v in e])
    return Restricted(validate(g.r, len(labels), keep), labels)


# ---------------------------------------------------------------- hole numbers


@dataclass(frozen=True)
class HoleCertificate:
    t: int
    sets: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {"t": self.t, "sets": [list(s) for s in self.sets]}


@dataclass(frozen=True)
class HoleBound:
    lower: int
    upper: int
    exact: bool
    certificate: HoleCertificate
    trace: str = field(default="", compare=False)


def verify_certificate(g: RGraph, cert: HoleCertificate) -> bool:
    if len(cert.sets) != g.r or any(len(set(s)) != cert.t for s in cert.sets):
        return False
    return crossing_count(g, cert.sets) == 0


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _mask(vs: Iterable[int]) -> int:
    out = 0
    for v in vs:
        out |= 1 << v
    return out


class _HoleState:
    """Part masks plus, per position, the vertices that could still join it."""

    __slots__ = ("g", "disjoint", "X", "allowed")

    def __init__(self, g: RGraph, caps: Sequence[int], disjoint: bool):
        self.g = g
        self.disjoint = disjoint
        self.X = [0] * g.r
        self.allowed = list(caps)

    def copy(self) -> "_HoleState":
        s = _HoleState.__new__(_HoleState)
        s.g, s.disjoint = self.g, self.disjoint
        s.X, s.allowed = list(self.X), list(self.allowed)
        return s

    def _rest_fits(self, rest: Sequence[int], positions: Sequence[int]) -> bool:
        X = self.X
        for perm in itertools.permutations(positions):
            if all((X[p] >> u) & 1 for u, p in zip(rest, perm)):
                return True
        return False

    def blocked_by(self, v: int, i: int) -> list[int]:
        """Per-position masks of vertices that adding ``v`` to part ``i`` would block."""
        r = self.g.r
        out = [0] * r
        allowed = self.allowed
        placed = 0
        for j in range(r):
            if j != i:
                placed |= self.X[j]
        for e in self.g.incidence[v]:
            for w in e:
                if w == v:
                    continue
                rest = [x for x in e if x != v and x != w]
                if any(not (placed >> x) & 1 for x in rest):
                    continue
                for k in range(r):
                    if k == i or not (allowed[k] >> w) & 1 or (out[k] >> w) & 1:
                        continue
                    if self._rest_fits(rest, [p for p in range(r) if p != i and p != k]):
                        out[k] |= 1 << w
        if self.disjoint:
            bit = 1 << v
            for k in range(r):
                if k != i:
                    out[k] |= bit & allowed[k]
        return out

    def add(self, v: int, i: int, blocked: list[int] | None = None) -> None:
        if blocked is None:
            blocked = self.blocked_by(v, i)
        self.X[i] |= 1 << v
        for k in range(self.g.r):
            self.allowed[k] &= ~blocked[k]


def _caps(g: RGraph, restriction: Sequence[Iterable[int]] | None) -> list[int]:
    if restriction is None:
        return [(1 << g.n) - 1] * g.r
    if len(restriction) != g.r:
        raise HypergraphError(f"restriction needs {g.r} parts, got {len(restriction)}")
    return [_mask(p) for p in _as_sets(g, restriction)]


def _certificate(X: Sequence[int], t: int) -> HoleCertificate:
    sets = tuple(tuple(sorted(_bits(x)))[:t] for x in X)
    return HoleCertificate(t, sets)


def _search_hole(g: RGraph, caps: list[int], t: int, disjoint: bool) -> HoleCertificate | None:
    """Exhaustive search for r sets of size t (inside caps) with no crossing tuple."""
    r = g.r
    if t == 0:
        return HoleCertificate(0, tuple(() for _ in range(r)))
    symmetric = len(set(caps)) == 1
    above = [~((1 << (k + 1)) - 1) for k in range(g.n)] + [-1]

    def dfs(state: _HoleState, last: list[int], depth: int) -> HoleCertificate | None:
        if depth == r * t:
            return _certificate(state.X, t)
        size = depth // r
        for j in range(r):
            need = t - size - (1 if j < depth % r else 0)
            if bin(state.allowed[j] & above[last[j]]).count("1") < need:
                return None
        i = depth % r
        cand = state.allowed[i] & above[last[i]]
        if symmetric and size == 0 and i > 0:
            # parts are interchangeable: order them by their first vertex
            cand &= ~((1 << last[i - 1]) - 1)
        for v in _bits(cand):
            nxt = state.copy()
            nxt.add(v, i)
            nl = list(last)
            nl[i] = v
            found = dfs(nxt, nl, depth + 1)
            if found is not None:
                return found
        return None

    return dfs(_HoleState(g, caps, disjoint), [-1] * r, 0)


def hole_exact(
    g: RGraph,
    restriction: Sequence[Iterable[int]] | None = None,
    *,
    max_n: int = 14,
    disjoint: bool = False,
) -> HoleBound:
    """Exact r-partite hole number, optionally restricted to a part tuple.

    ``max_n`` bounds the largest candidate part (the whole vertex set when
    unrestricted), since the search is exponential in it.
    """
    caps = _caps(g, restriction)
    cap_size = min(bin(c).count("1") for c in caps)
    if max(bin(c).count("1") for c in caps) > max_n:
        raise HypergraphError(f"instance exceeds the exact-search guard max_n={max_n}")
    seed_bound = hole_heuristic(g, restriction, budget=200, seed=0, disjoint=disjoint)
    best = seed_bound.certificate
    t = best.t + 1
    while t <= cap_size:
        cert = _search_hole(g, caps, t, disjoint)
        if cert is None:
            break
        best = cert
        t += 1
    assert verify_certificate(g, best)
    return HoleBound(best.t, best.t, True, best, trace=f"exhausted t={best.t + 1}")


def hole_heuristic(
    g: RGraph,
    restriction: Sequence[Iterable[int]] | None = None,
    *,
    budget: int = 10_000,
    seed: int = 0,
    disjoint: bool = False,
) -> HoleBound:
    """Randomized local search for a large hole; the lower bound is certified.

    The budget counts candidate evaluations. Each restart grows the parts
    round-robin, preferring the vertex that keeps the most room for the other
    parts, then tries single-vertex swaps in the smallest part.
    """
    caps = _caps(g, restriction)
    r = g.r
    cap_size = min(bin(c).count("1") for c in caps)
    best = HoleCertificate(0, tuple(() for _ in range(r)))
    if cap_size == 0 or budget <= 0:
        return HoleBound(0, cap_size, cap_size == 0, best, trace="trivial")
    gen = rng(seed, "hole_heuristic")
    spent = 0
    restarts = 0

    def grow(state: _HoleState) -> _HoleState:
        nonlocal spent
        i = min(range(r), key=lambda j: bin(state.X[j]).count("1"))
        while spent < budget:
            # i is always a smallest part, so once it is stuck t cannot grow
            cand = list(_bits(state.allowed[i] & ~state.X[i]))
            if not cand:
                break
            used = 0
            for j in range(r):
                if j != i:
                    used |= state.X[j]
            scored = []
            gen.shuffle(cand)
            for v in cand:
                spent += 1
                blk = state.blocked_by(v, i)
                fresh = 0 if (used >> v) & 1 else 1
                if fresh and not any(blk):
                    # blocks nothing and overlaps nothing: no candidate can beat it
                    scored = [(0, 0, 0.0, v, blk)]
                    break
                room = sum(
                    bin(state.allowed[j] & ~blk[j] & ~state.X[j]).count("1") for j in range(r) if j != i
                )
                scored.append((room, fresh, gen.random(), v, blk))
                if spent >= budget:
                    break
            room, _, _, v, blk = max(scored)
            state.add(v, i, blk)
            sizes = [bin(x).count("1") for x in state.X]
            i = min(range(r), key=lambda j: (sizes[j], (j - i - 1) % r))
        return state

    def rebuild(X: list[int]) -> _HoleState:
        st = _HoleState(g, caps, disjoint)
        for j in range(r):
            for v in _bits(X[j]):
                st.add(v, j)
        return st

    while spent < budget:
        restarts += 1
        state = grow(_HoleState(g, caps, disjoint))
        t = min(bin(x).count("1") for x in state.X)
        if t > best.t:
            best = _certificate(state.X, t)
        if best.t >= cap_size:
            break
        for _ in range(4 * r):
            if spent >= budget:
                break
            sizes = [bin(x).count("1") for x in state.X]
            i = min(range(r), key=lambda j: sizes[j])
            members = [u for j in range(r) if j != i for u in _bits(state.X[j])]
            if not members:
                break
            drop = gen.choice(members)
            X = list(state.X)
            for j in range(r):
                if j != i:
                    X[j] &= ~(1 << drop)
            state = grow(rebuild(X))
            t = min(bin(x).count("1") for x in state.X)
            if t > best.t:
                best = _certificate(state.X, t)
    assert verify_certificate(g, best)
    return HoleBound(
        best.t, cap_size, best.t == cap_size, best, trace=f"restarts={restarts} evaluations={spent}"
    )
