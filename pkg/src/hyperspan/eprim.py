"""Low-level embedding primitives: covering matchings, transversal paths,
high-degree subsets and seeded random partitions."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Sequence

from .hcore import Edge, HypergraphError, RGraph, min_codegree, tuple_degree
from .htree import LinearPath
from .seeding import rng


class HypothesisError(HypergraphError):
    """An input violates a stated hypothesis of the routine."""


class PathStall(RuntimeError):
    def __init__(self, block: int, message: str):
        super().__init__(message)
        self.block = block


@dataclass(frozen=True)
class Matching:
    mprime: tuple[Edge, ...]
    mdouble: tuple[Edge, ...] = ()
    uncovered: tuple[int, ...] = ()
    condition_met: bool | None = None

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.mprime + self.mdouble

    @property
    def covered(self) -> frozenset[int]:
        return frozenset(v for e in self.edges for v in e)

    def to_dict(self) -> dict:
        return {
            "Mprime": [list(e) for e in self.mprime],
            "Mdoubleprime": [list(e) for e in self.mdouble],
            "uncovered": list(self.uncovered),
        }


def is_matching(host: RGraph, edges: Iterable[Edge]) -> bool:
    used: set[int] = set()
    for e in edges:
        if not host.has_edge(e) or used.intersection(e):
            return False
        used.update(e)
    return True


def _part_index(parts: Sequence[Iterable[int]]) -> dict[int, int]:
    where: dict[int, int] = {}
    for i, p in enumerate(parts):
        for v in p:
            if v in where:
                raise HypergraphError("parts must be pairwise disjoint")
            where[v] = i
    return where


def _crossing_edges_at(host: RGraph, v: int, where: dict[int, int], want: int) -> list[Edge]:
    """Edges through v whose other vertices lie one in each of parts 1..want-1."""
    out = []
    for e in host.incidence[v]:
        seen = set()
        ok = True
        for x in e:
            if x == v:
                continue
            p = where.get(x)
            if p is None or p == 0 or p in seen:
                ok = False
                break
            seen.add(p)
        if ok and len(seen) == want - 1:
            out.append(e)
    return out


def maximal_crossing_matching(host: RGraph, parts: Sequence[Sequence[int]], passes: int = 2) -> list[Edge]:
    """Greedy lexicographic maximal matching of G[parts], then 1-swap augmentation."""
    where = _part_index(parts)
    r = host.r
    V0 = sorted(parts[0])
    cand = {v: _crossing_edges_at(host, v, where, r) for v in V0}
    owner: dict[int, Edge] = {}
    chosen: set[Edge] = set()
    for e in sorted(e for v in V0 for e in cand[v]):
        if all(x not in owner for x in e):
            chosen.add(e)
            for x in e:
                owner[x] = e
    for _ in range(passes):
        improved = False
        for v in V0:
            if v in owner:
                continue
            # replace one blocking edge f by an edge through v, then re-cover f's V0 vertex
            for e in cand[v]:
                blockers = {owner[x] for x in e if x in owner}
                if len(blockers) != 1:
                    continue
                (f,) = blockers
                f0 = next(x for x in f if where.get(x) == 0)
                freed = set(f)
                for x in f:
                    del owner[x]
                chosen.discard(f)
                if any(x in owner for x in e):
                    raise AssertionError("swap bookkeeping")
                chosen.add(e)
                for x in e:
                    owner[x] = e
                alt = next((g for g in cand[f0] if g != f and all(x not in owner for x in g)), None)
                if alt is None:
                    # undo
                    chosen.discard(e)
                    for x in e:
                        del owner[x]
                    chosen.add(f)
                    for x in freed:
                        owner[x] = f
                    continue
                chosen.add(alt)
                for x in alt:
                    owner[x] = alt
                improved = True
                break
        if not improved:
            break
    return sorted(chosen)


def find_matching(
    host: RGraph,
    V: Sequence[Iterable[int]],
    U: Sequence[Iterable[int]] | None = None,
    m_star: int | None = None,
) -> Matching:
    """Matching in G[V_0..V_{r-1}] covering V_0 up to the hole number, optionally
    completed through (U_1..U_{r-1}).

    Degree into U is counted over ordered tuples. The completion edges each
    cross ({v}, U_1, .., U_{r-1}).
    """
    r = host.r
    parts = [sorted(set(p)) for p in V]
    if len(parts) != r:
        raise HypergraphError(f"need {r} parts, got {len(parts)}")
    if parts[0] and len(parts[0]) > min(len(p) for p in parts[1:]):
        raise HypergraphError("|V_0| must not exceed the other parts")
    if not parts[0]:
        return Matching(())
    mprime = maximal_crossing_matching(host, parts)
    covered = {x for e in mprime for x in e}
    left = [v for v in parts[0] if v not in covered]
    if U is None or not left:
        return Matching(tuple(mprime), (), tuple(left), None)
    uparts = [frozenset(p) for p in U]
    if len(uparts) != r - 1:
        raise HypergraphError(f"need {r - 1} U-parts")
    allv = set().union(*map(set, parts))
    if any(allv.intersection(p) for p in uparts):
        raise HypergraphError("U-parts must avoid the V-parts")
    m = max((len(p) for p in uparts), default=0)
    if m_star is None:
        m_star = len(left)
    need = (r - 1) ** 2 * m ** (r - 2) * m_star
    met = all(tuple_degree(host, v, uparts) >= need for v in parts[0])
    used = set(covered)
    extra = []
    still = []
    for v in left:
        pick = None
        for e in host.incidence[v]:
            rest = [x for x in e if x != v]
            if any(x in used for x in rest):
                continue
            if any(all(x in s for x, s in zip(perm, uparts)) for perm in permutations(rest)):
                pick = e
                break
        if pick is None:
            still.append(v)
            continue
        extra.append(pick)
        used.update(pick)
    return Matching(tuple(mprime), tuple(extra), tuple(still), met)


# -------------------------------------------------------------------- paths


@dataclass(frozen=True)
class PathResult:
    path: LinearPath
    method: str  # "matchings" or "layered"


def _blocks(r: int, t: int) -> list[list[int]]:
    return [list(range((r - 1) * i, (r - 1) * (i + 1) + 1)) for i in range(t)]


def _edge_in_order(e: Edge, block_parts: list[frozenset[int]]) -> tuple[int, ...] | None:
    for perm in permutations(e):
        if all(x in s for x, s in zip(perm, block_parts)):
            return perm
    return None


def find_linear_path(host: RGraph, V: Sequence[Iterable[int]]) -> PathResult:
    """Linear path crossing V_1..V_{(r-1)t+1} in order, from V_1 to the last part."""
    r = host.r
    k = len(V)
    if k < r or (k - 1) % (r - 1):
        raise HypergraphError("need (r-1)t+1 parts")
    t = (k - 1) // (r - 1)
    full = [sorted(set(p)) for p in V]
    _part_index(full)
    m = min(len(p) for p in full)
    shrunk = [p[:m] for p in full]
    blocks = _blocks(r, t)
    # blockwise matchings, chained through the shared parts
    ordered_blocks = []
    for b in blocks:
        sub = [shrunk[j] for j in b]
        M = find_matching(host, [sub[0]] + sub[1:]).mprime
        sets = [frozenset(s) for s in sub]
        ordered_blocks.append([_edge_in_order(e, sets) for e in M])
    path = _chain(ordered_blocks, r)
    if path is not None:
        return PathResult(LinearPath(r, path), "matchings")
    # layered search over every crossing edge of each block
    layered = []
    for bi, b in enumerate(blocks):
        sets = [frozenset(full[j]) for j in b]
        es = []
        seen = set()
        for v in sets[0]:
            for e in host.incidence[v]:
                if e in seen:
                    continue
                seen.add(e)
                o = _edge_in_order(e, sets)
                if o is not None:
                    es.append(o)
        if not es:
            raise PathStall(bi + 1, f"no crossing edge in block {bi + 1}")
        layered.append(sorted(es))
    path = _chain(layered, r)
    if path is None:
        raise PathStall(_stall_block(layered), "blocks do not concatenate")
    return PathResult(LinearPath(r, path), "layered")


def _chain(blocks: list[list[tuple[int, ...]]], r: int) -> tuple[int, ...] | None:
    # backwards reachability over junction vertices
    nxt: list[dict[int, tuple[int, ...]]] = []
    reach: dict[int, tuple[int, ...]] | None = None
    for edges in reversed(blocks):
        layer: dict[int, tuple[int, ...]] = {}
        for e in edges:
            if reach is None or e[-1] in reach:
                layer.setdefault(e[0], e)
        nxt.append(layer)
        reach = layer
        if not reach:
            return None
    nxt.reverse()
    start = min(nxt[0])
    seq = []
    cur = start
    for layer in nxt:
        e = layer[cur]
        seq.extend(e[:-1])
        cur = e[-1]
    seq.append(cur)
    return tuple(seq)


def _stall_block(blocks: list[list[tuple[int, ...]]]) -> int:
    reach: set[int] | None = None
    for i, edges in enumerate(blocks):
        nxt = {e[-1] for e in edges if reach is None or e[0] in reach}
        if not nxt:
            return i + 1
        reach = nxt
    return len(blocks)


# ---------------------------------------------------------- high-degree sets


class BoundViolation(AssertionError):
    pass


def find_a_set_bound(d_U: int, t: float, n_cap: int, r: int, u_size: int) -> float | None:
    denom = n_cap ** (r - u_size - 1) - t + 1
    if denom <= 0:
        return None
    return (d_U - (t - 1) * n_cap) / denom


def partite_degree(host: RGraph, parts: Sequence[Iterable[int]], S: Iterable[int]) -> int:
    """Edges of the r-partite subgraph G[parts] containing S."""
    where = _part_index(parts)
    S = list(S)
    pool = host.incidence[min(S, key=host.vertex_degree)] if S else host.edges
    cnt = 0
    for e in pool:
        if all(x in e for x in S) and all(x in where for x in e) and len({where[x] for x in e}) == host.r:
            cnt += 1
    return cnt


def high_degree_subset(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    i: int,
    U: Iterable[int],
    t: float,
    n_cap: int | None = None,
) -> list[int]:
    """W = {w in V_i : d(U + w) >= t} in the r-partite subgraph, with its size
    checked against the counting lower bound."""
    parts = [sorted(set(p)) for p in parts]
    U = sorted(set(U))
    if set(U) & set(parts[i]):
        raise HypergraphError("U must avoid V_i")
    if n_cap is None:
        n_cap = max(len(p) for p in parts)
    if any(len(p) > n_cap for p in parts):
        raise HypergraphError("a part exceeds n_cap")
    W = [w for w in parts[i] if partite_degree(host, parts, U + [w]) >= t]
    bound = find_a_set_bound(partite_degree(host, parts, U), t, n_cap, host.r, len(U))
    if bound is not None and len(W) < bound - 1e-9:
        raise BoundViolation(f"|W|={len(W)} below the counting bound {bound}")
    return W


# --------------------------------------------------------- random partitions


@dataclass(frozen=True)
class PartitionPlan:
    sizes: tuple[int, ...]
    seed: int
    parts: tuple[tuple[int, ...], ...]


def random_partition(host: RGraph, sizes: Sequence[int], seed: int) -> PartitionPlan:
    if any(s < 0 for s in sizes) or sum(sizes) != host.n:
        raise HypergraphError(f"sizes sum to {sum(sizes)}, expected {host.n}")
    order = list(range(host.n))
    rng(seed, "partition").shuffle(order)
    parts = []
    pos = 0
    for s in sizes:
        parts.append(tuple(sorted(order[pos : pos + s])))
        pos += s
    return PartitionPlan(tuple(sizes), seed, tuple(parts))


@dataclass(frozen=True)
class ConcentrationReport:
    passed: bool
    eps: float
    factor: float
    worst_ratio: float
    worst: tuple[int, tuple[int, ...]] | None
    violations: int
    rows: tuple[tuple[int, tuple[int, ...], int, int, float], ...] = field(repr=False)


def check_degree_concentration(
    host: RGraph, plan: PartitionPlan, eps: float | None = None, factor: float = 0.5
) -> ConcentrationReport:
    """Check d(v, Y_1..Y_{r-1}) >= factor*eps*prod|Y_i| for every vertex and
    every choice of parts with repetition.

    Rows hold (vertex, part signature, ordered count, edge count, ratio).
    ``eps`` defaults to the host's own minimum-degree density.
    """
    r, n = host.r, host.n
    delta = min_codegree(host, 1) if n else 0
    scale = n ** (r - 1)
    if eps is None:
        eps = delta / scale if scale else 0.0
    if eps <= 0 or delta < eps * scale - 1e-9:
        raise HypothesisError(f"minimum degree {delta} below eps*n^(r-1) = {eps * scale:g}")
    where = {}
    for i, p in enumerate(plan.parts):
        for v in p:
            where[v] = i
    k = len(plan.parts)
    sizes = [len(p) for p in plan.parts]
    sigs = _multisets(k, r - 1)
    rows = []
    worst = math.inf
    worst_at = None
    bad = 0
    for v in range(n):
        ordered: Counter = Counter()
        plain: Counter = Counter()
        for e in host.incidence[v]:
            sig = tuple(sorted(where[x] for x in e if x != v))
            mult = 1
            for c in Counter(sig).values():
                mult *= math.factorial(c)
            ordered[sig] += mult
            plain[sig] += 1
        for sig in sigs:
            cap = 1
            for j in sig:
                cap *= sizes[j]
            if cap == 0:
                continue
            ratio = ordered[sig] / (eps * cap)
            rows.append((v, sig, ordered[sig], plain[sig], ratio))
            if ratio < factor:
                bad += 1
            if ratio < worst:
                worst, worst_at = ratio, (v, sig)
    return ConcentrationReport(bad == 0, eps, factor, worst, worst_at, bad, tuple(rows))


def _multisets(k: int, size: int) -> list[tuple[int, ...]]:
    from itertools import combinations_with_replacement

    return list(combinations_with_replacement(range(k), size))
