"""Absorption machinery: transversal factor patterns, absorbers, the bipartite
template, absorbing sets, reachability diagnostics and the perfect-matching
pipeline."""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import networkx as nx

from .eprim import HypothesisError, maximal_crossing_matching
from .hcore import Edge, HypergraphError, RGraph, min_codegree, validate
from .seeding import derive_seed, rng

Copy = tuple[int, ...]  # copy[j] is the host vertex playing pattern vertex j (taken from part j)


class SearchBudget(RuntimeError):
    pass


class AbsorptionError(RuntimeError):
    pass


# ------------------------------------------------------------------ patterns


@dataclass(frozen=True)
class FactorPattern:
    F: RGraph
    name: str

    @property
    def k(self) -> int:
        return self.F.n

    @property
    def r(self) -> int:
        return self.F.r


def edge_pattern(r: int) -> FactorPattern:
    return FactorPattern(validate(r, r, [range(r)]), "edge")


def cycle_pattern(r: int, t: int) -> FactorPattern:
    """Loose cycle with t edges on (r-1)t vertices; edge i starts at (r-1)i."""
    if t < 3:
        raise HypergraphError("loose cycles need at least 3 edges")
    k = (r - 1) * t
    edges = [[((r - 1) * i + j) % k for j in range(r)] for i in range(t)]
    return FactorPattern(validate(r, k, edges), f"cycle{t}")


def part_map(parts: Sequence[Iterable[int]]) -> dict[int, int]:
    where: dict[int, int] = {}
    for i, p in enumerate(parts):
        for v in p:
            if v in where:
                raise HypergraphError("parts must be pairwise disjoint")
            where[v] = i
    return where


def is_copy(host: RGraph, F: FactorPattern, where: dict[int, int], x: Copy) -> bool:
    if len(x) != F.k or len(set(x)) != F.k:
        return False
    if any(where.get(v) != j for j, v in enumerate(x)):
        return False
    return all(host.has_edge(x[j] for j in f) for f in F.F.edges)


@dataclass(frozen=True)
class TransversalFactor:
    copies: tuple[Copy, ...]
    method: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(v for c in self.copies for v in c)


def verify_factor(
    host: RGraph, F: FactorPattern, where: dict[int, int], copies: Iterable[Copy], cover: Iterable[int]
) -> bool:
    seen: set[int] = set()
    for c in copies:
        if not is_copy(host, F, where, c) or seen.intersection(c):
            return False
        seen.update(c)
    return seen == set(cover)


# --------------------------------------------------------- factor searching


def _bfs_order(F: FactorPattern, start: int) -> list[int]:
    adj: dict[int, set[int]] = {j: set() for j in range(F.k)}
    for f in F.F.edges:
        for a in f:
            adj[a].update(f)
    order, seen, dq = [], {start}, deque([start])
    while dq:
        a = dq.popleft()
        order.append(a)
        for b in sorted(adj[a] - seen):
            seen.add(b)
            dq.append(b)
    order += [j for j in range(F.k) if j not in seen]
    return order


def copies_through(
    host: RGraph,
    F: FactorPattern,
    where: dict[int, int],
    v: int,
    avail: set[int],
) -> Iterator[Copy]:
    """Transversal copies of F using v and otherwise only vertices of ``avail``."""
    k = F.k
    p0 = where[v]
    order = _bfs_order(F, p0)
    pedges = [tuple(f) for f in F.F.edges]
    touching = {j: [f for f in pedges if j in f] for j in range(k)}
    x: list[int | None] = [None] * k
    x[p0] = v
    used = {v}

    def candidates(j: int):
        for f in touching[j]:
            anchors = [x[a] for a in f if x[a] is not None]
            if anchors:
                a0 = min(anchors, key=host.vertex_degree)
                out = set()
                for e in host.incidence[a0]:
                    if all(a in e for a in anchors):
                        for w in e:
                            if w in avail and w not in used and where.get(w) == j:
                                out.add(w)
                return sorted(out)
        return sorted(w for w in avail if where.get(w) == j and w not in used)

    def ok(j: int) -> bool:
        for f in touching[j]:
            vals = [x[a] for a in f]
            if all(w is not None for w in vals):
                if not host.has_edge(vals):
                    return False
        return True

    def rec(idx: int):
        if idx == k:
            yield tuple(x)  # type: ignore[arg-type]
            return
        j = order[idx]
        for w in candidates(j):
            x[j] = w
            used.add(w)
            if ok(j):
                yield from rec(idx + 1)
            used.discard(w)
            x[j] = None

    yield from rec(1)


def search_factor(
    host: RGraph,
    F: FactorPattern,
    where: dict[int, int],
    vertices: Iterable[int],
    *,
    node_limit: int = 200_000,
    order_seed: int | None = None,
) -> list[Copy] | None:
    """Backtracking transversal F-factor on exactly ``vertices``; None if none exists.

    Raises SearchBudget when the node limit is hit before a verdict.
    """
    left = set(vertices)
    counts = [0] * F.k
    for v in left:
        p = where.get(v)
        if p is None:
            return None
        counts[p] += 1
    if len(set(counts)) > 1:
        return None
    nodes = 0
    gen = rng(order_seed, "factor") if order_seed is not None else None
    out: list[Copy] = []

    def pick() -> tuple[int, list[Copy]] | None:
        best = None
        for v in sorted(u for u in left if where[u] == 0):
            opts = list(itertools.islice(copies_through(host, F, where, v, left), 64))
            if best is None or len(opts) < len(best[1]):
                best = (v, opts)
                if len(opts) <= 1:
                    break
        return best

    def rec() -> bool:
        nonlocal nodes
        if not left:
            return True
        nodes += 1
        if nodes > node_limit:
            raise SearchBudget("factor search exceeded its node limit")
        chosen = pick()
        if chosen is None:
            return False
        v, opts = chosen
        if len(opts) == 64:
            opts = list(copies_through(host, F, where, v, left))
        if gen is not None:
            gen.shuffle(opts)
        for c in opts:
            for w in c:
                left.discard(w)
            out.append(c)
            if rec():
                return True
            out.pop()
            left.update(c)
        return False

    return list(out) if rec() else None


def exhaustive_perfect_matching(host: RGraph, node_limit: int = 2_000_000) -> list[Edge] | None:
    """Definitive backtracking for a perfect matching of the whole host."""
    if host.n % host.r:
        return None
    G = nx.Graph()
    G.add_nodes_from(range(host.n))
    for e in host.edges:
        nx.add_path(G, e)
    if any(len(c) % host.r for c in nx.connected_components(G)):
        return None
    if host.r == 2:
        mate = nx.max_weight_matching(G, maxcardinality=True)
        return sorted(tuple(sorted(p)) for p in mate) if 2 * len(mate) == host.n else None
    left = set(range(host.n))
    out: list[Edge] = []
    nodes = 0

    def rec() -> bool:
        nonlocal nodes
        if not left:
            return True
        nodes += 1
        if nodes > node_limit:
            raise SearchBudget("matching search exceeded its node limit")
        best = None
        for v in left:
            opts = [e for e in host.incidence[v] if all(w in left for w in e)]
            if best is None or len(opts) < len(best[1]):
                best = (v, opts)
                if not opts:
                    return False
        for e in best[1]:
            left.difference_update(e)
            out.append(e)
            if rec():
                return True
            out.pop()
            left.update(e)
        return False

    return sorted(out) if rec() else None


# ------------------------------------------------------------------ absorbers


@dataclass(frozen=True)
class Absorber:
    target: frozenset[int]
    body: frozenset[int]
    body_factor: tuple[Copy, ...]
    full_factor: tuple[Copy, ...]
    k: int

    def verify(self, host: RGraph, F: FactorPattern, where: dict[int, int]) -> bool:
        if self.target & self.body or len(self.body) > self.k * F.k:
            return False
        return verify_factor(host, F, where, self.body_factor, self.body) and verify_factor(
            host, F, where, self.full_factor, self.body | self.target
        )


AbsorberSource = Callable[..., list[Absorber]]


class LayerStall(RuntimeError):
    def __init__(self, layer: int, message: str):
        super().__init__(message)
        self.layer = layer


def _lattice_absorber(
    host: RGraph,
    parts: Sequence[Sequence[int]],
    where: dict[int, int],
    S: Sequence[int],
    banned: set[int],
    eps: float,
    relax: bool,
) -> Absorber:
    r = host.r
    n = max(len(p) for p in parts)
    layers = [[v] for v in S]  # layers[j] grows along parts j, j+1, ...
    closing: list[Edge] = []
    used = set(S) | banned

    def deg(vs: Sequence[int]) -> int:
        a0 = min(vs, key=host.vertex_degree)
        want = set(vs)
        cnt = 0
        for e in host.incidence[a0]:
            if want.issubset(e) and not used.intersection(set(e) - want):
                if len({where.get(x) for x in e} - {None}) == r and all(x in where for x in e):
                    cnt += 1
        return cnt

    for i in range(1, r):
        thr = 1 if relax else max(1.0, eps * n ** (r - i - 1) / 3 ** (i + 1))
        W: dict[int, list[int]] = {}
        for j in range(r):
            p = (j + i) % r
            W[p] = [w for w in parts[p] if w not in used and deg(layers[j] + [w]) >= thr]
        if any(not W[p] for p in range(r)):
            raise LayerStall(i, f"empty high-degree set at layer {i}")
        Wsets = {p: set(ws) for p, ws in W.items()}
        pick = None
        pivot = min(range(r), key=lambda p: len(W[p]))
        for w in W[pivot]:
            for e in host.incidence[w]:
                if all(where.get(x) is not None and x in Wsets[where[x]] for x in e) and len(
                    {where[x] for x in e}
                ) == r:
                    pick = e
                    break
            if pick:
                break
        if pick is None:
            raise LayerStall(i, f"no edge crosses the high-degree sets at layer {i}")
        closing.append(pick)
        used.update(pick)
        for j in range(r):
            p = (j + i) % r
            layers[j].append(next(x for x in pick if where[x] == p))
    full = []
    for j in range(r):
        e = tuple(sorted(layers[j]))
        if not host.has_edge(e):
            raise LayerStall(r - 1, "final layer is not an edge")
        full.append(e)

    def as_copy(e: Iterable[int]) -> Copy:
        return tuple(sorted(e, key=lambda x: where[x]))

    body = frozenset(v for e in full for v in e) - frozenset(S)
    return Absorber(
        frozenset(S),
        body,
        tuple(as_copy(e) for e in closing),
        tuple(as_copy(e) for e in full),
        r - 1,
    )


def find_edge_absorbers(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    S: Iterable[int],
    forbidden: Iterable[int] = (),
    count: int = 1,
    eps: float | None = None,
    seed: int = 0,
) -> list[Absorber]:
    """Disjoint (edge, r-1)-absorbers of the transversal set S by layered growth.

    Layer i extends each partial set through the vertices whose joint degree
    clears eps*n^(r-i-1)/3^(i+1), then closes the layer with one crossing edge.
    Raises LayerStall when the first absorber cannot be built.
    """
    parts = [sorted(set(p)) for p in parts]
    where = part_map(parts)
    r = host.r
    S = sorted(set(S), key=lambda v: where.get(v, -1))
    if len(S) != r or sorted(where.get(v, -1) for v in S) != list(range(r)):
        raise HypergraphError("S must be a transversal set of the partition")
    n = max(len(p) for p in parts)
    if eps is None:
        worst = min(
            (sum(1 for e in host.incidence[v] if len({where.get(x) for x in e} - {None}) == r and all(x in where for x in e)) for p in parts for v in p),
            default=0,
        )
        eps = worst / n ** (r - 1) if n else 0.0
    banned = set(forbidden)
    out: list[Absorber] = []
    F = edge_pattern(r)
    for _ in range(count):
        try:
            a = _lattice_absorber(host, parts, where, S, banned, eps, relax=False)
        except LayerStall:
            try:
                a = _lattice_absorber(host, parts, where, S, banned, eps, relax=True)
            except LayerStall:
                if not out:
                    raise
                break
        assert a.verify(host, F, where)
        out.append(a)
        banned |= a.body
    return out


def swap_absorbers(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    F: FactorPattern,
    S: Iterable[int],
    forbidden: Iterable[int] = (),
    count: int = 1,
    seed: int = 0,
    tries: int = 400,
) -> list[Absorber]:
    """Disjoint (F, 1)-absorbers: single copies C with a factor on S + C."""
    parts = [sorted(set(p)) for p in parts]
    where = part_map(parts)
    S = frozenset(S)
    banned = set(forbidden) | set(S)
    gen = rng(seed, "swap", tuple(sorted(S)))
    out: list[Absorber] = []
    for _ in range(tries):
        if len(out) >= count:
            break
        avail = set(where) - banned
        starts = sorted(v for v in avail if where[v] == 0)
        if not starts:
            break
        v = gen.choice(starts)
        for c in itertools.islice(copies_through(host, F, where, v, avail), 8):
            body = frozenset(c)
            full = search_factor(host, F, where, body | S, node_limit=2000)
            if full is None:
                continue
            a = Absorber(S, body, (tuple(c),), tuple(full), 1)
            out.append(a)
            banned |= body
            break
    return out


# ------------------------------------------------------------------- template


@dataclass(frozen=True)
class Template:
    m: int
    beta: float
    X: tuple[int, ...]
    Y: tuple[int, ...]
    Z: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # (left node, right node)
    exhaustive: bool
    samples: int

    @property
    def max_degree(self) -> int:
        deg: dict[int, int] = {}
        for a, b in self.edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return max(deg.values(), default=0)

    def matching_without(self, removed: Iterable[int]) -> dict[int, int] | None:
        """Perfect matching of (X minus removed) + Y into Z, as left -> right."""
        removed = set(removed)
        left = [a for a in self.X if a not in removed] + list(self.Y)
        return _bipartite_pm(left, self.Z, [(a, b) for a, b in self.edges if a not in removed])

    def to_dict(self) -> dict:
        return {"m": self.m, "beta": self.beta, "X": list(self.X), "Y": list(self.Y), "Z": list(self.Z),
                "edges": [list(e) for e in self.edges]}


def _bipartite_pm(left: Sequence[int], right: Sequence[int], edges) -> dict[int, int] | None:
    if len(left) != len(right):
        return None
    g = nx.Graph()
    g.add_nodes_from(left, bipartite=0)
    g.add_nodes_from(right, bipartite=1)
    g.add_edges_from(edges)
    mate = nx.bipartite.hopcroft_karp_matching(g, top_nodes=list(left))
    if any(a not in mate for a in left):
        return None
    return {a: mate[a] for a in left}


def build_template(m: int, beta: float, seed: int = 0, *, degree: int = 6, samples: int = 50, retries: int = 5) -> Template:
    """Bounded-degree bipartite graph whose matchings survive deleting any
    beta*m vertices of its flexible side; verified exhaustively for m <= 6."""
    if m < 1 or not 0 < beta < 1:
        raise HypergraphError("need m >= 1 and beta in (0, 1)")
    nx_ = m + max(1, math.ceil(beta * m))
    X = tuple(range(nx_))
    Y = tuple(range(nx_, nx_ + 2 * m))
    Z = tuple(range(nx_ + 2 * m, nx_ + 5 * m))
    left = X + Y
    for attempt in range(retries):
        gen = rng(seed, "template", attempt)
        deg = {a: 0 for a in left + Z}
        edges = set()
        # a perfect matching of Y plus m of X into Z keeps the robust part easy to check
        for z in Z:
            pool = [a for a in left if deg[a] < 40]
            for a in gen.sample(pool, min(degree, len(pool))):
                edges.add((a, z))
                deg[a] += 1
                deg[z] += 1
        for a in left:
            while deg[a] < 2:
                z = gen.choice([z for z in Z if deg[z] < 40])
                if (a, z) not in edges:
                    edges.add((a, z))
                    deg[a] += 1
                    deg[z] += 1
        T = Template(m, beta, X, Y, Z, tuple(sorted(edges)), False, 0)
        if T.max_degree > 40:
            continue
        exhaustive = m <= 6
        if exhaustive:
            subsets = itertools.combinations(X, nx_ - m)
        else:
            subsets = (tuple(gen.sample(X, nx_ - m)) for _ in range(samples))
        count = 0
        good = True
        for removed in subsets:
            count += 1
            if T.matching_without(removed) is None:
                good = False
                break
        if good:
            return Template(m, beta, X, Y, Z, T.edges, exhaustive, count)
    raise AbsorptionError(f"template construction failed after {retries} attempts")


# ------------------------------------------------------------- absorbing sets


@dataclass
class AbsorbingSet:
    host: RGraph = field(repr=False)
    F: FactorPattern
    parts: tuple[tuple[int, ...], ...]
    A: frozenset[int]
    mode: str  # "template" or "pool"
    capacity: int  # leftover transversal sets per absorption
    template: Template | None = None
    X: tuple[tuple[int, ...], ...] = ()
    Y: tuple[tuple[int, ...], ...] = ()
    Z: tuple[tuple[Copy, ...], ...] = ()  # Z[i][z] has None at position i
    gadgets: dict = field(default_factory=dict)  # (i, template edge) -> Absorber
    pool: tuple[Absorber, ...] = ()
    spot_checks: int = 0

    @property
    def where(self) -> dict[int, int]:
        return part_map(self.parts)

    def absorb(self, U: Iterable[int], *, seed: int = 0) -> tuple[list[Copy], str]:
        """Transversal F-factor of A + U for a balanced U outside A."""
        U = frozenset(U)
        where = self.where
        if U & self.A:
            raise AbsorptionError("leftover meets the absorbing set")
        counts = [0] * self.F.k
        for v in U:
            counts[where[v]] += 1
        if len(set(counts)) > 1:
            raise AbsorptionError("leftover is not balanced")
        if counts[0] > self.capacity:
            raise AbsorptionError(f"leftover of {counts[0]} per part exceeds capacity {self.capacity}")
        route = self._absorb_template if self.mode == "template" else self._absorb_pool
        copies = route(U, where, seed)
        method = self.mode
        if copies is None:
            copies = search_factor(self.host, self.F, where, self.A | U, node_limit=400_000, order_seed=seed)
            method = "search"
        if copies is None or not verify_factor(self.host, self.F, where, copies, self.A | U):
            raise AbsorptionError("no transversal factor on A + U")
        return sorted(copies), method

    # pool realization: route each leftover transversal set to its own absorber
    def _absorb_pool(self, U: frozenset[int], where, seed: int) -> list[Copy] | None:
        host, F = self.host, self.F
        if not U:
            return [c for a in self.pool for c in a.body_factor]
        by_part = [sorted(v for v in U if where[v] == j) for j in range(F.k)]
        gen = rng(seed, "pool-split")
        for attempt in range(24):
            cols = [list(p) for p in by_part]
            if attempt:
                for c in cols[1:]:
                    gen.shuffle(c)
            groups = [frozenset(col[i] for col in cols) for i in range(len(cols[0]))]
            edges = []
            fits: dict[tuple[int, int], list[Copy]] = {}
            for gi, S in enumerate(groups):
                for ai, a in enumerate(self.pool):
                    fac = search_factor(host, F, where, a.body | S, node_limit=3000)
                    if fac is not None:
                        fits[gi, ai] = fac
                        edges.append((("g", gi), ("a", ai)))
            mate = _bipartite_pm_partial([("g", i) for i in range(len(groups))], edges)
            if mate is None:
                continue
            copies: list[Copy] = []
            taken = set()
            for gi in range(len(groups)):
                ai = mate[("g", gi)][1]
                taken.add(ai)
                copies.extend(fits[gi, ai])
            for ai, a in enumerate(self.pool):
                if ai not in taken:
                    copies.extend(a.body_factor)
            return copies
        return None

    # template realization: fans into X, template matching, gadget factors
    def _absorb_template(self, U: frozenset[int], where, seed: int) -> list[Copy] | None:
        host, F, T = self.host, self.F, self.template
        assert T is not None
        k = F.k
        b = len(T.X) - T.m
        mprime = len(U) // k
        extra = b - (k - 1) * mprime
        if extra < 0:
            return None
        Xall = set(v for xs in self.X for v in xs)
        fans: list[Copy] = []
        used: set[int] = set()

        def fan(v: int, pool: set[int]) -> Copy | None:
            for c in copies_through(host, F, where, v, pool - used):
                return c
            return None

        for v in sorted(U):
            c = fan(v, Xall)
            if c is None:
                return None
            fans.append(c)
            used.update(c)
        got = 0
        for v in self.X[0]:
            if got == extra:
                break
            if v in used:
                continue
            c = fan(v, Xall - {v} | {v})
            if c is None:
                continue
            fans.append(c)
            used.update(c)
            got += 1
        if got < extra:
            return None
        copies = list(fans)
        for i in range(k):
            gone = [a for a, v in zip(T.X, self.X[i]) if v in used]
            if len(gone) != b:
                return None
            mate = T.matching_without(gone)
            if mate is None:
                return None
            matched = {(a, z) for a, z in mate.items()}
            for e in T.edges:
                g = self.gadgets[i, e]
                copies.extend(g.full_factor if e in matched else g.body_factor)
        return copies

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "capacity": self.capacity,
            "A": sorted(self.A),
            "parts": [list(p) for p in self.parts],
        }
        if self.template is not None:
            out["template"] = self.template.to_dict()
            out["X"] = [list(x) for x in self.X]
            out["Y"] = [list(y) for y in self.Y]
            out["Z"] = [[list(c) for c in zs] for zs in self.Z]
            out["gadgets"] = [
                {"i": i, "edge": list(e), "body": sorted(g.body)} for (i, e), g in sorted(self.gadgets.items())
            ]
        out["pool"] = [{"body": sorted(a.body), "factor": [list(c) for c in a.body_factor]} for a in self.pool]
        return out


def _bipartite_pm_partial(left, edges) -> dict | None:
    """Matching saturating ``left`` (values are right nodes), or None."""
    if not left:
        return {}
    g = nx.Graph()
    g.add_nodes_from(left)
    g.add_edges_from(edges)
    for a in left:
        if a not in g or g.degree(a) == 0:
            return None
    comps_ok = True
    mate = nx.bipartite.hopcroft_karp_matching(g, top_nodes=list(left)) if comps_ok else {}
    if any(a not in mate for a in left):
        return None
    return {a: mate[a] for a in left}


def template_fits(part_size: int, k: int, m: int, beta: float, edges: int, body_per_part: int) -> bool:
    xs = m + max(1, math.ceil(beta * m))
    need = xs + 2 * m + 3 * m * (k - 1) + k * edges * body_per_part
    return need <= part_size


def assemble_absorbing_set(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    F: FactorPattern,
    gamma: float = 0.02,
    eta: float = 0.1,
    absorber_source: AbsorberSource | None = None,
    seed: int = 0,
    *,
    mode: str = "auto",
    beta: float = 0.5,
    spot_checks: int = 10,
) -> AbsorbingSet:
    """Absorbing set of size <= eta*N for leftovers of up to ceil(gamma*n) per part.

    ``mode="template"`` wires fans, the bipartite template and one gadget per
    template edge and part; ``mode="pool"`` uses disjoint compact absorbers
    with leftover sets routed by bipartite matching. "auto" takes the
    template whenever its vertex budget fits the parts.
    """
    parts = tuple(tuple(sorted(set(p))) for p in parts)
    where = part_map(parts)
    k = F.k
    if len(parts) != k:
        raise HypergraphError(f"pattern has {k} vertices but {len(parts)} parts were given")
    sizes = {len(p) for p in parts}
    if len(sizes) != 1:
        raise HypergraphError("parts must have equal sizes")
    n_p = sizes.pop()
    N = k * n_p
    cap = max(1, math.ceil(gamma * n_p))
    source = absorber_source or (lambda h, ps, FF, S, forbidden, count, seed: swap_absorbers(h, ps, FF, S, forbidden, count, seed))
    if mode in ("auto", "template"):
        T = _template_for(n_p, k, beta, cap, eta, seed)
        if T is not None:
            return _assemble_template(host, parts, where, F, T, cap, source, seed, spot_checks)
        if mode == "template":
            raise HypothesisError(
                f"capacity {cap} per part cannot be met by a template inside parts of {n_p} within eta"
            )
    q = int(eta * n_p)
    if q < cap:
        raise HypothesisError(
            f"capacity {cap} per part exceeds the {q} absorbers that fit in eta*N = {eta * N:g} vertices"
        )
    gen = rng(seed, "pool")
    pool: list[Absorber] = []
    banned: set[int] = set()
    stalls = 0
    while len(pool) < q and stalls < 20 * q:
        avail = [sorted(set(p) - banned) for p in parts]
        if any(not p for p in avail):
            break
        S = [gen.choice(p) for p in avail]
        got = source(host, parts, F, S, banned | set(S), 1, derive_seed(seed, "src", len(pool), stalls))
        if not got:
            stalls += 1
            continue
        a = got[0]
        if a.body & banned:
            stalls += 1
            continue
        pool.append(a)
        banned |= a.body
    if len(pool) < cap:
        raise AbsorptionError(f"found only {len(pool)} disjoint absorbers, need {cap}")
    A = frozenset(banned)
    out = AbsorbingSet(host, F, parts, A, "pool", cap, pool=tuple(pool))
    out.spot_checks = _spot_check(out, spot_checks, seed)
    return out


def _template_for(n_p: int, k: int, beta: float, cap: int, eta: float, seed: int) -> Template | None:
    # smallest m reaching the capacity, sparsest template that verifies and fits
    m = 1
    while max(1, math.ceil(beta * m)) // (k - 1) < cap:
        m += 1
        if m > n_p:
            return None
    for degree in (3, 4, 6):
        try:
            T = build_template(m, beta, seed, degree=degree)
        except AbsorptionError:
            continue
        need = len(T.X) + 2 * m + 3 * m * (k - 1) + k * len(T.edges)
        if need <= n_p and need * k <= eta * k * n_p:
            return T
    return None


def _assemble_template(host, parts, where, F, T, cap, source, seed, spot_checks) -> AbsorbingSet:
    k = F.k
    m = T.m
    b = len(T.X) - m
    gen = rng(seed, "template-sets")
    free = [list(p) for p in parts]
    for p in free:
        gen.shuffle(p)
        # fans land in X, so X takes the best-connected vertices
        p.sort(key=lambda v: -host.vertex_degree(v))
    X = tuple(tuple(sorted(free[i][: len(T.X)])) for i in range(k))
    Y = tuple(tuple(sorted(free[i][len(T.X) : len(T.X) + 2 * m])) for i in range(k))
    offs = [len(T.X) + 2 * m] * k
    Z = []
    for i in range(k):
        tuples = []
        for _ in range(3 * m):
            c = []
            for j in range(k):
                if j == i:
                    c.append(None)
                else:
                    c.append(free[j][offs[j]])
                    offs[j] += 1
            tuples.append(tuple(c))
        Z.append(tuple(tuples))
    core = set(v for xs in X for v in xs) | set(v for ys in Y for v in ys)
    core |= {v for zs in Z for c in zs for v in c if v is not None}
    banned = set(core)
    gadgets = {}
    node = {a: ("X", idx) for idx, a in enumerate(T.X)} | {a: ("Y", idx) for idx, a in enumerate(T.Y)}
    zpos = {z: idx for idx, z in enumerate(T.Z)}
    for i in range(k):
        for a, z in T.edges:
            kind, idx = node[a]
            va = X[i][idx] if kind == "X" else Y[i][idx]
            S = [v for v in Z[i][zpos[z]] if v is not None] + [va]
            got = source(host, parts, F, S, banned - set(S), 1, derive_seed(seed, "gadget", i, a, z))
            if not got or got[0].body & banned:
                raise AbsorptionError(f"no gadget for template edge {(a, z)} in part {i}")
            gadgets[i, (a, z)] = got[0]
            banned |= got[0].body
    out = AbsorbingSet(host, F, parts, frozenset(banned), "template", min(cap, b // (k - 1)), T, X, Y, tuple(Z), gadgets)
    out.spot_checks = _spot_check(out, spot_checks, seed)
    return out


def _spot_check(absorbing: AbsorbingSet, samples: int, seed: int) -> int:
    gen = rng(seed, "spot")
    outside = [sorted(set(p) - absorbing.A) for p in absorbing.parts]
    done = 0
    for s in range(samples):
        c = gen.randint(0, min(absorbing.capacity, min(len(p) for p in outside)))
        U = [v for p in outside for v in gen.sample(p, c)]
        absorbing.absorb(U, seed=s)
        done += 1
    return done


# ------------------------------------------------------------- reachability


@dataclass(frozen=True)
class ReachWitness:
    u: int
    v: int
    S: frozenset[int]
    factor_u: tuple[Copy, ...]
    factor_v: tuple[Copy, ...]
    m: int
    k: int

    def verify(self, host: RGraph, F: FactorPattern, where: dict[int, int]) -> bool:
        if self.u in self.S or self.v in self.S or len(self.S) > self.k * F.k - 1:
            return False
        return verify_factor(host, F, where, self.factor_u, self.S | {self.u}) and verify_factor(
            host, F, where, self.factor_v, self.S | {self.v}
        )


def _swap(c: Copy, a: int, b: int) -> Copy:
    return tuple(b if x == a else x for x in c)


def reach_witness(
    host: RGraph,
    F: FactorPattern,
    where: dict[int, int],
    u: int,
    v: int,
    avoid: set[int],
    m: int,
    k: int,
    limit: int = 200,
) -> ReachWitness | None:
    avail = set(where) - avoid - {u, v}
    if u == v:
        for c in copies_through(host, F, where, u, avail):
            S = frozenset(c) - {u}
            return ReachWitness(u, v, S, (c,), (c,), m, 1)
        return None
    # one copy in which u and v are interchangeable
    for c in itertools.islice(copies_through(host, F, where, u, avail), limit):
        if is_copy(host, F, where, _swap(c, u, v)):
            return ReachWitness(u, v, frozenset(c) - {u}, (c,), (_swap(c, v, u) if False else _swap(c, u, v),), m, 1)
    if k < 2:
        return None
    # two copies joined through a pivot x from the same part
    for a in itertools.islice(copies_through(host, F, where, u, avail), limit):
        rest = avail - set(a)
        for b in itertools.islice(copies_through(host, F, where, v, rest), limit):
            pool = rest - set(b)
            for x in sorted(w for w in pool if where[w] == where[u]):
                ax, bx = _swap(a, u, x), _swap(b, v, x)
                if is_copy(host, F, where, ax) and is_copy(host, F, where, bx):
                    S = (frozenset(a) | frozenset(b) | {x}) - {u, v}
                    return ReachWitness(u, v, S, (a, bx), (ax, b), m, 2)
    return None


@dataclass(frozen=True)
class ReachReport:
    reachable: bool
    witnesses: tuple[ReachWitness, ...]
    failing_W: tuple[int, ...] | None
    trials: int


def _sample_W(gen, parts, m: int, skip: set[int]) -> set[int]:
    W: set[int] = set()
    for p in parts:
        pool = [w for w in p if w not in skip]
        W.update(gen.sample(pool, gen.randint(0, min(m, len(pool)))))
    return W


def check_reachable(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    F: FactorPattern,
    u: int,
    v: int,
    m: int,
    k: int,
    trials: int = 10,
    seed: int = 0,
) -> ReachReport:
    """Sampled test of (F, m, k)-reachability; a refutation is a concrete W."""
    parts = [sorted(set(p)) for p in parts]
    where = part_map(parts)
    if where.get(u) is None or where.get(u) != where.get(v):
        raise HypergraphError("u and v must lie in the same part")
    gen = rng(seed, "reach", u, v)
    wits = []
    for _ in range(trials):
        W = _sample_W(gen, parts, m, {u, v})
        w = reach_witness(host, F, where, u, v, W, m, k)
        if w is None:
            return ReachReport(False, tuple(wits), tuple(sorted(W)), trials)
        wits.append(w)
    return ReachReport(True, tuple(wits), None, trials)


def transitivity_compose(
    w1: ReachWitness, w2: ReachWitness, host: RGraph, F: FactorPattern, parts: Sequence[Iterable[int]]
) -> ReachWitness:
    """Join witnesses for (x, u) and (y, u) through the pivot u into one for (x, y)."""
    where = part_map(parts)
    if w1.v != w2.v:
        raise HypergraphError("witnesses must share their pivot as second endpoint")
    u = w1.v
    if w1.S & w2.S or u in w1.S | w2.S or w1.u in w2.S or w2.u in w1.S or w1.u == w2.u:
        raise HypergraphError("witness sets are not disjoint")
    S = w1.S | w2.S | {u}
    # S + x: x with w1's body, u with w2's body; S + y symmetrically
    fx = w1.factor_u + w2.factor_v
    fy = w2.factor_u + w1.factor_v
    out = ReachWitness(w1.u, w2.u, S, fx, fy, min(w1.m, w2.m) - w2.k, w1.k + w2.k)
    if not out.verify(host, F, where):
        raise HypergraphError("composed witness does not verify")
    return out


@dataclass(frozen=True)
class MergeReport:
    hypothesis_rate: float
    conclusion_rate: float
    samples: int


def merge_closed_check(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    F: FactorPattern,
    U1: Iterable[int],
    U2: Iterable[int],
    m: int,
    k: int,
    trials: int = 10,
    seed: int = 0,
) -> MergeReport:
    """Sampled pass rates for the merge hypothesis and for closedness of U1 + U2."""
    parts = [sorted(set(p)) for p in parts]
    where = part_map(parts)
    U1, U2 = sorted(set(U1)), sorted(set(U2))
    if set(U1) & set(U2):
        raise HypergraphError("U1 and U2 must be disjoint")
    idx = {where[x] for x in U1 + U2}
    if len(idx) != 1:
        raise HypergraphError("U1 and U2 must lie in one part")
    i = idx.pop()
    gen = rng(seed, "merge")
    t = F.k
    hyp = 0
    for _ in range(trials):
        v = gen.choice(U2)
        W = _sample_W(gen, parts, max(0, m - k * t), {v})
        avail = set(where) - W
        ok = False
        for x in U1:
            if x in W:
                continue
            for c1 in itertools.islice(copies_through(host, F, where, x, avail - {v}), 20):
                for c2 in itertools.islice(copies_through(host, F, where, v, avail - set(c1)), 20):
                    if all(
                        reach_witness(host, F, where, c1[j], c2[j], W | set(c1) | set(c2) - {c1[j], c2[j]}, m, k)
                        is not None
                        for j in range(t)
                        if j != i
                    ):
                        ok = True
                        break
                if ok:
                    break
            if ok:
                break
        hyp += ok
    merged = U1 + U2
    conc = 0
    mm, kk = max(0, m - 10 * k * t), 6 * k * t
    for s in range(trials):
        a, b = gen.sample(merged, 2) if len(merged) > 1 else (merged[0], merged[0])
        rep = check_reachable(host, parts, F, a, b, mm, kk, trials=1, seed=derive_seed(seed, "c", s))
        conc += rep.reachable
    return MergeReport(hyp / trials, conc / trials, trials)


# ---------------------------------------------------------- matching pipeline


@dataclass
class PMResult:
    matching: list[Edge] | None
    method: str
    diagnostics: dict


def verify_perfect_matching(host: RGraph, edges: Iterable[Edge]) -> bool:
    edges = list(edges)
    seen: set[int] = set()
    for e in edges:
        if not host.has_edge(e) or seen.intersection(e):
            return False
        seen.update(e)
    return len(seen) == host.n and len(edges) * host.r == host.n


def transversal_matching(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    *,
    gamma: float = 0.02,
    eta: float = 0.1,
    seed: int = 0,
    absorber_source: AbsorberSource | None = None,
) -> tuple[list[Edge], dict]:
    """Perfect matching of the r-partite subgraph: absorbing set, greedy
    crossing matching on the rest, leftover absorbed."""
    r = host.r
    parts = [sorted(set(p)) for p in parts]
    F = edge_pattern(r)
    where = part_map(parts)
    diag: dict = {}
    A = assemble_absorbing_set(host, parts, F, gamma, eta, absorber_source, seed, spot_checks=0)
    diag["absorbing"] = {"mode": A.mode, "size": len(A.A), "capacity": A.capacity}
    rest = [[v for v in p if v not in A.A] for p in parts]
    M = maximal_crossing_matching(host, rest, passes=4)
    covered = {v for e in M for v in e}
    U = [v for p in rest for v in p if v not in covered]
    per_part = len(U) // r
    diag["leftover_per_part"] = per_part
    if per_part > A.capacity:
        M, U = _repair(host, F, where, M, U, A.capacity, seed)
        diag["repaired_leftover"] = len(U) // r
    copies, how = A.absorb(U, seed=seed)
    diag["absorb"] = how
    edges = sorted(M + [tuple(sorted(c)) for c in copies])
    return edges, diag


def _repair(host, F, where, M, U, cap, seed):
    """Free matching edges near the leftover and re-solve that window exactly."""
    M = list(M)
    U = list(U)
    gen = rng(seed, "repair")
    r = host.r
    for rounds in range(6):
        if len(U) // r <= cap:
            break
        near = set()
        for v in U:
            for e in host.incidence[v]:
                near.update(e)
        freed = [e for e in M if set(e) & near]
        gen.shuffle(freed)
        freed = freed[: 3 * (rounds + 1) * r]
        window = set(U) | {v for e in freed for v in e}
        keep = [e for e in M if e not in freed]
        sub = maximal_crossing_matching(
            host, [[v for v in sorted(window) if where[v] == j] for j in range(r)], passes=6
        )
        left = [v for v in window if not any(v in e for e in sub)]
        if len(left) < len(U):
            M, U = keep + sub, left
    return M, U


def perfect_matching(
    host: RGraph,
    eps: float = 0.3,
    alpha: float | None = None,
    gamma: float = 0.02,
    eta: float = 0.1,
    seed: int = 0,
    *,
    retries: int = 5,
    exhaustive_below: int = 0,
    strict: bool = False,
) -> PMResult:
    """Perfect matching via random balanced partition and absorption, with an
    exhaustive fallback when every attempt fails.

    Hosts with at most ``exhaustive_below`` vertices skip the pipeline.
    """
    r, n = host.r, host.n
    if n % r:
        raise HypergraphError(f"r={r} does not divide n={n}")
    delta = min_codegree(host, 1) if n else 0
    met = delta >= eps * n ** (r - 1)
    diag: dict = {"min_degree": delta, "hypothesis_met": met, "attempts": []}
    if strict and not met:
        raise HypothesisError(f"minimum degree {delta} below eps*n^(r-1) = {eps * n ** (r - 1):g}")
    if n == 0:
        return PMResult([], "trivial", diag)
    if n > exhaustive_below:
        for attempt in range(retries):
            s = derive_seed(seed, "pm", attempt)
            order = list(range(n))
            rng(s, "partition").shuffle(order)
            parts = [sorted(order[i * (n // r) : (i + 1) * (n // r)]) for i in range(r)]
            # small parts cannot host even one absorber at the default eta; raise it to fit
            n_p = n // r
            eta_run = max(eta, max(1, math.ceil(gamma * n_p)) / n_p)
            try:
                edges, d = transversal_matching(host, parts, gamma=gamma, eta=eta_run, seed=s)
            except (AbsorptionError, HypothesisError, SearchBudget) as exc:
                diag["attempts"].append({"seed": s, "error": str(exc)})
                continue
            d["seed"] = s
            d["eta"] = eta_run
            diag["attempts"].append(d)
            if verify_perfect_matching(host, edges):
                return PMResult(edges, "absorption", diag)
    try:
        pm = exhaustive_perfect_matching(host)
    except SearchBudget as exc:
        diag["fallback"] = str(exc)
        return PMResult(None, "failed", diag)
    if pm is None:
        return PMResult(None, "none", diag)
    return PMResult(pm, "exhaustive", diag)
