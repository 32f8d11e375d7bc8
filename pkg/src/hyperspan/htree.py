"""Linear hypertrees and the structural decompositions the embedders consume."""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .hcore import Edge, HypergraphError, RGraph, validate


class TreeError(HypergraphError):
    pass


# ------------------------------------------------------------------ basics


def _degrees(edges: Iterable[Edge]) -> Counter:
    deg: Counter = Counter()
    for e in edges:
        deg.update(e)
    return deg


def _components(vertices: Iterable[int], edges: Iterable[Edge]) -> int:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = len(parent)
    for e in edges:
        root = find(e[0])
        for v in e[1:]:
            other = find(v)
            if other != root:
                parent[other] = root
                comps -= 1
    return comps


def _leaf_edges(r: int, edges: Iterable[Edge], deg) -> list[Edge]:
    return sorted(e for e in edges if sum(1 for v in e if deg[v] == 1) >= r - 1)


@dataclass(frozen=True)
class Hypertree:
    graph: RGraph
    degrees: tuple[int, ...]
    leaf_edges: tuple[Edge, ...]
    is_forest: bool
    components: int

    @property
    def r(self) -> int:
        return self.graph.r

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.graph.edges

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)


def validate_hypertree(g: RGraph, allow_forest: bool = False) -> Hypertree:
    """Accept exactly the linear, acyclic (and, unless allowed, connected) r-graphs."""
    seen: dict[tuple[int, int], Edge] = {}
    for e in g.edges:
        for pair in itertools.combinations(e, 2):
            if pair in seen:
                raise TreeError(f"non-linear: edges {list(seen[pair])} and {list(e)} share two vertices")
            seen[pair] = e
    c = _components(range(g.n), g.edges)
    if (g.n - c) % (g.r - 1) or g.m != (g.n - c) // (g.r - 1):
        raise TreeError(f"edge-count mismatch: {g.m} edges, {g.n} vertices, {c} components")
    if c > 1 and not allow_forest:
        raise TreeError(f"disconnected: {c} components")
    deg = [0] * g.n
    for e in g.edges:
        for v in e:
            deg[v] += 1
    return Hypertree(g, tuple(deg), tuple(_leaf_edges(g.r, g.edges, deg)), allow_forest, c)


def leaf_edges(tree: Hypertree) -> list[Edge]:
    return list(tree.leaf_edges)


def matching_leaf_set(tree: Hypertree, M: Iterable[Iterable[int]]) -> set[int]:
    """Degree-one vertices of a matching of leaf-edges."""
    M = [tuple(sorted(e)) for e in M]
    used: set[int] = set()
    leaves = set(tree.leaf_edges)
    for e in M:
        if e not in leaves:
            raise TreeError(f"{list(e)} is not a leaf-edge")
        if used.intersection(e):
            raise TreeError("not a matching")
        used.update(e)
    return {v for e in M for v in e if tree.degrees[v] == 1}


# ------------------------------------------------------------- linear paths


@dataclass(frozen=True)
class LinearPath:
    """Vertices v_0..v_{(r-1)l}; edge i is v_{(r-1)(i-1)}..v_{(r-1)i}. Ends are v_0, v_last."""

    r: int
    vertices: tuple[int, ...]

    @property
    def length(self) -> int:
        return (len(self.vertices) - 1) // (self.r - 1)

    @property
    def edges(self) -> tuple[Edge, ...]:
        k = self.r - 1
        return tuple(tuple(sorted(self.vertices[k * i : k * (i + 1) + 1])) for i in range(self.length))

    @property
    def ends(self) -> tuple[int, int]:
        return self.vertices[0], self.vertices[-1]

    @property
    def internal(self) -> tuple[int, ...]:
        return self.vertices[1:-1]

    def to_dict(self) -> dict:
        return {"vertices": list(self.vertices), "u": self.vertices[0], "v": self.vertices[-1]}


def path_from_edges(r: int, edges: Sequence[Edge], u: int, v: int) -> LinearPath:
    """Order the vertices of consecutive linear edges into a u--v path."""
    seq = [u]
    for i, e in enumerate(edges):
        start = seq[-1]
        end = v if i == len(edges) - 1 else (set(e) & set(edges[i + 1])).pop()
        middle = sorted(x for x in e if x != start and x != end)
        seq.extend(middle)
        seq.append(end)
    return LinearPath(r, tuple(seq))


def is_linear_path(path: LinearPath) -> bool:
    vs = path.vertices
    if len(vs) < path.r or (len(vs) - 1) % (path.r - 1) or len(set(vs)) != len(vs):
        return False
    return True


def is_bare_path(r: int, edges: Iterable[Edge], path: LinearPath) -> bool:
    """Internal vertices of ``path`` touch no edge of ``edges`` outside the path."""
    if path.length < 2 or not is_linear_path(path):
        return False
    edges = set(edges)
    pe = set(path.edges)
    if not pe <= edges:
        return False
    internal = set(path.internal)
    return all(not internal.intersection(e) for e in edges - pe)


def _bare_runs(r: int, edges: Sequence[Edge]) -> list[tuple[list[Edge], int, int]]:
    """Maximal bare paths as (edges in order, u, v)."""
    deg = _degrees(edges)
    at: dict[int, list[Edge]] = defaultdict(list)
    for e in edges:
        for v in e:
            at[v].append(e)

    def ones(e, skip=()):
        return sum(1 for x in e if deg[x] == 1 and x not in skip)

    def end_capable(f, j):
        return ones(f, (j,)) >= r - 2

    joints = {
        j for j, es in at.items() if deg[j] == 2 and all(end_capable(f, j) for f in es)
    }

    def internal_capable(e):
        return ones(e) == r - 2 and sum(1 for x in e if deg[x] == 2) == 2

    link: dict[int, list[tuple[int, Edge]]] = defaultdict(list)
    for e in edges:
        if internal_capable(e):
            js = [x for x in e if deg[x] == 2]
            if all(j in joints for j in js):
                a, b = js
                link[a].append((b, e))
                link[b].append((a, e))

    def outer_end(f, j):
        rest = [x for x in f if x != j]
        heavy = [x for x in rest if deg[x] != 1]
        return heavy[0] if heavy else min(rest)

    runs = []
    done: set[int] = set()
    for start in sorted(joints):
        if start in done or len(link[start]) == 2:
            continue
        chain = [start]
        inner: list[Edge] = []
        done.add(start)
        cur = start
        while True:
            nxt = [(b, e) for b, e in link[cur] if b not in done]
            if not nxt:
                break
            b, e = nxt[0]
            inner.append(e)
            chain.append(b)
            done.add(b)
            cur = b
        first_in = inner[0] if inner else None
        last_in = inner[-1] if inner else None
        head = [f for f in at[chain[0]] if f != first_in]
        tail = [f for f in at[chain[-1]] if f != last_in]
        if len(chain) == 1:
            head, tail = [at[start][0]], [at[start][1]]
        e0, ek = head[0], tail[0]
        path = [e0] + inner + [ek]
        runs.append((path, outer_end(e0, chain[0]), outer_end(ek, chain[-1])))
    return runs


def bare_path_pieces(r: int, edges: Sequence[Edge], m: int, gap: int = 0) -> list[LinearPath]:
    """Edge-disjoint bare paths of length ``m`` cut from the maximal bare paths.

    With ``gap`` > 0 consecutive pieces of one run skip that many edges, which
    keeps them vertex-disjoint.
    """
    if m < 2:
        raise TreeError("bare paths have length at least 2")
    out = []
    for path, u, v in _bare_runs(r, edges):
        full = path_from_edges(r, path, u, v)
        k = r - 1
        start = 0
        while start + m <= len(path):
            seg = full.vertices[k * start : k * (start + m) + 1]
            out.append(LinearPath(r, seg))
            start += m + gap
    return out


def bare_paths(tree: Hypertree, m: int) -> list[LinearPath]:
    return bare_path_pieces(tree.r, tree.edges, m)


# ------------------------------------------------- pendant stars, caterpillars


@dataclass(frozen=True)
class PendantStar:
    center: Edge
    root: int
    leaf_edges: tuple[Edge, ...]
    z: tuple[int, ...]  # non-root centre vertices in canonical order
    leaf_counts: tuple[int, ...]

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.center).union(*self.leaf_edges)

    @property
    def key(self) -> tuple:
        return ("star", self.leaf_counts)


@dataclass(frozen=True)
class Caterpillar:
    central_path: LinearPath
    leaf_edges: tuple[Edge, ...]
    z: tuple[int, ...]  # internal path vertices from u to v
    leaf_counts: tuple[int, ...]

    @property
    def ends(self) -> tuple[int, int]:
        return self.central_path.ends

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.central_path.vertices).union(*self.leaf_edges)

    @property
    def key(self) -> tuple:
        return ("caterpillar", self.leaf_counts)


@dataclass(frozen=True)
class Decomposition:
    case: str  # "stars" or "caterpillars"
    items: tuple
    disjoint_found: int
    bound: float
    classes: int
    pruned_edges: tuple[Edge, ...] = field(repr=False)


def pendant_stars(tree: Hypertree) -> list[PendantStar]:
    """All non-trivial pendant stars, one per leaf-edge of the pruned tree."""
    r = tree.r
    leaves = set(tree.leaf_edges)
    pruned = [e for e in tree.edges if e not in leaves]
    pdeg = _degrees(pruned)
    hanging: dict[int, list[Edge]] = defaultdict(list)
    for e in tree.leaf_edges:
        for v in e:
            if tree.degrees[v] > 1:
                hanging[v].append(e)
    out = []
    for c in _leaf_edges(r, pruned, pdeg):
        heavy = [v for v in c if pdeg[v] >= 2]
        root = heavy[0] if heavy else min(c)
        rest = [v for v in c if v != root]
        counts = {v: len(hanging[v]) for v in rest}
        if not any(counts.values()):
            continue
        z = tuple(sorted(rest, key=lambda v: (-counts[v], v)))
        lf = tuple(sorted(e for v in rest for e in hanging[v]))
        out.append(PendantStar(c, root, lf, z, tuple(counts[v] for v in z)))
    return out


def caterpillars(tree: Hypertree, t: int) -> list[Caterpillar]:
    leaves = set(tree.leaf_edges)
    pruned = [e for e in tree.edges if e not in leaves]
    hanging: dict[int, list[Edge]] = defaultdict(list)
    for e in tree.leaf_edges:
        for v in e:
            if tree.degrees[v] > 1:
                hanging[v].append(e)
    out = []
    for p in bare_path_pieces(tree.r, pruned, t, gap=1):
        fwd = tuple(len(hanging[v]) for v in p.internal)
        if fwd[::-1] < fwd:
            p = LinearPath(p.r, p.vertices[::-1])
            fwd = fwd[::-1]
        lf = tuple(sorted(e for v in p.internal for e in hanging[v]))
        out.append(Caterpillar(p, lf, p.internal, fwd))
    return out


def _disjoint(items: Iterable) -> list:
    taken: set[int] = set()
    out = []
    for it in items:
        vs = it.vertices
        if taken.isdisjoint(vs):
            taken |= vs
            out.append(it)
    return out


def _largest_class(items: list) -> tuple[list, int]:
    groups: dict[tuple, list] = defaultdict(list)
    for it in items:
        groups[it.key].append(it)
    if not groups:
        return [], 0
    key = max(groups, key=lambda k: (len(groups[k]), tuple(-x for x in k[1])))
    return groups[key], len(groups)


def star_bound(n: int, r: int, t: int, delta: int) -> float:
    return n / (12 * r * r * (t + 1) * delta)


def caterpillar_bound(n: int, r: int, t: int, delta: int) -> float:
    return n / (4 * r * r * (t + 1) * delta)


def pendant_or_caterpillars(tree: Hypertree, t: int, delta: int, case: str = "auto") -> Decomposition:
    """Many isomorphic pendant stars, or many isomorphic caterpillars of length t.

    ``case`` forces one family ("stars" / "caterpillars"). "auto" takes the
    family that exceeds its own bound by the larger factor, since at small n
    both bounds drop below one and a single item would satisfy either.
    """
    if t < 6:
        raise TreeError("caterpillar length must be at least 6")
    if tree.max_degree > delta:
        raise TreeError(f"maximum degree {tree.max_degree} exceeds {delta}")
    leaves = set(tree.leaf_edges)
    pruned = tuple(e for e in tree.edges if e not in leaves)
    if not pruned:
        raise TreeError("tree consists only of leaf-edges")
    n, r = tree.n, tree.r
    stars = _disjoint(pendant_stars(tree)) if case != "caterpillars" else []
    cats = _disjoint(caterpillars(tree, t)) if case != "stars" else []
    sb = star_bound(n, r, t, delta)
    cb = caterpillar_bound(n, r, t, delta)
    use_stars = case == "stars" or (case == "auto" and len(stars) / sb >= len(cats) / cb and stars)
    if use_stars:
        fam, k = _largest_class(stars)
        return Decomposition("stars", tuple(fam), len(stars), sb, k, pruned)
    fam, k = _largest_class(cats)
    return Decomposition("caterpillars", tuple(fam), len(cats), cb, k, pruned)


# ------------------------------------------------------------------ splitting


@dataclass(frozen=True)
class Stage:
    kind: str  # "matching" or "paths3"
    payload: tuple  # edges for a matching, LinearPaths for paths3

    @property
    def edges(self) -> tuple[Edge, ...]:
        if self.kind == "matching":
            return self.payload
        return tuple(e for p in self.payload for e in p.edges)

    def to_dict(self) -> dict:
        if self.kind == "matching":
            return {"kind": "matching", "payload": [list(e) for e in self.payload]}
        return {"kind": "paths3", "payload": [p.to_dict() for p in self.payload]}


@dataclass(frozen=True)
class SplitSequence:
    t0: tuple[Edge, ...]
    stages: tuple[Stage, ...]
    s: int | None  # index of the paths3 stage, None when no such stage was needed

    @property
    def length(self) -> int:
        return len(self.stages)

    def trees(self) -> list[frozenset[Edge]]:
        cur = frozenset(self.t0)
        out = [cur]
        for st in self.stages:
            cur = cur | frozenset(st.edges)
            out.append(cur)
        return out

    def to_dict(self) -> dict:
        return {"t0": [list(e) for e in self.t0], "s": self.s, "stages": [s.to_dict() for s in self.stages]}


def split_length_bound(r: int, delta: int, mu: float) -> float:
    return 1e5 * r * delta / (mu * mu)


def tree_split(tree: Hypertree, mu: float) -> SplitSequence:
    """Grow T from a small T0 by leaf matchings and at most one stage of 3-paths.

    Built backwards: peel a maximal matching of leaf-edges until at most
    mu*e(T) edges remain. When leaf-edges get scarce relative to the current
    size, one round instead removes vertex-disjoint bare paths of length 3.
    """
    if not 0 < mu < 1:
        raise TreeError("mu must lie in (0, 1)")
    r = tree.r
    budget = mu * tree.graph.m
    cur = set(tree.edges)
    peeled: list[Stage] = []
    used_paths = False
    while len(cur) > budget:
        deg = _degrees(cur)
        leafs = _leaf_edges(r, cur, deg)
        if not used_paths and len(leafs) * 48 <= len(cur):
            chosen = []
            taken: set[int] = set()
            for p in bare_path_pieces(r, sorted(cur), 3, gap=1):
                u, v = p.ends
                vs = set(p.vertices)
                if deg[u] < 2 or deg[v] < 2 or not taken.isdisjoint(vs):
                    continue
                if len(chosen) + 1 > budget:
                    break
                taken |= vs
                chosen.append(p)
            if chosen:
                used_paths = True
                peeled.append(Stage("paths3", tuple(chosen)))
                for p in chosen:
                    cur -= set(p.edges)
                continue
        taken = set()
        M = []
        for e in leafs:
            if taken.isdisjoint(e):
                taken.update(e)
                M.append(e)
        peeled.append(Stage("matching", tuple(M)))
        cur -= set(M)
    stages = tuple(reversed(peeled))
    s = next((i for i, st in enumerate(stages) if st.kind == "paths3"), None)
    return SplitSequence(tuple(sorted(cur)), stages, s)


def check_split(tree: Hypertree, seq: SplitSequence, mu: float) -> list[str]:
    """Every violated clause of the split contract (empty when all hold)."""
    bad = []
    r = tree.r
    m = tree.graph.m
    if len(seq.t0) > mu * m:
        bad.append(f"T0 has {len(seq.t0)} > mu*e(T) edges")
    if seq.length > split_length_bound(r, max(tree.max_degree, 1), mu):
        bad.append("too many stages")
    trees = seq.trees()
    if trees[-1] != frozenset(tree.edges) or sum(len(s.edges) for s in seq.stages) + len(seq.t0) != m:
        bad.append("replay does not reconstruct T")
    paths_stages = [i for i, st in enumerate(seq.stages) if st.kind == "paths3"]
    if len(paths_stages) > 1 or (paths_stages and paths_stages[0] != seq.s):
        bad.append("more than one paths3 stage or wrong s")
    for i, st in enumerate(seq.stages):
        before, after = trees[i], trees[i + 1]
        vb = set().union(*before) if before else set()
        va = set().union(*after) if after else set()
        deg = _degrees(after)
        new = va - vb
        if st.kind == "matching":
            used: set[int] = set()
            for e in st.payload:
                if used.intersection(e):
                    bad.append(f"stage {i}: not a matching")
                used.update(e)
                if sum(1 for v in e if deg[v] == 1) < r - 1:
                    bad.append(f"stage {i}: {list(e)} is not a leaf-edge")
            leafset = {v for e in st.payload for v in e if deg[v] == 1}
            if leafset != new:
                bad.append(f"stage {i}: new vertices are not the leaf set")
        else:
            if len(st.payload) > mu * m:
                bad.append(f"stage {i}: too many paths")
            used = set()
            for p in st.payload:
                if p.length != 3 or not is_bare_path(r, after, p):
                    bad.append(f"stage {i}: path is not a bare 3-path")
                u, v = p.ends
                if u not in vb or v not in vb:
                    bad.append(f"stage {i}: path ends not in T_s")
                if set(p.internal) & vb:
                    bad.append(f"stage {i}: internal vertices not new")
                if used.intersection(p.vertices):
                    bad.append(f"stage {i}: paths not vertex-disjoint")
                used.update(p.vertices)
    return bad


def tree_from_edges(r: int, edges: Iterable[Iterable[int]], n: int | None = None) -> Hypertree:
    edges = [tuple(sorted(e)) for e in edges]
    if n is None:
        n = 1 + max((v for e in edges for v in e), default=0)
    return validate_hypertree(validate(r, n, edges))

