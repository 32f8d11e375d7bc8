"""Spanning pipelines: star packing, almost-spanning forests, spanning
hypertrees (star and caterpillar cases), transversal loose-cycle factors,
loose Hamilton cycles and the rainbow reduction."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .absorb import (
    AbsorptionError,
    Copy,
    SearchBudget,
    TransversalFactor,
    assemble_absorbing_set,
    copies_through,
    cycle_pattern,
    edge_pattern,
    part_map,
    search_factor,
    transversal_matching,
    verify_factor,
)
from .eprim import HypothesisError, PathStall, check_degree_concentration, find_linear_path, find_matching, random_partition
from .hcore import Edge, HypergraphError, RGraph, hole_heuristic, min_codegree, validate
from .htree import (
    Hypertree,
    LinearPath,
    TreeError,
    pendant_or_caterpillars,
    tree_from_edges,
    tree_split,
    validate_hypertree,
)
from .seeding import derive_seed, rng


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries the stage name and diagnostics."""

    def __init__(self, stage: str, message: str, diagnostics: dict | None = None, partial: dict | None = None):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.diagnostics = diagnostics or {}
        self.partial = partial or {}


# ----------------------------------------------------------------- embeddings


@dataclass
class Embedding:
    guest: RGraph
    host: RGraph
    map: dict[int, int]
    sides: tuple[tuple[frozenset[int], frozenset[int]], ...] = ()
    spanning: bool = False
    stages: list[dict] = field(default_factory=list)
    reservoir_ledger: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "map": [self.map.get(v) for v in range(self.guest.n)],
            "stages": self.stages,
            "reservoir_ledger": self.reservoir_ledger,
        }


def verify_embedding(e: Embedding) -> list[str]:
    """Every violated condition of the embedding; empty means pass."""
    bad = []
    missing = [v for v in range(e.guest.n) if v not in e.map]
    if missing:
        bad.append(f"unmapped guest vertices {missing[:5]}")
    img = list(e.map.values())
    if len(set(img)) != len(img):
        bad.append("map is not injective")
    if any(not 0 <= x < e.host.n for x in img):
        bad.append("image outside the host")
    for f in e.guest.edges:
        if all(v in e.map for v in f):
            im = tuple(sorted(e.map[v] for v in f))
            if im not in e.host.edge_set:
                bad.append(f"guest edge {list(f)} maps to non-edge {list(im)}")
    if e.spanning and set(img) != set(range(e.host.n)):
        bad.append("not spanning")
    for A, X in e.sides:
        off = [v for v in A if v in e.map and e.map[v] not in X]
        if off:
            bad.append(f"side constraint broken at {off[:5]}")
    return bad


def _allowed_from_sides(sides) -> dict[int, frozenset[int]]:
    allowed: dict[int, frozenset[int]] = {}
    for A, X in sides:
        for v in A:
            allowed[v] = frozenset(X) if v not in allowed else allowed[v] & frozenset(X)
    return allowed


def exhaustive_embed(
    host: RGraph,
    guest_edges: Sequence[Edge],
    guest_vertices: Iterable[int],
    *,
    allowed: dict[int, frozenset[int]] | None = None,
    pool: Iterable[int] | None = None,
    fixed: dict[int, int] | None = None,
    node_limit: int | None = None,
    order_seed: int | None = None,
) -> dict[int, int] | None:
    """Backtracking embedding of a forest; None when none exists.

    Raises SearchBudget if ``node_limit`` is reached first.
    """
    allowed = allowed or {}
    pool = set(range(host.n)) if pool is None else set(pool)
    phi: dict[int, int] = dict(fixed or {})
    used = set(phi.values())
    verts = sorted(set(guest_vertices) | {v for e in guest_edges for v in e})
    gdeg: dict[int, int] = defaultdict(int)
    inc: dict[int, list[Edge]] = defaultdict(list)
    for e in guest_edges:
        for v in e:
            gdeg[v] += 1
            inc[v].append(e)
    gen = rng(order_seed, "embed-order") if order_seed is not None else None

    # one flat plan: ("root", v) opens a component, ("edge", e, a) hangs e at a
    covered: set[int] = set()
    done: set[Edge] = set()
    plan: list[tuple] = []
    for s in sorted(verts, key=lambda v: (v not in phi, -gdeg[v], v)):
        if s in covered:
            continue
        if s not in phi:
            plan.append(("root", s))
        covered.add(s)
        queue = [s]
        while queue:
            a = queue.pop(0)
            for e in inc[a]:
                if e in done:
                    continue
                done.add(e)
                plan.append(("edge", e, a))
                for b in e:
                    if b not in covered:
                        covered.add(b)
                        queue.append(b)
    nodes = 0

    def ok(v: int, x: int) -> bool:
        return x in pool and x not in used and (v not in allowed or x in allowed[v]) and host.vertex_degree(x) >= gdeg[v]

    def rec(idx: int) -> bool:
        nonlocal nodes
        if idx == len(plan):
            return True
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise SearchBudget("embedding search exceeded its node limit")
        item = plan[idx]
        if item[0] == "root":
            v = item[1]
            cands = sorted(pool - used)
            if gen is not None:
                gen.shuffle(cands)
            for x in cands:
                if ok(v, x):
                    phi[v] = x
                    used.add(x)
                    if rec(idx + 1):
                        return True
                    del phi[v]
                    used.discard(x)
            return False
        _, e, a = item
        new = [v for v in e if v not in phi]
        pinned = {phi[v] for v in e if v != a and v in phi}
        anchor = phi[a]
        cands = [f for f in host.incidence[anchor] if pinned.issubset(f)]
        if gen is not None:
            gen.shuffle(cands)
        leaves = [v for v in new if gdeg[v] == 1]
        inner = [v for v in new if gdeg[v] > 1]
        for f in cands:
            free = [x for x in f if x != anchor and x not in pinned]
            if len(free) != len(new) or any(x in used or x not in pool for x in free):
                continue
            for perm in itertools.permutations(free, len(inner)):
                if not all(ok(v, x) for v, x in zip(inner, perm)):
                    continue
                rest = [x for x in free if x not in perm]
                # leaves are interchangeable up to their side constraints
                lperm = _assign_leaves(leaves, rest, allowed)
                if lperm is None:
                    continue
                placed = list(zip(inner, perm)) + lperm
                for v, x in placed:
                    phi[v] = x
                    used.add(x)
                if rec(idx + 1):
                    return True
                for v, x in placed:
                    del phi[v]
                    used.discard(x)
        return False

    return dict(phi) if rec(0) else None


def _assign_leaves(leaves, slots, allowed):
    if not leaves:
        return []
    if not any(v in allowed for v in leaves):
        return list(zip(leaves, slots))
    for perm in itertools.permutations(slots):
        if all(v not in allowed or x in allowed[v] for v, x in zip(leaves, perm)):
            return list(zip(leaves, perm))
    return None


# ---------------------------------------------------------------- star packing


@dataclass
class StarAssignment:
    centers: tuple[int, ...]
    demands: dict[int, int]
    stars: dict[int, list[Edge]]
    method: str = ""
    diagnostics: dict = field(default_factory=dict)


def check_stars(host: RGraph, parts: Sequence[Iterable[int]], sa: StarAssignment) -> list[str]:
    bad = []
    where = part_map(parts)
    seen: set[int] = set()
    for v in sa.centers:
        edges = sa.stars.get(v, [])
        if len(edges) != sa.demands.get(v, 0):
            bad.append(f"center {v} has {len(edges)} edges, demand {sa.demands.get(v, 0)}")
        for e in edges:
            if not host.has_edge(e):
                bad.append(f"{list(e)} is not a host edge")
            if v not in e or sorted(where.get(x, -1) for x in e) != list(range(host.r)):
                bad.append(f"{list(e)} does not cross the parts at {v}")
            leaves = set(e) - {v}
            if leaves & seen:
                bad.append("stars overlap")
            seen |= leaves
    if seen & set(sa.centers):
        bad.append("a star leaf is a center")
    return bad


def embed_stars(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    f: dict[int, int],
    eps: float | None = None,
    alpha: float | None = None,
    seed: int = 0,
    *,
    strict: bool = False,
    node_limit: int = 300_000,
) -> StarAssignment:
    """Vertex-disjoint stars, f(v) edges at each center v of the first part.

    Each center is split into f(v) clones and a perfect matching of the
    resulting r-partite graph is decoded back into stars.
    """
    r = host.r
    parts = [sorted(set(p)) for p in parts]
    if len(parts) != r:
        raise HypergraphError(f"need {r} parts")
    sizes = {len(p) for p in parts[1:]}
    if len(sizes) != 1:
        raise HypergraphError("parts 2..r must have equal sizes")
    n = sizes.pop()
    if any(v not in set(parts[0]) for v in f):
        raise HypergraphError("every center must lie in the first part")
    if any(d < 0 for d in f.values()) or sum(f.values()) != n:
        raise HypergraphError(f"demands sum to {sum(f.values())}, expected {n}")
    centers = tuple(sorted(v for v in f if f[v] > 0))
    where = part_map(parts)
    # split graph: clones first, then the other parts
    clone_of: list[int] = [v for v in centers for _ in range(f[v])]
    label: dict[int, int] = {}
    nxt = len(clone_of)
    for p in parts[1:]:
        for v in p:
            label[v] = nxt
            nxt += 1
    back = {b: a for a, b in label.items()}
    clones: dict[int, list[int]] = defaultdict(list)
    for c, v in enumerate(clone_of):
        clones[v].append(c)
    edges = []
    worst = math.inf
    for v in centers:
        d = 0
        for e in host.incidence[v]:
            rest = [x for x in e if x != v]
            if sorted(where.get(x, -1) for x in rest) == list(range(1, r)):
                d += 1
                for c in clones[v]:
                    edges.append([c] + [label[x] for x in rest])
        worst = min(worst, d)
    diag = {"min_crossing_degree": worst if centers else 0}
    if eps is not None:
        diag["hypothesis_met"] = worst >= eps * n ** (r - 1)
        if strict and not diag["hypothesis_met"]:
            raise HypothesisError(f"crossing degree {worst} below eps*n^(r-1)")
    split = validate(r, nxt, edges)
    sparts = [list(range(len(clone_of)))] + [[label[v] for v in p] for p in parts[1:]]
    matching = None
    method = "absorption"
    try:
        matching, d = transversal_matching(split, sparts, seed=seed, gamma=0.1, eta=0.3)
        diag["pipeline"] = d
    except (AbsorptionError, HypothesisError, SearchBudget) as exc:
        diag["pipeline_error"] = str(exc)
    if matching is None:
        method = "search"
        try:
            copies = search_factor(split, edge_pattern(r), part_map(sparts), range(nxt), node_limit=node_limit, order_seed=seed)
        except SearchBudget as exc:
            raise PipelineError("stars", str(exc), diag) from exc
        if copies is None:
            raise PipelineError("stars", "split graph has no perfect matching", diag)
        matching = [tuple(sorted(c)) for c in copies]
    stars: dict[int, list[Edge]] = {v: [] for v in centers}
    for e in matching:
        c = min(e)
        v = clone_of[c]
        stars[v].append(tuple(sorted([v] + [back[x] for x in e if x != c])))
    for v in stars:
        stars[v].sort()
    sa = StarAssignment(centers, dict(f), stars, method, diag)
    problems = check_stars(host, parts, sa)
    if problems:
        raise PipelineError("stars", "; ".join(problems), diag)
    return sa


# ------------------------------------------------------ almost-spanning forests


@dataclass
class Reservoir:
    R: frozenset[int]
    size_ok: bool
    degree_ok: bool
    min_degree_into: int
    degree_threshold: float
    paths_ok: float  # fraction of sampled pairs joined by a 3-edge path through R
    ledger: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "size": len(self.R),
            "size_ok": self.size_ok,
            "degree_ok": self.degree_ok,
            "min_degree_into": self.min_degree_into,
            "degree_threshold": self.degree_threshold,
            "paths_ok": self.paths_ok,
        }


def _path3(host: RGraph, a: int, b: int, free: set[int], allowed_interior=None) -> tuple[int, ...] | None:
    """Loose path a .. b with three edges whose interior lies in ``free``."""
    r = host.r
    for e1 in host.incidence[a]:
        o1 = [x for x in e1 if x != a]
        if b in e1 or not all(x in free for x in o1):
            continue
        for e3 in host.incidence[b]:
            o3 = [x for x in e3 if x != b]
            if a in e3 or set(o3) & set(o1) or not all(x in free for x in o3):
                continue
            for x in o1:
                for y in o3:
                    for e2 in host.incidence[x]:
                        if y not in e2:
                            continue
                        mid = [w for w in e2 if w not in (x, y)]
                        if set(mid) & (set(o1) | set(o3) | {a, b}) or not all(w in free for w in mid):
                            continue
                        seq = (
                            [a]
                            + [w for w in o1 if w != x]
                            + [x]
                            + mid
                            + [y]
                            + [w for w in o3 if w != y]
                            + [b]
                        )
                        if allowed_interior is None or allowed_interior(seq):
                            return tuple(seq)
    return None


def build_reservoir(host: RGraph, pool: Sequence[int], size: int, eps: float, seed: int, samples: int = 20) -> Reservoir:
    pool = sorted(pool)
    gen = rng(seed, "reservoir")
    R = frozenset(gen.sample(pool, min(size, len(pool))))
    r = host.r
    thr = 0.5 * eps * math.comb(len(R), r - 1)
    worst = math.inf
    for v in pool:
        d = sum(1 for e in host.incidence[v] if all(x in R for x in e if x != v))
        worst = min(worst, d)
    outside = [v for v in pool if v not in R]
    hits = 0
    tried = 0
    for _ in range(samples if len(outside) > 1 else 0):
        a, b = gen.sample(outside, 2)
        tried += 1
        hits += _path3(host, a, b, set(R)) is not None
    return Reservoir(R, len(R) == size, worst >= thr, 0 if worst is math.inf else worst, thr, hits / tried if tried else 1.0)


def _relabel_component(r: int, edges: Sequence[Edge]) -> tuple[Hypertree, list[int]]:
    verts = sorted({v for e in edges for v in e})
    idx = {v: i for i, v in enumerate(verts)}
    return tree_from_edges(r, [[idx[v] for v in e] for e in edges], len(verts)), verts


def _components(vertices: Iterable[int], edges: Sequence[Edge]) -> list[tuple[list[int], list[Edge]]]:
    parent = {v: v for v in vertices}
    for e in edges:
        for v in e:
            parent.setdefault(v, v)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        a = find(e[0])
        for b in e[1:]:
            parent[find(b)] = a
    groups: dict[int, list[int]] = defaultdict(list)
    for v in parent:
        groups[find(v)].append(v)
    eg: dict[int, list[Edge]] = defaultdict(list)
    for e in edges:
        eg[find(e[0])].append(e)
    return [(sorted(vs), sorted(eg[k])) for k, vs in sorted(groups.items(), key=lambda kv: min(kv[1]))]


class _Placer:
    """Mutable embedding state shared by the stage routines."""

    def __init__(self, host: RGraph, pool: set[int], R: frozenset[int], allowed: dict[int, frozenset[int]]):
        self.host = host
        self.pool = pool
        self.R = R
        self.allowed = allowed
        self.phi: dict[int, int] = {}
        self.used: set[int] = set()

    def free(self, include_R: bool = True) -> set[int]:
        out = self.pool - self.used
        return out if include_R else out - self.R

    def fits(self, v: int, x: int) -> bool:
        return v not in self.allowed or x in self.allowed[v]

    def put(self, v: int, x: int) -> None:
        assert x not in self.used and v not in self.phi
        self.phi[v] = x
        self.used.add(x)

    def consumed(self) -> int:
        return len(self.used & self.R)

    def attach(self, a: int, new: Sequence[int], free: set[int]) -> bool:
        """Greedy: one host edge at phi(a) whose other vertices are free and fit."""
        x = self.phi[a]
        for e in self.host.incidence[x]:
            rest = [w for w in e if w != x]
            if not all(w in free for w in rest):
                continue
            for perm in itertools.permutations(rest):
                if all(self.fits(v, w) for v, w in zip(new, perm)):
                    for v, w in zip(new, perm):
                        self.put(v, w)
                    return True
        return False


def _matching_stage(P: _Placer, stage_edges: Sequence[Edge], seed: int) -> dict:
    """Place a matching of leaf-edges, each hanging at one embedded vertex."""
    host, r = P.host, P.host.r
    jobs = []
    fresh = []
    for e in stage_edges:
        anchors = [v for v in e if v in P.phi]
        if len(anchors) > 1:
            raise PipelineError("matching", f"edge {list(e)} has {len(anchors)} embedded vertices")
        if anchors:
            jobs.append((anchors[0], [v for v in e if v != anchors[0]]))
        else:
            fresh.append(e)
    info = {"kind": "matching", "edges": len(stage_edges), "completion": 0, "greedy": 0}
    for e in fresh:
        free = P.free(include_R=False) or P.free()
        placed = False
        for f in sorted(host.edges, key=lambda f: derive_seed(seed, f)):
            if all(x in free for x in f):
                for perm in itertools.permutations(f):
                    if all(P.fits(v, x) for v, x in zip(e, perm)):
                        for v, x in zip(e, perm):
                            P.put(v, x)
                        placed = True
                        break
            if placed:
                break
        if not placed:
            raise PipelineError("matching", f"no free host edge for {list(e)}")
    if not jobs:
        return info
    constrained = any(v in P.allowed for _, new in jobs for v in new)
    if not constrained:
        gen = rng(seed, "groups")
        main = sorted(P.free(include_R=False))
        gen.shuffle(main)
        k = len(main) // (r - 1)
        V = [[P.phi[a] for a, _ in jobs]] + [main[i * k : (i + 1) * k] for i in range(r - 1)]
        res_free = sorted(P.free() & P.R)
        gen.shuffle(res_free)
        q = len(res_free) // (r - 1)
        U = [res_free[i * q : (i + 1) * q] for i in range(r - 1)] if q else None
        if k >= len(jobs):
            M = find_matching(host, V, U)
            byx = {}
            for e in M.edges:
                for x in e:
                    if x in set(V[0]):
                        byx[x] = e
            info["completion"] = len(M.mdouble)
            for a, new in jobs:
                e = byx.get(P.phi[a])
                if e is None:
                    continue
                rest = [w for w in e if w != P.phi[a]]
                if any(w in P.used for w in rest):
                    continue
                for v, w in zip(new, rest):
                    P.put(v, w)
    for a, new in jobs:
        if new[0] in P.phi:
            continue
        if not (P.attach(a, new, P.free(include_R=False)) or P.attach(a, new, P.free())):
            raise PipelineError("matching", f"no edge left at the image of {a}", info)
        info["greedy"] += 1
    return info


def _paths_stage(P: _Placer, paths: Sequence[LinearPath]) -> dict:
    info = {"kind": "paths3", "paths": len(paths)}
    for p in paths:
        u, v = p.ends
        if u not in P.phi or v not in P.phi:
            raise PipelineError("paths3", "path ends are not embedded")
        inner = list(p.vertices[1:-1])

        def fits(seq, inner=inner):
            return all(P.fits(g, x) for g, x in zip(inner, seq[1:-1]))

        seq = _path3(P.host, P.phi[u], P.phi[v], P.free() & P.R, fits) or _path3(P.host, P.phi[u], P.phi[v], P.free(), fits)
        if seq is None:
            raise PipelineError("paths3", f"no three-edge connection for path {list(p.vertices)}", info)
        for g, x in zip(inner, seq[1:-1]):
            P.put(g, x)
    return info


def embed_almost_spanning(
    host: RGraph,
    guest: RGraph,
    eta: float = 0.1,
    eps: float | None = None,
    seed: int = 0,
    sides: Sequence[tuple[Iterable[int], Iterable[int]]] = (),
    *,
    vertices: Iterable[int] | None = None,
    mu: float = 0.2,
    alpha: float | None = None,
    reservoir_fraction: float = 0.1,
    strict: bool = False,
    retries: int = 5,
) -> Embedding:
    """Embed a hyperforest using at most (1 - eta) of the available vertices.

    Stages: reservoir, greedy first tree, leaf-matching stages completed
    through the reservoir, and three-edge connections through the reservoir.
    """
    r = host.r
    if isinstance(guest, Hypertree):
        guest = guest.graph
    pool = set(range(host.n)) if vertices is None else set(vertices)
    if guest.r != r:
        raise HypergraphError("guest and host uniformities differ")
    validate_hypertree(guest, allow_forest=True)
    if guest.n > (1 - eta) * len(pool) + 1e-9:
        raise HypergraphError(f"guest has {guest.n} vertices, more than (1-eta)*{len(pool)}")
    sides = tuple((frozenset(A), frozenset(X)) for A, X in sides)
    allowed = _allowed_from_sides(sides)
    sub_n = len(pool)
    delta = min((sum(1 for e in host.incidence[v] if all(x in pool for x in e)) for v in pool), default=0)
    observed = delta / sub_n ** (r - 1) if sub_n > 1 else 0.0
    if eps is None:
        eps = observed
    met = observed >= eps
    if strict and not met:
        raise HypothesisError(f"minimum degree density {observed:g} below eps={eps:g}")
    if alpha is None:
        alpha = max(1.0 / max(host.n, 1), hole_heuristic(host, budget=300, seed=seed).lower / max(host.n, 1))
    last: PipelineError | None = None
    for attempt in range(retries):
        s = derive_seed(seed, "almost", attempt)
        try:
            emb = _almost_once(host, guest, pool, sides, allowed, eps, s, mu, alpha, reservoir_fraction, strict)
        except PipelineError as exc:
            exc.diagnostics.setdefault("attempt", attempt)
            last = exc
            continue
        emb.stages.insert(0, {"stage": "hypothesis", "min_degree_density": observed, "eps": eps, "met": met})
        return emb
    assert last is not None
    raise last


def _almost_once(host, guest, pool, sides, allowed, eps, seed, mu, alpha, frac, strict) -> Embedding:
    r = host.r
    size = max(3 * r, round(frac * len(pool)))
    size = min(size, max(0, len(pool) - guest.n))
    res = build_reservoir(host, sorted(pool), size, eps, seed)
    stages: list[dict] = [{"stage": "reservoir", **res.to_dict()}]
    P = _Placer(host, pool, res.R, allowed)
    ledger: list[dict] = []
    step = 0
    for comp_vertices, comp_edges in _components(range(guest.n), guest.edges):
        if not comp_edges:
            continue
        tree, labels = _relabel_component(r, comp_edges)
        seq = tree_split(tree, mu)
        t0 = [tuple(labels[v] for v in e) for e in seq.t0]
        if t0:
            t0_vertices = {v for e in t0 for v in e}
            found = None
            for include_R in (False, True):
                try:
                    found = exhaustive_embed(
                        host,
                        t0,
                        t0_vertices,
                        allowed=allowed,
                        pool=P.free(include_R),
                        node_limit=20_000,
                        order_seed=seed,
                    )
                except SearchBudget:
                    found = None
                if found:
                    break
            if not found:
                raise PipelineError("first-tree", "could not place the first tree", {"edges": len(t0)}, dict(P.phi))
            for v, x in found.items():
                P.put(v, x)
            stages.append({"stage": "first-tree", "edges": len(t0)})
        for i, st in enumerate(seq.stages):
            step += 1
            try:
                if st.kind == "matching":
                    info = _matching_stage(P, [tuple(labels[v] for v in e) for e in st.payload], derive_seed(seed, step))
                else:
                    paths = [LinearPath(p.r, tuple(labels[v] for v in p.vertices)) for p in st.payload]
                    info = _paths_stage(P, paths)
            except PipelineError as exc:
                exc.partial = dict(P.phi)
                exc.diagnostics["stage_index"] = step
                raise
            budget = step * r * alpha * host.n
            row = {"stage": step, "consumed": P.consumed(), "budget": budget, "within": P.consumed() <= budget}
            ledger.append(row)
            if strict and not row["within"]:
                raise PipelineError("ledger", f"reservoir use {row['consumed']} exceeds {budget:g}", row, dict(P.phi))
            stages.append({"stage": st.kind, "index": step, **info})
    for v in range(guest.n):
        if v not in P.phi:
            cands = sorted(x for x in P.free(False) if P.fits(v, x)) or sorted(x for x in P.free() if P.fits(v, x))
            if not cands:
                raise PipelineError("isolated", f"no free vertex for guest vertex {v}", {}, dict(P.phi))
            P.put(v, cands[0])
    emb = Embedding(guest, host, dict(P.phi), sides, False, stages, ledger)
    bad = verify_embedding(emb)
    if bad:
        raise PipelineError("validate", "; ".join(bad), {}, dict(P.phi))
    return emb


# --------------------------------------------------------- loose cycle factors


def _block_density(host: RGraph, where: dict[int, int], parts, block: Sequence[int]) -> float:
    want = sorted(block)
    cnt = 0
    bset = set(block)
    seen = set()
    for j in block:
        for v in parts[j]:
            for e in host.incidence[v]:
                if e in seen:
                    continue
                if sorted(where.get(x, -1) for x in e) == want:
                    seen.add(e)
                    cnt += 1
        break
    cap = 1
    for j in bset:
        cap *= len(parts[j])
    return cnt / cap if cap else 0.0


def loose_cycle_factor(
    host: RGraph,
    parts: Sequence[Iterable[int]],
    eps: float = 0.3,
    alpha: float | None = None,
    seed: int = 0,
    *,
    d_min: float | None = None,
    strict: bool = False,
    node_limit: int = 400_000,
) -> TransversalFactor:
    """Disjoint transversal loose cycles covering all parts.

    Parts are indexed along the cycle; the pattern has len(parts)/(r-1) edges.
    Blocks of density below ``d_min`` (default eps/4) are rejected up front.
    """
    r = host.r
    parts = [sorted(set(p)) for p in parts]
    k = len(parts)
    if k % (r - 1) or k // (r - 1) < 3:
        raise HypergraphError("number of parts must be (r-1)t with t >= 3")
    t = k // (r - 1)
    if len({len(p) for p in parts}) != 1:
        raise HypergraphError("parts must have equal sizes")
    s = len(parts[0])
    F = cycle_pattern(r, t)
    where = part_map(parts)
    d_min = eps / 4 if d_min is None else d_min
    dens = [_block_density(host, where, parts, f) for f in F.F.edges]
    diag: dict = {"block_density": dens, "d_min": d_min}
    if min(dens) < d_min:
        raise HypothesisError(f"block density {min(dens):.3f} below {d_min:g}")
    # minimum degree of each vertex into its blocks
    worst = math.inf
    for f in F.F.edges:
        fs = sorted(f)
        for j in f:
            for v in parts[j]:
                d = sum(1 for e in host.incidence[v] if sorted(where.get(x, -1) for x in e) == fs)
                worst = min(worst, d)
    diag["min_block_degree"] = worst
    diag["hypothesis_met"] = worst >= eps * s ** (r - 1)
    if strict and not diag["hypothesis_met"]:
        raise HypothesisError(f"block degree {worst} below eps*n^(r-1)")
    if s == 0:
        return TransversalFactor((), "trivial", diag)
    copies = None
    method = "absorption"
    try:
        copies = _cycle_pipeline(host, F, parts, where, seed, diag)
    except (AbsorptionError, HypothesisError, SearchBudget, PathStall) as exc:
        diag["pipeline_error"] = str(exc)
    if copies is None:
        method = "search"
        try:
            copies = search_factor(host, F, where, where.keys(), node_limit=node_limit, order_seed=seed)
        except SearchBudget as exc:
            raise PipelineError("cycle-factor", str(exc), diag) from exc
        if copies is None:
            raise PipelineError("cycle-factor", "no transversal cycle factor exists", diag)
    if not verify_factor(host, F, where, copies, where.keys()):
        raise PipelineError("cycle-factor", "factor failed validation", diag)
    return TransversalFactor(tuple(sorted(copies)), method, diag)


def _close_path(host: RGraph, F, where, x: list[int], avail: set[int]) -> Copy | None:
    """Turn an open transversal path on positions 0..k-r+1 into a cycle copy,
    rerouting the last two edges through a fresh two-edge connection."""
    r = host.r
    k = F.k
    start = k - 2 * (r - 1)  # first vertex of the rerouted stretch
    fixed = x[: start + 1]
    pool = avail - set(fixed)
    # positions start+1 .. k-1 are refilled
    need = list(range(start + 1, k))

    def rec(i: int, cur: list[int]):
        if i == len(need):
            c = tuple(fixed + cur)
            return c if all(host.has_edge(c[j] for j in f) for f in F.F.edges) else None
        pos = need[i]
        for w in sorted(v for v in pool if where[v] == pos and v not in cur):
            cur.append(w)
            # the middle edge closes once position start + r - 1 is known
            if pos == start + r - 1 and not host.has_edge(fixed[start:] + cur[: r - 1]):
                cur.pop()
                continue
            got = rec(i + 1, cur)
            if got:
                return got
            cur.pop()
        return None

    return rec(0, [])


def _cycle_pipeline(host, F, parts, where, seed, diag) -> list[Copy] | None:
    r = host.r
    k = F.k
    s = len(parts[0])
    if s < 6:
        return None  # small instances go straight to the exact search
    A = assemble_absorbing_set(host, parts, F, gamma=0.1, eta=0.4, seed=seed, spot_checks=0)
    diag["absorbing"] = {"mode": A.mode, "size": len(A.A), "capacity": A.capacity}
    avail = set(where) - A.A
    copies: list[Copy] = []
    closed_by = {"path": 0, "direct": 0}
    while True:
        if not avail:
            break
        sub = [[v for v in parts[j] if v in avail] for j in range(k - r + 2)]
        c = None
        try:
            pr = find_linear_path(host, sub)
            c = _close_path(host, F, where, list(pr.path.vertices), avail)
            if c:
                closed_by["path"] += 1
        except PathStall:
            pass
        if c is None:
            for v in sorted(u for u in avail if where[u] == 0):
                c = next(copies_through(host, F, where, v, avail), None)
                if c:
                    closed_by["direct"] += 1
                    break
        if c is None:
            break
        copies.append(c)
        avail -= set(c)
    diag["cycles"] = closed_by
    leftover = sorted(avail)
    diag["leftover_per_part"] = len(leftover) // k
    if len(leftover) // k > A.capacity:
        return None
    fac, how = A.absorb(leftover, seed=seed)
    diag["absorb"] = how
    return copies + fac


# ------------------------------------------------------------ identification


@dataclass
class Identified:
    """Host with pairs (x_i, y_i) merged into new vertices z_i, plus the audit map."""

    graph: RGraph
    parts: list[list[int]]
    to_host: dict[int, int]  # graph vertex -> host vertex (merged vertices absent)
    merged: dict[int, tuple[int, int]]  # graph vertex -> (x_i, y_i)


def identify_ends(
    host: RGraph,
    pairs: Sequence[tuple[int, int]],
    middle: Sequence[Sequence[int]],
) -> Identified:
    """Merge each (x, y) into z; z keeps x's edges into the first r-1 middle
    parts and y's edges into the last r-1 middle parts."""
    r = host.r
    verts = [v for p in middle for v in p]
    idx = {v: i for i, v in enumerate(verts)}
    base = len(verts)
    vset = set(verts)
    edges = set()
    for v in verts:
        for e in host.incidence[v]:
            if all(x in vset for x in e):
                edges.add(tuple(sorted(idx[x] for x in e)))
    head = set().union(*map(set, middle[: r - 1])) if middle else set()
    tail = set().union(*map(set, middle[-(r - 1) :])) if middle else set()
    merged = {}
    for i, (x, y) in enumerate(pairs):
        z = base + i
        merged[z] = (x, y)
        for e in host.incidence[x]:
            rest = [w for w in e if w != x]
            if all(w in head for w in rest):
                edges.add(tuple(sorted([z] + [idx[w] for w in rest])))
        for e in host.incidence[y]:
            rest = [w for w in e if w != y]
            if all(w in tail for w in rest):
                edges.add(tuple(sorted([z] + [idx[w] for w in rest])))
    g = validate(r, base + len(pairs), sorted(edges))
    parts = [[base + i for i in range(len(pairs))]] + [[idx[v] for v in p] for p in middle]
    return Identified(g, parts, {i: v for v, i in idx.items()}, merged)


def _decode_cycle(ident: Identified, c: Copy) -> tuple[int, list[int]]:
    """(pair index, host path x .. y) for one cycle copy through a merged vertex."""
    z = c[0]
    x, y = ident.merged[z]
    i = z - min(ident.merged)
    return i, [x] + [ident.to_host[v] for v in c[1:]] + [y]


# ------------------------------------------------------------ spanning trees


def theoretical_t(r: int, eps: float) -> int:
    return math.ceil((100 * r) ** r / eps)


def embed_spanning_tree(
    host: RGraph,
    guest: RGraph | Hypertree,
    delta: int | None = None,
    eps: float | None = None,
    seed: int = 0,
    *,
    case: str = "auto",
    t_practical: int = 6,
    beta: float = 0.1,
    retries: int = 5,
    exhaustive_below: int = 12,
    strict: bool = False,
) -> Embedding:
    """Spanning embedding of a linear hypertree with as many vertices as the host."""
    tree = guest if isinstance(guest, Hypertree) else validate_hypertree(guest)
    r, n = host.r, host.n
    if tree.r != r:
        raise HypergraphError("guest and host uniformities differ")
    if (n - 1) % (r - 1):
        raise HypergraphError(f"r-1 = {r - 1} does not divide n-1 = {n - 1}")
    if tree.n != n:
        raise HypergraphError(f"guest has {tree.n} vertices, host has {n}")
    delta = tree.max_degree if delta is None else delta
    if tree.max_degree > delta:
        raise HypergraphError(f"guest maximum degree {tree.max_degree} exceeds {delta}")
    dmin = min_codegree(host, 1) if n else 0
    observed = dmin / n ** (r - 1) if n > 1 else 0.0
    eps_run = observed if eps is None else eps
    met = observed >= eps_run
    if strict and not met:
        raise HypothesisError(f"minimum degree density {observed:g} below eps={eps_run:g}")
    log = [
        {
            "stage": "hypothesis",
            "min_degree_density": observed,
            "eps": eps_run,
            "met": met,
            "t_practical": t_practical,
            "t_theoretical": theoretical_t(r, eps_run) if eps_run > 0 else None,
        }
    ]
    errors = []
    leaves = set(tree.leaf_edges)
    if len(leaves) < tree.graph.m:
        for attempt in range(retries):
            s = derive_seed(seed, "tree", attempt)
            try:
                emb = _spanning_once(host, tree, delta, eps_run, s, case, t_practical, beta, log)
            except (PipelineError, HypothesisError, TreeError, SearchBudget, AbsorptionError) as exc:
                errors.append({"attempt": attempt, "error": str(exc)})
                continue
            emb.stages.append({"stage": "attempts", "failed": errors})
            return emb
    fallback = n <= exhaustive_below or len(leaves) == tree.graph.m
    if fallback:
        try:
            phi = exhaustive_embed(host, tree.edges, range(n), node_limit=None if n <= exhaustive_below else 200_000)
        except SearchBudget as exc:
            raise PipelineError("exhaustive", str(exc), {"attempts": errors}) from exc
        if phi is None:
            raise PipelineError("exhaustive", "host contains no copy of the guest", {"attempts": errors})
        emb = Embedding(tree.graph, host, phi, (), True, log + [{"stage": "exhaustive", "attempts": errors}])
        bad = verify_embedding(emb)
        if bad:
            raise PipelineError("validate", "; ".join(bad))
        return emb
    raise PipelineError("spanning", "all attempts failed", {"attempts": errors})


def _spanning_once(host, tree: Hypertree, delta, eps, seed, case, t_practical, beta, log) -> Embedding:
    r, n = host.r, host.n
    dec = pendant_or_caterpillars(tree, t_practical, delta, case)
    if not dec.items:
        raise PipelineError("decompose", f"no {dec.case} found")
    stages = list(log) + [
        {"stage": "decompose", "case": dec.case, "items": len(dec.items), "found": dec.disjoint_found, "bound": dec.bound}
    ]
    if dec.case == "stars":
        return _case_stars(host, tree, dec.items, eps, seed, beta, stages)
    return _case_caterpillars(host, tree, dec.items, eps, seed, beta, t_practical, stages)


def _split_sizes(total: int, k: int) -> list[int]:
    return [total // k + (1 if i < total % k else 0) for i in range(k)]


def _partition_and_embed(host, tree, kept_edges, tv, rstar, m, ell, eps, seed, beta, stages):
    r, n = host.r, host.n
    n_t = len(tv)
    mid_total = rstar * m
    slack = min(max(1, math.ceil(beta * n)), max(0, mid_total - rstar))
    n1 = n_t + slack
    sizes = [n1] + _split_sizes(mid_total - slack, rstar) + [ell] * (r - 1)
    plan = random_partition(host, sizes, seed)
    try:
        conc = check_degree_concentration(host, plan, eps=eps if eps > 0 else None)
        stages.append({"stage": "partition", "sizes": sizes, "concentration": conc.passed, "worst_ratio": conc.worst_ratio})
    except HypothesisError as exc:
        stages.append({"stage": "partition", "sizes": sizes, "concentration": False, "note": str(exc)})
    V1 = list(plan.parts[0])
    V2 = [list(p) for p in plan.parts[1 : 1 + rstar]]
    V3 = [list(p) for p in plan.parts[1 + rstar :]]
    # T' relabelled onto 0..n_t-1
    idx = {v: i for i, v in enumerate(tv)}
    forest = validate(r, n_t, [[idx[v] for v in e] for e in kept_edges])
    sub = embed_almost_spanning(
        host, forest, eta=slack / n1 if n1 else 0.0, eps=None, seed=derive_seed(seed, "tprime"), vertices=V1, retries=3
    )
    phi = {tv[i]: x for i, x in sub.map.items()}
    stages.append({"stage": "forest", "vertices": n_t, "pool": n1, "sub_stages": len(sub.stages)})
    leftover = sorted(set(V1) - set(phi.values()))
    # top each middle part up to m
    for j in range(rstar):
        while len(V2[j]) < m:
            V2[j].append(leftover.pop())
    assert not leftover
    return phi, V2, V3, sub.reservoir_ledger


def _case_stars(host, tree, items, eps, seed, beta, stages) -> Embedding:
    r, n = host.r, host.n
    m = len(items)
    removed = set()
    for S in items:
        removed.add(S.center)
        removed.update(S.leaf_edges)
    ell = sum(len(S.leaf_edges) for S in items)
    kept = [e for e in tree.edges if e not in removed]
    tv = sorted({v for e in kept for v in e} | {S.root for S in items})
    phi, V2, V3, ledger = _partition_and_embed(host, tree, kept, tv, r - 1, m, ell, eps, seed, beta, stages)
    R1 = [phi[S.root] for S in items]
    M = find_matching(host, [R1] + V2, V3)
    if M.uncovered:
        raise PipelineError("cover-roots", f"{len(M.uncovered)} roots left uncovered", {"uncovered": list(M.uncovered)})
    stages.append({"stage": "cover-roots", "Mprime": len(M.mprime), "Mdoubleprime": len(M.mdouble)})
    at = {}
    for e in M.edges:
        for x in e:
            at[x] = e
    role = {}
    for j in range(r - 1):
        for x in list(V2[j]) + list(V3[j]):
            role[x] = j
    used = set(phi.values()) | {x for e in M.edges for x in e}
    for S in items:
        e = at[phi[S.root]]
        for x in e:
            if x != phi[S.root]:
                phi[S.z[role[x]]] = x
    _attach_leaves(host, tree, items, phi, used, [set(V2[j]) | set(V3[j]) for j in range(r - 1)], seed, stages)
    return _finish(host, tree, phi, stages, ledger)


def _attach_leaves(host, tree, items, phi, used, pools, seed, stages):
    r = host.r
    hanging: dict[int, list[Edge]] = defaultdict(list)
    for S in items:
        for e in S.leaf_edges:
            centre = next(v for v in e if v in phi)
            hanging[centre].append(e)
    if not hanging:
        stages.append({"stage": "stars", "skipped": True})
        return
    U0 = sorted(phi[v] for v in hanging)
    U = [sorted(p - used) for p in pools]
    f = {phi[v]: len(es) for v, es in hanging.items()}
    sa = embed_stars(host, [U0] + U, f, seed=derive_seed(seed, "stars"))
    stages.append({"stage": "stars", "centers": len(U0), "edges": sum(f.values()), "method": sa.method})
    inv = {x: v for v, x in phi.items()}
    for x, es in sa.stars.items():
        g = inv[x]
        for guest_e, host_e in zip(hanging[g], es):
            new = [v for v in guest_e if v != g]
            for v, y in zip(new, [y for y in host_e if y != x]):
                phi[v] = y


def _finish(host, tree, phi, stages, ledger) -> Embedding:
    emb = Embedding(tree.graph, host, dict(phi), (), True, stages, ledger)
    bad = verify_embedding(emb)
    if bad:
        raise PipelineError("validate", "; ".join(bad))
    return emb


def _case_caterpillars(host, tree, items, eps, seed, beta, t, stages) -> Embedding:
    r, n = host.r, host.n
    m = len(items)
    rstar = (r - 1) * t - 1
    removed = set()
    for C in items:
        removed.update(C.central_path.edges)
        removed.update(C.leaf_edges)
    ell = sum(len(C.leaf_edges) for C in items)
    kept = [e for e in tree.edges if e not in removed]
    tv = sorted({v for e in kept for v in e} | {x for C in items for x in C.ends})
    phi, V2, V3, ledger = _partition_and_embed(host, tree, kept, tv, rstar, m, ell, eps, seed, beta, stages)
    W = [V2[r - 1 + i] for i in range(r - 1)]
    R1 = [phi[C.ends[0]] for C in items]
    R2 = [phi[C.ends[1]] for C in items]
    M1 = find_matching(host, [R1] + V2[: r - 1], W)
    if M1.uncovered:
        raise PipelineError("cover-starts", f"{len(M1.uncovered)} starts uncovered")
    used1 = {x for e in M1.mdouble for x in e}
    M2 = find_matching(host, [R2] + V2[rstar - r + 1 :], [[x for x in w if x not in used1] for w in W])
    if M2.uncovered:
        raise PipelineError("cover-ends", f"{len(M2.uncovered)} ends uncovered")
    stages.append({"stage": "cover-ends", "M1": len(M1.edges), "M2": len(M2.edges)})
    # roles: position j (0-based) among the r-1 partner parts of each matching
    role1 = {x: j for j in range(r - 1) for x in list(V2[j]) + list(W[j])}
    role2 = {x: j for j in range(r - 1) for x in list(V2[rstar - r + 1 + j]) + list(W[j])}
    at1 = {x: e for e in M1.edges for x in e}
    at2 = {x: e for e in M2.edges for x in e}
    covered = {x for e in M1.edges + M2.edges for x in e}
    pairs = []
    audit: dict = {"first": {}, "last": {}}
    for i, C in enumerate(items):
        z = C.z  # z[0..rstar-1]
        u, v = phi[C.ends[0]], phi[C.ends[1]]
        for x in at1[u]:
            if x != u:
                phi[z[role1[x]]] = x
        for x in at2[v]:
            if x != v:
                phi[z[rstar - r + 1 + role2[x]]] = x
        pairs.append((phi[z[r - 2]], phi[z[rstar - r + 1]]))
    # middle parts: uncovered vertices of the end parts fill positions r..2r-2
    loose = sorted(
        x
        for j in list(range(r - 1)) + list(range(r - 1, 2 * r - 2)) + list(range(rstar - r + 1, rstar))
        for x in V2[j]
        if x not in covered
    )
    middle: list[list[int]] = []
    for i in range(r - 1):
        middle.append(loose[i * m : (i + 1) * m])
    for j in range(2 * r - 2, rstar - r + 1):
        middle.append(list(V2[j]))
    audit["middle_sizes"] = [len(p) for p in middle]
    if any(len(p) != m for p in middle):
        raise PipelineError("identify", "middle parts are unbalanced", audit)
    ident = identify_ends(host, pairs, middle)
    fac = loose_cycle_factor(ident.graph, ident.parts, eps=max(eps, 1e-9), seed=derive_seed(seed, "cycle"), d_min=0.0)
    stages.append({"stage": "cycle-factor", "cycles": len(fac.copies), "method": fac.method, "audit": audit})
    for c in fac.copies:
        i, path = _decode_cycle(ident, c)
        C = items[i]
        for p, x in enumerate(path):
            phi[C.z[r - 2 + p]] = x
    used = set(phi.values())
    _attach_leaves(host, tree, items, phi, used, [set(p) for p in V3], seed, stages)
    return _finish(host, tree, phi, stages, ledger)


# -------------------------------------------------------------- Hamilton cycles


@dataclass(frozen=True)
class LooseCycle:
    r: int
    vertices: tuple[int, ...]  # cyclic order; edge i starts at position (r-1)i

    @property
    def edges(self) -> tuple[Edge, ...]:
        k = len(self.vertices)
        L = k // (self.r - 1)
        return tuple(
            tuple(sorted(self.vertices[((self.r - 1) * i + j) % k] for j in range(self.r))) for i in range(L)
        )

    def as_path(self) -> LinearPath:
        return LinearPath(self.r, self.vertices + (self.vertices[0],))

    def to_dict(self) -> dict:
        return {"r": self.r, "vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}


@dataclass
class HamiltonResult:
    cycle: LooseCycle | None
    method: str
    diagnostics: dict


def is_loose_hamilton(host: RGraph, cyc: LooseCycle) -> bool:
    r, n = host.r, host.n
    vs = cyc.vertices
    if len(vs) != n or sorted(vs) != list(range(n)) or n % (r - 1) or n // (r - 1) < 3:
        return False
    E = cyc.edges
    if len(E) != n // (r - 1) or any(not host.has_edge(e) for e in E):
        return False
    L = len(E)
    for i in range(L):
        if len(set(E[i]) & set(E[(i + 1) % L])) != 1:
            return False
    return True


def exhaustive_loose_hamilton(host: RGraph, node_limit: int | None = None) -> LooseCycle | None:
    r, n = host.r, host.n
    if n % (r - 1) or n // (r - 1) < 3:
        return None
    L = n // (r - 1)
    seq = [0]
    used = {0}
    nodes = 0

    def rec(edges_done: int) -> bool:
        nonlocal nodes
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise SearchBudget("cycle search exceeded its node limit")
        a = seq[-1]
        if edges_done == L - 1:
            for e in host.incidence[a]:
                if 0 in e and a != 0 and all(x in (a, 0) or x not in used for x in e):
                    mid = [x for x in e if x not in (a, 0)]
                    if len(mid) == r - 2:
                        seq.extend(mid)
                        return True
            return False
        for e in host.incidence[a]:
            rest = [x for x in e if x != a]
            if any(x in used for x in rest):
                continue
            for nxt in rest:
                mid = [x for x in rest if x != nxt]
                seq.extend(mid + [nxt])
                used.update(rest)
                if rec(edges_done + 1):
                    return True
                del seq[-(r - 1) :]
                used.difference_update(rest)
        return False

    if not rec(0):
        return None
    return LooseCycle(r, tuple(seq))


def loose_hamilton(
    host: RGraph,
    eps: float = 0.3,
    seed: int = 0,
    *,
    retries: int = 5,
    exhaustive_below: int = 12,
    strict: bool = False,
) -> HamiltonResult:
    """Loose Hamilton cycle: cut the cycle into segments and three-edge links,
    embed the segments, then close all links at once as a transversal cycle
    factor of the host with each link's two ends identified."""
    r, n = host.r, host.n
    if n % (r - 1):
        raise HypergraphError(f"r-1 = {r - 1} does not divide n = {n}")
    L = n // (r - 1)
    if L < 3:
        raise HypergraphError("a loose cycle needs at least 3 edges")
    dmin = min_codegree(host, 1) if n else 0
    met = dmin >= eps * n ** (r - 1)
    diag: dict = {"min_degree": dmin, "hypothesis_met": met, "attempts": []}
    if strict and not met:
        raise HypothesisError(f"minimum degree {dmin} below eps*n^(r-1)")
    k = max(1, L // 4)
    for attempt in range(retries):
        s = derive_seed(seed, "ham", attempt)
        try:
            cyc, info = _hamilton_once(host, L, k, s)
        except (PipelineError, HypothesisError, SearchBudget, AbsorptionError) as exc:
            diag["attempts"].append({"seed": s, "error": str(exc)})
            continue
        diag["attempts"].append({"seed": s, **info})
        if is_loose_hamilton(host, cyc):
            return HamiltonResult(cyc, "pipeline", diag)
        diag["attempts"][-1]["error"] = "decoded cycle failed validation"
    if n <= exhaustive_below:
        cyc = exhaustive_loose_hamilton(host)
        return HamiltonResult(cyc, "exhaustive" if cyc else "none", diag)
    return HamiltonResult(None, "failed", diag)


def _hamilton_once(host: RGraph, L: int, k: int, seed: int) -> tuple[LooseCycle, dict]:
    r, n = host.r, host.n
    seg_edges = _split_sizes(L - 3 * k, k)
    # guest: k disjoint loose paths (a single vertex when a segment has no edge)
    edges, ends, nxt = [], [], 0
    for s in seg_edges:
        verts = list(range(nxt, nxt + (r - 1) * s + 1))
        nxt += len(verts)
        for i in range(s):
            edges.append(tuple(verts[(r - 1) * i : (r - 1) * i + r]))
        ends.append((verts[0], verts[-1], verts))
    phi = exhaustive_embed(host, edges, range(nxt), node_limit=50_000, order_seed=seed)
    if phi is None:
        raise PipelineError("segments", "segments do not embed")
    W = sorted(set(range(n)) - set(phi.values()))
    gen = rng(seed, "links")
    gen.shuffle(W)
    inner = 3 * (r - 1) - 1
    middle = [sorted(W[i * k : (i + 1) * k]) for i in range(inner)]
    # link j runs from the end of segment j to the start of segment j+1
    pairs = [(phi[ends[j][1]], phi[ends[(j + 1) % k][0]]) for j in range(k)]
    ident = identify_ends(host, pairs, middle)
    fac = loose_cycle_factor(ident.graph, ident.parts, seed=derive_seed(seed, "close"), d_min=0.0)
    links = {}
    for c in fac.copies:
        j, path = _decode_cycle(ident, c)
        links[j] = path
    seq: list[int] = []
    for j in range(k):
        seq += [phi[v] for v in ends[j][2]]
        seq += links[j][1:-1]
    return LooseCycle(r, tuple(seq)), {"links": k, "segments": seg_edges, "factor": fac.method}


# ------------------------------------------------------------------- rainbows


@dataclass(frozen=True)
class RainbowInstance:
    H: RGraph
    T_hat: RGraph
    A: frozenset[int]  # original tree vertices
    B: frozenset[int]  # one new vertex per tree edge
    V: frozenset[int]
    C: frozenset[int]  # one vertex per color
    edge_of: dict  # B vertex -> tree edge


def rainbow_reduce(system: Sequence[RGraph], T: RGraph | Hypertree) -> RainbowInstance:
    """(r+1)-graph with e + {color vertex} for e in G_i, and T with one new
    vertex added to each edge."""
    tg = T.graph if isinstance(T, Hypertree) else T
    if not system:
        raise HypergraphError("empty system")
    r, n = system[0].r, system[0].n
    if any(g.n != n or g.r != r for g in system):
        raise HypergraphError("graphs of the system differ in vertex set or uniformity")
    if tg.r != r or tg.n > n:
        raise HypergraphError("tree does not fit the system")
    m = len(system)
    H = validate(r + 1, n + m, [list(e) + [n + i] for i, g in enumerate(system) for e in g.edges])
    nt = tg.n
    T_hat = validate(r + 1, nt + tg.m, [list(e) + [nt + j] for j, e in enumerate(tg.edges)])
    return RainbowInstance(
        H,
        T_hat,
        frozenset(range(nt)),
        frozenset(range(nt, nt + tg.m)),
        frozenset(range(n)),
        frozenset(range(n, n + m)),
        {nt + j: e for j, e in enumerate(tg.edges)},
    )


@dataclass
class RainbowEmbedding:
    vertex_map: dict[int, int]
    colors: dict[Edge, int]
    method: str
    diagnostics: dict = field(default_factory=dict)


def verify_rainbow(system: Sequence[RGraph], T: RGraph, emb: RainbowEmbedding) -> list[str]:
    bad = []
    phi = emb.vertex_map
    if sorted(phi) != list(range(T.n)):
        bad.append("map does not cover the tree")
    if len(set(phi.values())) != len(phi):
        bad.append("map is not injective")
    if len(set(emb.colors.values())) != len(emb.colors):
        bad.append("colors repeat")
    for e in T.edges:
        c = emb.colors.get(e)
        if c is None or not 0 <= c < len(system):
            bad.append(f"edge {list(e)} has no color")
            continue
        if not system[c].has_edge(phi[v] for v in e):
            bad.append(f"edge {list(e)} is missing from color {c}")
    return bad


def rainbow_embed(
    system: Sequence[RGraph],
    T: RGraph | Hypertree,
    eps: float | None = None,
    alpha: float | None = None,
    seed: int = 0,
    *,
    node_limit: int = 500_000,
) -> RainbowEmbedding:
    """Rainbow copy of T: embed the extended tree into the reduced graph with
    tree vertices sent to V and edge vertices sent to the color vertices."""
    tg = T.graph if isinstance(T, Hypertree) else T
    inst = rainbow_reduce(system, tg)
    sides = ((inst.A, inst.V), (inst.B, inst.C))
    diag: dict = {}
    emb = None
    method = "almost-spanning"
    if inst.T_hat.n < inst.H.n:
        eta = 1 - inst.T_hat.n / inst.H.n
        try:
            emb = embed_almost_spanning(inst.H, inst.T_hat, eta=eta, eps=eps, seed=seed, sides=sides, alpha=alpha)
            phi = emb.map
        except (PipelineError, HypergraphError) as exc:
            diag["pipeline_error"] = str(exc)
            emb = None
    if emb is None:
        method = "search"
        try:
            phi = exhaustive_embed(
                inst.H, inst.T_hat.edges, range(inst.T_hat.n), allowed=_allowed_from_sides(sides), node_limit=node_limit
            )
        except SearchBudget as exc:
            raise PipelineError("rainbow", str(exc), diag) from exc
        if phi is None:
            raise PipelineError("rainbow", "no rainbow copy", diag)
    n = system[0].n
    out = RainbowEmbedding(
        {v: phi[v] for v in range(tg.n)},
        {inst.edge_of[b]: phi[b] - n for b in sorted(inst.B)},
        method,
        diag,
    )
    bad = verify_rainbow(system, tg, out)
    if bad:
        raise PipelineError("rainbow", "; ".join(bad), diag)
    return out
