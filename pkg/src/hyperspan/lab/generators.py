"""Seeded instance generators for hosts, guest trees and rainbow systems."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from ..hcore import HypergraphError, RGraph, validate
from ..htree import Hypertree, tree_from_edges
from ..seeding import derive_seed

MODELS = (
    "gnp",
    "perturbed",
    "two_cliques",
    "complete_multipartite",
    "random_hypertree",
    "loose_path",
    "loose_cycle",
    "star",
    "caterpillar",
)
TREE_MODELS = {"random_hypertree", "loose_path", "star", "caterpillar"}


@dataclass(frozen=True)
class GeneratorSpec:
    model: str
    n: int
    r: int = 3
    p: float = 0.5
    C: float = 1.0
    delta: int = 3
    t: int = 6
    sizes: tuple[int, ...] = ()
    seed: int = 0
    base: RGraph | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "r": self.r,
            "p": self.p,
            "C": self.C,
            "delta": self.delta,
            "t": self.t,
            "sizes": list(self.sizes),
            "seed": self.seed,
        }


def coins(seed: int, count: int) -> np.ndarray:
    """``count`` uniforms from a counter-based stream: coin i depends only on (seed, i)."""
    bits = np.random.Generator(np.random.Philox(key=derive_seed(seed, "coins")))
    return bits.random(count)


def binomial(r: int, n: int, p: float, seed: int) -> RGraph:
    """One coin per r-subset, subsets taken in lexicographic order."""
    if not 0 <= p <= 1:
        raise HypergraphError("p must lie in [0, 1]")
    total = comb(n, r)
    u = coins(seed, total)
    keep = np.flatnonzero(u < p)
    subsets = itertools.combinations(range(n), r)
    edges = []
    j = 0
    for idx, e in enumerate(subsets):
        if j == len(keep):
            break
        if idx == keep[j]:
            edges.append(e)
            j += 1
    return validate(r, n, edges)


def two_cliques(r: int, n: int) -> RGraph:
    if n % 2:
        raise HypergraphError("two_cliques needs even n")
    h = n // 2
    edges = list(itertools.combinations(range(h), r)) + list(itertools.combinations(range(h, n), r))
    return validate(r, n, edges)


def complete_multipartite(r: int, sizes: tuple[int, ...]) -> RGraph:
    """Every r-set meeting each part at most once."""
    if len(sizes) < r:
        raise HypergraphError("need at least r parts")
    part = [i for i, s in enumerate(sizes) for _ in range(s)]
    n = len(part)
    edges = [e for e in itertools.combinations(range(n), r) if len({part[v] for v in e}) == r]
    return validate(r, n, edges)


def random_hypertree(r: int, n: int, delta: int, seed: int) -> Hypertree:
    """Random attachment: each new edge hangs at an existing vertex of degree < delta."""
    if (n - 1) % (r - 1) or n < r:
        raise HypergraphError(f"r-1 must divide n-1 and n >= r (n={n}, r={r})")
    if delta < 1:
        raise HypergraphError("delta must be positive")
    gen = np.random.Generator(np.random.Philox(key=derive_seed(seed, "tree")))
    edges = [tuple(range(r))]
    deg = [1] * r
    while len(deg) < n:
        open_ = [v for v, d in enumerate(deg) if d < delta]
        if not open_:
            raise HypergraphError("degree cap leaves no attachment point")
        v = open_[int(gen.integers(len(open_)))]
        new = list(range(len(deg), len(deg) + r - 1))
        edges.append(tuple([v] + new))
        deg[v] += 1
        deg.extend([1] * (r - 1))
    # shuffle labels so vertex numbers carry no structure
    perm = gen.permutation(n)
    return tree_from_edges(r, [[int(perm[v]) for v in e] for e in edges], n)


def loose_path(r: int, n: int) -> Hypertree:
    if (n - 1) % (r - 1) or n < r:
        raise HypergraphError("loose_path needs n = (r-1)L + 1 with L >= 1")
    L = (n - 1) // (r - 1)
    return tree_from_edges(r, [range((r - 1) * i, (r - 1) * i + r) for i in range(L)], n)


def loose_cycle(r: int, n: int) -> RGraph:
    if n % (r - 1):
        raise HypergraphError(f"loose_cycle needs r-1 | n (n={n}, r={r})")
    L = n // (r - 1)
    if L < 3:
        raise HypergraphError("loose_cycle needs at least 3 edges")
    return validate(r, n, [[((r - 1) * i + j) % n for j in range(r)] for i in range(L)])


def star(r: int, n: int) -> Hypertree:
    if (n - 1) % (r - 1) or n < r:
        raise HypergraphError("star needs r-1 | n-1")
    L = (n - 1) // (r - 1)
    return tree_from_edges(r, [[0] + list(range(1 + (r - 1) * i, 1 + (r - 1) * (i + 1))) for i in range(L)], n)


def caterpillar(r: int, n: int, t: int) -> Hypertree:
    """Loose path of t edges, further leaf-edges hung round-robin on its inner vertices."""
    base = (r - 1) * t + 1
    if n < base or (n - base) % (r - 1):
        raise HypergraphError(f"caterpillar needs n = {base} + (r-1)k")
    edges = [list(range((r - 1) * i, (r - 1) * i + r)) for i in range(t)]
    inner = list(range(1, base - 1))
    nxt = base
    i = 0
    while nxt < n:
        edges.append([inner[i % len(inner)]] + list(range(nxt, nxt + r - 1)))
        nxt += r - 1
        i += 1
    return tree_from_edges(r, edges, n)


def union(a: RGraph, b: RGraph) -> RGraph:
    if a.r != b.r or a.n != b.n:
        raise HypergraphError("union needs equal r and n")
    return validate(a.r, a.n, sorted(set(a.edges) | set(b.edges)))


def generate(spec: GeneratorSpec) -> RGraph | Hypertree:
    m, r, n = spec.model, spec.r, spec.n
    if m not in MODELS:
        raise HypergraphError(f"unknown model {m!r}")
    if m == "gnp":
        return binomial(r, n, spec.p, spec.seed)
    if m == "perturbed":
        sparse = binomial(r, n, min(1.0, spec.C / n ** (r - 1)), derive_seed(spec.seed, "perturb"))
        base = spec.base if spec.base is not None else validate(r, n, [])
        return union(base, sparse)
    if m == "two_cliques":
        return two_cliques(r, n)
    if m == "complete_multipartite":
        sizes = spec.sizes or tuple([n // r] * r)
        return complete_multipartite(r, tuple(sizes))
    if m == "random_hypertree":
        return random_hypertree(r, n, spec.delta, spec.seed)
    if m == "loose_path":
        return loose_path(r, n)
    if m == "loose_cycle":
        return loose_cycle(r, n)
    if m == "star":
        return star(r, n)
    return caterpillar(r, n, spec.t)


def random_system(r: int, n: int, m: int, p: float, seed: int) -> list[RGraph]:
    return [binomial(r, n, p, derive_seed(seed, "color", i)) for i in range(m)]
