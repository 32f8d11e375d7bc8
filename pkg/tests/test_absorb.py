import itertools
import random

import pytest

from hyperspan.absorb import (
    AbsorptionError,
    LayerStall,
    assemble_absorbing_set,
    build_template,
    check_reachable,
    edge_pattern,
    find_edge_absorbers,
    merge_closed_check,
    part_map,
    perfect_matching,
    transitivity_compose,
    verify_perfect_matching,
)
from hyperspan.eprim import HypothesisError
from hyperspan.hcore import HypergraphError, validate
from hyperspan.lab.generators import binomial, complete_multipartite, two_cliques, union
from hyperspan.lab.oracles import oracle_perfect_matching, oracle_transversal_factor


def blocks(k, size):
    return [list(range(size * j, size * (j + 1))) for j in range(k)]


def _has_pm(left, right, edges):
    # Kuhn's augmenting paths, kept separate from the library matcher
    adj = {x: [y for a, y in edges if a == x] for x in left}
    match: dict = {}

    def aug(x, seen):
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                if y not in match or aug(match[y], seen):
                    match[y] = x
                    return True
        return False

    return all(aug(x, set()) for x in left)


def test_template_m1_exhaustive():
    T = build_template(1, 0.5, seed=0)
    assert (len(T.X), len(T.Y), len(T.Z)) == (2, 2, 3)
    for gone in T.X:
        left = [x for x in T.X + T.Y if x != gone]
        kept = [(a, b) for a, b in T.edges if a != gone]
        assert _has_pm(left, T.Z, kept)


def test_template_degree_cap_and_samples():
    assert build_template(20, 0.1, seed=5).max_degree <= 40
    T = build_template(50, 0.1, seed=1)
    rnd = random.Random(3)
    k = len(T.X) - T.m
    for _ in range(50):
        gone = set(rnd.sample(T.X, k))
        left = [x for x in T.X + T.Y if x not in gone]
        assert _has_pm(left, T.Z, [(a, b) for a, b in T.edges if a not in gone])


def test_edge_absorbers_complete_partite():
    g = complete_multipartite(3, (6, 6, 6))
    parts = blocks(3, 6)
    where = part_map(parts)
    # each body takes 6 of the 15 free vertices, so two is all that fits
    found = find_edge_absorbers(g, parts, [0, 6, 12], count=3, seed=1)
    assert len(found) == 2
    bodies = [a.body for a in found]
    assert all(a.verify(g, edge_pattern(3), where) for a in found)
    assert all(x.isdisjoint(y) for x, y in itertools.combinations(bodies, 2))


def test_edge_absorbers_empty_graph_stalls():
    with pytest.raises(LayerStall) as info:
        find_edge_absorbers(validate(3, 18, []), blocks(3, 6), [0, 6, 12], count=1)
    assert info.value.layer == 1


def test_edge_absorbers_random_host():
    g = binomial(3, 30, 0.6, 4)
    parts = blocks(3, 10)
    found = find_edge_absorbers(g, parts, [1, 11, 21], count=5, seed=2)
    assert all(a.verify(g, edge_pattern(3), part_map(parts)) for a in found)


def test_absorbing_set_on_complete_host():
    g = complete_multipartite(3, (12, 12, 12))
    parts = blocks(3, 12)
    A = assemble_absorbing_set(g, parts, edge_pattern(3), gamma=0.1, eta=0.5, seed=0)
    rnd = random.Random(0)
    outside = [[v for v in p if v not in A.A] for p in parts]
    for s in range(10):
        U = {rnd.choice(o) for o in outside}
        copies, _ = A.absorb(U, seed=s)
        assert oracle_transversal_factor(g, [[0, 1, 2]], parts, A.A | U) is not None
        assert {v for c in copies for v in c} == A.A | U


def test_absorbing_set_capacity_rejected():
    g = complete_multipartite(3, (6, 6, 6))
    with pytest.raises(HypothesisError):
        assemble_absorbing_set(g, blocks(3, 6), edge_pattern(3), gamma=0.9, eta=0.1, mode="pool")


def test_absorbing_set_random_host():
    parts = blocks(3, 15)
    g = binomial(3, 45, 0.5, 6)
    crossing = validate(3, 45, [e for e in g.edges if len({v // 15 for v in e}) == 3])
    A = assemble_absorbing_set(crossing, parts, edge_pattern(3), gamma=0.1, eta=0.5, seed=3)
    rnd = random.Random(1)
    outside = [[v for v in p if v not in A.A] for p in parts]
    for s in range(20):
        U = {rnd.choice(o) for o in outside}
        A.absorb(U, seed=s)
    with pytest.raises(AbsorptionError):
        A.absorb({outside[0][0]}, seed=0)


def test_reachability():
    g = complete_multipartite(3, (5, 5, 5))
    parts = blocks(3, 5)
    F = edge_pattern(3)
    rep = check_reachable(g, parts, F, 0, 1, m=2, k=1, trials=5, seed=0)
    assert rep.reachable and len(rep.witnesses) == 5
    same = check_reachable(g, parts, F, 2, 2, m=2, k=1, trials=1, seed=0)
    assert same.reachable
    lonely = validate(3, 15, [e for e in g.edges if 1 not in e])
    assert not check_reachable(lonely, parts, F, 0, 1, m=2, k=1, trials=3, seed=0).reachable


def test_transitivity():
    g = complete_multipartite(3, (6, 6, 6))
    parts = blocks(3, 6)
    F = edge_pattern(3)
    w1 = check_reachable(g, parts, F, 0, 1, m=2, k=1, trials=1, seed=1).witnesses[0]
    w2 = check_reachable(g, parts, F, 1, 2, m=2, k=1, trials=1, seed=2).witnesses[0]
    if w1.S & w2.S:
        with pytest.raises(HypergraphError):
            transitivity_compose(w1, w2, g, F, parts)
    else:
        w = transitivity_compose(w1, w2, g, F, parts)
        assert w.verify(g, F, part_map(parts))
        assert len(w.S) <= 2 * F.k - 1 + len(w1.S & w2.S)


def test_merge_closed_check():
    g = complete_multipartite(3, (5, 5, 5))
    parts = blocks(3, 5)
    rep = merge_closed_check(g, parts, edge_pattern(3), [0, 1], [2, 3], m=2, k=1, trials=4, seed=0)
    assert rep.hypothesis_rate == 1.0 and rep.conclusion_rate == 1.0
    iso = validate(3, 15, [e for e in g.edges if not {3, 4} & set(e)])
    bad = merge_closed_check(iso, parts, edge_pattern(3), [0, 1], [3, 4], m=2, k=1, trials=4, seed=0)
    assert bad.hypothesis_rate < 1.0


def test_perfect_matching_examples():
    res = perfect_matching(validate(3, 12, itertools.combinations(range(12), 3)))
    assert len(res.matching) == 4
    cross = binomial(2, 16, 20 / 64, 2)
    cross = validate(2, 16, [e for e in cross.edges if (e[0] < 8) != (e[1] < 8)])
    g = union(two_cliques(2, 16), cross)
    res = perfect_matching(g, seed=2)
    assert verify_perfect_matching(g, res.matching)
    assert oracle_perfect_matching(g) is not None
    with pytest.raises(HypergraphError):
        perfect_matching(binomial(3, 10, 0.5, 0))


def test_perfect_matching_agrees_with_oracle():
    for s in range(50):
        g = binomial(3, 12, 0.4, s)
        res = perfect_matching(g, seed=s)
        assert (res.matching is not None) == (oracle_perfect_matching(g) is not None)


def test_pipeline_route_at_moderate_size():
    g = binomial(3, 30, 0.5, 9)
    res = perfect_matching(g, seed=1)
    assert res.method == "absorption" and verify_perfect_matching(g, res.matching)
