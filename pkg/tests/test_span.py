import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperspan.absorb import verify_factor, cycle_pattern, part_map
from hyperspan.eprim import HypothesisError
from hyperspan.hcore import HypergraphError, validate
from hyperspan.htree import tree_from_edges
from hyperspan.lab.generators import binomial, complete_multipartite, loose_path, random_hypertree, random_system
from hyperspan.lab.oracles import oracle_loose_hamilton, oracle_rainbow, oracle_tree_embed
from hyperspan.span import (
    Embedding,
    PipelineError,
    check_stars,
    embed_almost_spanning,
    embed_spanning_tree,
    embed_stars,
    is_loose_hamilton,
    loose_cycle_factor,
    loose_hamilton,
    rainbow_embed,
    rainbow_reduce,
    theoretical_t,
    verify_embedding,
    verify_rainbow,
)


def complete(r, n):
    return validate(r, n, itertools.combinations(range(n), r))


def test_embed_stars_examples():
    g = validate(2, 3, [(0, 1), (0, 2)])
    sa = embed_stars(g, [[0], [1, 2]], {0: 2})
    assert sorted(sa.stars[0]) == [(0, 1), (0, 2)]
    with pytest.raises(HypergraphError):
        embed_stars(g, [[0], [1, 2]], {0: 3})
    h = complete_multipartite(3, (1, 4, 4))
    parts = [[0], [1, 2, 3, 4], [5, 6, 7, 8]]
    sa = embed_stars(h, parts, {0: 4})
    assert len(sa.stars[0]) == 4 and not check_stars(h, parts, sa)


def test_almost_spanning_examples():
    one = tree_from_edges(3, [[0, 1, 2]])
    emb = embed_almost_spanning(complete(3, 6), one, eta=0.5)
    assert not verify_embedding(emb)
    path = loose_path(3, 13)
    host = binomial(3, 40, 0.4, 11)
    emb = embed_almost_spanning(host, path, eta=0.5, seed=11)
    assert not verify_embedding(emb)
    assert all(row["within"] for row in emb.reservoir_ledger)
    with pytest.raises(HypergraphError):
        embed_almost_spanning(complete(3, 14), path, eta=0.5)


def test_almost_spanning_side_constraints():
    host = binomial(3, 30, 0.6, 2)
    guest = random_hypertree(3, 9, 3, 1)
    sides = [([0, 1, 2], range(10))]
    emb = embed_almost_spanning(host, guest, eta=0.5, seed=1, sides=sides)
    assert not verify_embedding(emb)
    assert all(emb.map[v] < 10 for v in (0, 1, 2))


def test_spanning_tree_complete_host():
    emb = embed_spanning_tree(complete(3, 13), loose_path(3, 13))
    assert not verify_embedding(emb) and emb.spanning


def test_theoretical_t_is_logged():
    assert theoretical_t(3, 0.5) == 54_000_000
    emb = embed_spanning_tree(binomial(3, 13, 0.85, 1), random_hypertree(3, 13, 3, 2), eps=0.5, seed=3)
    first = emb.stages[0]
    assert first["t_theoretical"] == 54_000_000 and first["t_practical"] == 6


def test_spanning_tree_never_misses_at_n13():
    for s in range(20):
        host = binomial(3, 13, 0.85, 100 + s)
        guest = random_hypertree(3, 13, 3, 200 + s)
        truth = oracle_tree_embed(host, guest.graph, cap=13)
        try:
            emb = embed_spanning_tree(host, guest, seed=s)
        except PipelineError:
            assert truth is None
            continue
        assert not verify_embedding(emb)


def test_spanning_tree_larger_cases():
    host = binomial(3, 41, 0.6, 5)
    for case, guest in (("stars", random_hypertree(3, 41, 3, 7)), ("caterpillars", loose_path(3, 41))):
        emb = embed_spanning_tree(host, guest, seed=4, case=case)
        assert not verify_embedding(emb)
    with pytest.raises(PipelineError, match="all attempts failed"):
        embed_spanning_tree(host, random_hypertree(3, 41, 3, 7), seed=0, case="caterpillars")


def test_spanning_tree_rejects_bad_sizes():
    with pytest.raises(HypergraphError):
        embed_spanning_tree(complete(3, 12), loose_path(3, 11))


def test_strict_mode_rejects_sparse_host():
    host = binomial(3, 13, 0.3, 0)
    with pytest.raises(HypothesisError):
        embed_spanning_tree(host, loose_path(3, 13), eps=0.5, strict=True)


def test_cycle_factor_complete_blocks():
    parts = [list(range(4 * j, 4 * j + 4)) for j in range(6)]
    where = part_map(parts)
    g = validate(3, 24, [e for e in itertools.combinations(range(24), 3) if len({where[v] for v in e}) == 3])
    fac = loose_cycle_factor(g, parts, eps=0.0)
    assert len(fac.copies) == 4
    assert verify_factor(g, cycle_pattern(3, 3), where, fac.copies, range(24))


def test_cycle_factor_rejects_empty_block():
    parts = [list(range(4 * j, 4 * j + 4)) for j in range(6)]
    with pytest.raises(HypothesisError):
        loose_cycle_factor(validate(3, 24, []), parts)


def test_cycle_factor_dense_random_blocks():
    parts = [list(range(6 * j, 6 * j + 6)) for j in range(6)]
    where = part_map(parts)
    g = binomial(3, 36, 0.7, 3)
    g = validate(3, 36, [e for e in g.edges if len({where[v] for v in e}) == 3])
    fac = loose_cycle_factor(g, parts, eps=0.1, seed=1)
    assert verify_factor(g, cycle_pattern(3, 3), where, fac.copies, range(36))


def test_loose_hamilton_examples():
    res = loose_hamilton(complete(3, 8))
    assert len(res.cycle.edges) == 4 and is_loose_hamilton(complete(3, 8), res.cycle)
    with pytest.raises(HypergraphError):
        loose_hamilton(complete(3, 9))


@pytest.mark.parametrize("n", [8, 12, 16, 20])
def test_loose_hamilton_dense_random(n):
    wins = 0
    for s in range(10):
        host = binomial(3, n, 0.8, 300 + s)
        res = loose_hamilton(host, seed=s)
        if res.cycle is not None:
            assert is_loose_hamilton(host, res.cycle)
            wins += 1
            if n == 8:
                assert oracle_loose_hamilton(host) is not None
    assert wins >= 9


def test_rainbow_reduce_examples():
    g = validate(2, 3, [(0, 1)])
    T = validate(2, 2, [(0, 1)])
    inst = rainbow_reduce([g], T)
    assert inst.H.edges == ((0, 1, 3),) and inst.T_hat.edges == ((0, 1, 2),)
    empty = [validate(2, 5, [])] * 2
    inst = rainbow_reduce(empty, validate(2, 3, [(0, 1), (1, 2)]))
    assert inst.H.m == 0


def test_rainbow_embed_examples():
    full = [complete(2, 7)] * 3
    T = validate(2, 4, [(0, 1), (1, 2), (2, 3)])
    emb = rainbow_embed(full, T)
    assert not verify_rainbow(full, T, emb)
    system = random_system(2, 7, 3, 0.7, 4)
    emb = rainbow_embed(system, T, seed=1)
    assert not verify_rainbow(system, T, emb)
    holed = [complete(2, 7), complete(2, 7), validate(2, 7, [])]
    with pytest.raises(PipelineError):
        rainbow_embed(holed, T)


@settings(max_examples=30)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_rainbow_agrees_with_brute_force(seed, m):
    system = random_system(2, 6, m, 0.5, seed)
    T = random_hypertree(2, m + 1, 3, seed).graph
    try:
        rainbow_embed(system, T, seed=seed)
        found = True
    except PipelineError:
        found = False
    assert found == (oracle_rainbow(system, T) is not None)


def test_verify_embedding_examples():
    g = binomial(3, 9, 0.5, 0)
    ident = Embedding(g, g, {v: v for v in range(9)}, spanning=True)
    assert verify_embedding(ident) == []
    bad = Embedding(g, g, {v: 0 if v < 2 else v for v in range(9)})
    assert any("injective" in b for b in verify_embedding(bad))


def test_pipeline_output_recount():
    host = binomial(3, 13, 0.85, 9)
    guest = random_hypertree(3, 13, 3, 9)
    emb = embed_spanning_tree(host, guest, seed=9)
    edges = {frozenset(e) for e in host.edges}
    assert all(frozenset(emb.map[v] for v in e) in edges for e in guest.edges)
