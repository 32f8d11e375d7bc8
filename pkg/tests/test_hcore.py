import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperspan.hcore import (
    HypergraphError,
    crossing_count,
    degree,
    from_dict,
    hole_exact,
    hole_heuristic,
    min_codegree,
    restrict,
    validate,
    verify_certificate,
)
from hyperspan.lab.generators import binomial, two_cliques
from hyperspan.lab.oracles import oracle_hole


@st.composite
def rgraphs(draw, max_n=8):
    r = draw(st.integers(2, 3))
    n = draw(st.integers(r, max_n))
    subsets = list(itertools.combinations(range(n), r))
    chosen = draw(st.lists(st.sampled_from(subsets), unique=True, max_size=len(subsets)))
    return validate(r, n, chosen)


def complete(r, n):
    return validate(r, n, itertools.combinations(range(n), r))


def test_validate_keeps_canonical_input():
    g = validate(3, 5, [[0, 1, 2], [2, 3, 4]])
    assert g.edges == ((0, 1, 2), (2, 3, 4))


def test_validate_sorts_vertices():
    assert validate(3, 5, [[2, 1, 0]]).edges == ((0, 1, 2),)


@pytest.mark.parametrize(
    "edges, msg",
    [([[0, 1, 1]], "repeated vertex"), ([[0, 1]], "arity"), ([[0, 1, 5]], "outside"), ([[0, 1, 2], [2, 1, 0]], "duplicate")],
)
def test_validate_rejects(edges, msg):
    with pytest.raises(HypergraphError, match=msg):
        validate(3, 3 if msg != "outside" else 5, edges)


@given(rgraphs())
def test_canonical_form_is_order_free(g):
    shuffled = [list(reversed(e)) for e in reversed(g.edges)]
    assert validate(g.r, g.n, shuffled) == g
    assert from_dict(g.to_dict()) == g


def test_degree_examples():
    assert degree(complete(2, 4), {0}) == 3
    assert degree(validate(3, 3, [[0, 1, 2]]), {0, 1}) == 1
    # frozen from a scan of all edges of the seeded instance
    assert degree(binomial(3, 12, 0.5, 7), {0}) == 27


@given(rgraphs(), st.data())
def test_degree_matches_edge_scan(g, data):
    S = data.draw(st.sets(st.integers(0, g.n - 1), max_size=g.r))
    assert degree(g, S) == sum(1 for e in g.edges if S <= set(e))


def test_min_codegree_examples():
    assert min_codegree(complete(3, 5), 1) == 6
    assert min_codegree(validate(3, 5, []), 1) == 0
    two_triangles = validate(2, 6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
    assert min_codegree(two_triangles, 1) == 2


def test_crossing_count_examples():
    tri = complete(2, 3)
    assert crossing_count(tri, [{0, 1}, {0, 1}]) == 2
    assert crossing_count(tri, [set(), {0, 1}]) == 0
    assert crossing_count(validate(3, 3, [[0, 1, 2]]), [{0}, {1}, {2}]) == 1


@given(rgraphs(max_n=6), st.data())
def test_crossing_count_matches_tuple_enumeration(g, data):
    parts = [data.draw(st.sets(st.integers(0, g.n - 1), max_size=4)) for _ in range(g.r)]
    brute = sum(1 for t in itertools.product(*parts) if len(set(t)) == g.r and g.has_edge(t))
    assert crossing_count(g, parts) == brute


def test_restrict_examples():
    res = restrict(complete(2, 3), [{0}, {1}])
    assert [res.lift(e) for e in res.graph.edges] == [(0, 1)]
    g = binomial(3, 10, 0.5, 1)
    parts = [{0, 1, 2}, {3, 4, 5}, {6, 7, 8}]
    res = restrict(g, parts)
    direct = sorted(e for e in g.edges if all(len(set(e) & p) == 1 for p in parts))
    assert sorted(res.lift(e) for e in res.graph.edges) == direct


def test_hole_exact_examples():
    empty = hole_exact(validate(3, 6, []))
    assert empty.lower == 6 and verify_certificate(validate(3, 6, []), empty.certificate)
    assert hole_exact(complete(2, 5)).lower == 1
    sides = hole_exact(two_cliques(2, 6))
    assert sides.lower == 3
    assert sorted(map(sorted, sides.certificate.sets)) == [[0, 1, 2], [3, 4, 5]]
    assert hole_exact(two_cliques(2, 8)).lower == 4


def test_hole_exact_guard():
    with pytest.raises(HypergraphError, match="max_n"):
        hole_exact(validate(2, 20, []), max_n=14)


@given(rgraphs(max_n=7))
def test_hole_exact_matches_oracle(g):
    hb = hole_exact(g)
    assert hb.exact and hb.lower == hb.upper == oracle_hole(g)
    assert verify_certificate(g, hb.certificate)


def test_disjoint_hole_never_exceeds_plain():
    for s in range(10):
        g = binomial(2, 8, 0.4, s)
        assert hole_exact(g, disjoint=True).lower <= hole_exact(g).lower


def test_hole_heuristic_examples():
    assert hole_heuristic(validate(3, 100, [])).lower == 100
    assert hole_heuristic(two_cliques(2, 100), budget=10_000).lower == 50
    g = binomial(3, 12, 0.9, 3)
    assert hole_heuristic(g, seed=3).lower <= hole_exact(g).lower


@given(rgraphs(max_n=7), st.integers(0, 50))
def test_heuristic_certificate_is_valid(g, seed):
    hb = hole_heuristic(g, budget=200, seed=seed)
    assert verify_certificate(g, hb.certificate)
    assert hb.lower <= hole_exact(g).lower
