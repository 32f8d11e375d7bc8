import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperspan.eprim import (
    HypothesisError,
    PathStall,
    check_degree_concentration,
    find_a_set_bound,
    find_linear_path,
    find_matching,
    high_degree_subset,
    is_matching,
    random_partition,
)
from hyperspan.hcore import hole_exact, validate
from hyperspan.htree import is_linear_path
from hyperspan.lab.generators import binomial, complete_multipartite


def complete(r, n):
    return validate(r, n, itertools.combinations(range(n), r))


@st.composite
def partite(draw, r=None):
    r = r or draw(st.integers(2, 3))
    sizes = sorted(draw(st.lists(st.integers(1, 5), min_size=r, max_size=r)))
    parts, v = [], 0
    for s in sizes:
        parts.append(list(range(v, v + s)))
        v += s
    cells = list(itertools.product(*parts))
    chosen = draw(st.lists(st.sampled_from(cells), unique=True, max_size=len(cells)))
    return validate(r, v, chosen), parts


def test_find_matching_examples():
    g = validate(2, 4, [(0, 2), (1, 3)])
    assert find_matching(g, [{0, 1}, {2, 3}]).covered >= {0, 1}
    assert find_matching(g, [set(), {2, 3}]).edges == ()
    h = validate(2, 3, [(0, 2)])
    m = find_matching(h, [{0}, {1}], U=[{2}], m_star=1)
    assert m.mdouble == ((0, 2),)


@given(partite())
def test_find_matching_leaves_at_most_hole(inst):
    g, parts = inst
    m = find_matching(g, parts)
    assert is_matching(g, m.edges)
    assert len(m.uncovered) <= hole_exact(g, parts, max_n=8).lower


def test_find_linear_path_examples():
    single = find_linear_path(validate(3, 3, [[0, 1, 2]]), [{0}, {1}, {2}])
    assert single.path.length == 1
    g = complete(3, 9)
    parts = [{0}, {1, 2}, {3, 4}, {5, 6}, {7, 8}]
    res = find_linear_path(g, parts)
    assert res.path.length == 2 and is_linear_path(res.path)
    for j, v in enumerate(res.path.vertices):
        assert v in parts[j]
    with pytest.raises(PathStall) as info:
        find_linear_path(validate(3, 9, []), parts)
    assert info.value.block == 1


def test_high_degree_subset_neighbourhood():
    g = validate(2, 6, [(0, 3), (0, 4), (1, 5)])
    assert high_degree_subset(g, [[0, 1, 2], [3, 4, 5]], 1, [0], 1) == [3, 4]


def test_high_degree_subset_complete_partite():
    # a pair {u, w} from two parts of size 4 lies in exactly 4 edges
    g = complete_multipartite(3, (4, 4, 4))
    parts = [list(range(4)), list(range(4, 8)), list(range(8, 12))]
    assert high_degree_subset(g, parts, 1, [0], 4) == parts[1]
    assert high_degree_subset(g, parts, 1, [0], 16) == []


def test_find_a_set_bound_vacuous_when_t_is_large():
    assert find_a_set_bound(10, 17, 4, 3, 1) is None


@given(partite(r=3), st.data())
def test_high_degree_subset_bound(inst, data):
    g, parts = inst
    i = data.draw(st.integers(0, 2))
    j = data.draw(st.sampled_from([k for k in range(3) if k != i]))
    U = [data.draw(st.sampled_from(parts[j]))]
    n_cap = max(map(len, parts))
    t = data.draw(st.integers(1, n_cap))
    W = high_degree_subset(g, parts, i, U, t, n_cap)
    d_U = sum(1 for e in g.edges if U[0] in e)
    bound = find_a_set_bound(d_U, t, n_cap, 3, 1)
    assert bound is None or len(W) >= bound - 1e-9


def test_random_partition():
    g = binomial(2, 20, 0.3, 0)
    assert random_partition(g, [20], 1).parts == (tuple(range(20)),)
    with pytest.raises(Exception):
        random_partition(g, [10, 9], 1)
    a, b = random_partition(g, [10, 10], 1), random_partition(g, [10, 10], 2)
    assert a.parts != b.parts and [len(p) for p in a.parts] == [len(p) for p in b.parts]


def test_concentration_single_part_recount():
    g = binomial(3, 12, 0.6, 2)
    plan = random_partition(g, [12], 0)
    rep = check_degree_concentration(g, plan, factor=0.5)
    for v, sig, ordered, plain, ratio in rep.rows:
        assert ordered == 2 * plain
        assert plain == sum(1 for e in g.edges if v in e)


def test_concentration_rejects_empty_graph():
    g = validate(3, 9, [])
    with pytest.raises(HypothesisError):
        check_degree_concentration(g, random_partition(g, [3, 3, 3], 0))


def test_concentration_dense_random():
    g = binomial(3, 60, 0.5, 11)
    passes = sum(
        check_degree_concentration(g, random_partition(g, [20, 20, 20], s)).passed for s in range(20)
    )
    assert passes >= 19
