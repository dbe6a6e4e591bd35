import itertools

from hypothesis import given
from hypothesis import strategies as st

from pcsplab._search import ConstraintNetwork, UnionFind


@st.composite
def networks(draw):
    n_vars = draw(st.integers(1, 4))
    n_vals = draw(st.integers(1, 3))
    cons = []
    for _ in range(draw(st.integers(0, 4))):
        arity = draw(st.integers(1, min(3, n_vars)))
        scope = tuple(draw(st.integers(0, n_vars - 1)) for _ in range(arity))
        tuples = list(itertools.product(range(n_vals), repeat=arity))
        allowed = draw(st.sets(st.sampled_from(tuples)))
        cons.append((scope, allowed))
    return n_vars, n_vals, cons


def brute(n_vars, n_vals, cons):
    return [
        x for x in itertools.product(range(n_vals), repeat=n_vars)
        if all(tuple(x[v] for v in scope) in allowed for scope, allowed in cons)
    ]


def build(n_vars, n_vals, cons):
    net = ConstraintNetwork.uniform(n_vars, n_vals)
    for scope, allowed in cons:
        net.add(scope, allowed)
    return net


@given(networks())
def test_static_enumeration_is_complete_and_lexicographic(case):
    assert list(build(*case).solutions(order="static")) == brute(*case)


@given(networks())
def test_mrv_finds_a_solution_iff_one_exists(case):
    sol = build(*case).first()
    expected = brute(*case)
    assert (sol is None) == (not expected)
    if sol is not None:
        assert sol in expected


def test_limit():
    net = ConstraintNetwork.uniform(3, 2)
    assert len(list(net.solutions(limit=3))) == 3


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=10))
def test_union_find_matches_closure(pairs):
    uf = UnionFind(8)
    for a, b in pairs:
        uf.union(a, b)
    cls, count = uf.classes()
    # reference: connected components by repeated merging
    comp = {x: {x} for x in range(8)}
    for a, b in pairs:
        merged = comp[a] | comp[b]
        for x in merged:
            comp[x] = merged
    for x in range(8):
        for y in range(8):
            assert (cls[x] == cls[y]) == (y in comp[x])
    assert count == len({frozenset(c) for c in comp.values()})
    # classes numbered by first occurrence
    assert cls[0] == 0 and all(cls[x] <= max(cls[:x], default=-1) + 1 for x in range(8))
