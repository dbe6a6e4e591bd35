import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphs
from oracles import brute_homs, brute_minor
from pcsplab.core import Template, induced_substructure, is_homomorphism, named_structure, structure
from pcsplab.errors import BadArity, BadInput, MinorLinkViolation, MissingXiEntry, NotAHomomorphism
from pcsplab.minions import FunctionTable, MinionSlice, MinorMap, minor_apply
from pcsplab.pas import find_m_solution, is_consistent, pas_arities, pas_value
from pcsplab.serialize import dumps, structure_to_json
from pcsplab.weakreduce import (
    ChainOfMinors,
    WeakMinionHom,
    canonical_free_hom,
    canonical_gadget_hom,
    chain_ok,
    check_weak_minion_hom,
    dr_arity_schedule,
    dr_reduce_instance,
    extract,
    extract_pas_sequence,
    free_route,
    is_labelled_substructure,
    is_partial_homomorphism,
    pf_graph,
    pf_name,
    projection_embedding,
    restrict_pad,
)

K2 = named_structure("K", 2)
H2 = named_structure("H", 2)
TK2 = Template(K2, K2)
SLICE = MinionSlice(TK2, 4)


def graph(n, edges, symmetric=True):
    es = set(edges) | ({(b, a) for a, b in edges} if symmetric else set())
    return structure(n, [("E", 2)], {"E": es}, tuple(range(n)))


def labelled(s):
    return structure(s.size, [("E", 2)], {"E": s.rel("E")}, tuple(range(s.size)))


def all_graphs(n):
    """Every loopless undirected graph on n vertices."""
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield graph(n, [p for i, p in enumerate(pairs) if mask >> i & 1])


def brute_pairs(sets):
    return [(u, w) for u in sets for w in sets if set(w) <= set(u)]


# ---------------------------------------------------------------------------
# (d,r)-minion homomorphisms


class TestWeakHom:
    def test_identity_passes(self):
        sl = MinionSlice(TK2, 3)
        v = check_weak_minion_hom(WeakMinionHom.identity(sl), bound=3)
        assert v.ok and v.scope == "fragment-verified" and v.chains_checked > 0

    def test_identity_passes_longer_chains(self):
        sl = MinionSlice(TK2, 2)
        xi = WeakMinionHom.identity(sl)
        assert check_weak_minion_hom(xi, r=2, bound=2).ok

    def test_empty_image_fails_on_constant_chain(self):
        sl = MinionSlice(TK2, 2)
        xi = WeakMinionHom.identity(sl)
        f = sl.tables(2)[0]
        xi.table[f] = frozenset()
        v = check_weak_minion_hom(xi, bound=2)
        assert not v.ok and v.condition == "chain" and v.chain is not None
        assert not chain_ok(xi, v.chain)
        const = ChainOfMinors((f, f), (MinorMap(2, 2, (0, 1)),))
        assert not chain_ok(xi, const)

    def test_too_many_images(self):
        sl = MinionSlice(TK2, 2)
        xi = WeakMinionHom.identity(sl)
        f, g = sl.tables(2)[:2]
        xi.table[f] = frozenset([f, g])
        v = check_weak_minion_hom(xi, bound=2)
        assert not v.ok and v.condition == "size"
        xi2 = WeakMinionHom(2, 1, sl, TK2, xi.table)
        assert check_weak_minion_hom(xi2, bound=2).ok

    def test_wrong_arity_image(self):
        sl = MinionSlice(TK2, 2)
        xi = WeakMinionHom.identity(sl)
        f = sl.tables(2)[0]
        xi.table[f] = frozenset([sl.tables(1)[0]])
        v = check_weak_minion_hom(xi, bound=2)
        assert not v.ok and v.condition == "arity"

    def test_missing_entry(self):
        sl = MinionSlice(TK2, 2)
        xi = WeakMinionHom(1, 1, sl, TK2, {})
        with pytest.raises(MissingXiEntry):
            xi(sl.tables(1)[0])
        assert xi.get(sl.tables(1)[0]) == frozenset()

    @pytest.mark.parametrize("seed", range(12))
    def test_against_brute_force(self, seed):
        # random xi with up to d images; verdict vs enumeration of every chain
        rng = random.Random(seed)
        sl = MinionSlice(TK2, 2)
        d = rng.choice([1, 2])
        table = {}
        for f in sl.all_tables():
            pool = sl.tables(f.arity)
            table[f] = frozenset(rng.sample(pool, rng.randint(0 if rng.random() < 0.1 else 1, min(d, len(pool)))))
        xi = WeakMinionHom(d, 1, sl, TK2, table)
        expect = True
        for t0 in sl.all_tables():
            for l in (1, 2):
                for pi in itertools.product(range(l), repeat=t0.arity):
                    t1 = brute_minor(t0.table, 2, t0.arity, pi, l)
                    ok = any(brute_minor(g.table, 2, g.arity, pi, l) in {h.table for h in table.get(FunctionTable(l, 2, 2, t1), ())} for g in table[t0])
                    expect &= ok
        assert check_weak_minion_hom(xi, bound=2).ok == expect


class TestChains:
    @given(st.lists(st.tuples(st.integers(1, 3), st.randoms()), min_size=1, max_size=3), st.randoms())
    def test_composite_identity(self, steps, rng):
        arity = rng.randint(1, 3)
        t = FunctionTable(arity, 2, 2, tuple(rng.randrange(2) for _ in range(2**arity)))
        tables, maps = [t], []
        for target, r in steps:
            pi = MinorMap(tables[-1].arity, target, tuple(r.randrange(target) for _ in range(tables[-1].arity)))
            maps.append(pi)
            tables.append(minor_apply(tables[-1], pi))
        chain = ChainOfMinors(tables, maps)
        for i in range(chain.r + 1):
            for j in range(i, chain.r + 1):
                assert minor_apply(chain.tables[i], chain.composite(i, j)) == chain.tables[j]

    def test_bad_link(self):
        f = FunctionTable.projection(2, 0, 2)
        g = FunctionTable.projection(2, 1, 2)
        with pytest.raises(BadInput):
            ChainOfMinors((f, f), (MinorMap(2, 2, (1, 0)),))
        assert ChainOfMinors((f, g), (MinorMap(2, 2, (1, 0)),)).r == 1


# ---------------------------------------------------------------------------
# the gadget reduction


class TestSchedule:
    def test_base_cases(self):
        assert dr_arity_schedule(TK2, 1, 1).arities == (2, 1)
        assert dr_arity_schedule(Template(H2, H2), 1, 1).arities == (3, 1)

    def test_uniform_values(self):
        # d=2, r=1 runs the recursion on values (2, 2)
        assert dr_arity_schedule(TK2, 2, 1).arities == pas_arities(2, 2, (2, 2)).arities
        assert pas_arities(2, 2, (2, 1)).arities == (17, 4)


class TestPartialFunctionSymbols:
    @given(st.dictionaries(st.integers(0, 20), st.integers(0, 20)))
    def test_round_trip(self, fn):
        graph_ = tuple(sorted(fn.items()))
        assert pf_graph(pf_name(graph_)) == graph_

    def test_rejects(self):
        with pytest.raises(BadInput):
            pf_graph("E")
        with pytest.raises(BadInput):
            pf_graph("pf:0>1,0>2")
        assert pf_graph("pf:") == ()


class TestReduce:
    def test_counts(self):
        inst = graph(3, [(0, 1), (1, 2)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        assert b.gamma.size == 6 and b.s_size == 4
        assert len(list(b.pairs())) == len(brute_pairs(b.sets)) == 12
        emitted = sum(len(b.gamma.rel(n)) for n in b.gamma.signature.names)
        assert emitted == 12

    def test_d_u_matches_oracle(self):
        inst = graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        for u in b.sets:
            sub, _ = induced_substructure(inst, u)
            assert b.homs[u] == sorted(brute_homs(sub, K2))
            assert [b.sigma[u][f] for f in b.homs[u]] == list(range(len(b.homs[u])))
            assert len(b.homs[u]) <= K2.size ** len(u) <= b.s_size

    @given(graphs(max_size=4, min_size=1))
    def test_relations_functional(self, g):
        b = dr_reduce_instance(labelled(g), TK2, (2, 1))
        for name in b.gamma.signature.names:
            pairs = pf_graph(name)
            assert len({s for s, _ in pairs}) == len(pairs)
            assert b.gadget.rel(name) == frozenset(pairs)

    def test_labels_are_sets(self):
        inst = structure(3, [("E", 2)], {"E": [(0, 1)]}, ("a", "b", "c"))
        b = dr_reduce_instance(inst, TK2, (2, 1))
        assert b.gamma.labels[:3] == (("a", "b"), ("a", "c"), ("b", "c"))

    def test_deterministic(self):
        inst = graph(4, [(0, 1), (1, 2), (0, 3)])
        a = dumps(structure_to_json(dr_reduce_instance(inst, TK2, (2, 1)).gamma))
        b = dumps(structure_to_json(dr_reduce_instance(inst, TK2, (2, 1)).gamma))
        assert a == b

    @given(graphs(max_size=4, min_size=1), st.randoms())
    def test_substructures_come_from_induced_instances(self, g, rng):
        inst = labelled(g)
        b = dr_reduce_instance(inst, TK2, (2, 1))
        h = sorted(rng.sample(range(b.gamma.size), rng.randint(1, b.gamma.size)))
        small, _ = induced_substructure(b.gamma, h)
        f = sorted({x for i in h for x in b.sets[i]})
        sub, _ = induced_substructure(inst, f)
        assert is_labelled_substructure(small, dr_reduce_instance(sub, TK2, (2, 1)).gamma)


class TestCanonicalHom:
    def test_single_edge(self):
        inst = graph(2, [(0, 1)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        assert b.sets == [(0, 1), (0,), (1,)]
        for h in [(0, 1), (1, 0)]:
            c = canonical_gadget_hom(h, b)
            assert c.map == ((0, 0, 1) if h == (0, 1) else (1, 1, 0))
            assert is_homomorphism(c.map, b.gamma, b.gadget)

    def test_empty_instance(self):
        b = dr_reduce_instance(graph(0, []), TK2, (2, 1))
        assert canonical_gadget_hom((), b).map == ()

    def test_every_pair_coherent(self):
        inst = graph(3, [(0, 1), (1, 2)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        for h in brute_homs(inst, K2):
            c = canonical_gadget_hom(h, b)
            for name in b.gamma.signature.names:
                q = dict(pf_graph(name))
                for x, y in b.gamma.rel(name):
                    assert q[c.map[x]] == c.map[y]

    def test_rejects_non_hom(self):
        b = dr_reduce_instance(graph(2, [(0, 1)]), TK2, (2, 1))
        with pytest.raises(NotAHomomorphism):
            canonical_gadget_hom((0, 0), b)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_completeness_all_graphs(self, n):
        for inst in all_graphs(n):
            homs = brute_homs(inst, K2)
            if not homs:
                continue
            b = dr_reduce_instance(inst, TK2, (2, 1))
            c = canonical_gadget_hom(homs[0], b)
            assert is_homomorphism(c.map, b.gamma, b.gadget)

    @given(graphs(max_size=5, min_size=1))
    def test_completeness_digraphs(self, g):
        homs = brute_homs(g, K2)
        if homs:
            b = dr_reduce_instance(labelled(g), TK2, (2, 1))
            canonical_gadget_hom(homs[0], b)


# ---------------------------------------------------------------------------
# soundness side


class TestRestrictPad:
    def test_examples(self):
        p = FunctionTable.projection
        assert restrict_pad(p(4, 1, 2), 2) == p(2, 1, 2)
        assert restrict_pad(p(4, 3, 2), 2) == p(2, 0, 2)
        f = FunctionTable(3, 2, 2, (0, 1, 1, 0, 1, 0, 0, 1))
        assert restrict_pad(f, 3) == f
        with pytest.raises(BadArity):
            restrict_pad(f, 4)
        with pytest.raises(BadArity):
            restrict_pad(f, 0)

    @given(st.integers(1, 3), st.randoms())
    def test_padding_formula(self, a, rng):
        s = FunctionTable(3, 2, 2, tuple(rng.randrange(2) for _ in range(8)))
        t = restrict_pad(s, a)
        for xs in itertools.product(range(2), repeat=a):
            assert t(*xs) == s(*(list(xs) + [xs[0]] * (3 - a)))


def z_oracle(g, homs, n_u):
    return tuple(g(*(homs[m][p] for m in range(len(homs)))) for p in range(n_u))


class TestExtraction:
    xi = WeakMinionHom.identity(SLICE)

    def test_canonical_route_recovers_h(self):
        inst = graph(4, [(0, 1), (1, 2), (2, 3)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        h = brute_homs(inst, K2)[0]
        s = canonical_free_hom(h, b, SLICE)
        seq = extract_pas_sequence(s, self.xi, b)
        for i, k in enumerate(b.arities):
            for u in b.level(i):
                assert seq[i](u) == {tuple(h[x] for x in u)}

    def test_z_matches_definition(self):
        inst = graph(3, [(0, 1)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        h = brute_homs(inst, K2)[-1]
        ex = extract(canonical_free_hom(h, b, SLICE), self.xi, b)
        for i, k in enumerate(b.arities):
            for u in b.level(i):
                want = {z_oracle(g, b.homs[u], len(u)) for g in self.xi(ex.t[u])}
                assert ex.sequence[i](u) == want
        assert ex.links_checked == len(brute_pairs(b.sets))

    @pytest.mark.parametrize("seed", range(8))
    def test_links_checked_against_oracle(self, seed):
        # arbitrary s: extraction succeeds exactly when every minor link holds
        rng = random.Random(seed)
        inst = graph(3, [(0, 1), (1, 2)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        h = brute_homs(inst, K2)[0]
        base = list(canonical_free_hom(h, b, SLICE).map)
        if seed % 2:
            base[rng.randrange(len(base))] = rng.randrange(len(SLICE.tables(4)))
        tables = [SLICE.tables(4)[i] for i in base]
        t = {}
        for u, s_u in zip(b.sets, tables):
            a = len(b.homs[u])
            t[u] = tuple(s_u(*(list(xs) + [xs[0]] * (4 - a))) for xs in itertools.product(range(2), repeat=a))
        ok = True
        for u, w in brute_pairs(b.sets):
            pi = [b.sigma[w][tuple(f[u.index(x)] for x in w)] for f in b.homs[u]]
            ok &= brute_minor(t[u], 2, len(pi), pi, len(b.homs[w])) == t[w]
        if ok:
            extract(base, self.xi, b)
        else:
            with pytest.raises(MinorLinkViolation):
                extract(base, self.xi, b)

    def test_missing_xi(self):
        inst = graph(2, [(0, 1)])
        b = dr_reduce_instance(inst, TK2, (2, 1))
        s = canonical_free_hom((0, 1), b, SLICE)
        with pytest.raises(MissingXiEntry):
            extract(s, WeakMinionHom(1, 1, SLICE, TK2, {}), b)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_end_to_end(self, n):
        for inst in all_graphs(n):
            homs = brute_homs(inst, K2)
            if not homs:
                continue
            b = dr_reduce_instance(inst, TK2, (2, 1))
            seq = extract_pas_sequence(canonical_free_hom(homs[-1], b, SLICE), self.xi, b)
            assert all(pas_value(I) <= 1 for I in seq)
            for I in seq:
                for key in I.keys():
                    assert all(is_partial_homomorphism(f, key, inst, K2) for f in I(key))
            assert is_consistent(seq)
            sol = find_m_solution(seq[0], 2)
            assert sol is not None and is_homomorphism(sol, inst, K2)

    def test_projection_embedding(self):
        emb = projection_embedding(SLICE, 4)
        assert [SLICE.tables(4)[i] for i in emb] == [FunctionTable.projection(4, j, 2) for j in range(4)]


class TestFreeRoute:
    @pytest.mark.parametrize(
        "edges,n",
        [([(0, 1), (1, 2)], 3), ([(0, 1), (1, 2), (0, 2)], 3), ([(0, 1)], 2), ([(0, 1), (1, 2), (2, 3)], 4)],
    )
    def test_agrees_with_canonical(self, edges, n):
        inst = graph(n, edges)
        b = dr_reduce_instance(inst, TK2, (2, 1))
        free, found = free_route(b, SLICE)
        homs = brute_homs(inst, K2)
        assert (found is not None) == bool(homs)
        if found is not None:
            assert is_homomorphism(canonical_free_hom(homs[0], b, SLICE).map, b.gamma, free)
            seq = extract_pas_sequence(found, WeakMinionHom.identity(SLICE), b)
            assert all(pas_value(I) <= 1 for I in seq) and is_consistent(seq)
            sol = find_m_solution(seq[0], 2)
            assert sol is not None and is_homomorphism(sol, inst, K2)
