"""Brute-force reference implementations used as test oracles.

Everything here enumerates the full search space with itertools and
shares no code with the search engine under test.
"""

from __future__ import annotations

import itertools


def all_maps(n_src: int, n_dst: int):
    return itertools.product(range(n_dst), repeat=n_src)


def brute_is_hom(h, rels_src: dict, rels_dst: dict) -> bool:
    return all(tuple(h[x] for x in t) in rels_dst[name] for name, ts in rels_src.items() for t in ts)


def brute_homs(s1, s2) -> list[tuple[int, ...]]:
    src = {n: set(s1.rel(n)) for n in s1.signature.names}
    dst = {n: set(s2.rel(n)) for n in s2.signature.names}
    return [h for h in all_maps(s1.size, s2.size) if brute_is_hom(h, src, dst)]


def brute_power_edges(rel: set, n: int, k: int) -> set:
    """Tuples of the k-th power, elements as k-tuples."""
    arity = len(next(iter(rel))) if rel else 0
    out = set()
    for rows in itertools.product(sorted(rel), repeat=k):
        # rows[j] is the tuple used in coordinate j; element i is (rows[0][i], ..., rows[k-1][i])
        out.add(tuple(tuple(rows[j][i] for j in range(k)) for i in range(arity)))
    return out


def brute_polymorphisms(A, B, k: int) -> list[tuple[int, ...]]:
    """All tables A^k -> B (row-major) preserving every relation."""
    inputs = list(itertools.product(range(A.size), repeat=k))
    index = {x: i for i, x in enumerate(inputs)}
    out = []
    for table in itertools.product(range(B.size), repeat=len(inputs)):
        ok = True
        for name in A.signature.names:
            target = B.rel(name)
            for rows in itertools.product(sorted(A.rel(name)), repeat=k):
                arity = len(rows[0])
                image = tuple(table[index[tuple(rows[j][i] for j in range(k))]] for i in range(arity))
                if image not in target:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(table)
    return out


def eval_table(table, n: int, args) -> int:
    idx = 0
    for a in args:
        idx = idx * n + a
    return table[idx]


def brute_identities_hold(table, n: int, n_vars: int, identities) -> bool:
    """identities: list of (sigma, tau) for a single symbol."""
    for x in itertools.product(range(n), repeat=n_vars):
        for sigma, tau in identities:
            if eval_table(table, n, [x[i] for i in sigma]) != eval_table(table, n, [x[i] for i in tau]):
                return False
    return True


def brute_minor(table, n: int, k: int, pi, l: int) -> tuple[int, ...]:
    return tuple(eval_table(table, n, [y[p] for p in pi]) for y in itertools.product(range(n), repeat=l))


def brute_pp_relation(phi_atoms, exists, eq, arity: int, n: int, s) -> set:
    """Evaluate a pp-formula by enumerating every assignment of all
    variables; free variable x_i_j is coordinate j of argument i."""
    free = [f"x_{i}_{j}" for i in range(arity) for j in range(n)]
    names = free + list(exists)
    out = set()
    for vals in itertools.product(range(s.size), repeat=len(names)):
        env = dict(zip(names, vals))
        if all(tuple(env[v] for v in vs) in s.rel(r) for r, vs in phi_atoms) and all(env[a] == env[b] for a, b in eq):
            args = []
            for i in range(arity):
                idx = 0
                for j in range(n):
                    idx = idx * s.size + env[f"x_{i}_{j}"]
                args.append(idx)
            out.add(tuple(args))
    return out


def brute_m_solutions(size: int, n: int, k: int, table: dict, m: int) -> list[tuple[int, ...]]:
    """All f: V -> n such that every m-set U has a k-superset W with
    f|_U in I(W)|_U. ``table`` maps sorted k-tuples to sets of value tuples."""
    out = []
    for f in itertools.product(range(n), repeat=size):
        ok = True
        for u in itertools.combinations(range(size), m):
            found = False
            for w in itertools.combinations(range(size), k):
                if not set(u) <= set(w):
                    continue
                want = tuple(f[v] for v in u)
                for g in table.get(w, ()):
                    if tuple(g[w.index(v)] for v in u) == want:
                        found = True
                        break
                if found:
                    break
            if not found:
                ok = False
                break
        if ok:
            out.append(f)
    return out


def brute_consistent(size: int, ks, tables) -> bool:
    """tables[i]: dict sorted k_i-tuple -> set of value tuples."""

    def chains(parent, depth):
        if depth == len(ks):
            yield ()
            return
        for u in itertools.combinations(parent, ks[depth]):
            for rest in chains(u, depth + 1):
                yield (u,) + rest

    for chain in chains(tuple(range(size)), 0):
        ok = False
        for j in range(len(ks)):
            Ij = set(tables[j].get(chain[j], ()))
            for i in range(j):
                restricted = {tuple(g[chain[i].index(v)] for v in chain[j]) for g in tables[i].get(chain[i], ())}
                if restricted & Ij:
                    ok = True
        if not ok:
            return False
    return True
