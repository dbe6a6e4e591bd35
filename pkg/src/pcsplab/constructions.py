"""pp-powers, gadget translation, relaxations, free and power structures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ._search import ConstraintNetwork, UnionFind
from .config import DEFAULT_CAPS, Caps
from .core import (
    Homomorphism,
    RelationalStructure,
    Signature,
    Template,
    find_homomorphism,
    is_homomorphism,
    tuple_index,
)
from .errors import BadInput, BadParam, SignatureMismatch, UndeclaredVariable
from .minions import MinionSlice, MinorMap, minor_apply


def free_var(i: int, j: int) -> str:
    """Name of the free variable for coordinate j of argument i."""
    return f"x_{i}_{j}"


@dataclass(frozen=True)
class PPFormula:
    exists: tuple[str, ...] = ()
    atoms: tuple[tuple[str, tuple[str, ...]], ...] = ()
    eq: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, atoms=(), exists=(), eq=()) -> "PPFormula":
        """Atoms given as ``[symbol, var, var, ...]`` lists."""
        return cls(tuple(exists), tuple((a[0], tuple(a[1:])) for a in atoms), tuple(tuple(p) for p in eq))

    def variables(self) -> set[str]:
        out = {v for _, vs in self.atoms for v in vs}
        out.update(v for pair in self.eq for v in pair)
        return out


@dataclass(frozen=True)
class PPPowerDef:
    n: int
    target_signature: Signature
    formulas: Mapping[str, PPFormula] = field(hash=False)

    def validate(self, base: Signature) -> None:
        if self.n < 1:
            raise BadParam(f"pp-power exponent {self.n} < 1")
        for name, arity in self.target_signature.symbols:
            if name not in self.formulas:
                raise BadInput(f"no formula for target symbol {name!r}")
            phi = self.formulas[name]
            free = {free_var(i, j) for i in range(arity) for j in range(self.n)}
            declared = free | set(phi.exists)
            if free & set(phi.exists):
                raise BadInput(f"{name}: existential shadows a free variable")
            for v in phi.variables():
                if v not in declared:
                    raise UndeclaredVariable(f"{name}: variable {v!r} is neither free (x_i_j, i<{arity}, j<{self.n}) nor existential")
            for r, vs in phi.atoms:
                if r not in base.names:
                    raise BadInput(f"{name}: atom uses unknown symbol {r!r}")
                if base.arity(r) != len(vs):
                    raise BadInput(f"{name}: atom {r}{vs} has wrong arity")


def _formula_network(phi: PPFormula, arity: int, n: int, s: RelationalStructure):
    names = [free_var(i, j) for i in range(arity) for j in range(n)] + list(phi.exists)
    var = {v: i for i, v in enumerate(names)}
    net = ConstraintNetwork.uniform(len(names), s.size)
    diag = [(a, a) for a in range(s.size)]
    for r, vs in phi.atoms:
        net.add(tuple(var[v] for v in vs), s.sorted_relations[r], key=r)
    for a, b in phi.eq:
        net.add((var[a], var[b]), diag, key="=")
    return net


def _pp_relation(phi: PPFormula, arity: int, n: int, s: RelationalStructure) -> set[tuple[int, ...]]:
    out = set()
    for sol in _formula_network(phi, arity, n, s).solutions(order="static"):
        # argument i is the n-tuple (x_i_0..x_i_{n-1}) read row-major
        out.add(tuple(tuple_index(sol[i * n : (i + 1) * n], s.size) for i in range(arity)))
    return out


def pp_power_apply(t: Template, d: PPPowerDef, caps: Caps = DEFAULT_CAPS) -> Template:
    """Evaluate each formula over A and over B, giving (C, D) on A^n, B^n."""
    d.validate(t.signature)
    caps.check_size(t.A.size**d.n)
    caps.check_size(t.B.size**d.n)
    sides = []
    for s in (t.A, t.B):
        rels = {}
        for name, arity in d.target_signature.symbols:
            caps.check_size(s.size ** (arity * d.n + len(d.formulas[name].exists)))
            rels[name] = _pp_relation(d.formulas[name], arity, d.n, s)
        sides.append(RelationalStructure(s.size**d.n, d.target_signature, rels))
    return Template(*sides)


@dataclass
class PPReduction:
    """Gadget instance over the base signature plus its bookkeeping.

    ``touches[x]`` lists the instance elements that element ``x`` of the
    output depends on; ``origins[(symbol, tuple)]`` the instance elements of
    the constraints that emitted it.
    """

    structure: RelationalStructure
    touches: list[frozenset]
    origins: dict


def pp_reduce_instance(d: PPPowerDef, instance: RelationalStructure, base: Signature) -> PPReduction:
    """Translate an instance of the pp-power into one of the base template.

    Variables are ``("v", label, j)`` for each instance element and
    coordinate, plus ``("e", symbol, constraint labels, name)`` per
    existential of each constraint. Equality atoms identify variables; a
    merged class keeps the label of its first member.
    """
    if instance.signature != d.target_signature:
        raise SignatureMismatch("instance does not match the pp-power signature")
    d.validate(base)
    n = d.n
    labels: list[tuple] = []
    touches: list[set] = []
    for v in range(instance.size):
        for j in range(n):
            labels.append(("v", instance.label(v), j))
            touches.append({v})
    pending = []  # (symbol, var ids, constraint elements)
    merges = []
    for name, arity in d.target_signature.symbols:
        phi = d.formulas[name]
        for t in instance.sorted_relations[name]:
            local = {free_var(i, j): t[i] * n + j for i in range(arity) for j in range(n)}
            cons_label = tuple(instance.label(x) for x in t)
            for z in phi.exists:
                local[z] = len(labels)
                labels.append(("e", name, cons_label, z))
                touches.append(set(t))
            for r, vs in phi.atoms:
                pending.append((r, tuple(local[v] for v in vs), frozenset(t)))
            for a, b in phi.eq:
                merges.append((local[a], local[b], frozenset(t)))
    uf = UnionFind(len(labels))
    for a, b, _ in merges:
        uf.union(a, b)
    cls, count = uf.classes()
    out_labels = [None] * count
    out_touch = [set() for _ in range(count)]
    for x, c in enumerate(cls):
        if out_labels[c] is None:
            out_labels[c] = labels[x]
        out_touch[c] |= touches[x]
    for a, b, elems in merges:
        out_touch[cls[a]] |= elems
    rels = {name: set() for name in base.names}
    origins: dict = {}
    for r, vs, elems in pending:
        tup = tuple(cls[v] for v in vs)
        rels[r].add(tup)
        origins.setdefault((r, tup), set()).update(elems)
    s = RelationalStructure(count, base, rels, tuple(out_labels))
    return PPReduction(s, [frozenset(x) for x in out_touch], origins)


def pp_support(red: PPReduction, elements: Sequence[int]) -> set[int]:
    """Instance elements touched by the substructure on ``elements``."""
    chosen = set(elements)
    out = set()
    for x in chosen:
        out |= red.touches[x]
    for (r, tup), elems in red.origins.items():
        if all(x in chosen for x in tup):
            out |= elems
    return out


@dataclass(frozen=True)
class Relaxation:
    c_to_a: Homomorphism
    b_to_d: Homomorphism


def relaxation_reduce(outer: Template, inner: Template, deadline=None) -> Relaxation | None:
    """Witness that ``inner`` = (C, D) is a homomorphic relaxation of
    ``outer`` = (A, B): homomorphisms C -> A and B -> D. The reduction
    itself is the identity on instances."""
    if outer.signature != inner.signature:
        raise SignatureMismatch("templates are not similar")
    ca = find_homomorphism(inner.A, outer.A, deadline)
    if ca is None:
        return None
    bd = find_homomorphism(outer.B, inner.B, deadline)
    if bd is None:
        return None
    return Relaxation(ca, bd)


# ---------------------------------------------------------------------------
# free structure


def free_structure(slice: MinionSlice, generator: RelationalStructure, caps: Caps = DEFAULT_CAPS) -> RelationalStructure:
    """Free structure of the slice generated by ``generator``.

    Elements are the n-ary members of the slice (n = |generator|) in
    lexicographic order. For a symbol with tuples r_0..r_{m-1} (lex order),
    each m-ary g contributes (g_{pi_0}, ..., g_{pi_{k-1}}) where
    pi_i(j) = r_j[i].
    """
    n = generator.size
    elements = slice.tables(n)
    caps.check_size(len(elements))
    rels = {}
    for name, arity in generator.signature.symbols:
        rows = generator.sorted_relations[name]
        m = len(rows)
        out = set()
        if m:
            caps.check_arity(m)
            maps = [MinorMap(m, n, tuple(r[i] for r in rows)) for i in range(arity)]
            for g in slice.tables(m):
                out.add(tuple(slice.index(minor_apply(g, pi)) for pi in maps))
        rels[name] = out
    return RelationalStructure(len(elements), generator.signature, rels)


# ---------------------------------------------------------------------------
# power structure and width 1

STANDARD = "standard"
LITERAL = "literal"


def subset_of(index: int, n: int) -> tuple[int, ...]:
    """Element ``index`` of the power structure (nonempty subsets ordered
    by bitmask value)."""
    mask = index + 1
    return tuple(a for a in range(n) if mask >> a & 1)


def power_structure(s: RelationalStructure, semantics: str = STANDARD, caps: Caps = DEFAULT_CAPS) -> RelationalStructure:
    """Structure on the nonempty subsets of the domain.

    ``standard``: (S_0..S_{k-1}) is related iff every a in S_i extends to a
    tuple of R inside S_0 x ... x S_{k-1} with a at position i.
    ``literal``: every tuple of S_0 x ... x S_{k-1} can be repaired into R
    at any single coordinate j by a value from S_j.
    """
    if semantics not in (STANDARD, LITERAL):
        raise BadParam(f"unknown power-structure semantics {semantics!r}")
    literal = semantics != STANDARD
    n = s.size
    count = 2**n - 1
    caps.check_size(count)
    masks = range(1, count + 1)
    rels = {}
    for name, arity in s.signature.symbols:
        caps.check_size(count**arity)
        rel = s.rel(name)
        tuples = s.sorted_relations[name]
        out = set()
        for combo in itertools.product(masks, repeat=arity):
            if literal:
                ok = _literal_clause(combo, rel, n)
            else:
                cover = [0] * arity
                for t in tuples:
                    if all(combo[i] >> t[i] & 1 for i in range(arity)):
                        for i in range(arity):
                            cover[i] |= 1 << t[i]
                ok = all(cover[i] == combo[i] for i in range(arity))
            if ok:
                out.add(tuple(m - 1 for m in combo))
        rels[name] = out
    labels = tuple(subset_of(i, n) for i in range(count))
    return RelationalStructure(count, s.signature, rels, labels)


def _literal_clause(combo, rel, n) -> bool:
    members = [[a for a in range(n) if m >> a & 1] for m in combo]
    for a in itertools.product(*members):
        for j, options in enumerate(members):
            if not any(a[:j] + (b,) + a[j + 1 :] in rel for b in options):
                return False
    return True


def width1_check(t: Template, semantics: str = STANDARD, deadline=None, caps: Caps = DEFAULT_CAPS) -> Homomorphism | None:
    return find_homomorphism(power_structure(t.A, semantics, caps), t.B, deadline)


def singleton_embedding(s: RelationalStructure, semantics: str = STANDARD) -> Homomorphism:
    """a -> {a}, a homomorphism s -> U(s) under both semantics."""
    u = power_structure(s, semantics)
    return Homomorphism(s, u, tuple((1 << a) - 1 for a in range(s.size)))


def label_map_is_hom(sub: RelationalStructure, whole: RelationalStructure) -> bool:
    """Whether sending each element of ``sub`` to the equally-labelled
    element of ``whole`` is a homomorphism."""
    try:
        h = [whole.index_of(sub.label(x)) for x in range(sub.size)]
    except KeyError:
        return False
    return is_homomorphism(h, sub, whole)

