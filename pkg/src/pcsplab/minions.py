"""Function tables, minors, polymorphisms and minor conditions.

A k-ary operation A^k -> B is stored as a flat table indexed row-major
(same encoding as :func:`pcsplab.core.power`). Minor conditions are
solved by quotienting formal cells with union-find and then running the
core constraint engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from ._search import ConstraintNetwork, UnionFind
from .config import DEFAULT_CAPS, Caps, Deadline
from .core import RelationalStructure, Template, disjoint_union, is_homomorphism, power, tuple_index
from .errors import (
    ArityMismatch,
    BadArity,
    BadInput,
    BadParam,
    CyclicPolymorphismExists,
    DomainMismatch,
    NotAHomomorphism,
    NotAreaRare,
    NotCyclic,
    UnknownName,
)


@dataclass(frozen=True, order=True)
class FunctionTable:
    arity: int
    n_in: int
    n_out: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if len(self.table) != self.n_in**self.arity:
            raise BadArity(f"table length {len(self.table)} != {self.n_in}^{self.arity}")
        for v in self.table:
            if not 0 <= v < self.n_out:
                raise BadParam(f"table entry {v} outside output domain {self.n_out}")

    @classmethod
    def from_callable(cls, arity: int, n_in: int, n_out: int, fn) -> "FunctionTable":
        return cls(arity, n_in, n_out, tuple(fn(*x) for x in itertools.product(range(n_in), repeat=arity)))

    @classmethod
    def projection(cls, arity: int, i: int, n: int) -> "FunctionTable":
        return cls.from_callable(arity, n, n, lambda *x: x[i])

    def __call__(self, *args: int) -> int:
        return self.table[tuple_index(args, self.n_in)]

    def inputs(self):
        return itertools.product(range(self.n_in), repeat=self.arity)


@dataclass(frozen=True)
class MinorMap:
    """pi: source -> target, stored as the tuple of images."""

    source: int
    target: int
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))
        if len(self.map) != self.source or any(not 0 <= v < self.target for v in self.map):
            raise BadArity(f"{self.map} is not a map {self.source} -> {self.target}")

    @classmethod
    def of(cls, images: Sequence[int], target: int) -> "MinorMap":
        return cls(len(images), target, tuple(images))

    def then(self, after: "MinorMap") -> "MinorMap":
        """``after ∘ self``: apply self first."""
        if after.source != self.target:
            raise ArityMismatch("minor maps are not composable")
        return MinorMap(self.source, after.target, tuple(after.map[v] for v in self.map))


def minor_apply(f: FunctionTable, pi: MinorMap) -> FunctionTable:
    """f_pi(x_0..x_{l-1}) = f(x_pi(0), ..., x_pi(k-1))."""
    if pi.source != f.arity:
        raise ArityMismatch(f"minor map from {pi.source} applied to arity {f.arity}")
    n = f.n_in
    table = f.table
    out = []
    for y in itertools.product(range(n), repeat=pi.target):
        idx = 0
        for p in pi.map:
            idx = idx * n + y[p]
        out.append(table[idx])
    return FunctionTable(pi.target, n, f.n_out, tuple(out))


def _check_domains(f: FunctionTable, t: Template):
    if f.n_in != t.A.size or f.n_out != t.B.size:
        raise DomainMismatch(f"table {f.n_in}->{f.n_out} against template {t.A.size}->{t.B.size}")


def is_polymorphism(f: FunctionTable, t: Template) -> bool:
    _check_domains(f, t)
    n, k = f.n_in, f.arity
    for name, ar in t.signature.symbols:
        target = t.B.rel(name)
        for column in itertools.product(t.A.sorted_relations[name], repeat=k):
            image = tuple(f.table[tuple_index([column[c][i] for c in range(k)], n)] for i in range(ar))
            if image not in target:
                return False
    return True


def _add_polymorphism_constraints(net, t: Template, arity: int, cell, caps: Caps, deadline=None):
    """Constrain cells so that the table read through ``cell`` is a
    polymorphism; ``cell`` maps a row-major input index to a variable."""
    n = t.A.size
    for name, ar in t.signature.symbols:
        base = t.A.sorted_relations[name]
        caps.check_size(len(base) ** arity)
        allowed = t.B.sorted_relations[name]
        for count, column in enumerate(itertools.product(base, repeat=arity)):
            if deadline is not None and count % 4096 == 0:
                deadline.check()
            scope = tuple(cell[tuple_index([column[c][i] for c in range(arity)], n)] for i in range(ar))
            net.add(scope, allowed, key=name)


def enumerate_polymorphisms(
    t: Template, arity: int, limit: int | None = None, deadline=None, caps: Caps = DEFAULT_CAPS
) -> list[FunctionTable]:
    """All (or the first ``limit``) arity-k polymorphisms in lexicographic
    table order."""
    if arity < 1:
        raise BadArity(f"arity {arity} < 1")
    deadline = Deadline.coerce(deadline)
    cells = t.A.size**arity
    caps.check_cells(cells)
    net = ConstraintNetwork.uniform(cells, t.B.size)
    _add_polymorphism_constraints(net, t, arity, range(cells), caps, deadline)
    return [
        FunctionTable(arity, t.A.size, t.B.size, sol)
        for sol in net.solutions(order="static", deadline=deadline, limit=limit)
    ]


# ---------------------------------------------------------------------------
# minor conditions


@dataclass(frozen=True)
class Identity:
    lhs: str
    sigma: tuple[int, ...]
    rhs: str
    tau: tuple[int, ...]


@dataclass(frozen=True)
class MinorCondition:
    symbols: tuple[tuple[str, int], ...]
    n_vars: int
    identities: tuple[Identity, ...]

    def __post_init__(self):
        ar = dict(self.symbols)
        if len(ar) != len(self.symbols):
            raise BadInput("duplicate function symbol")
        for idn in self.identities:
            for name, m in ((idn.lhs, idn.sigma), (idn.rhs, idn.tau)):
                if name not in ar:
                    raise BadInput(f"identity references unknown symbol {name!r}")
                if len(m) != ar[name] or any(not 0 <= v < self.n_vars for v in m):
                    raise BadInput(f"{name}: {m} is not a map {ar[name]} -> {self.n_vars}")

    def arity(self, name: str) -> int:
        return dict(self.symbols)[name]


def _single(arity: int, n_vars: int, *terms: Sequence[int]) -> MinorCondition:
    ids = tuple(Identity("f", tuple(a), "f", tuple(b)) for a, b in zip(terms, terms[1:]))
    return MinorCondition((("f", arity),), n_vars, ids)


def named_condition(name: str, k: int | None = None) -> MinorCondition:
    """Cyclic, area-rare (4-ary Siggers), 6-ary Siggers and Olšák."""
    name = name.lower().replace("-", "_")
    if name.startswith("cyclic"):
        if k is None and ":" in name:
            k = int(name.split(":", 1)[1])
        if k is None or k < 2:
            raise BadArity(f"cyclic needs arity >= 2, got {k!r}")
        return _single(k, k, range(k), [(i + 1) % k for i in range(k)])
    if name in ("area_rare", "siggers4"):
        # f(a,r,e,a) = f(r,a,r,e)
        return _single(4, 3, (0, 1, 2, 0), (1, 0, 1, 2))
    if name == "siggers":
        # f(x,y,x,z,y,z) = f(y,x,z,x,z,y)
        return _single(6, 3, (0, 1, 0, 2, 1, 2), (1, 0, 2, 0, 2, 1))
    if name in ("olsak", "olšák"):
        # f(x,x,y,y,y,x) = f(x,y,x,y,x,y) = f(y,x,x,x,y,y)
        return _single(6, 2, (0, 0, 1, 1, 1, 0), (0, 1, 0, 1, 0, 1), (1, 0, 0, 0, 1, 1))
    raise UnknownName(f"unknown minor condition {name!r}")


def check_identities(assignment: Mapping[str, FunctionTable], c: MinorCondition) -> bool:
    """Evaluate every identity of ``c`` on every input."""
    n_in = next(iter(assignment.values())).n_in if assignment else 0
    for idn in c.identities:
        f, g = assignment[idn.lhs], assignment[idn.rhs]
        for x in itertools.product(range(n_in), repeat=c.n_vars):
            if f(*(x[i] for i in idn.sigma)) != g(*(x[i] for i in idn.tau)):
                return False
    return True


def satisfy_minor_condition(
    t: Template, c: MinorCondition, deadline=None, caps: Caps = DEFAULT_CAPS
) -> dict[str, FunctionTable] | None:
    """Find polymorphisms of ``t`` satisfying ``c``; ``None`` means the
    condition is definitively unsatisfiable in Pol(t)."""
    deadline = Deadline.coerce(deadline)
    n = t.A.size
    offsets = {}
    total = 0
    for name, ar in c.symbols:
        caps.check_arity(ar)
        offsets[name] = total
        total += n**ar
    caps.check_cells(total)
    uf = UnionFind(total)
    for idn in c.identities:
        fo, go = offsets[idn.lhs], offsets[idn.rhs]
        for x in itertools.product(range(n), repeat=c.n_vars):
            uf.union(fo + tuple_index([x[i] for i in idn.sigma], n), go + tuple_index([x[i] for i in idn.tau], n))
    cls, n_classes = uf.classes()
    net = ConstraintNetwork.uniform(n_classes, t.B.size)
    for name, ar in c.symbols:
        off = offsets[name]
        _add_polymorphism_constraints(net, t, ar, cls[off : off + n**ar], caps, deadline)
    sol = net.first(order="mrv", deadline=deadline)
    if sol is None:
        return None
    return {
        name: FunctionTable(ar, n, t.B.size, tuple(sol[cls[offsets[name] + i]] for i in range(n**ar)))
        for name, ar in c.symbols
    }


# ---------------------------------------------------------------------------
# derivations between named conditions


def is_cyclic(f: FunctionTable) -> bool:
    if f.arity < 2:
        return False
    return check_identities({"f": f}, named_condition("cyclic", f.arity))


def derive_from_cyclic(f: FunctionTable) -> FunctionTable:
    """Area-rare minor of a cyclic operation of arity 3k+r."""
    if f.arity < 2 or not is_cyclic(f):
        raise NotCyclic(f"arity-{f.arity} table is not cyclic")
    k, r = divmod(f.arity, 3)
    x, y, z, w = range(4)
    if r == 0:
        images = [y] * k + [z] * k + [w] * k
    elif r == 1:
        if k < 1:
            raise BadArity("r=1 needs k >= 1")
        images = [y] * (k + 1) + [w] * (k - 1) + [x, x] + [z] * (k - 1)
    else:
        images = [y] * (k + 1) + [w] * k + [x] + [z] * k
    g = minor_apply(f, MinorMap.of(images, 4))
    assert check_identities({"f": g}, named_condition("area_rare")), "area-rare derivation failed"
    return g


_FROM_AREA_RARE = {
    # (x,y,z,u,v,w) -> f(x,y,w,z)
    "siggers": (0, 1, 5, 2),
    # (x,y,z,u,v,w) -> f(v,y,x,z)
    "olsak": (4, 1, 0, 2),
}


def derive_from_area_rare(f: FunctionTable, target: str) -> FunctionTable:
    target = target.lower()
    if target not in _FROM_AREA_RARE:
        raise UnknownName(f"cannot derive {target!r} from area-rare")
    if f.arity != 4 or not check_identities({"f": f}, named_condition("area_rare")):
        raise NotAreaRare("source table is not area-rare")
    g = minor_apply(f, MinorMap.of(_FROM_AREA_RARE[target], 6))
    assert check_identities({"f": g}, named_condition(target)), f"{target} derivation failed"
    return g


# ---------------------------------------------------------------------------
# bounded fragments of a minion


class MinionSlice:
    """Arity-bounded fragment of Pol(A, B), or of the projection minion.

    Tables of each arity are enumerated lazily and kept in lexicographic
    order; ``index(f)`` gives the position of ``f`` in that order.
    """

    def __init__(self, template: Template | None, bound: int, *, n: int | None = None, deadline=None,
                 caps: Caps = DEFAULT_CAPS):
        if template is None and n is None:
            raise BadInput("slice needs a template or a projection domain")
        self.template = template
        self.bound = bound
        self.n_in = template.A.size if template else n
        self.n_out = template.B.size if template else n
        self.deadline = deadline
        self.caps = caps
        self._tables: dict[int, list[FunctionTable]] = {}
        self._index: dict[int, dict[FunctionTable, int]] = {}

    @classmethod
    def projections(cls, n: int = 2, bound: int = 8) -> "MinionSlice":
        return cls(None, bound, n=n)

    @property
    def is_projection_slice(self) -> bool:
        return self.template is None

    def tables(self, arity: int) -> list[FunctionTable]:
        if arity not in self._tables:
            if self.template is None:
                found = [FunctionTable.projection(arity, i, self.n_in) for i in range(arity)]
            else:
                found = enumerate_polymorphisms(self.template, arity, deadline=self.deadline, caps=self.caps)
            self._tables[arity] = sorted(found)
            self._index[arity] = {f: i for i, f in enumerate(self._tables[arity])}
        return self._tables[arity]

    def index(self, f: FunctionTable) -> int:
        self.tables(f.arity)
        return self._index[f.arity][f]

    def contains(self, f: FunctionTable) -> bool:
        if f.n_in != self.n_in or f.n_out != self.n_out:
            return False
        self.tables(f.arity)
        return f in self._index[f.arity]

    def all_tables(self) -> list[FunctionTable]:
        return [f for k in range(1, self.bound + 1) for f in self.tables(k)]

    def is_minor_closed(self) -> bool:
        for k in range(1, self.bound + 1):
            for f in self.tables(k):
                for l in range(1, self.bound + 1):
                    for images in itertools.product(range(l), repeat=k):
                        if not self.contains(minor_apply(f, MinorMap.of(images, l))):
                            return False
        return True


# ---------------------------------------------------------------------------
# choice extraction from a homomorphism off a disjoint union of p-th powers


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


def kw_family_structure(t: Template, p: int, family_size: int) -> RelationalStructure:
    """Disjoint union of ``family_size`` copies of A^p."""
    return disjoint_union([power(t.A, p)] * family_size)[0]


def kw_extract(
    family: Sequence, t: Template, h, p: int | None = None, *, assume_no_cyclic: bool = False, deadline=None
) -> dict[tuple, frozenset]:
    """Pick a nonempty proper subset of every p-element set in ``family``.

    ``h`` maps the disjoint union of one copy of A^p per member (members in
    the given order, coordinates in sorted label order) to B. For each
    member C the minors of h|_C along all bijections C -> p are compared
    lexicographically; the subset is the set of labels sent to coordinate 0
    by the bijections that realise the smallest table.
    """
    members = [tuple(sorted(C)) for C in family]
    if not members:
        return {}
    if p is None:
        p = len(members[0])
    if any(len(C) != p or len(set(C)) != p for C in members):
        raise BadInput(f"every family member must have exactly {p} distinct labels")
    if not _is_prime(p):
        raise BadParam(f"{p} is not prime")
    if not assume_no_cyclic and satisfy_minor_condition(t, named_condition("cyclic", p), deadline) is not None:
        raise CyclicPolymorphismExists(p)
    hmap = tuple(getattr(h, "map", h))
    block = t.A.size**p
    source = kw_family_structure(t, p, len(members))
    if len(hmap) != source.size or any(not 0 <= v < t.B.size for v in hmap):
        raise NotAHomomorphism("map does not fit the disjoint power family")
    if not is_homomorphism(hmap, source, t.B):
        raise NotAHomomorphism("map is not a homomorphism from the disjoint power family to B")
    out = {}
    for ci, C in enumerate(members):
        hc = FunctionTable(p, t.A.size, t.B.size, hmap[ci * block : (ci + 1) * block])
        best = None
        firsts = set()
        for perm in itertools.permutations(range(p)):
            # alpha: C[j] -> perm[j]; (h_C)_alpha(x) = h_C(x ∘ alpha)
            g = minor_apply(hc, MinorMap.of(perm, p))
            if best is None or g.table < best.table:
                best, firsts = g, {C[perm.index(0)]}
            elif g.table == best.table:
                firsts.add(C[perm.index(0)])
        chosen = frozenset(firsts)
        if not chosen or len(chosen) == p:
            raise CyclicPolymorphismExists(p)
        out[C] = chosen
    return out
