"""Finite relational structures, named examples and homomorphism search.

Elements of a structure are ``0..n-1``. Tuples of a power structure are
encoded by row-major index with coordinate 0 most significant, i.e. the
order produced by ``itertools.product(range(n), repeat=k)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from ._search import ConstraintNetwork
from .config import DEFAULT_CAPS, Caps, Deadline
from .errors import (
    ArityOrRangeMismatch,
    BadParam,
    MalformedStructure,
    NotAHomomorphism,
    OutOfRangeElement,
    SignatureMismatch,
    UnknownName,
)


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [s for s, _ in self.symbols]
        if len(set(names)) != len(names):
            raise MalformedStructure([f"duplicate symbol in {names}"])
        for name, ar in self.symbols:
            if ar < 1:
                raise MalformedStructure([f"symbol {name!r}: arity {ar} < 1"])

    @classmethod
    def of(cls, *symbols: tuple[str, int]) -> "Signature":
        return cls(tuple((str(n), int(a)) for n, a in symbols))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.symbols)

    def arity(self, name: str) -> int:
        for s, a in self.symbols:
            if s == name:
                return a
        raise KeyError(name)

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.symbols), default=0)


@dataclass(frozen=True, eq=False)
class RelationalStructure:
    """A finite structure; doubles as template half and as instance.

    ``relations`` maps each symbol to a frozenset of tuples. Treat
    instances as immutable.
    """

    size: int
    signature: Signature
    relations: Mapping[str, frozenset]
    labels: tuple | None = None

    def __post_init__(self):
        errs = _violations(self.size, self.signature, self.relations, self.labels)
        if errs:
            raise MalformedStructure(errs)
        object.__setattr__(
            self, "relations", {s: frozenset(map(tuple, self.relations.get(s, ()))) for s in self.signature.names}
        )

    def __eq__(self, other):
        if not isinstance(other, RelationalStructure):
            return NotImplemented
        return (
            self.size == other.size
            and self.signature == other.signature
            and self.relations == other.relations
            and self.labels == other.labels
        )

    def __hash__(self):
        return hash((self.size, self.signature, tuple(len(self.relations[s]) for s in self.signature.names)))

    def __repr__(self):
        rels = ", ".join(f"{s}:{len(self.relations[s])}" for s in self.signature.names)
        return f"RelationalStructure(size={self.size}, {rels})"

    def rel(self, name: str) -> frozenset:
        return self.relations[name]

    @cached_property
    def sorted_relations(self) -> dict[str, list[tuple[int, ...]]]:
        return {s: sorted(self.relations[s]) for s in self.signature.names}

    def label(self, x: int):
        return x if self.labels is None else self.labels[x]

    def index_of(self, label) -> int:
        if self.labels is None:
            return int(label)
        return self._label_index[label]

    @cached_property
    def _label_index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)}

    def similar(self, other: "RelationalStructure") -> bool:
        return self.signature == other.signature

    def tuple_count(self) -> int:
        return sum(len(r) for r in self.relations.values())


def _violations(size, signature, relations, labels) -> list[str]:
    errs = []
    if not isinstance(size, int) or size < 0:
        return [f"domain size {size!r} is not a non-negative integer"]
    if labels is not None and len(labels) != size:
        errs.append(f"{len(labels)} labels for domain {size}")
    if labels is not None and len(set(labels)) != len(labels):
        errs.append("duplicate element labels")
    names = set(signature.names)
    for name in relations:
        if name not in names:
            errs.append(f"relation {name!r} not in signature")
    for name, ar in signature.symbols:
        for t in relations.get(name, ()):
            if len(t) != ar:
                errs.append(f"{name}: arity mismatch, tuple {tuple(t)} has length {len(t)}, expected {ar}")
                continue
            for x in t:
                if not isinstance(x, int) or x < 0 or x >= size:
                    errs.append(f"{name}: tuple {tuple(t)} entry {x} >= domain {size}")
                    break
    return errs


def validate_structure(raw: Mapping) -> RelationalStructure:
    """Build a structure from the JSON-shaped description.

    ``{"domain": n | [labels], "signature": [{"name", "arity"}],
    "relations": {name: [[...], ...]}}``. All violations are collected
    before raising :class:`MalformedStructure`.
    """
    errs = []
    dom = raw.get("domain")
    labels = None
    if isinstance(dom, list):
        labels = tuple(_freeze(x) for x in dom)
        size = len(dom)
    elif isinstance(dom, int) and not isinstance(dom, bool) and dom >= 0:
        size = dom
    else:
        raise MalformedStructure([f"domain: expected non-negative integer or label list, got {dom!r}"])
    symbols = []
    seen = set()
    for i, entry in enumerate(raw.get("signature", [])):
        try:
            name, ar = str(entry["name"]), entry["arity"]
        except (KeyError, TypeError):
            errs.append(f"signature[{i}]: expected {{'name','arity'}}")
            continue
        if name in seen:
            errs.append(f"signature[{i}]: duplicate symbol {name!r}")
            continue
        if not isinstance(ar, int) or isinstance(ar, bool) or ar < 1:
            errs.append(f"signature[{i}]: arity {ar!r} is not a positive integer")
            continue
        seen.add(name)
        symbols.append((name, ar))
    rels = raw.get("relations", {})
    if not isinstance(rels, Mapping):
        errs.append("relations: expected an object")
        rels = {}
    if errs:
        raise MalformedStructure(errs)
    signature = Signature(tuple(symbols))
    bad = [t for ts in rels.values() for t in ts if not isinstance(t, (list, tuple))]
    if bad:
        raise MalformedStructure([f"relation tuple {t!r} is not a list" for t in bad])
    return RelationalStructure(size, signature, {k: [tuple(t) for t in v] for k, v in rels.items()}, labels)


def _freeze(x):
    return tuple(_freeze(y) for y in x) if isinstance(x, list) else x


def structure(size: int, symbols: Iterable[tuple[str, int]], relations: Mapping, labels=None) -> RelationalStructure:
    return RelationalStructure(size, Signature.of(*symbols), dict(relations), labels)


# ---------------------------------------------------------------------------
# named structures

HORN_SYMBOLS = (("zero", 1), ("one", 1), ("imp", 3), ("nimp", 3))


def named_structure(name: str, param: int | None = None) -> RelationalStructure:
    """K_n, H_n, C_n, Horn-3-SAT, 1-in-3 and K_3 with constants."""
    name = name.lower()
    if name in ("k", "h", "c"):
        if param is None or param < 1:
            raise BadParam(f"{name.upper()} needs param >= 1, got {param!r}")
        n = param
        if name == "k":
            edges = [(i, j) for i in range(n) for j in range(n) if i != j]
            return structure(n, [("E", 2)], {"E": edges})
        if name == "h":
            nae = [t for t in itertools.product(range(n), repeat=3) if len(set(t)) > 1]
            return structure(n, [("NAE", 3)], {"NAE": nae})
        return structure(n, [("E", 2)], {"E": [(i, (i + 1) % n) for i in range(n)]})
    if name == "horn":
        cube = list(itertools.product((0, 1), repeat=3))
        return structure(
            2,
            HORN_SYMBOLS,
            {
                "zero": [(0,)],
                "one": [(1,)],
                "imp": [t for t in cube if not (t[0] and t[1]) or t[2]],
                "nimp": [t for t in cube if not (t[0] and t[1]) or not t[2]],
            },
        )
    if name in ("one_in_three", "1in3"):
        return structure(2, [("R", 3)], {"R": [(0, 0, 1), (0, 1, 0), (1, 0, 0)]})
    if name == "k3_star":
        k3 = named_structure("k", 3)
        return structure(
            3,
            [("E", 2), ("c0", 1), ("c1", 1), ("c2", 1)],
            {"E": k3.rel("E"), "c0": [(0,)], "c1": [(1,)], "c2": [(2,)]},
        )
    raise UnknownName(f"unknown structure {name!r}")


# ---------------------------------------------------------------------------
# constructions on structures


def tuple_index(t: Sequence[int], n: int) -> int:
    idx = 0
    for x in t:
        idx = idx * n + x
    return idx


def index_tuple(idx: int, n: int, k: int) -> tuple[int, ...]:
    out = [0] * k
    for i in range(k - 1, -1, -1):
        idx, out[i] = divmod(idx, n)
    return tuple(out)


def power(s: RelationalStructure, k: int, caps: Caps = DEFAULT_CAPS) -> RelationalStructure:
    if k < 1:
        raise BadParam(f"power exponent {k} < 1")
    caps.check_size(s.size**k)
    rels = {}
    for name, ar in s.signature.symbols:
        base = s.sorted_relations[name]
        caps.check_size(len(base) ** k)
        out = set()
        # a tuple of k-tuples is a k-column of base tuples
        for column in itertools.product(base, repeat=k):
            out.add(tuple(tuple_index([column[c][i] for c in range(k)], s.size) for i in range(ar)))
        rels[name] = out
    return RelationalStructure(s.size**k, s.signature, rels)


def disjoint_union(parts: Sequence[RelationalStructure]) -> tuple[RelationalStructure, list[list[int]]]:
    if not parts:
        raise BadParam("disjoint_union of no parts")
    sig = parts[0].signature
    for p in parts[1:]:
        if p.signature != sig:
            raise SignatureMismatch("disjoint_union parts are not similar")
    offset = 0
    injections = []
    rels = {name: set() for name in sig.names}
    for p in parts:
        injections.append(list(range(offset, offset + p.size)))
        for name in sig.names:
            rels[name].update(tuple(x + offset for x in t) for t in p.rel(name))
        offset += p.size
    return RelationalStructure(offset, sig, rels), injections


def induced_substructure(s: RelationalStructure, subset: Iterable[int]) -> tuple[RelationalStructure, list[int]]:
    """Restrict ``s`` to ``subset``; returns the structure and the list of
    original elements in new-index order."""
    elems = sorted(set(subset))
    for x in elems:
        if not isinstance(x, int) or x < 0 or x >= s.size:
            raise OutOfRangeElement(f"element {x!r} outside domain {s.size}")
    new = {x: i for i, x in enumerate(elems)}
    rels = {
        name: [tuple(new[x] for x in t) for t in s.rel(name) if all(x in new for x in t)] for name in s.signature.names
    }
    labels = None if s.labels is None else tuple(s.labels[x] for x in elems)
    return RelationalStructure(len(elems), s.signature, rels, labels), elems


# ---------------------------------------------------------------------------
# homomorphisms


def is_homomorphism(h: Sequence[int], s1: RelationalStructure, s2: RelationalStructure) -> bool:
    if s1.signature != s2.signature:
        raise ArityOrRangeMismatch("structures are not similar")
    if len(h) != s1.size:
        raise ArityOrRangeMismatch(f"map has {len(h)} entries, source domain {s1.size}")
    for x in h:
        if not 0 <= x < s2.size:
            raise ArityOrRangeMismatch(f"value {x} outside target domain {s2.size}")
    for name in s1.signature.names:
        target = s2.rel(name)
        for t in s1.rel(name):
            if tuple(h[x] for x in t) not in target:
                return False
    return True


@dataclass(frozen=True)
class Homomorphism:
    source: RelationalStructure = field(repr=False)
    target: RelationalStructure = field(repr=False)
    map: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))
        if not is_homomorphism(self.map, self.source, self.target):
            raise NotAHomomorphism(f"{self.map} is not a homomorphism")

    def __call__(self, x: int) -> int:
        return self.map[x]

    def compose(self, after: "Homomorphism") -> "Homomorphism":
        """``after ∘ self``."""
        return Homomorphism(self.source, after.target, tuple(after.map[y] for y in self.map))


def hom_network(s1: RelationalStructure, s2: RelationalStructure) -> ConstraintNetwork:
    if s1.signature != s2.signature:
        raise SignatureMismatch("structures are not similar")
    net = ConstraintNetwork.uniform(s1.size, s2.size)
    for name in s1.signature.names:
        allowed = s2.sorted_relations[name]
        for t in s1.sorted_relations[name]:
            net.add(t, allowed, key=name)
    return net


def find_homomorphism(s1: RelationalStructure, s2: RelationalStructure, deadline=None) -> Homomorphism | None:
    """Return a homomorphism ``s1 -> s2`` or ``None`` if none exists.

    Raises :class:`DeadlineExceeded` when the budget runs out before the
    search is decided.
    """
    sol = hom_network(s1, s2).first(order="mrv", deadline=Deadline.coerce(deadline))
    return None if sol is None else Homomorphism(s1, s2, sol)


def enumerate_homomorphisms(
    s1: RelationalStructure, s2: RelationalStructure, limit: int | None = None, deadline=None
) -> list[Homomorphism]:
    net = hom_network(s1, s2)
    return [Homomorphism(s1, s2, sol) for sol in net.solutions(order="static", deadline=deadline, limit=limit)]


def find_isomorphism(s1: RelationalStructure, s2: RelationalStructure, deadline=None) -> Homomorphism | None:
    """Bijective homomorphism whose inverse is also a homomorphism."""
    if s1.size != s2.size or s1.signature != s2.signature:
        return None
    if any(len(s1.rel(n)) != len(s2.rel(n)) for n in s1.signature.names):
        return None
    net = hom_network(s1, s2)
    # all-different as pairwise binary constraints
    neq = [(a, b) for a in range(s2.size) for b in range(s2.size) if a != b]
    for x in range(s1.size):
        for y in range(x + 1, s1.size):
            net.add((x, y), neq, key="!=")
    for sol in net.solutions(deadline=deadline):
        # injective + equal tuple counts => tuples map onto target
        return Homomorphism(s1, s2, sol)
    return None


@dataclass
class Template:
    """A promise template (A, B) of similar structures."""

    A: RelationalStructure
    B: RelationalStructure
    _witness: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.A.signature != self.B.signature:
            raise SignatureMismatch("template halves are not similar")

    @property
    def signature(self) -> Signature:
        return self.A.signature

    def witness(self, deadline=None) -> Homomorphism | None:
        """A homomorphism A -> B, searched once and cached."""
        if self._witness is None:
            self._witness = find_homomorphism(self.A, self.B, deadline) or False
        return self._witness or None

    def is_valid(self, deadline=None) -> bool:
        return self.witness(deadline) is not None
