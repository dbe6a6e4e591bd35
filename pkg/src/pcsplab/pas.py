"""Partial assignment systems (PAS) and the arity recursion.

Variables are indexed ``0..|V|-1`` (``vars`` keeps the labels). A key of a
k-PAS is a sorted tuple of k variable indices; an assignment on a key is
the tuple of values aligned with it. Keys absent from ``table`` carry the
empty set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

from ._search import ConstraintNetwork
from .config import DEFAULT_CAPS, Caps, Deadline
from .errors import BadInput, ChainSpaceCapExceeded, ValueTooLarge

Key = tuple[int, ...]


@dataclass(frozen=True)
class PartialAssignment:
    domain: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.domain) != len(self.values):
            raise BadInput("partial assignment is not total on its domain")

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "PartialAssignment":
        dom = tuple(sorted(mapping))
        return cls(dom, tuple(mapping[v] for v in dom))

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.domain, self.values))

    def restrict(self, sub: Iterable[int]) -> "PartialAssignment":
        keep = set(sub)
        pairs = [(v, x) for v, x in zip(self.domain, self.values) if v in keep]
        return PartialAssignment(tuple(v for v, _ in pairs), tuple(x for _, x in pairs))


def restrict(values: Sequence[int], key: Key, sub: Key) -> tuple[int, ...]:
    """Restrict an assignment aligned with ``key`` to the sorted ``sub``."""
    pos = {v: i for i, v in enumerate(key)}
    return tuple(values[pos[v]] for v in sub)


@dataclass
class PAS:
    vars: tuple
    n: int
    k: int
    table: dict[Key, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        self.vars = tuple(self.vars)
        clean = {}
        for key, fs in self.table.items():
            key = tuple(sorted(key))
            if len(key) != self.k or len(set(key)) != self.k:
                raise BadInput(f"key {key} does not have {self.k} distinct variables")
            if any(not 0 <= v < len(self.vars) for v in key):
                raise BadInput(f"key {key} mentions unknown variables")
            fs = frozenset(tuple(f) for f in fs)
            for f in fs:
                if len(f) != self.k or any(not 0 <= x < self.n for x in f):
                    raise BadInput(f"assignment {f} on {key} is not a map into {self.n}")
            if fs:
                clean[key] = fs
        self.table = clean

    @property
    def size(self) -> int:
        return len(self.vars)

    def __call__(self, key: Iterable[int]) -> frozenset:
        return self.table.get(tuple(sorted(key)), frozenset())

    def keys(self) -> Iterable[Key]:
        return itertools.combinations(range(self.size), self.k)

    def restricted(self, key: Key, sub: Key) -> set[tuple[int, ...]]:
        """I(key)|_sub."""
        return {restrict(f, key, sub) for f in self(key)}

    @classmethod
    def from_functions(cls, vars: Sequence, n: int, k: int, functions: Iterable[Sequence[int]]) -> "PAS":
        """The PAS of all restrictions of the given global functions."""
        functions = [tuple(g) for g in functions]
        table = {key: frozenset(tuple(g[v] for v in key) for g in functions) for key in itertools.combinations(range(len(vars)), k)}
        return cls(tuple(vars), n, k, table)

    @classmethod
    def full(cls, vars: Sequence, n: int, k: int) -> "PAS":
        every = frozenset(itertools.product(range(n), repeat=k))
        return cls(tuple(vars), n, k, {key: every for key in itertools.combinations(range(len(vars)), k)})


def pas_value(I: PAS) -> int:
    return max((len(fs) for fs in I.table.values()), default=0)


def _supersets(key: Key, size: int, k: int) -> Iterable[Key]:
    rest = [v for v in range(size) if v not in key]
    for extra in itertools.combinations(rest, k - len(key)):
        yield tuple(sorted(key + extra))


def _allowed_on(I: PAS, sub: Key) -> set[tuple[int, ...]]:
    """Union of I(W)|_sub over all k-supersets W of sub."""
    out = set()
    if len(sub) > I.k:
        return out
    for w in _supersets(sub, I.size, I.k):
        out |= I.restricted(w, sub)
    return out


def is_m_solution(f: Sequence[int], I: PAS, m: int) -> bool:
    """Every m-subset U extends to a k-set W with f|_U in I(W)|_U.

    With k < m there is no such W, so the answer is False whenever an
    m-subset exists and vacuously True otherwise.
    """
    if len(f) != I.size:
        raise BadInput(f"map has {len(f)} values for {I.size} variables")
    for u in itertools.combinations(range(I.size), m):
        if tuple(f[v] for v in u) not in _allowed_on(I, u):
            return False
    return True


def find_m_solution(I: PAS, m: int, deadline=None) -> tuple[int, ...] | None:
    """Lexicographically first m-solution, or None."""
    if m == 0:
        # only U = {} : some k-set must carry an assignment
        return (0,) * I.size if I.table else None
    if I.size < m:
        return (0,) * I.size
    net = ConstraintNetwork.uniform(I.size, I.n)
    for u in itertools.combinations(range(I.size), m):
        net.add(u, _allowed_on(I, u))
    return net.first(order="static", deadline=Deadline.coerce(deadline))


# ---------------------------------------------------------------------------
# sequences and consistency


@dataclass
class PASSequence:
    items: list[PAS]

    def __post_init__(self):
        if not self.items:
            raise BadInput("empty PAS sequence")
        first = self.items[0]
        for I in self.items[1:]:
            if I.vars != first.vars or I.n != first.n:
                raise BadInput("PASes in a sequence must share variables and value domain")
        ks = self.arities
        if any(a < b for a, b in zip(ks, ks[1:])):
            raise BadInput(f"arities {ks} are not non-increasing")

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(I.k for I in self.items)

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


def is_consistent(seq: PASSequence | Sequence[PAS], caps: Caps = DEFAULT_CAPS) -> bool:
    """Every chain V ⊇ U_0 ⊇ ... ⊇ U_r (|U_i| = k_i) has i < j with
    I_i(U_i)|_{U_j} ∩ I_j(U_j) nonempty.

    Chains are walked depth first; a prefix that already contains a good
    pair settles its whole subtree.
    """
    if not isinstance(seq, PASSequence):
        seq = PASSequence(list(seq))
    items = seq.items
    r = len(items) - 1
    size = items[0].size
    visited = 0

    def good_pair(chain, j) -> bool:
        Ij = items[j](chain[j])
        if not Ij:
            return False
        for i in range(j):
            if items[i].restricted(chain[i], chain[j]) & Ij:
                return True
        return False

    def walk(chain, parent) -> bool:
        nonlocal visited
        j = len(chain)
        for u in itertools.combinations(parent, items[j].k):
            visited += 1
            if visited > caps.chain_cap:
                raise ChainSpaceCapExceeded(caps.chain_cap, visited)
            chain.append(u)
            ok = good_pair(chain, j) or (j < r and walk(chain, u))
            chain.pop()
            if not ok:
                return False
        return True

    return walk([], tuple(range(size)))


# ---------------------------------------------------------------------------
# obstacles, admissibility, refinements


def _as_assignment(f) -> PartialAssignment:
    return f if isinstance(f, PartialAssignment) else PartialAssignment.of(f)


def is_obstacle(f, I: PAS, ell: int) -> bool:
    """For every ell-set W some k-set U ⊇ dom(f) ∪ W has g in I(U)
    with g|_dom(f) = f."""
    f = _as_assignment(f)
    X = set(f.domain)
    hits = [set(key) for key in I.table if X <= set(key) and f.values in I.restricted(key, f.domain)]
    for w in itertools.combinations(range(I.size), ell):
        if not any(set(w) <= u for u in hits):
            return False
    return True


def is_admissible(f, I: PAS, ell: int) -> bool:
    """Some ell-set W such that every k-set U ⊇ dom(f) ∪ W has g in I(U)
    with g|_dom(f) = f (vacuously so when no such U exists)."""
    f = _as_assignment(f)
    for w in itertools.combinations(range(I.size), ell):
        base = tuple(sorted(set(f.domain) | set(w)))
        if len(base) > I.k:
            return True
        if all(f.values in I.restricted(u, f.domain) for u in _supersets(base, I.size, I.k)):
            return True
    return False


def is_refinement(J: PAS, I: PAS) -> bool:
    if J.vars != I.vars or J.n != I.n:
        raise BadInput("refinement compares PASes over different variables")
    if J.k > I.k:
        return False
    for u in J.keys():
        target = J(u)
        if not any(I.restricted(w, u) == target for w in _supersets(u, I.size, I.k)):
            return False
    return True


# ---------------------------------------------------------------------------
# arity recursion


@dataclass(frozen=True)
class Level:
    k: int
    k_prime: int | None = None
    k_dprime: int | None = None
    p: int | None = None
    ell: int | None = None


@dataclass(frozen=True)
class AritySchedule:
    n: int
    m: int
    values: tuple[int, ...]
    arities: tuple[int, ...]
    rule: str
    levels: tuple[Level, ...]

    def trace(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "values": list(self.values),
            "arities": list(self.arities),
            "rule": self.rule,
            "levels": [
                {"i": i, "k": lv.k, "k'": lv.k_prime, "k''": lv.k_dprime, "p": lv.p, "l": lv.ell}
                for i, lv in enumerate(self.levels)
            ],
        }


def pas_arities(n: int, m: int, values: Sequence[int]) -> AritySchedule:
    """Arities (k_0..k_r) that force an m-solution from any consistent
    sequence of PASes over n with val(I_i) <= values[i]."""
    values = tuple(int(d) for d in values)
    if len(values) < 2:
        raise BadInput("need at least two values (r >= 1)")
    if n < 1 or m < 1 or any(d < 0 for d in values):
        raise BadInput(f"bad arity-recursion input n={n}, m={m}, values={values}")
    return _schedule(n, m, values)


# results beyond this many bits are refused rather than computed
MAX_RESULT_BITS = 2**20


def _binom(a: int, b: int) -> int:
    # C(a, b) has roughly min(b, a-b) * log2(a) bits
    if min(b, a - b) * a.bit_length() > MAX_RESULT_BITS:
        raise ValueTooLarge(f"binomial of {a.bit_length()}-bit and {b.bit_length()}-bit arguments exceeds the big-integer budget")
    return comb(a, b)


@lru_cache(maxsize=None)
def _schedule(n: int, m: int, d: tuple[int, ...]) -> AritySchedule:
    r = len(d) - 1
    if sum(1 for x in d if x >= 1) < 2:
        # no consistent sequence exists; any arities do
        return AritySchedule(n, m, d, (m,) * (r + 1), "vacuous", tuple(Level(m) for _ in d))
    if d[0] == 0:
        tail = _schedule(n, m, d[1:])
        ks = (tail.arities[0],) + tail.arities
        return AritySchedule(n, m, d, ks, "drop-empty", (Level(ks[0]),) + tail.levels)
    if r == 1 and d == (1, 1):
        return AritySchedule(n, m, d, (m, 1), "base", (Level(m), Level(1)))
    pairs = [None] + [_schedule(n, m, (d[i], 1)).arities for i in range(1, r + 1)]
    k_dprime = [None] + [pr[0] for pr in pairs[1:]]
    k_prime = [None] + [pr[1] for pr in pairs[1:]]
    p = list(_schedule(n, m, (d[0] - 1,) + d[1:]).arities) + [0]
    k = [0] * (r + 2)
    ell = [0] * (r + 1)
    for i in range(r, -1, -1):
        ell[i] = p[i] + _binom(p[i], p[i + 1]) * (k[i + 1] - p[i + 1])
        if i >= 1:
            k[i] = k_dprime[i] + _binom(k_dprime[i], k_prime[i]) * ell[i]
    s = sum(k_prime[1:])
    if s * max(n - 1, 1).bit_length() > MAX_RESULT_BITS:
        raise ValueTooLarge(f"{n}^s with a {s.bit_length()}-bit exponent exceeds the big-integer budget")
    k[0] = s + n**s * ell[0]
    levels = tuple(
        Level(k[i], k_prime[i], k_dprime[i], p[i], ell[i]) for i in range(r + 1)
    )
    return AritySchedule(n, m, d, tuple(k[: r + 1]), "recursive", levels)
