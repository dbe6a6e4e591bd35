"""(d,r)-minion homomorphisms and the gadget reduction built from them.

Instances of a template (C, D) are translated into instances over the
gadget structure S, whose domain is |C|^{k_0} and whose relations are
graphs of partial functions on that domain. Only the partial functions an
instance actually uses are materialised; a symbol named
``pf:s0>t0,s1>t1,...`` has exactly the listed pairs as its extension.
"""

from __future__ import annotations

import itertools
from math import comb
from dataclasses import dataclass, field
from typing import Sequence

from .config import DEFAULT_CAPS, Caps, Deadline
from .core import (
    Homomorphism,
    RelationalStructure,
    Signature,
    Template,
    enumerate_homomorphisms,
    induced_substructure,
    is_homomorphism,
)
from .errors import (
    BadArity,
    BadInput,
    BadParam,
    FragmentTooLarge,
    MinorLinkViolation,
    MissingXiEntry,
    NotAHomomorphism,
    SignatureMismatch,
    SizeCapExceeded,
)
from .minions import FunctionTable, MinionSlice, MinorMap, minor_apply
from .pas import PAS, AritySchedule, PASSequence, pas_arities

Key = tuple[int, ...]


# ---------------------------------------------------------------------------
# (d,r)-minion homomorphisms


@dataclass
class WeakMinionHom:
    """Finite table xi over a bounded slice; images are sets of at most d
    tables of the same arity over the target template."""

    d: int
    r: int
    source: MinionSlice
    target: Template | None
    table: dict[FunctionTable, frozenset[FunctionTable]] = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1 or self.r < 1:
            raise BadParam(f"d and r must be positive, got d={self.d}, r={self.r}")
        self.table = {f: frozenset(imgs) for f, imgs in self.table.items()}

    @classmethod
    def identity(cls, source: MinionSlice) -> "WeakMinionHom":
        """xi(f) = {f} on every table of the slice: a (1,1)-homomorphism."""
        return cls(1, 1, source, source.template, {f: frozenset([f]) for f in source.all_tables()})

    def __call__(self, f: FunctionTable) -> frozenset[FunctionTable]:
        try:
            return self.table[f]
        except KeyError:
            raise MissingXiEntry(f"xi has no entry for arity-{f.arity} table {list(f.table)}") from None

    def get(self, f: FunctionTable) -> frozenset[FunctionTable]:
        return self.table.get(f, frozenset())


@dataclass(frozen=True)
class ChainOfMinors:
    """t_0 -> t_1 -> ... -> t_r with t_{i+1} = (t_i)_{maps[i]}."""

    tables: tuple[FunctionTable, ...]
    maps: tuple[MinorMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "tables", tuple(self.tables))
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) != len(self.tables) - 1:
            raise BadInput("a chain of r+1 tables needs r minor maps")
        for i, pi in enumerate(self.maps):
            if minor_apply(self.tables[i], pi) != self.tables[i + 1]:
                raise BadInput(f"link {i} -> {i + 1} is not a minor")

    @property
    def r(self) -> int:
        return len(self.maps)

    def composite(self, i: int, j: int) -> MinorMap:
        """pi_{i,j}: arity(t_i) -> arity(t_j)."""
        if not 0 <= i <= j <= self.r:
            raise BadParam(f"need 0 <= i <= j <= {self.r}")
        ar = self.tables[i].arity
        pi = MinorMap(ar, ar, tuple(range(ar)))
        for m in self.maps[i:j]:
            pi = pi.then(m)
        return pi


@dataclass(frozen=True)
class WeakHomVerdict:
    """Outcome of a fragment check. ``ok`` covers only chains whose tables
    have arity at most ``bound``."""

    ok: bool
    condition: str | None = None
    detail: str = ""
    chain: ChainOfMinors | None = None
    chains_checked: int = 0
    bound: int = 0
    scope: str = "fragment-verified"


def chain_ok(xi: WeakMinionHom, chain: ChainOfMinors) -> bool:
    """Some i < j, g in xi(t_i), h in xi(t_j) with h = g_{pi_{i,j}}."""
    for j in range(1, chain.r + 1):
        target = xi.get(chain.tables[j])
        for i in range(j):
            pi = chain.composite(i, j)
            if any(minor_apply(g, pi) in target for g in xi.get(chain.tables[i])):
                return True
    return False


def _minor_maps(source: int, bound: int):
    for target in range(1, bound + 1):
        for images in itertools.product(range(target), repeat=source):
            yield MinorMap(source, target, images)


def check_weak_minion_hom(
    xi: WeakMinionHom,
    r: int | None = None,
    bound: int | None = None,
    deadline=None,
    caps: Caps = DEFAULT_CAPS,
) -> WeakHomVerdict:
    """Check the three conditions of a (d,r)-minion homomorphism on the
    fragment of the source slice with arities up to ``bound``.

    Chains are walked depth first from each t_0 in slice order; a prefix
    that already has a compatible pair settles all its extensions.
    """
    r = xi.r if r is None else r
    bound = xi.source.bound if bound is None else bound
    deadline = Deadline.coerce(deadline)
    if r < 1 or bound < 1:
        raise BadParam("chain length and arity bound must be positive")
    for f, imgs in sorted(xi.table.items()):
        for g in sorted(imgs):
            if g.arity != f.arity:
                return WeakHomVerdict(False, "arity", f"image of arity {g.arity} for a table of arity {f.arity}", bound=bound)
            if xi.target is not None and (g.n_in != xi.target.A.size or g.n_out != xi.target.B.size):
                return WeakHomVerdict(False, "arity", "image is not a table over the target template", bound=bound)
        if len(imgs) > xi.d:
            return WeakHomVerdict(False, "size", f"{len(imgs)} images exceed d={xi.d}", bound=bound)

    slice_ = xi.source
    fragment = [f for k in range(1, bound + 1) for f in slice_.tables(k)]
    caps.check_size(len(fragment))
    checked = 0
    minor_cache: dict = {}

    def minor(g, pi):
        key = (g, pi)
        if key not in minor_cache:
            minor_cache[key] = minor_apply(g, pi)
        return minor_cache[key]

    def good(tables, maps) -> bool:
        # some i < j = len-1 with (xi(t_i))_{pi_{i,j}} meeting xi(t_j)
        j = len(tables) - 1
        target = xi.get(tables[j])
        if not target:
            return False
        pi = None
        for i in range(j - 1, -1, -1):
            pi = maps[i] if pi is None else maps[i].then(pi)
            for g in xi.get(tables[i]):
                if minor(g, pi) in target:
                    return True
        return False

    def walk(tables, maps):
        nonlocal checked
        for pi in _minor_maps(tables[-1].arity, bound):
            checked += 1
            if checked > caps.chain_cap:
                raise FragmentTooLarge(caps.chain_cap, checked)
            if checked % 256 == 0:
                deadline.check()
            t = minor(tables[-1], pi)
            tables.append(t)
            maps.append(pi)
            bad = None
            if not good(tables, maps):
                bad = ChainOfMinors(tuple(tables), tuple(maps)) if len(tables) == r + 1 else walk(tables, maps)
            tables.pop()
            maps.pop()
            if bad is not None:
                return bad
        return None

    for t0 in fragment:
        bad = walk([t0], [])
        if bad is not None:
            return WeakHomVerdict(False, "chain", "no compatible image pair along the chain", bad, checked, bound)
    return WeakHomVerdict(True, None, "", None, checked, bound)


# ---------------------------------------------------------------------------
# the gadget reduction


def dr_arity_schedule(templ: Template, d: int, r: int) -> AritySchedule:
    if d < 1 or r < 1:
        raise BadParam(f"d and r must be positive, got d={d}, r={r}")
    return pas_arities(templ.B.size, templ.A.signature.max_arity, (d,) * (r + 1))


def pf_name(graph: Sequence[tuple[int, int]]) -> str:
    """Canonical symbol for a partial function given by its graph."""
    return "pf:" + ",".join(f"{s}>{t}" for s, t in sorted(graph))


def pf_graph(name: str) -> tuple[tuple[int, int], ...]:
    if not name.startswith("pf:"):
        raise BadInput(f"{name!r} is not a partial-function symbol")
    body = name[3:]
    if not body:
        return ()
    pairs = []
    for item in body.split(","):
        s, _, t = item.partition(">")
        pairs.append((int(s), int(t)))
    if len({s for s, _ in pairs}) != len(pairs):
        raise BadInput(f"{name!r} is not functional")
    return tuple(sorted(pairs))


@dataclass
class GadgetBundle:
    instance: RelationalStructure
    template: Template
    arities: tuple[int, ...]
    sets: list[Key]  # the index family X, level order, no repeats
    homs: dict[Key, list[tuple[int, ...]]]  # D_U, lexicographic
    sigma: dict[Key, dict[tuple[int, ...], int]]
    gamma: RelationalStructure
    gadget: RelationalStructure  # S restricted to the used symbols

    @property
    def s_size(self) -> int:
        return self.gadget.size

    def index(self, key: Key) -> int:
        return self._pos[key]

    def __post_init__(self):
        self._pos = {u: i for i, u in enumerate(self.sets)}

    def level(self, i: int) -> list[Key]:
        return [u for u in self.sets if len(u) == self.arities[i]]

    def pairs(self):
        """All (U, W) in X with W ⊆ U, including W = U."""
        for u in self.sets:
            su = set(u)
            for w in self.sets:
                if len(w) <= len(u) and su.issuperset(w):
                    yield u, w

    def link(self, u: Key, w: Key) -> MinorMap:
        """pi_{U,W}: m -> sigma_W(sigma_U^{-1}(m)|_W)."""
        pos = [u.index(x) for x in w]
        sw = self.sigma[w]
        images = tuple(sw[tuple(f[p] for p in pos)] for f in self.homs[u])
        return MinorMap(len(images), len(self.homs[w]), images)


def _arities_of(schedule) -> tuple[int, ...]:
    if isinstance(schedule, AritySchedule):
        return tuple(schedule.arities)
    return tuple(int(k) for k in schedule)


def dr_reduce_instance(
    instance: RelationalStructure,
    templ: Template,
    schedule: AritySchedule | Sequence[int],
    deadline=None,
    caps: Caps = DEFAULT_CAPS,
) -> GadgetBundle:
    """Build Gamma(instance): one element per set U in X, and the pair
    (U, W) for every W ⊆ U placed in the relation named by the partial
    function sigma_U(f) -> sigma_W(f|_W), f in D_U.

    ``|V| >= k_0`` is not required, so restrictions of an instance to small
    subsets can be reduced too.
    """
    if instance.signature != templ.signature:
        raise SignatureMismatch("instance does not match the template signature")
    arities = _arities_of(schedule)
    if not arities or any(k < 1 for k in arities) or any(a < b for a, b in zip(arities, arities[1:])):
        raise BadParam(f"schedule {arities} must be positive and non-increasing")
    deadline = Deadline.coerce(deadline)
    n_c = templ.A.size
    if arities[0] > caps.size_cap.bit_length():
        raise SizeCapExceeded(caps.size_cap, f"{n_c}^{arities[0]}")
    s_size = n_c ** arities[0]
    caps.check_size(s_size)
    v = instance.size
    caps.check_size(sum(comb(v, k) for k in set(arities)))
    sets: list[Key] = []
    seen = set()
    for k in arities:
        for u in itertools.combinations(range(v), k):
            if u not in seen:
                seen.add(u)
                sets.append(u)
    homs: dict[Key, list[tuple[int, ...]]] = {}
    sigma: dict[Key, dict[tuple[int, ...], int]] = {}
    for u in sets:
        sub, _ = induced_substructure(instance, u)
        homs[u] = [h.map for h in enumerate_homomorphisms(sub, templ.A, deadline=deadline)]
        sigma[u] = {f: i for i, f in enumerate(homs[u])}
        deadline.check()
    pos = {u: i for i, u in enumerate(sets)}
    rels: dict[str, set] = {}
    graphs: dict[str, tuple] = {}
    for u in sets:
        su = set(u)
        for w in sets:
            if len(w) > len(u) or not su.issuperset(w):
                continue
            idx = [u.index(x) for x in w]
            sw = sigma[w]
            graph = tuple((sigma[u][f], sw[tuple(f[p] for p in idx)]) for f in homs[u])
            name = pf_name(graph)
            graphs[name] = graph
            rels.setdefault(name, set()).add((pos[u], pos[w]))
    sig = Signature(tuple((name, 2) for name in sorted(rels)))
    labels = tuple(tuple(instance.label(x) for x in u) for u in sets)
    gamma = RelationalStructure(len(sets), sig, rels, labels)
    gadget = RelationalStructure(s_size, sig, {name: graphs[name] for name in rels})
    return GadgetBundle(instance, templ, arities, sets, homs, sigma, gamma, gadget)


def canonical_gadget_hom(h, bundle: GadgetBundle) -> Homomorphism:
    """U -> sigma_U(h|_U), checked against every emitted relation."""
    hmap = tuple(getattr(h, "map", h))
    inst, A = bundle.instance, bundle.template.A
    if len(hmap) != inst.size or not is_homomorphism(hmap, inst, A):
        raise NotAHomomorphism("h is not a homomorphism from the instance to C")
    image = tuple(bundle.sigma[u][tuple(hmap[x] for x in u)] for u in bundle.sets)
    if not is_homomorphism(image, bundle.gamma, bundle.gadget):
        raise NotAHomomorphism("canonical map violates a gadget relation")
    return Homomorphism(bundle.gamma, bundle.gadget, image)


def gadget_structure_with(bundle: GadgetBundle, signature: Signature) -> RelationalStructure:
    """The gadget structure S over any set of partial-function symbols."""
    return RelationalStructure(bundle.s_size, signature, {name: pf_graph(name) for name in signature.names})


def is_labelled_substructure(small: RelationalStructure, big: RelationalStructure) -> bool:
    """Whether ``small`` is an induced substructure of ``big`` when elements
    are matched by label and relations by name."""
    try:
        emb = [big.index_of(small.label(x)) for x in range(small.size)]
    except KeyError:
        return False
    if len(set(emb)) != len(emb):
        return False
    back = {y: x for x, y in enumerate(emb)}
    big_names = set(big.signature.names)
    for name in set(small.signature.names) | big_names:
        mine = small.rel(name) if name in small.signature.names else frozenset()
        theirs = set()
        if name in big_names:
            for t in big.rel(name):
                if all(y in back for y in t):
                    theirs.add(tuple(back[y] for y in t))
        if set(mine) != theirs:
            return False
    return True


# ---------------------------------------------------------------------------
# soundness side: from a homomorphism into the free structure back to PASes


def restrict_pad(s_u: FunctionTable, a: int) -> FunctionTable:
    """t(x_0..x_{a-1}) = s_u(x_0, ..., x_{a-1}, x_0, ..., x_0)."""
    if a < 1 or a > s_u.arity:
        raise BadArity(f"target arity {a} outside 1..{s_u.arity}")
    return minor_apply(s_u, MinorMap(s_u.arity, a, tuple(i if i < a else 0 for i in range(s_u.arity))))


def projection_embedding(slice_: MinionSlice, size: int) -> tuple[int, ...]:
    """s -> index of the size-ary projection onto s among slice.tables(size).

    This is a homomorphism from any structure on ``size`` elements into its
    free structure whenever the slice contains the projections.
    """
    tables = slice_.tables(size)
    out = []
    for s in range(size):
        p = FunctionTable.projection(size, s, slice_.n_in)
        if slice_.n_out != slice_.n_in or not slice_.contains(p):
            raise BadInput("slice does not contain the projections")
        out.append(tables.index(p))
    return tuple(out)


def _z(g: FunctionTable, homs: list[tuple[int, ...]]) -> tuple[int, ...]:
    """Z_U(g)(u) = g(sigma_U^{-1}(0)(u), ..., sigma_U^{-1}(a-1)(u))."""
    return tuple(g(*(f[p] for f in homs)) for p in range(len(homs[0])))


@dataclass
class Extraction:
    sequence: PASSequence
    t: dict[Key, FunctionTable]
    links_checked: int


def extract(s, xi: WeakMinionHom, bundle: GadgetBundle) -> Extraction:
    """Read PASes I_0..I_r off a homomorphism s: Gamma -> F(S).

    ``s`` is a :class:`Homomorphism` into the free structure of ``xi.source``
    (values index ``xi.source.tables(|S|)``) or a sequence of tables, one
    per set in ``bundle.sets``.
    """
    size = bundle.s_size
    raw = getattr(s, "map", s)
    if len(raw) != len(bundle.sets):
        raise BadInput(f"map has {len(raw)} values for {len(bundle.sets)} sets")
    if raw and not isinstance(raw[0], FunctionTable):
        pool = xi.source.tables(size)
        raw = [pool[i] for i in raw]
    t: dict[Key, FunctionTable] = {}
    for u, s_u in zip(bundle.sets, raw):
        if s_u.arity != size:
            raise BadArity(f"s(U) has arity {s_u.arity}, expected {size}")
        a = len(bundle.homs[u])
        if a == 0:
            raise BadInput(f"no homomorphism on {u}, so no homomorphism from Gamma can exist")
        t[u] = restrict_pad(s_u, a)
    links = 0
    z_cache: dict = {}

    def z(u, g):
        if (u, g) not in z_cache:
            z_cache[(u, g)] = _z(g, bundle.homs[u])
        return z_cache[(u, g)]

    for u, w in bundle.pairs():
        pi = bundle.link(u, w)
        if minor_apply(t[u], pi) != t[w]:
            raise MinorLinkViolation(bundle.gamma.label(bundle.index(u)), bundle.gamma.label(bundle.index(w)))
        links += 1
        pos = [u.index(x) for x in w]
        hs = xi(t[w])
        for g in xi(t[u]):
            h = minor_apply(g, pi)
            if h in hs and tuple(z(u, g)[p] for p in pos) != z(w, h):
                raise MinorLinkViolation(bundle.gamma.label(bundle.index(u)), bundle.gamma.label(bundle.index(w)))
    names = tuple(bundle.instance.label(x) for x in range(bundle.instance.size))
    n = bundle.template.B.size
    items = []
    for i, k in enumerate(bundle.arities):
        table = {u: frozenset(z(u, g) for g in xi(t[u])) for u in bundle.sets if len(u) == k}
        items.append(PAS(names, n, k, table))
    return Extraction(PASSequence(items), t, links)


def extract_pas_sequence(s, xi: WeakMinionHom, bundle: GadgetBundle) -> PASSequence:
    return extract(s, xi, bundle).sequence


def is_partial_homomorphism(values: Sequence[int], key: Key, instance: RelationalStructure, target: RelationalStructure) -> bool:
    """Whether u -> values[i] (u = key[i]) is a homomorphism from the
    induced substructure on ``key`` to ``target``."""
    sub, _ = induced_substructure(instance, key)
    return is_homomorphism(tuple(values), sub, target)


def free_route(bundle: GadgetBundle, slice_: MinionSlice, deadline=None, caps: Caps = DEFAULT_CAPS):
    """Full homomorphism search Gamma -> F(S); returns (free structure,
    homomorphism or None). Feasible only for tiny |S|."""
    from .constructions import free_structure
    from .core import find_homomorphism

    free = free_structure(slice_, bundle.gadget, caps)
    return free, find_homomorphism(bundle.gamma, free, deadline)


def canonical_free_hom(h, bundle: GadgetBundle, slice_: MinionSlice, caps: Caps = DEFAULT_CAPS) -> Homomorphism:
    """The canonical gadget homomorphism composed with s -> projection_s."""
    from .constructions import free_structure

    c = canonical_gadget_hom(h, bundle)
    emb = projection_embedding(slice_, bundle.s_size)
    free = free_structure(slice_, bundle.gadget, caps)
    return Homomorphism(bundle.gamma, free, tuple(emb[x] for x in c.map))
