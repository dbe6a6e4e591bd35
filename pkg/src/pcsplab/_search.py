"""Finite-domain constraint network with GAC propagation and backtracking.

Domains are integer bitmasks (bit ``v`` set iff value ``v`` is still
allowed). Every search in the package (homomorphisms, polymorphism
tables, minor conditions, m-solutions) is compiled into one of these.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Iterator, Sequence

from .config import Deadline

_CHECK_EVERY = 256


def _values(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


class ConstraintNetwork:
    def __init__(self, domains: Sequence[int]):
        self.domains = list(domains)
        self.scopes: list[tuple[int, ...]] = []
        self.tables: list[list[tuple[int, ...]]] = []
        self.watch: list[list[int]] = [[] for _ in self.domains]
        self._seen: set = set()
        self.failed = False

    @classmethod
    def uniform(cls, n_vars: int, n_values: int) -> "ConstraintNetwork":
        return cls([(1 << n_values) - 1] * n_vars)

    def add(self, scope: Sequence[int], allowed: Iterable[Sequence[int]], key: Hashable = None) -> None:
        """Require ``tuple(x[v] for v in scope)`` to lie in ``allowed``.

        ``key`` identifies the allowed set; constraints with equal scope and
        key are stored once.
        """
        scope = tuple(scope)
        if len(set(scope)) < len(scope):
            first = {}
            pattern = tuple(first.setdefault(v, i) for i, v in enumerate(scope))
            keep = sorted(set(first.values()))
            allowed = {
                tuple(t[i] for i in keep)
                for t in allowed
                if all(t[i] == t[p] for i, p in enumerate(pattern))
            }
            scope = tuple(scope[i] for i in keep)
            key = None if key is None else (key, pattern)
        if key is not None:
            marker = (scope, key)
            if marker in self._seen:
                return
            self._seen.add(marker)
        if len(scope) == 1:
            mask = 0
            for t in allowed:
                mask |= 1 << t[0]
            v = scope[0]
            self.domains[v] &= mask
            if not self.domains[v]:
                self.failed = True
            return
        table = sorted(set(map(tuple, allowed)))
        if not table:
            self.failed = True
        c = len(self.scopes)
        self.scopes.append(scope)
        self.tables.append(table)
        for v in scope:
            self.watch[v].append(c)

    def _propagate(self, dom: list[int], queue: Iterable[int], deadline: Deadline | None = None) -> bool:
        scopes, tables, watch = self.scopes, self.tables, self.watch
        pending = list(queue)
        queued = set(pending)
        revisions = 0
        while pending:
            revisions += 1
            if deadline is not None and revisions % _CHECK_EVERY == 0:
                deadline.check()
            c = pending.pop()
            queued.discard(c)
            scope = scopes[c]
            masks = [dom[v] for v in scope]
            support = [0] * len(scope)
            for t in tables[c]:
                for i, x in enumerate(t):
                    if not (masks[i] >> x) & 1:
                        break
                else:
                    for i, x in enumerate(t):
                        support[i] |= 1 << x
            for i, v in enumerate(scope):
                new = masks[i] & support[i]
                if new != dom[v]:
                    if not new:
                        return False
                    dom[v] = new
                    for c2 in watch[v]:
                        if c2 != c and c2 not in queued:
                            queued.add(c2)
                            pending.append(c2)
        return True

    def solutions(
        self,
        order: str = "mrv",
        deadline: Deadline | float | None = None,
        limit: int | None = None,
    ) -> Iterator[tuple[int, ...]]:
        """Yield complete assignments.

        ``order="static"`` branches on variables by index and yields
        solutions in lexicographic order; ``"mrv"`` picks the smallest
        domain, lowest index first. Values are always tried ascending.
        """
        deadline = Deadline.coerce(deadline)
        if self.failed or limit == 0:
            return
        dom = list(self.domains)
        if any(d == 0 for d in dom):
            return
        if not self._propagate(dom, range(len(self.scopes)), deadline):
            return
        n = len(dom)
        count = 0
        nodes = 0
        # frame: [domains, var, candidate values, next index]
        stack = [[dom, None, None, 0]]
        while stack:
            frame = stack[-1]
            d = frame[0]
            if frame[1] is None:
                var = -1
                if order == "static":
                    for v in range(n):
                        if d[v] & (d[v] - 1):
                            var = v
                            break
                else:
                    best = None
                    for v in range(n):
                        m = d[v]
                        if m & (m - 1):
                            size = m.bit_count()
                            if best is None or size < best:
                                best, var = size, v
                                if size == 2:
                                    break
                if var < 0:
                    stack.pop()
                    yield tuple(m.bit_length() - 1 for m in d)
                    count += 1
                    if limit is not None and count >= limit:
                        return
                    continue
                frame[1] = var
                frame[2] = _values(d[var])
            var, vals, idx = frame[1], frame[2], frame[3]
            if idx >= len(vals):
                stack.pop()
                continue
            frame[3] = idx + 1
            nodes += 1
            if nodes % _CHECK_EVERY == 0:
                deadline.check()
            d2 = list(d)
            d2[var] = 1 << vals[idx]
            if self._propagate(d2, self.watch[var], deadline):
                stack.append([d2, None, None, 0])
        deadline.check()

    def first(self, order: str = "mrv", deadline=None) -> tuple[int, ...] | None:
        for sol in self.solutions(order=order, deadline=deadline, limit=1):
            return sol
        return None


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller index stays representative: keeps numbering canonical
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self) -> tuple[list[int], int]:
        """Return (class index per element, number of classes), classes
        numbered by first occurrence."""
        index: dict[int, int] = {}
        out = []
        for x in range(len(self.parent)):
            out.append(index.setdefault(self.find(x), len(index)))
        return out, len(index)
