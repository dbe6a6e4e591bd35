"""Size caps and deadlines.

Caps can be overridden by a JSON file named in the ``PCSP_CAPS``
environment variable, e.g. ``{"arity_cap": 6, "cell_cap": 100000}``.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, fields, replace

from .errors import DeadlineExceeded, SizeCapExceeded


@dataclass(frozen=True)
class Caps:
    arity_cap: int = 8
    cell_cap: int = 10**6
    size_cap: int = 10**6
    chain_cap: int = 10**7
    deadline: float = 60.0

    def check_cells(self, requested: int) -> None:
        if requested > self.cell_cap:
            raise SizeCapExceeded(self.cell_cap, requested, what="cell")

    def check_size(self, requested: int) -> None:
        if requested > self.size_cap:
            raise SizeCapExceeded(self.size_cap, requested)

    def check_arity(self, requested: int) -> None:
        if requested > self.arity_cap:
            raise SizeCapExceeded(self.arity_cap, requested, what="arity")


def load_caps(path: str | None = None, **overrides) -> Caps:
    path = path or os.environ.get("PCSP_CAPS")
    caps = Caps()
    if path:
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(Caps)}
        caps = replace(caps, **{k: v for k, v in raw.items() if k in known})
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(caps, **overrides)


DEFAULT_CAPS = Caps()


class Deadline:
    """Absolute wall-clock budget; ``None`` seconds means unlimited."""

    __slots__ = ("_end",)

    def __init__(self, seconds: float | None):
        self._end = None if seconds is None else time.monotonic() + seconds

    @classmethod
    def coerce(cls, value) -> "Deadline":
        if isinstance(value, Deadline):
            return value
        return cls(value)

    def expired(self) -> bool:
        return self._end is not None and time.monotonic() > self._end

    def check(self) -> None:
        if self.expired():
            raise DeadlineExceeded("wall-clock budget exhausted")
