"""Canonical JSON for every domain object.

Output is deterministic: object keys sorted, tuples of relations and
tables sorted, no whitespace beyond single separators. ``from_json`` and
``to_json`` pairs round-trip.
"""

from __future__ import annotations

import json
import sys
from typing import Any, Mapping

from .constructions import PPFormula, PPPowerDef
from .core import Homomorphism, RelationalStructure, Signature, validate_structure
from .errors import BadArity, BadInput, BadParam, MalformedStructure, ParseError, ValidationError
from .minions import FunctionTable, Identity, MinorCondition
from .pas import PAS, AritySchedule, PASSequence

# schedules routinely exceed the default limit on int -> str conversion
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None


def load(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    return loads(text, path)


def _plain(x):
    """Labels as JSON values: tuples become lists."""
    if isinstance(x, tuple):
        return [_plain(y) for y in x]
    return x


# ---------------------------------------------------------------------------
# structures and homomorphisms


def signature_to_json(sig: Signature) -> list:
    return [{"name": n, "arity": a} for n, a in sig.symbols]


def structure_to_json(s: RelationalStructure) -> dict:
    return {
        "domain": s.size if s.labels is None else [_plain(x) for x in s.labels],
        "signature": signature_to_json(s.signature),
        "relations": {n: [list(t) for t in s.sorted_relations[n]] for n in s.signature.names},
    }


def structure_from_json(raw: Any, source: str = "<input>") -> RelationalStructure:
    if not isinstance(raw, Mapping):
        raise ValidationError(f"{source}: expected a structure object")
    try:
        return validate_structure(raw)
    except MalformedStructure as e:
        raise ValidationError(f"{source}: " + "; ".join(e.violations)) from None


def hom_to_json(h: Homomorphism) -> dict:
    return {"map": list(h.map), "source_size": h.source.size, "target_size": h.target.size}


def hom_map_from_json(raw: Any) -> tuple[int, ...]:
    """Accept a bare ``{"map": [...]}``, a report holding one under
    ``witness``, or a plain list."""
    if isinstance(raw, Mapping) and "witness" in raw:
        raw = raw["witness"]
    if isinstance(raw, Mapping):
        raw = raw.get("map")
    if not isinstance(raw, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
        raise ValidationError("homomorphism: expected a list of integers under 'map'")
    return tuple(raw)


# ---------------------------------------------------------------------------
# minions


def table_to_json(f: FunctionTable) -> dict:
    return {"arity": f.arity, "in": f.n_in, "out": f.n_out, "table": list(f.table)}


def table_from_json(raw: Any) -> FunctionTable:
    try:
        return FunctionTable(int(raw["arity"]), int(raw["in"]), int(raw["out"]), tuple(raw["table"]))
    except (KeyError, TypeError, ValueError, BadArity, BadParam) as e:
        raise ValidationError(f"function table: {e}") from None


def condition_to_json(c: MinorCondition) -> dict:
    return {
        "symbols": [{"name": n, "arity": a} for n, a in c.symbols],
        "vars": c.n_vars,
        "identities": [{"lhs": [i.lhs, list(i.sigma)], "rhs": [i.rhs, list(i.tau)]} for i in c.identities],
    }


def condition_from_json(raw: Any) -> MinorCondition:
    try:
        symbols = tuple((str(s["name"]), int(s["arity"])) for s in raw["symbols"])
        ids = tuple(
            Identity(str(i["lhs"][0]), tuple(i["lhs"][1]), str(i["rhs"][0]), tuple(i["rhs"][1])) for i in raw["identities"]
        )
        return MinorCondition(symbols, int(raw["vars"]), ids)
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ValidationError(f"minor condition: malformed field {e}") from None
    except BadInput as e:
        raise ValidationError(f"minor condition: {e}") from None


# ---------------------------------------------------------------------------
# pp-powers


def ppdef_to_json(d: PPPowerDef) -> dict:
    return {
        "n": d.n,
        "target_signature": signature_to_json(d.target_signature),
        "formulas": {
            name: {
                "exists": list(phi.exists),
                "atoms": [[r, *vs] for r, vs in phi.atoms],
                "eq": [list(p) for p in phi.eq],
            }
            for name, phi in d.formulas.items()
        },
    }


def ppdef_from_json(raw: Any) -> PPPowerDef:
    try:
        sig = Signature(tuple((str(s["name"]), int(s["arity"])) for s in raw["target_signature"]))
        formulas = {
            str(name): PPFormula.of(f.get("atoms", []), f.get("exists", []), f.get("eq", []))
            for name, f in raw["formulas"].items()
        }
        return PPPowerDef(int(raw["n"]), sig, formulas)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ValidationError(f"pp-power definition: malformed field {e}") from None


# ---------------------------------------------------------------------------
# PAS


def pas_to_json(I: PAS) -> dict:
    return {
        "vars": [_plain(v) for v in I.vars],
        "n": I.n,
        "k": I.k,
        "table": [
            {"U": [_plain(I.vars[v]) for v in key], "fs": [list(f) for f in sorted(I.table[key])]}
            for key in sorted(I.table)
        ],
    }


def pas_from_json(raw: Any) -> PAS:
    try:
        names = [tuple(v) if isinstance(v, list) else v for v in raw["vars"]]
        index = {v: i for i, v in enumerate(names)}
        if len(index) != len(names):
            raise ValidationError("PAS: duplicate variable names")
        n, k = int(raw["n"]), int(raw["k"])
        table = {}
        for entry in raw.get("table", []):
            u = [index[tuple(v) if isinstance(v, list) else v] for v in entry["U"]]
            order = sorted(range(len(u)), key=lambda i: u[i])
            key = tuple(u[i] for i in order)
            fs = frozenset(tuple(f[i] for i in order) for f in entry["fs"])
            if key in table:
                raise ValidationError(f"PAS: set {entry['U']} listed twice")
            table[key] = fs
        return PAS(tuple(names), n, k, table)
    except KeyError as e:
        raise ValidationError(f"PAS: unknown variable or missing field {e}") from None
    except (TypeError, ValueError, IndexError) as e:
        raise ValidationError(f"PAS: {e}") from None
    except BadInput as e:
        raise ValidationError(f"PAS: {e}") from None


def sequence_to_json(seq: PASSequence) -> list:
    return [pas_to_json(I) for I in seq]


def sequence_from_json(raw: Any) -> PASSequence:
    if not isinstance(raw, list):
        raise ValidationError("PAS sequence: expected a list")
    try:
        return PASSequence([pas_from_json(x) for x in raw])
    except BadInput as e:
        raise ValidationError(f"PAS sequence: {e}") from None


def schedule_to_json(s: AritySchedule) -> dict:
    return s.trace()


# ---------------------------------------------------------------------------
# weak minion homomorphisms


def xi_to_json(table: Mapping[FunctionTable, frozenset]) -> list:
    return [{"src": table_to_json(f), "imgs": [table_to_json(g) for g in sorted(table[f])]} for f in sorted(table)]


def xi_from_json(raw: Any) -> dict[FunctionTable, frozenset]:
    if not isinstance(raw, list):
        raise ValidationError("xi: expected a list of {src, imgs}")
    out = {}
    for entry in raw:
        try:
            f = table_from_json(entry["src"])
            imgs = frozenset(table_from_json(g) for g in entry["imgs"])
        except (KeyError, TypeError) as e:
            raise ValidationError(f"xi: malformed entry {e}") from None
        if f in out:
            raise ValidationError("xi: source table listed twice")
        out[f] = imgs
    return out
