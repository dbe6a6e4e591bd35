"""Command-line front end.

Every verb writes one canonical JSON report (sorted keys, no timing data)
to stdout or ``--output``. Exit codes: 0 found/true, 1 not found/false,
2 error, 3 deadline exceeded.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import time

from . import serialize as ser
from .config import Deadline, load_caps
from .constructions import (
    LITERAL,
    STANDARD,
    free_structure,
    power_structure,
    pp_power_apply,
    pp_reduce_instance,
    relaxation_reduce,
    width1_check,
)
from .core import Template, enumerate_homomorphisms, find_homomorphism, is_homomorphism, named_structure
from .errors import BadParam, DeadlineExceeded, PCSPError, ValidationError
from .minions import (
    MinionSlice,
    derive_from_area_rare,
    derive_from_cyclic,
    enumerate_polymorphisms,
    is_cyclic,
    kw_extract,
    named_condition,
    satisfy_minor_condition,
)
from .pas import find_m_solution, is_consistent, pas_arities, pas_value
from .weakreduce import (
    WeakMinionHom,
    canonical_free_hom,
    check_weak_minion_hom,
    dr_arity_schedule,
    dr_reduce_instance,
    extract,
    is_partial_homomorphism,
)

EXIT_TRUE, EXIT_FALSE, EXIT_ERROR, EXIT_DEADLINE = 0, 1, 2, 3

_NAMED = re.compile(r"^(k|h|c)(\d+)$|^(horn|one_in_three|1in3|k3_star)$", re.I)


class Report(dict):
    """Verdict plus payload; ``exit`` picks the process status."""

    def __init__(self, verb: str, ok: bool, verdict: str, **payload):
        super().__init__(verb=verb, verdict=verdict, **payload)
        self.exit = EXIT_TRUE if ok else EXIT_FALSE
        self.text: str | None = None  # plain-text stdout replacing the JSON


# ---------------------------------------------------------------------------
# input helpers


def read_structure(spec: str):
    """A JSON file, or a built-in name such as ``K2``, ``H3``, ``horn``."""
    if not os.path.exists(spec):
        m = _NAMED.match(spec)
        if m:
            if m.group(1):
                return named_structure(m.group(1), int(m.group(2)))
            return named_structure(m.group(3))
    return ser.structure_from_json(ser.load(spec), spec)


def read_template(pair) -> Template:
    a, b = (read_structure(p) for p in pair)
    if a.signature != b.signature:
        raise ValidationError(f"template halves {pair[0]} and {pair[1]} have different signatures")
    return Template(a, b)


def int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _slice(args, templ: Template | None, bound: int) -> MinionSlice:
    if templ is None:
        return MinionSlice.projections(args.projections, bound)
    return MinionSlice(templ, bound, deadline=args.deadline_obj, caps=args.caps_obj)


# ---------------------------------------------------------------------------
# verbs


def cmd_named(args) -> Report:
    return Report("named", True, "built", structure=ser.structure_to_json(named_structure(args.name, args.param)))


def cmd_hom(args) -> Report:
    a, b = read_structure(args.source), read_structure(args.target)
    if args.verify:
        hmap = ser.hom_map_from_json(ser.load(args.verify))
        ok = len(hmap) == a.size and all(0 <= x < b.size for x in hmap) and is_homomorphism(hmap, a, b)
        return Report("hom", ok, "valid" if ok else "invalid", map=list(hmap))
    h = find_homomorphism(a, b, args.deadline_obj)
    if h is None:
        return Report("hom", False, "not-found", witness=None)
    return Report("hom", True, "found", witness=ser.hom_to_json(h))


def cmd_enumerate(args) -> Report:
    a, b = read_structure(args.source), read_structure(args.target)
    homs = enumerate_homomorphisms(a, b, limit=args.limit, deadline=args.deadline_obj)
    return Report("enumerate", bool(homs), "found" if homs else "not-found", count=len(homs), maps=[list(h.map) for h in homs])


def cmd_pol(args) -> Report:
    t = read_template(args.template)
    fs = enumerate_polymorphisms(t, args.arity, limit=args.limit, deadline=args.deadline_obj, caps=args.caps_obj)
    return Report("pol", bool(fs), "found" if fs else "not-found", count=len(fs), tables=[ser.table_to_json(f) for f in fs])


def _condition(args):
    if os.path.exists(args.condition):
        return ser.condition_from_json(ser.load(args.condition))
    return named_condition(args.condition, args.arity)


def cmd_minor_check(args) -> Report:
    t = read_template(args.template)
    c = _condition(args)
    sol = satisfy_minor_condition(t, c, args.deadline_obj, args.caps_obj)
    if sol is None:
        return Report("minor-check", False, "unsatisfiable", condition=ser.condition_to_json(c), witness=None)
    return Report(
        "minor-check", True, "satisfiable", condition=ser.condition_to_json(c),
        witness={name: ser.table_to_json(f) for name, f in sol.items()},
    )


def cmd_derive(args) -> Report:
    if args.table:
        f = ser.table_from_json(ser.load(args.table))
    else:
        if not args.template or not args.arity:
            raise BadParam("derive needs --table, or --template with --arity")
        t = read_template(args.template)
        sol = satisfy_minor_condition(t, named_condition("cyclic", args.arity), args.deadline_obj, args.caps_obj)
        if sol is None:
            return Report("derive", False, "no-cyclic-polymorphism", steps=None)
        f = sol["f"]
    steps = {"cyclic": ser.table_to_json(f)} if is_cyclic(f) else {}
    area = derive_from_cyclic(f) if steps else f
    steps["area_rare"] = ser.table_to_json(area)
    for target in args.to:
        steps[target] = ser.table_to_json(derive_from_area_rare(area, target))
    return Report("derive", True, "derived", steps=steps)


def cmd_width1(args) -> Report:
    t = read_template(args.template)
    h = width1_check(t, args.semantics, args.deadline_obj, args.caps_obj)
    return Report("width1", h is not None, "width-1" if h else "not-width-1", semantics=args.semantics,
                  witness=None if h is None else ser.hom_to_json(h))


def cmd_power_structure(args) -> Report:
    s = read_structure(args.structure)
    return Report("power-structure", True, "built", semantics=args.semantics,
                  structure=ser.structure_to_json(power_structure(s, args.semantics, args.caps_obj)))


def cmd_free(args) -> Report:
    templ = read_template(args.template) if args.template else None
    gen = read_structure(args.generator)
    sl = _slice(args, templ, max(gen.size, 1))
    return Report("free", True, "built", structure=ser.structure_to_json(free_structure(sl, gen, args.caps_obj)))


def cmd_pp_apply(args) -> Report:
    t = read_template(args.template)
    d = ser.ppdef_from_json(ser.load(args.definition))
    out = pp_power_apply(t, d, args.caps_obj)
    return Report("pp-apply", True, "built", A=ser.structure_to_json(out.A), B=ser.structure_to_json(out.B))


def cmd_pp_reduce(args) -> Report:
    d = ser.ppdef_from_json(ser.load(args.definition))
    inst = read_structure(args.instance)
    base = read_structure(args.base)
    red = pp_reduce_instance(d, inst, base.signature)
    return Report("pp-reduce", True, "built", instance=ser.structure_to_json(red.structure))


def cmd_relax_check(args) -> Report:
    outer, inner = read_template(args.outer), read_template(args.inner)
    rel = relaxation_reduce(outer, inner, args.deadline_obj)
    if rel is None:
        return Report("relax-check", False, "not-a-relaxation", witness=None)
    return Report("relax-check", True, "relaxation",
                  witness={"c_to_a": ser.hom_to_json(rel.c_to_a), "b_to_d": ser.hom_to_json(rel.b_to_d)})


def _schedule_report(verb, sched, args) -> Report:
    rep = Report(verb, True, "computed", schedule=ser.schedule_to_json(sched))
    if not args.json:
        rep.text = " ".join(str(k) for k in sched.arities)
    return rep


def cmd_pas_arities(args) -> Report:
    return _schedule_report("pas-arities", pas_arities(args.n, args.m, args.values), args)


def cmd_dr_schedule(args) -> Report:
    return _schedule_report("dr-schedule", dr_arity_schedule(read_template(args.template), args.d, args.r), args)


def cmd_pas_solve(args) -> Report:
    I = ser.pas_from_json(ser.load(args.pas))
    f = find_m_solution(I, args.m, args.deadline_obj)
    return Report("pas-solve", f is not None, "found" if f is not None else "not-found", m=args.m,
                  solution=None if f is None else list(f))


def cmd_pas_consistent(args) -> Report:
    seq = ser.sequence_from_json(ser.load(args.sequence))
    ok = is_consistent(seq, args.caps_obj)
    return Report("pas-consistent", ok, "consistent" if ok else "inconsistent", arities=list(seq.arities))


def _dr_inputs(args):
    t = read_template(args.template)
    inst = read_structure(args.instance)
    schedule = args.schedule if args.schedule else dr_arity_schedule(t, args.d, args.r).arities
    return t, inst, schedule


def _bundle_json(b) -> dict:
    return {
        "arities": list(b.arities),
        "gamma": ser.structure_to_json(b.gamma),
        "gadget_size": b.s_size,
        "homs": [{"U": [b.instance.label(x) for x in u], "D": [list(f) for f in b.homs[u]]} for u in b.sets],
    }


def cmd_dr_reduce(args) -> Report:
    t, inst, schedule = _dr_inputs(args)
    b = dr_reduce_instance(inst, t, schedule, args.deadline_obj, args.caps_obj)
    return Report("dr-reduce", True, "built", bundle=_bundle_json(b))


def cmd_dr_extract(args) -> Report:
    t, inst, schedule = _dr_inputs(args)
    b = dr_reduce_instance(inst, t, schedule, args.deadline_obj, args.caps_obj)
    # s(U) has arity |S|, so the slice must reach it
    sl = MinionSlice(t, max(b.s_size, args.bound), deadline=args.deadline_obj, caps=args.caps_obj)
    if args.xi:
        xi = WeakMinionHom(args.d, args.r, sl, t, ser.xi_from_json(ser.load(args.xi)))
    else:
        xi = WeakMinionHom.identity(sl)
    if args.hom:
        s = ser.hom_map_from_json(ser.load(args.hom))
    else:
        h = find_homomorphism(inst, t.A, args.deadline_obj)
        if h is None:
            return Report("dr-extract", False, "instance-not-satisfiable", sequence=None)
        s = canonical_free_hom(h, b, xi.source, args.caps_obj).map
    ex = extract(s, xi, b)
    seq = ex.sequence
    consistent = is_consistent(seq, args.caps_obj)
    sol = find_m_solution(seq[0], args.m, args.deadline_obj)
    full = sol is not None and is_homomorphism(sol, inst, t.B)
    partial = all(
        is_partial_homomorphism(f, u, inst, t.B) for I in seq for u, fs in I.table.items() for f in fs
    )
    ok = consistent and full
    return Report(
        "dr-extract", ok, "solved" if ok else "unsolved",
        sequence=ser.sequence_to_json(seq), values=[pas_value(I) for I in seq], consistent=consistent,
        partial_homomorphisms=partial, links_checked=ex.links_checked, m=args.m,
        solution=None if sol is None else list(sol), solution_is_homomorphism=full,
    )


def cmd_weak_check(args) -> Report:
    t = read_template(args.template)
    sl = MinionSlice(t, args.bound, deadline=args.deadline_obj, caps=args.caps_obj)
    if args.xi:
        xi = WeakMinionHom(args.d, args.r, sl, t, ser.xi_from_json(ser.load(args.xi)))
    else:
        xi = WeakMinionHom.identity(sl)
    v = check_weak_minion_hom(xi, args.r, args.bound, args.deadline_obj, args.caps_obj)
    chain = None
    if v.chain is not None:
        chain = {"tables": [ser.table_to_json(f) for f in v.chain.tables], "maps": [list(p.map) for p in v.chain.maps]}
    return Report("weak-check", v.ok, v.scope if v.ok else "violated", condition=v.condition, detail=v.detail,
                  chain=chain, chains_checked=v.chains_checked, bound=v.bound)


def cmd_kw(args) -> Report:
    t = read_template(args.template)
    family = ser.load(args.family)
    if not isinstance(family, list):
        raise ValidationError("family: expected a list of label lists")
    family = [[tuple(x) if isinstance(x, list) else x for x in C] for C in family]
    hmap = ser.hom_map_from_json(ser.load(args.hom))
    out = kw_extract(family, t, hmap, args.p, assume_no_cyclic=args.assume_no_cyclic, deadline=args.deadline_obj)
    choice = [{"set": list(C), "chosen": sorted(out[C])} for C in sorted(out)]
    return Report("kw", True, "extracted", choice=choice)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--deadline", type=float, default=None, help="seconds per verb (default from caps, 60)")
    common.add_argument("--caps", default=None, help="JSON caps file (else $PCSP_CAPS)")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="print elapsed time to stderr")

    p = argparse.ArgumentParser(prog="pcsplab", description="Promise CSP toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    sp = verb("named", cmd_named, "print a built-in structure")
    sp.add_argument("--name", required=True)
    sp.add_argument("--param", type=int)

    for name, fn, h in (("hom", cmd_hom, "find a homomorphism"), ("enumerate", cmd_enumerate, "list homomorphisms")):
        sp = verb(name, fn, h)
        sp.add_argument("--from", dest="source", required=True)
        sp.add_argument("--to", dest="target", required=True)
        if name == "hom":
            sp.add_argument("--verify", help="check a map or report instead of searching")
        else:
            sp.add_argument("--limit", type=int)

    sp = verb("pol", cmd_pol, "enumerate polymorphisms of one arity")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--arity", type=int, required=True)
    sp.add_argument("--limit", type=int)

    sp = verb("minor-check", cmd_minor_check, "decide a minor condition in Pol(A,B)")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--condition", required=True, help="cyclic, area_rare, siggers, olsak or a condition file")
    sp.add_argument("--arity", type=int, help="arity for cyclic")

    sp = verb("derive", cmd_derive, "cyclic -> area-rare -> siggers/olsak")
    sp.add_argument("--table")
    sp.add_argument("--template", nargs=2)
    sp.add_argument("--arity", type=int)
    sp.add_argument("--to", nargs="*", default=["siggers", "olsak"], choices=["siggers", "olsak"])

    sp = verb("width1", cmd_width1, "check U(A) -> B")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--semantics", choices=[STANDARD, LITERAL], default=STANDARD)

    sp = verb("power-structure", cmd_power_structure, "build U(A)")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--semantics", choices=[STANDARD, LITERAL], default=STANDARD)

    sp = verb("free", cmd_free, "free structure of Pol(A,B) or of the projections")
    sp.add_argument("--template", nargs=2)
    sp.add_argument("--projections", type=int, default=2, help="domain size of the projection minion")
    sp.add_argument("--generator", required=True)

    sp = verb("pp-apply", cmd_pp_apply, "evaluate a pp-power")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--def", dest="definition", required=True)

    sp = verb("pp-reduce", cmd_pp_reduce, "translate an instance through a pp-power")
    sp.add_argument("--def", dest="definition", required=True)
    sp.add_argument("--instance", required=True)
    sp.add_argument("--base", required=True, help="any structure over the base signature")

    sp = verb("relax-check", cmd_relax_check, "is (C,D) a homomorphic relaxation of (A,B)")
    sp.add_argument("--outer", nargs=2, required=True)
    sp.add_argument("--inner", nargs=2, required=True)

    sp = verb("pas-arities", cmd_pas_arities, "arity schedule for PAS sequences")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--values", type=int_list, required=True)
    sp.add_argument("--json", action="store_true", help="print the full trace report")

    sp = verb("dr-schedule", cmd_dr_schedule, "arity schedule of the gadget reduction")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--json", action="store_true", help="print the full trace report")

    sp = verb("pas-solve", cmd_pas_solve, "find an m-solution")
    sp.add_argument("--pas", required=True)
    sp.add_argument("--m", type=int, required=True)

    sp = verb("pas-consistent", cmd_pas_consistent, "check a PAS sequence for consistency")
    sp.add_argument("--sequence", required=True)

    for name, fn, h in (
        ("dr-reduce", cmd_dr_reduce, "build the gadget instance"),
        ("dr-extract", cmd_dr_extract, "extract PASes and solve"),
    ):
        sp = verb(name, fn, h)
        sp.add_argument("--template", nargs=2, required=True)
        sp.add_argument("--instance", required=True)
        sp.add_argument("--schedule", type=int_list)
        sp.add_argument("--d", type=int, default=1)
        sp.add_argument("--r", type=int, default=1)
        if name == "dr-extract":
            sp.add_argument("--xi", help="xi file; default is the identity on Pol(A,B)")
            sp.add_argument("--hom", help="map from Gamma into the free structure; default is canonical")
            sp.add_argument("--bound", type=int, default=1)
            sp.add_argument("--m", type=int, default=2)

    sp = verb("weak-check", cmd_weak_check, "check a (d,r)-minion homomorphism on a fragment")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--xi")
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--bound", type=int, default=3)

    sp = verb("kw", cmd_kw, "choose subsets from a homomorphism off a power family")
    sp.add_argument("--template", nargs=2, required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--hom", required=True)
    sp.add_argument("--p", type=int)
    sp.add_argument("--assume-no-cyclic", action="store_true")
    return p


def emit(report: Report, path: str | None) -> bytes:
    """Write the canonical JSON report to ``path`` (or stdout); verbs with
    a plain-text form print that to stdout instead."""
    data = (ser.dumps(dict(report)) + "\n").encode("utf-8")
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    if report.text is not None:
        sys.stdout.write(report.text + "\n")
    elif not path:
        sys.stdout.write(data.decode("utf-8"))
    return data


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_TRUE if e.code == 0 else EXIT_ERROR
    start = time.monotonic()
    try:
        args.caps_obj = load_caps(args.caps)
        args.deadline_obj = Deadline(args.deadline if args.deadline is not None else args.caps_obj.deadline)
        report = args.fn(args)
        emit(report, args.output)
        code = report.exit
    except DeadlineExceeded as e:
        print(f"deadline exceeded: {e}", file=sys.stderr)
        code = EXIT_DEADLINE
    except PCSPError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        code = EXIT_ERROR
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_ERROR
    if args.timing:
        print(f"elapsed {time.monotonic() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
