"""Command-line surface: ``crx expand | weave | run | audit | check-duality``.

Exit codes: 0 success, 1 domain error (one ``error: ...`` line on stderr),
2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from crx import __version__
from crx.cmp import compose, expand, format_clauses
from crx.errors import CRXError, MissingInputError
from crx.frontend import InputBundle, read_hyperspace, read_inputs
from crx.kernel import DEFAULT_STEP_BUDGET
from crx.lang.interp import PRINT, evaluate, render
from crx.lang.parser import parse_entry
from crx.lang.printer import pretty_program
from crx.oc import NONREACTIVE, REACTIVE, check_duality, weave_oc
from crx.pa import weave_pa


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crx", description="Weave MinJ programs with aspect mechanisms.")
    parser.add_argument("--version", action="version", version=f"crx {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mechs, default=None):
        p.add_argument("files", nargs="+", type=Path, help="input files or directories")
        p.add_argument("--mech", choices=mechs, default=default, required=default is None)
        p.add_argument("--variant", choices=(NONREACTIVE, REACTIVE), default=NONREACTIVE)
        p.add_argument("--step-budget", type=_positive, default=DEFAULT_STEP_BUDGET)

    p = sub.add_parser("expand", help="print the composition clauses of a hypermodule")
    p.add_argument("files", nargs="+", type=Path)

    p = sub.add_parser("weave", help="print the composed program")
    common(p, ("cmp", "oc"))
    p.add_argument("--check-duality", action="store_true",
                   help="oc: run both variants on each program (directory) and compare")
    p.add_argument("--audit", action="store_true", help="also print the register audit")

    p = sub.add_parser("run", help="run an entry point (pa weaves while running)")
    common(p, ("pa", "cmp", "oc"), default="pa")
    p.add_argument("--entry", required=True, help="entry point, e.g. Main.go")
    p.add_argument("--trace", action="store_true", help="print the timestamped event trace")
    p.add_argument("--audit", action="store_true", help="also print the register audit")

    p = sub.add_parser("audit", help="print the register audit of one weaving run")
    common(p, ("cmp", "pa", "oc"))
    p.add_argument("--entry", help="pa: entry point")

    p = sub.add_parser("check-duality", help="compare both open-classes variants")
    p.add_argument("files", nargs="+", type=Path, help="each directory is one program")
    return parser


# -- commands ---------------------------------------------------------------------------

def _bundle(args, mechanism: str, files=None) -> InputBundle:
    return InputBundle.from_paths(
        mechanism, files if files is not None else args.files,
        entry=getattr(args, "entry", None),
        trace=getattr(args, "trace", False),
        variant=getattr(args, "variant", NONREACTIVE),
        step_budget=getattr(args, "step_budget", DEFAULT_STEP_BUDGET),
    )


def _weave(args, mechanism: str):
    """One weaving run for cmp or oc; returns the kernel's WeaveResult."""
    bundle = _bundle(args, mechanism)
    if mechanism == "cmp":
        hyperspace, hm = read_hyperspace(bundle)
        return compose(hyperspace, hm, step_budget=bundle.step_budget)
    program, plan = read_inputs(bundle)
    return weave_oc(program, plan, bundle.variant, step_budget=bundle.step_budget)


def cmd_expand(args, out) -> None:
    hyperspace, hm = read_hyperspace(_bundle(args, "cmp"))
    out.write(format_clauses(hm.name, expand(hyperspace, hm)))


def _programs(files) -> list[list[Path]]:
    """Each directory is one program; loose files together form one more.

    A directory holding only subdirectories stands for each of them.
    """
    dirs = []
    for f in (f for f in files if f.is_dir()):
        children = sorted(f.iterdir())
        if children and all(c.is_dir() for c in children):
            dirs.extend(children)
        else:
            dirs.append(f)
    loose = [f for f in files if not f.is_dir()]
    groups = [[d] for d in sorted(dirs)]
    if loose:
        groups.append(loose)
    return groups


def cmd_check_duality(args, out) -> None:
    groups = _programs(args.files)
    failures = []
    for group in groups:
        program, plan = read_inputs(InputBundle.from_paths("oc", group))
        report = check_duality(program, plan)
        if not report:
            failures.append(f"{', '.join(map(str, group))}: {report.detail}")
    if failures:
        raise CRXError("duality violated: " + " | ".join(failures))
    out.write(f"DUALITY OK ({len(groups)} programs)\n")


def cmd_weave(args, out) -> None:
    if args.check_duality:
        if args.mech != "oc":
            raise MissingInputError("--check-duality applies to --mech oc only")
        cmd_check_duality(args, out)
        return
    result = _weave(args, args.mech)
    out.write(pretty_program(result.program.classes))
    if args.audit:
        out.write(result.audit.serialize())


def _run_pa(args):
    bundle = _bundle(args, "pa")
    program, plan = read_inputs(bundle)
    result = weave_pa(program, plan, parse_entry(bundle.entry), step_budget=bundle.step_budget)
    return result.outcome.value, result.outcome.trace, result.audit


def cmd_run(args, out) -> None:
    if args.mech == "pa":
        value, trace, audit = _run_pa(args)
    else:
        woven = _weave(args, args.mech)
        value, trace = evaluate(list(woven.program.classes), parse_entry(args.entry),
                                step_budget=args.step_budget)
        audit = woven.audit
    for event in trace:
        if args.trace:
            out.write(f"{event}\n")
        elif event.kind == PRINT:
            out.write(f"{event.text}\n")
    out.write(f"=> {render(value)}\n")
    if args.audit:
        out.write(audit.serialize())


def cmd_audit(args, out) -> None:
    if args.mech == "pa":
        if not args.entry:
            raise MissingInputError("pa needs an entry point (--entry C.m)")
        audit = _run_pa(args)[2]
    else:
        audit = _weave(args, args.mech).audit
    out.write(audit.serialize())


COMMANDS = {
    "expand": cmd_expand,
    "weave": cmd_weave,
    "run": cmd_run,
    "audit": cmd_audit,
    "check-duality": cmd_check_duality,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args, out)
    except CRXError as exc:
        err.write(f"error: {' '.join(str(exc).split())}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
