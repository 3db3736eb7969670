"""End-to-end acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import io
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import (  # noqa: E402
    CMP_VALID,
    COMPOSITION,
    ENTRY,
    GOLDEN,
    META,
    OC_INVALID,
    OC_VALID,
    PA_PROGRAMS,
    PERSON,
    RULES_PAIRS,
    cmp_inputs,
    oc_inputs,
    pa_inputs,
    prints,
    trace_lines,
)
from crx import errors  # noqa: E402
from crx.cli import main  # noqa: E402
from crx.cmp import CLASSES, EQUIVALENT, IDENTITY, MAPPING, OPERATIONS, SEQUENCE, SIMPLE, compose, expand  # noqa: E402
from crx.kernel import WeavingPlan, check_provenance  # noqa: E402
from crx.lang import evaluate, parse_entry, parse_expr, parse_program, render  # noqa: E402
from crx.lang.interp import ADVICE_EXECUTION, METHOD_CALL, REALIZATION_EXECUTION  # noqa: E402
from crx.lang.syntax import ClassDecl, FieldDecl, MethodDecl  # noqa: E402
from crx.oc import (  # noqa: E402
    MemberIntro,
    SuperTypeDecl,
    check_duality,
    oc_plan,
    oc_program,
    weave_oc_nonreactive,
    weave_oc_reactive,
)
from crx.pa import (  # noqa: E402
    AdviceBinding,
    AdviceBody,
    AdviceTypeRule,
    CallPC,
    ExecutionPC,
    OrPC,
    Pattern,
    PointcutDef,
    pa_program,
    weave_pa,
)

DRIVER = parse_program("""
class Main {
    Person p;
    go() { this.p = new Person(); this.p.setName("Bob"); this.p.getName() }
}
""")

SEED = 20240601


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    assert code == 0, err.getvalue()
    return out.getvalue()


def golden(relpath):
    return (GOLDEN / relpath).read_text(encoding="utf-8")


def advised_corpus():
    runs = [(c / "base.mj", c / "aspect.asp") for c in COMPOSITION]
    runs.append((META / "base.mj", META / "aspect.asp"))
    runs += [(c / "base.mj", c / "inline.asp") for c in RULES_PAIRS]
    runs += [(c / "base.mj", c / "split.asp", c / "plan.rules") for c in RULES_PAIRS]
    return runs


def random_oc_case(rnd):
    """≤5 classes, ≤4 members each, ≤3 valid effects per class."""
    n = rnd.randint(1, 5)
    names = [f"C{i}" for i in range(n)]
    classes = []
    for i, name in enumerate(names):
        members = rnd.sample("abcdef", rnd.randint(0, 4))
        classes.append(ClassDecl(
            name, rnd.choice([None, *names[:i]]) if i else None,
            tuple(FieldDecl(m, "int") for m in members if m < "d"),
            tuple(MethodDecl(m, (), parse_expr(f'"{name}.{m}"')) for m in members if m >= "d")))
    effects, k = [], 0
    for i, cls in enumerate(classes):
        fresh = list("ghijk")
        rnd.shuffle(fresh)
        for _ in range(rnd.randint(0, 3)):
            k += 1
            if i and rnd.random() < 0.2 and not any(
                    isinstance(e, SuperTypeDecl) and e.target == cls.name for e in effects):
                effects.append(SuperTypeDecl(f"R.oc{k}", cls.name, rnd.choice(names[:i])))
            else:
                effects.append(MemberIntro(f"R.oc{k}", cls.name, FieldDecl(fresh.pop(), "String")))
    return classes, effects


# -- the criteria --------------------------------------------------------------------------------

def person_end_to_end():
    assert cli("expand", PERSON) == golden("cli/expand-person.txt")
    hyperspace, hm = cmp_inputs(PERSON)
    text = cli("weave", "--mech", "cmp", PERSON)
    woven = parse_program(text)
    value, trace = evaluate(list(woven) + DRIVER, parse_entry("Main.go"))
    assert value == "Bob"
    realizations = [e.text for e in trace if e.kind == REALIZATION_EXECUTION and ".getName." in e.text]
    assert realizations == ["PersonalView.getName.Person", "TaxView.getName.Person"]
    clauses = {(c.section, c.target): c for c in expand(hyperspace, hm)}
    get_name = clauses[(OPERATIONS, ("op", "getName", 0))]
    assert get_name.combinator == EQUIVALENT
    mapping = clauses[(MAPPING, ("impl", "getName", 0, "Person"))]
    assert mapping.combinator == SEQUENCE
    assert [s[0] for s in mapping.sources] == ["PersonalView", "TaxView"]
    for op in ("getDOB", "getSSN"):
        assert clauses[(OPERATIONS, ("op", op, 0))].combinator == IDENTITY
        assert clauses[(MAPPING, ("impl", op, 0, "Person"))].combinator == SIMPLE
    assert clauses[(CLASSES, ("field", "Person", "name"))].combinator == EQUIVALENT
    assert clauses[(CLASSES, ("field", "Person", "dob"))].combinator == IDENTITY
    assert clauses[(CLASSES, ("field", "Person", "ssn"))].combinator == IDENTITY


def nonreactivity_audit():
    for fixture in CMP_VALID:
        result = compose(*cmp_inputs(fixture))
        assert result.audit.X.reads == 0
        assert result.audit.serialize() == golden(f"audits/cmp-{fixture.name}.audit")
    for case in OC_VALID:
        program, plan = oc_inputs(case)
        nonreactive, reactive = weave_oc_nonreactive(program, plan), weave_oc_reactive(program, plan)
        assert nonreactive.audit.X.reads == 0 and reactive.audit.X.reads > 0
        assert nonreactive.audit.serialize() == golden(f"audits/oc-{case.name}-nonreactive.audit")
        assert reactive.audit.serialize() == golden(f"audits/oc-{case.name}-reactive.audit")
    for files in advised_corpus():
        result = weave_pa(*pa_inputs(*files))
        assert result.outcome.advised >= 1 and result.audit.X.reads > 0


def pa_identity_and_composition():
    assert len(PA_PROGRAMS) >= 10 and len(COMPOSITION) >= 5
    entry = parse_entry(ENTRY)
    everything = OrPC(CallPC(Pattern("*", "*")), ExecutionPC(Pattern("*", "*")))
    around = WeavingPlan((PointcutDef("all", everything), AdviceBinding("Pass.1", "all", 1),
                          AdviceTypeRule("Pass.1", "around")))
    for path in PA_PROGRAMS:
        classes = parse_program(path.read_text())
        plain_value, plain_trace = evaluate(classes, entry)
        empty = weave_pa(pa_program(classes), WeavingPlan(), entry).outcome
        assert trace_lines(empty.trace) == trace_lines(plain_trace)
        assert render(empty.value) == render(plain_value)
        passed = weave_pa(pa_program(classes, [AdviceBody("Pass.1", parse_expr("proceed(jpArgs)"))]),
                          around, entry).outcome
        assert render(passed.value) == render(plain_value)
        assert prints(passed.trace) == prints(plain_trace)
    for case in COMPOSITION:
        outcome = weave_pa(*pa_inputs(case / "base.mj", case / "aspect.asp")).outcome
        oracle_value, oracle_trace = evaluate(parse_program((case / "oracle.mj").read_text()), entry)
        assert prints(outcome.trace) == prints(oracle_trace)
        assert render(outcome.value) == render(oracle_value)


def advising_advice():
    outcome = weave_pa(*pa_inputs(META / "base.mj", META / "aspect.asp")).outcome
    events = [(e.kind, e.text) for e in outcome.trace]
    base_runs = [i for i, ev in enumerate(events) if ev == (ADVICE_EXECUTION, "Logging.1")]
    metas = [i for i, ev in enumerate(events) if ev == ("print", "META")]
    assert [i + 1 for i in metas] == base_runs
    _, oracle = evaluate(parse_program((META / "base.mj").read_text()), parse_entry(ENTRY))
    assert len(base_runs) == sum(1 for e in oracle if (e.kind, e.text) == (METHOD_CALL, "Account.deposit"))


def join_point_ordering():
    advised = 0
    for files in advised_corpus():
        outcome = weave_pa(*pa_inputs(*files)).outcome
        assert len(outcome.ordering) == outcome.advised
        for record in outcome.ordering:
            assert record.first_event_t is not None and record.desc_t < record.first_event_t
        advised += outcome.advised
    assert advised > 0


def oc_duality():
    names = {p.name for p in OC_VALID}
    assert {"point_observers", "idempotent_parent"} <= names
    for case in OC_VALID:
        report = check_duality(*oc_inputs(case))
        assert report, report.detail
    rnd = random.Random(SEED)
    for _ in range(100):
        classes, effects = random_oc_case(rnd)
        report = check_duality(oc_program(classes, effects), oc_plan(effects))
        assert report, report.detail
    for case in OC_INVALID:
        expected = getattr(errors, (case / "expected_error").read_text().strip())
        program, plan = oc_inputs(case)
        for weave in (weave_oc_nonreactive, weave_oc_reactive):
            with pytest.raises(expected):
                weave(program, plan)


def provenance():
    for fixture in CMP_VALID:
        result = compose(*cmp_inputs(fixture))
        assert result.elements and check_provenance(result.elements) == []
    for case in OC_VALID:
        program, plan = oc_inputs(case)
        for weave in (weave_oc_nonreactive, weave_oc_reactive):
            assert check_provenance(weave(program, plan).elements) == []


def syntax_independence():
    assert len(RULES_PAIRS) >= 3
    for case in RULES_PAIRS:
        inline_p, inline_plan, entry = pa_inputs(case / "base.mj", case / "inline.asp")
        split_p, split_plan, _ = pa_inputs(case / "base.mj", case / "split.asp", case / "plan.rules")
        assert inline_plan == split_plan
        inline = weave_pa(inline_p, inline_plan, entry).outcome
        split = weave_pa(split_p, split_plan, entry).outcome
        assert inline.advised > 0
        assert trace_lines(inline.trace) == trace_lines(split.trace)


CRITERIA = [
    (1, "Person end-to-end", person_end_to_end),
    (2, "nonreactivity audit", nonreactivity_audit),
    (3, "PA identity and composition", pa_identity_and_composition),
    (4, "advising advice execution", advising_advice),
    (5, "join-point ordering", join_point_ordering),
    (6, "OC duality", oc_duality),
    (7, "provenance", provenance),
    (8, "syntax independence", syntax_independence),
]


def run_criterion(number, name, check) -> tuple[bool, str]:
    try:
        check()
    except Exception as exc:  # noqa: BLE001, report every failure kind
        detail = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        return False, f"criterion {number}: FAIL {name}: {detail}"
    return True, f"criterion {number}: PASS {name}"


@pytest.mark.parametrize("number, name, check", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(number, name, check, capsys):
    ok, line = run_criterion(number, name, check)
    with capsys.disabled():
        print(f"\n{line}")
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
