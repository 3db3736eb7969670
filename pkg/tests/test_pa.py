import fnmatch
import inspect

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import (
    COMPOSITION,
    ENTRY,
    META,
    PA_PROGRAMS,
    RULES_PAIRS,
    check_golden,
    ids,
    pa_inputs,
    prints,
    trace_lines,
)
import crx.lang.interp as interp_module
from crx.errors import ProceedOutsideAround, RuntimeTypeError, StepBudgetExceeded, UnknownAdviceError
from crx.kernel import WeavingPlan
from crx.lang import evaluate, parse_entry, parse_expr, parse_program, render
from crx.lang.interp import (
    ADVICE_EXECUTION,
    CONSTRUCTOR_EXECUTION,
    JOIN_POINT_KINDS,
    METHOD_CALL,
    METHOD_EXECUTION,
    Interpreter,
    JoinPointDescription,
)
from crx.pa import (
    AdviceBinding,
    AdviceBody,
    AdviceExecutionPC,
    AdviceTypeRule,
    AndPC,
    CallPC,
    ExecutionPC,
    NotPC,
    OrPC,
    Pattern,
    PointcutDef,
    check_plan,
    match,
    pa_program,
    run_pa,
    weave_pa,
    wildcard_match,
)


def plan_of(*advice):
    """advice: (advice id, type, pointcut); one pointcut definition per advice."""
    rules = []
    for order, (advice_id, advice_type, pc) in enumerate(advice, 1):
        rules += [PointcutDef(f"pc{order}", pc), AdviceBinding(advice_id, f"pc{order}", order),
                  AdviceTypeRule(advice_id, advice_type)]
    return WeavingPlan(tuple(rules))


def desc(kind, type_name, member, arity=0):
    return JoinPointDescription(kind, type_name, member, arity)


def base(path):
    return parse_program(path.read_text())


# -- pointcuts and MATCH ----------------------------------------------------------------

def corpus_signatures():
    sigs = set()
    for path in PA_PROGRAMS:
        for cls in base(path):
            sigs |= {(cls.name, m.name) for m in cls.methods}
    return sorted(sigs)


PATTERNS = ["*", "get*", "set*", "*X", "s*t*", "go", "*e*", "Point", "P*", "*a*e*", "**"]


@pytest.mark.parametrize("pattern", PATTERNS)
def test_wildcard_expansion_over_corpus_signatures(pattern):
    names = {n for pair in corpus_signatures() for n in pair}
    expanded = {n for n in names if fnmatch.fnmatchcase(n, pattern)}
    assert {n for n in names if wildcard_match(pattern, n)} == expanded


def test_set_pattern_matches_setx_call():
    pc = CallPC(Pattern("Point", "set*"))
    assert pc.matches(desc(METHOD_CALL, "Point", "setX", 1))
    assert not pc.matches(desc(METHOD_CALL, "Point", "getX"))
    assert not pc.matches(desc(METHOD_EXECUTION, "Point", "setX", 1))


def test_empty_plan_matches_nothing():
    for kind in JOIN_POINT_KINDS:
        assert match(desc(kind, "A", "m"), WeavingPlan()) == []


DESIGNATORS = {
    "call": CallPC(Pattern("*", "*")),
    "execution": ExecutionPC(Pattern("*", "*")),
    "execution-new": ExecutionPC(Pattern("*", "new")),
    "adviceexecution": AdviceExecutionPC(),
}
DESCS = {
    METHOD_CALL: desc(METHOD_CALL, "A", "m"),
    METHOD_EXECUTION: desc(METHOD_EXECUTION, "A", "m"),
    CONSTRUCTOR_EXECUTION: desc(CONSTRUCTOR_EXECUTION, "A", "new"),
    ADVICE_EXECUTION: desc(ADVICE_EXECUTION, "Aspect", "1"),
}
# Hand-written truth table: which designator selects which kind of join point.
TRUTH = {
    ("call", METHOD_CALL): True,
    ("execution", METHOD_EXECUTION): True,
    ("execution-new", CONSTRUCTOR_EXECUTION): True,
    ("adviceexecution", ADVICE_EXECUTION): True,
}


@pytest.mark.parametrize("designator", sorted(DESIGNATORS))
@pytest.mark.parametrize("kind", sorted(DESCS))
def test_kind_truth_table(designator, kind):
    assert DESIGNATORS[designator].matches(DESCS[kind]) == TRUTH.get((designator, kind), False)


def test_adviceexecution_pattern_narrows_by_aspect():
    pc = AdviceExecutionPC(Pattern("Log*", "*"))
    assert pc.matches(desc(ADVICE_EXECUTION, "Logging", "1"))
    assert not pc.matches(desc(ADVICE_EXECUTION, "Meta", "1"))


def test_match_orders_by_declaration():
    pc = CallPC(Pattern("*", "*"))
    plan = WeavingPlan((
        PointcutDef("p", pc),
        AdviceBinding("A.2", "p", 2), AdviceTypeRule("A.2", "after"),
        AdviceBinding("A.1", "p", 1), AdviceTypeRule("A.1", "before"),
    ))
    got = match(desc(METHOD_CALL, "T", "m"), plan)
    assert [(a.advice_id, a.advice_type) for a in got] == [("A.1", "before"), ("A.2", "after")]


type_names = st.sampled_from(["Point", "Person", "Main", "Shape", "A"])
member_names = st.sampled_from(["getX", "setX", "go", "new", "name", "1", "describe"])
segments = st.sampled_from(["*", "get*", "set*", "*e*", "Point", "go", "P*", "*n", "1"])
patterns = st.builds(Pattern, segments, segments)
leaf_pcs = st.one_of(
    st.builds(CallPC, patterns),
    st.builds(ExecutionPC, patterns),
    st.builds(AdviceExecutionPC, st.none() | patterns),
)
pointcuts = st.recursive(leaf_pcs, lambda inner: st.one_of(
    st.builds(AndPC, inner, inner), st.builds(OrPC, inner, inner), st.builds(NotPC, inner)), max_leaves=6)
descs = st.builds(desc, st.sampled_from(JOIN_POINT_KINDS), type_names, member_names, st.integers(0, 2))


def oracle(pc, d):
    """Independent evaluation of a pointcut, with fnmatch for the patterns."""
    def pat(p, type_name, member):
        return fnmatch.fnmatchcase(type_name, p.type_pattern) and fnmatch.fnmatchcase(member, p.name_pattern)
    if isinstance(pc, AndPC):
        return oracle(pc.left, d) and oracle(pc.right, d)
    if isinstance(pc, OrPC):
        return oracle(pc.left, d) or oracle(pc.right, d)
    if isinstance(pc, NotPC):
        return not oracle(pc.inner, d)
    if isinstance(pc, CallPC):
        return d.kind == METHOD_CALL and pat(pc.pattern, d.type_name, d.member_name)
    if isinstance(pc, ExecutionPC):
        if d.kind == CONSTRUCTOR_EXECUTION:
            return pc.pattern.name_pattern == "new" and fnmatch.fnmatchcase(d.type_name, pc.pattern.type_pattern)
        return d.kind == METHOD_EXECUTION and pat(pc.pattern, d.type_name, d.member_name)
    return d.kind == ADVICE_EXECUTION and (pc.pattern is None or pat(pc.pattern, d.type_name, d.member_name))


@settings(max_examples=300, deadline=None)
@given(st.lists(pointcuts, min_size=1, max_size=4), descs)
def test_match_is_pure_and_agrees_with_oracle(pcs, d):
    plan = plan_of(*((f"A.{i}", "before", pc) for i, pc in enumerate(pcs, 1)))
    first = [(a.advice_id, a.advice_type, a.order) for a in match(d, plan)]
    second = [(a.advice_id, a.advice_type, a.order) for a in match(d, plan)]
    assert first == second
    expected = [(f"A.{i}", "before", i) for i, pc in enumerate(pcs, 1) if oracle(pc, d)]
    assert first == expected


# -- plan checks -----------------------------------------------------------------------------

def test_proceed_outside_around_is_rejected_at_plan_load():
    program = pa_program([], [AdviceBody("A.1", parse_expr("proceed()"))])
    with pytest.raises(ProceedOutsideAround):
        check_plan(program, plan_of(("A.1", "before", CallPC(Pattern("*", "*")))))


@pytest.mark.parametrize("rules", [
    (AdviceBinding("A.9", "p", 1), AdviceTypeRule("A.9", "before"), PointcutDef("p", CallPC(Pattern("*", "*")))),
    (AdviceBinding("A.1", "nope", 1), AdviceTypeRule("A.1", "before")),
    (AdviceBinding("A.1", "p", 1), PointcutDef("p", CallPC(Pattern("*", "*")))),
    (AdviceTypeRule("A.1", "sideways"),),
])
def test_unresolvable_plans(rules):
    program = pa_program([], [AdviceBody("A.1", parse_expr("1"))])
    with pytest.raises(UnknownAdviceError):
        check_plan(program, WeavingPlan(rules))


# -- identity ----------------------------------------------------------------------------------

@pytest.mark.parametrize("path", PA_PROGRAMS, ids=ids(PA_PROGRAMS))
def test_empty_plan_is_bit_identical_to_plain_evaluation(path):
    classes = base(path)
    value, trace = evaluate(classes, parse_entry(ENTRY))
    woven_value, woven_trace = run_pa(pa_program(classes), WeavingPlan(), parse_entry(ENTRY))
    assert render(woven_value) == render(value)
    assert trace_lines(woven_trace) == trace_lines(trace)


@pytest.mark.parametrize("path", PA_PROGRAMS, ids=ids(PA_PROGRAMS))
def test_identity_advise_recovers_the_plain_evaluator(path):
    classes = base(path)
    seen = []

    def identity(x_jp, d):
        seen.append(d.kind)
        return x_jp

    interp = Interpreter(classes, advise=identity)
    value = interp.run(parse_entry(ENTRY))
    plain_value, plain_trace = evaluate(classes, parse_entry(ENTRY))
    assert render(value) == render(plain_value)
    assert trace_lines(interp.events) == trace_lines(plain_trace)
    assert set(seen) <= set(JOIN_POINT_KINDS) and seen


def test_evaluator_has_no_advice_lookup():
    source = inspect.getsource(interp_module)
    for word in ("crx.pa", "match(", "PointcutDef", "AdviceBinding"):
        assert word not in source


@pytest.mark.parametrize("path", PA_PROGRAMS, ids=ids(PA_PROGRAMS))
def test_pass_through_around_is_observationally_identical(path):
    classes = base(path)
    plain_value, plain_trace = evaluate(classes, parse_entry(ENTRY))
    program = pa_program(classes, [AdviceBody("Pass.1", parse_expr("proceed(jpArgs)"))])
    plan = plan_of(("Pass.1", "around", OrPC(CallPC(Pattern("*", "*")), ExecutionPC(Pattern("*", "*")))))
    value, trace = run_pa(program, plan, parse_entry(ENTRY))
    assert render(value) == render(plain_value)
    assert prints(trace) == prints(plain_trace)
    base_events = [(e.kind, e.text) for e in trace if e.kind != ADVICE_EXECUTION]
    assert base_events == [(e.kind, e.text) for e in plain_trace]


@pytest.mark.parametrize("path", PA_PROGRAMS, ids=ids(PA_PROGRAMS))
def test_never_matching_advice_is_oblivious(path):
    classes = base(path)
    program = pa_program(classes, [AdviceBody("Never.1", parse_expr('print("never")'))])
    plan = plan_of(("Never.1", "before", CallPC(Pattern("NoSuchType", "*"))))
    value, trace = run_pa(program, plan, parse_entry(ENTRY))
    plain_value, plain_trace = evaluate(classes, parse_entry(ENTRY))
    assert render(value) == render(plain_value)
    assert trace_lines(trace) == trace_lines(plain_trace)


# -- composition against the hand-inlined oracles ------------------------------------------------

@pytest.mark.parametrize("case", COMPOSITION, ids=ids(COMPOSITION))
def test_composition_matches_inlining_oracle(case):
    program, plan, entry = pa_inputs(case / "base.mj", case / "aspect.asp")
    value, trace = run_pa(program, plan, entry)
    oracle_value, oracle_trace = evaluate(base(case / "oracle.mj"), entry)
    assert prints(trace) == prints(oracle_trace)
    assert render(value) == render(oracle_value)


def test_before_before_after_order():
    classes = parse_program("class T { m() { print(\"x\") } }")
    advice = [AdviceBody("A.1", parse_expr('print("B1")')), AdviceBody("A.2", parse_expr('print("B2")')),
              AdviceBody("A.3", parse_expr('print("A1")'))]
    pc = CallPC(Pattern("T", "m"))
    plan = plan_of(("A.1", "before", pc), ("A.2", "before", pc), ("A.3", "after", pc))
    _, trace = run_pa(pa_program(classes, advice), plan, parse_entry("T.m"))
    assert prints(trace) == ["B1", "B2", "x", "A1"]


def test_proceed_can_run_the_inner_computation_twice():
    classes = parse_program('class T { m() { print("x"); 1 } }')
    advice = [AdviceBody("A.1", parse_expr("proceed() + proceed()"))]
    value, trace = run_pa(pa_program(classes, advice), plan_of(("A.1", "around", ExecutionPC(Pattern("T", "m")))),
                          parse_entry("T.m"))
    assert value == 2
    assert prints(trace) == ["x", "x"]


def test_proceed_with_wrong_arity():
    classes = parse_program("class T { m(a) { a } }")
    advice = [AdviceBody("A.1", parse_expr("proceed(1, 2)"))]
    with pytest.raises(RuntimeTypeError):
        run_pa(pa_program(classes, advice), plan_of(("A.1", "around", CallPC(Pattern("T", "m")))),
               parse_entry("new T().m(0)"))


def test_around_value_is_dynamic():
    classes = parse_program("class T { m() { 1 } }")
    advice = [AdviceBody("A.1", parse_expr('"not an int"'))]
    value, _ = run_pa(pa_program(classes, advice), plan_of(("A.1", "around", CallPC(Pattern("T", "m")))),
                      parse_entry("T.m"))
    assert value == "not an int"


def test_advice_sees_join_point_context():
    classes = parse_program("class T { int v; m(a, b) { a } }")
    advice = [AdviceBody("A.1", parse_expr('print(jpTarget.v); print(jpArgs)'))]
    _, trace = run_pa(pa_program(classes, advice), plan_of(("A.1", "before", CallPC(Pattern("T", "m")))),
                      parse_entry('new T(5).m(1, "two")'))
    assert prints(trace) == ["5", "(1, two)"]


# -- advising advice ------------------------------------------------------------------------------

def test_meta_precedes_every_base_advice_execution():
    program, plan, entry = pa_inputs(META / "base.mj", META / "aspect.asp")
    value, trace = run_pa(program, plan, entry)
    events = [(e.kind, e.text) for e in trace]
    base_runs = [i for i, ev in enumerate(events) if ev == (ADVICE_EXECUTION, "Logging.1")]
    metas = [i for i, ev in enumerate(events) if ev == ("print", "META")]
    assert base_runs and len(metas) == len(base_runs)
    assert all(events[i - 1] == ("print", "META") for i in base_runs)
    _, plain = evaluate(base(META / "base.mj"), entry)
    expected = sum(1 for e in plain if e.kind == METHOD_CALL and e.text == "Account.deposit")
    assert len(base_runs) == expected == 3


def test_unrestricted_advice_on_advice_runs_out_of_budget():
    program, plan, entry = pa_inputs(META / "base.mj", META / "runaway.asp")
    with pytest.raises(StepBudgetExceeded):
        run_pa(program, plan, entry, step_budget=5000)


# -- reactivity and ordering over the PA corpus ------------------------------------------------------

ADVISED = [(c.name, (c / "base.mj", c / "aspect.asp")) for c in COMPOSITION]
ADVISED += [("meta", (META / "base.mj", META / "aspect.asp"))]
ADVISED += [(f"rules-{c.name}", (c / "base.mj", c / "inline.asp")) for c in RULES_PAIRS]


@pytest.mark.parametrize("name, files", ADVISED, ids=[a[0] for a in ADVISED])
def test_advised_runs_are_reactive_and_ordered(name, files):
    program, plan, entry = pa_inputs(*files)
    result = weave_pa(program, plan, entry)
    outcome = result.outcome
    assert outcome.advised > 0
    assert result.audit.X.reads > 0
    assert outcome.ordering
    for record in outcome.ordering:
        assert record.first_event_t is not None
        assert record.desc_t < record.first_event_t
    check_golden(f"audits/pa-{name}.audit", result.audit.serialize())


def test_timeline_elements_carry_advice_provenance():
    from crx.kernel import check_provenance
    case = COMPOSITION[0]
    result = weave_pa(*pa_inputs(case / "base.mj", case / "aspect.asp"))
    assert check_provenance(result.elements) == []
    advised = [e for e in result.elements if e.payload.advice]
    assert advised and all(e.payload.comp_id != e.payload.jp_id for e in advised)
