"""Pointcut-and-advice: a reactive weaving process over the MinJ interpreter.

The interpreter (EVALUATE) hands every join point computation and its
description to :class:`Advisor` (ADVISE).  ADVISE asks :func:`match` which
advice applies and lets :func:`mix` wrap the join point computation; the
composed computation goes back to the interpreter, which runs it.  Advice
bodies execute through the interpreter's advice-execution instruction, so
they are join points too and can themselves be advised.

Precedence, for advice matched at one join point in declaration order:
around advice nest with the earliest outermost; inside the innermost around
runs the core, which is every before advice in order, the join point
computation, then every after advice in reverse order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Optional

from crx.errors import (
    ProceedOutsideAround,
    RuntimeTypeError,
    UnknownAdviceError,
)
from crx.kernel import (
    ComposedElement,
    ConcernProgram,
    Provenance,
    ReactiveProcess,
    WeavingPlan,
    run_weaving,
    DEFAULT_STEP_BUDGET,
)
from crx.lang.interp import (
    ADVICE_EXECUTION,
    CONSTRUCTOR_EXECUTION,
    METHOD_CALL,
    METHOD_EXECUTION,
    Computation,
    Interpreter,
    JoinPointDescription,
)
from crx.lang.syntax import ClassDecl, Expr, Proceed, walk

BEFORE, AFTER, AROUND = "before", "after", "around"
ADVICE_TYPES = (BEFORE, AFTER, AROUND)


# -- pointcuts ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _wildcard(pattern: str) -> re.Pattern:
    return re.compile("".join(".*" if part == "*" else re.escape(part)
                              for part in re.split(r"(\*)", pattern)) + r"\Z")


def wildcard_match(pattern: str, text: str) -> bool:
    return _wildcard(pattern).match(text) is not None


@dataclass(frozen=True)
class Pattern:
    type_pattern: str
    name_pattern: str

    def matches(self, type_name: str, member_name: str) -> bool:
        return wildcard_match(self.type_pattern, type_name) and wildcard_match(self.name_pattern, member_name)

    def __str__(self) -> str:
        return f"{self.type_pattern}.{self.name_pattern}"


class Pointcut:
    __slots__ = ()

    def matches(self, desc: JoinPointDescription) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class CallPC(Pointcut):
    pattern: Pattern

    def matches(self, desc):
        return desc.kind == METHOD_CALL and self.pattern.matches(desc.type_name, desc.member_name)

    def __str__(self):
        return f"call({self.pattern})"


@dataclass(frozen=True)
class ExecutionPC(Pointcut):
    """Method executions; constructor executions only via the name ``new``."""

    pattern: Pattern

    def matches(self, desc):
        if desc.kind == METHOD_EXECUTION:
            return self.pattern.matches(desc.type_name, desc.member_name)
        if desc.kind == CONSTRUCTOR_EXECUTION:
            return (self.pattern.name_pattern == "new"
                    and wildcard_match(self.pattern.type_pattern, desc.type_name))
        return False

    def __str__(self):
        return f"execution({self.pattern})"


@dataclass(frozen=True)
class AdviceExecutionPC(Pointcut):
    """Advice executions, optionally narrowed to ``Aspect.advice`` by a pattern."""

    pattern: Optional[Pattern] = None

    def matches(self, desc):
        if desc.kind != ADVICE_EXECUTION:
            return False
        return self.pattern is None or self.pattern.matches(desc.type_name, desc.member_name)

    def __str__(self):
        return f"adviceexecution({self.pattern or ''})"


@dataclass(frozen=True)
class AndPC(Pointcut):
    left: Pointcut
    right: Pointcut

    def matches(self, desc):
        return self.left.matches(desc) and self.right.matches(desc)

    def __str__(self):
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class OrPC(Pointcut):
    left: Pointcut
    right: Pointcut

    def matches(self, desc):
        return self.left.matches(desc) or self.right.matches(desc)

    def __str__(self):
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class NotPC(Pointcut):
    inner: Pointcut

    def matches(self, desc):
        return not self.inner.matches(desc)

    def __str__(self):
        return f"!{self.inner}"


# -- concern elements and integration rules -------------------------------------------

@dataclass(frozen=True)
class AdviceBody:
    """An advice-body expression: a concern element like any method."""

    advice_id: str  # "<Aspect>.<ordinal>"
    body: Expr

    @property
    def aspect(self) -> str:
        return self.advice_id.rpartition(".")[0]

    @property
    def local_id(self) -> str:
        return self.advice_id.rpartition(".")[2]


@dataclass(frozen=True)
class PointcutDef:
    """Pointcut designator: a named predicate over join point descriptions."""

    name: str
    pointcut: Pointcut


@dataclass(frozen=True)
class AdviceBinding:
    """Pointcut-to-advice mapping; ``order`` is the declaration order."""

    advice_id: str
    pointcut_name: str
    order: int


@dataclass(frozen=True)
class AdviceTypeRule:
    """Advice-to-type mapping."""

    advice_id: str
    advice_type: str


@dataclass(frozen=True, eq=False)
class AdviceComputation:
    advice_id: str
    advice_type: str
    order: int
    args: tuple = ()
    target: Any = None

    def key(self) -> tuple:
        return (self.advice_id, self.advice_type, self.order)


def check_plan(program: ConcernProgram, plan: WeavingPlan) -> None:
    """Static plan checks: every reference resolves; proceed only in around advice."""
    bodies = {e.advice_id: e for e in program.elements if isinstance(e, AdviceBody)}
    pointcuts = {p.name for p in plan.of_type(PointcutDef)}
    types = {}
    for t in plan.of_type(AdviceTypeRule):
        if t.advice_type not in ADVICE_TYPES:
            raise UnknownAdviceError(f"advice {t.advice_id} has unknown type {t.advice_type}")
        types[t.advice_id] = t.advice_type
    for b in plan.of_type(AdviceBinding):
        if b.advice_id not in bodies:
            raise UnknownAdviceError(f"binding refers to undeclared advice {b.advice_id}")
        if b.pointcut_name not in pointcuts:
            raise UnknownAdviceError(f"advice {b.advice_id} refers to undeclared pointcut {b.pointcut_name}")
        if b.advice_id not in types:
            raise UnknownAdviceError(f"advice {b.advice_id} has no advice type")
    for advice_id, advice_type in types.items():
        body = bodies.get(advice_id)
        if body is None:
            raise UnknownAdviceError(f"type given for undeclared advice {advice_id}")
        if advice_type != AROUND and any(isinstance(n, Proceed) for n in walk(body.body)):
            raise ProceedOutsideAround(f"proceed in {advice_type} advice {advice_id}")


# -- MATCH -------------------------------------------------------------------------------

def match(desc: JoinPointDescription, plan: WeavingPlan) -> list[AdviceComputation]:
    """Advice whose pointcut selects ``desc``, in declaration order."""
    pointcuts = {p.name: p.pointcut for p in plan.of_type(PointcutDef)}
    types = {t.advice_id: t.advice_type for t in plan.of_type(AdviceTypeRule)}
    selected = []
    for b in sorted(plan.of_type(AdviceBinding), key=lambda b: (b.order, b.advice_id)):
        pc = pointcuts.get(b.pointcut_name)
        if pc is not None and b.advice_id in types and pc.matches(desc):
            selected.append(AdviceComputation(b.advice_id, types[b.advice_id], b.order,
                                              desc.args, desc.target))
    return selected


# -- MIX ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class JoinPointRef:
    comp_id: int
    jp_id: int
    kind: str
    label: str


@dataclass(frozen=True)
class ComputationRecord:
    """What the X register keeps of a computation: identity and the advice in it."""

    comp_id: int
    kind: str
    label: str
    jp_id: int
    advice: tuple[str, ...]


@dataclass(frozen=True)
class AdviceApplication:
    """Provenance rule of a computation: the advice wrapped around a join point."""

    advice: tuple[str, ...]

    def mix(self, matched: tuple) -> ComputationRecord:
        (ref,) = matched
        return ComputationRecord(ref.comp_id, ref.kind, ref.label, ref.jp_id, self.advice)


def mix(advice: list[AdviceComputation], x_jp: Computation, runtime) -> Computation:
    """Wrap ``x_jp`` with ``advice`` (already in declaration order).

    ``runtime`` supplies ``new_id()``, ``control(comp, args)`` and
    ``run_advice(advice, args, proceed)``.
    """
    if not advice:
        return x_jp
    arounds = [a for a in advice if a.advice_type == AROUND]
    befores = [a for a in advice if a.advice_type == BEFORE]
    afters = [a for a in advice if a.advice_type == AFTER]
    arity = len(x_jp.args)

    def core(args):
        for a in befores:
            runtime.run_advice(a, args)
        value = runtime.control(x_jp, args)
        for a in reversed(afters):
            runtime.run_advice(a, args)
        return value

    def layer(i: int, args):
        if i == len(arounds):
            return core(args)

        def proceed(new_args):
            if len(new_args) != arity:
                raise RuntimeTypeError(
                    f"proceed in {arounds[i].advice_id}: expected {arity} argument(s), got {len(new_args)}")
            return layer(i + 1, tuple(new_args))

        return runtime.run_advice(arounds[i], args, proceed)

    ids = tuple(a.advice_id for a in advice)
    return Computation(
        id=runtime.new_id(),
        kind=x_jp.kind,
        label=x_jp.label,
        args=x_jp.args,
        thunk=lambda args: layer(0, args),
        jp_id=x_jp.id,
        advice=ids,
        rule=AdviceApplication(ids),
    )


# -- ADVISE ------------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderingRecord:
    desc_t: int
    jp_id: int
    first_event_t: Optional[int]


class Advisor:
    """ADVISE: intercepts join point computations and wraps them with advice."""

    def __init__(self, c, r):
        self._c = c
        self._r = r
        self.interp: Optional[Interpreter] = None
        self.ordering: list[OrderingRecord] = []
        self.advised = 0

    def __call__(self, x_jp: Computation, desc: JoinPointDescription) -> Computation:
        plan = WeavingPlan(self._r.read_all())
        advice = match(desc, plan)
        if not advice:
            return x_jp
        self.advised += 1
        composed = mix(advice, x_jp, self)
        inner = composed.thunk
        events = self.interp.events

        def observed(args):
            start = len(events)
            try:
                return inner(args)
            finally:
                first = events[start].t if len(events) > start else None
                self.ordering.append(OrderingRecord(desc.t, desc.jp_id, first))

        composed.thunk = observed
        return composed

    # runtime services used by mix
    def new_id(self) -> int:
        return self.interp.new_id()

    def control(self, comp: Computation, args) -> Any:
        return self.interp.control(comp, args)

    def run_advice(self, advice: AdviceComputation, args, proceed=None) -> Any:
        body = self._c.find(lambda e: isinstance(e, AdviceBody) and e.advice_id == advice.advice_id)
        if body is None:
            raise UnknownAdviceError(f"no body for advice {advice.advice_id}")
        return self.interp.run_advice(body.aspect, body.local_id, body.body, args, advice.target, proceed)


class XTimeline:
    """The interpreter's computation timeline, kept in the X register."""

    def __init__(self, x, step):
        self._x = x
        self._step = step
        self._live: dict[int, Computation] = {}

    def append(self, comp: Computation) -> None:
        ref = JoinPointRef(comp.id, comp.jp_id, comp.kind, comp.label)
        rule = comp.rule if comp.rule is not None else AdviceApplication(())
        self._x.append(ComposedElement(rule.mix((ref,)), Provenance(rule, (ref,))))
        self._live[comp.id] = comp
        self._step()

    def last(self) -> Computation:
        return self._live[self._x.last().payload.comp_id]


@dataclass
class PAOutcome:
    value: Any
    trace: list
    ordering: list[OrderingRecord] = field(default_factory=list)
    advised: int = 0


class PointcutAdvice(ReactiveProcess):
    """The reactive weaving process: runs ``entry`` under ADVISE."""

    def __init__(self, entry: Expr, step_budget: int = DEFAULT_STEP_BUDGET):
        self.entry = entry
        self.step_budget = step_budget

    def weave(self, c, r, x, step) -> PAOutcome:
        classes = [e for e in c.read_all() if isinstance(e, ClassDecl)]
        advisor = Advisor(c, r)
        interp = Interpreter(classes, advise=advisor, timeline=XTimeline(x, step),
                             step_budget=self.step_budget)
        advisor.interp = interp
        value = interp.run(self.entry)
        return PAOutcome(value, interp.events, advisor.ordering, advisor.advised)


def weave_pa(program: ConcernProgram, plan: WeavingPlan, entry: Expr, *,
             step_budget: int = DEFAULT_STEP_BUDGET):
    """Full weaving run; returns the kernel's WeaveResult (outcome is a PAOutcome)."""
    check_plan(program, plan)
    return run_weaving(PointcutAdvice(entry, step_budget), program, plan, step_budget=step_budget)


def run_pa(program: ConcernProgram, plan: WeavingPlan, entry: Expr, *,
           step_budget: int = DEFAULT_STEP_BUDGET):
    """Interpret ``entry`` with advice; returns ``(value, trace)``."""
    outcome = weave_pa(program, plan, entry, step_budget=step_budget).outcome
    return outcome.value, outcome.trace


def pa_program(classes, advice=(), modules: Optional[dict] = None) -> ConcernProgram:
    """Concern program for PA: classes and advice bodies, one module per class/aspect."""
    if modules is not None:
        return ConcernProgram.from_modules(modules)
    blocks: dict[str, list] = {}
    for cls in classes:
        blocks.setdefault(cls.name, []).append(cls)
    for a in advice:
        blocks.setdefault(a.aspect, []).append(a)
    return ConcernProgram.from_modules(blocks)
