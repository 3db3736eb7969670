"""Big-step MinJ interpreter, split into CONTROL and COMPUTE.

Every join point instruction (method call, method execution, constructor
execution, advice execution) goes through :meth:`Interpreter.join_point`:

1. COMPUTE turns the instruction into a join point computation ``x_jp`` and a
   :class:`JoinPointDescription` describing it;
2. the pair is handed to the ``advise`` seam, which returns the computation
   to run (the plain evaluator passes ``x_jp`` through untouched);
3. CONTROL appends that computation to the timeline, reads back the most
   recent entry and runs it.

The interpreter knows nothing about advice lookup; an aspect mechanism plugs
in only through ``advise`` and the advice-execution instruction.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from crx.errors import (
    DuplicateClassError,
    DuplicateMemberError,
    InheritanceCycleError,
    NoSuchFieldError,
    NoSuchMethodError,
    NullTargetError,
    ProceedOutsideAround,
    RuntimeTypeError,
    StepBudgetExceeded,
    UnboundVariableError,
    UnknownClassError,
)
from crx.lang.syntax import (
    NOWHERE,
    BinOp,
    BoolLit,
    Call,
    ClassDecl,
    Expr,
    FieldDecl,
    FieldGet,
    FieldSet,
    If,
    IntLit,
    Loc,
    MethodDecl,
    New,
    Null,
    Print,
    Proceed,
    Realization,
    Seq,
    StrLit,
    This,
    Var,
    walk,
)

DEFAULT_STEP_BUDGET = 10**6
DEFAULT_MAX_DEPTH = 400

METHOD_CALL = "method-call"
METHOD_EXECUTION = "method-execution"
CONSTRUCTOR_EXECUTION = "constructor-execution"
ADVICE_EXECUTION = "advice-execution"
PRINT = "print"
REALIZATION_EXECUTION = "realization-execution"
JOIN_POINT_KINDS = (METHOD_CALL, METHOD_EXECUTION, CONSTRUCTOR_EXECUTION, ADVICE_EXECUTION)

PROCEED_SLOT = "%proceed"


# -- values -------------------------------------------------------------------

class Obj:
    """A MinJ object: its class name plus a mutable field store."""

    __slots__ = ("class_name", "fields", "oid")

    def __init__(self, class_name: str, fields: dict[str, Any], oid: int):
        self.class_name = class_name
        self.fields = fields
        self.oid = oid

    def __repr__(self) -> str:
        return f"{self.class_name}@{self.oid}"


def render(value: Any) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, tuple):
        return "(" + ", ".join(render(v) for v in value) + ")"
    return str(value)


def values_equal(a: Any, b: Any) -> bool:
    if isinstance(a, Obj) or isinstance(b, Obj):
        return a is b
    if type(a) is not type(b):
        return False
    if isinstance(a, tuple):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


# -- trace records ------------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    t: int
    kind: str
    text: str

    def __str__(self) -> str:
        return f"t={self.t} {self.kind} {self.text}"


@dataclass(frozen=True, eq=False)
class JoinPointDescription:
    """What EVALUATE tells ADVISE about an about-to-run join point computation."""

    kind: str
    type_name: str
    member_name: str
    arity: int
    target: Any = None
    args: tuple = ()
    loc: Loc = NOWHERE
    depth: int = 0
    t: int = 0
    jp_id: int = 0

    @property
    def signature(self) -> tuple[str, str, int]:
        return (self.type_name, self.member_name, self.arity)


@dataclass(eq=False)
class Computation:
    """A runnable computation.

    ``thunk`` receives the argument tuple; :meth:`run` defaults it to the
    arguments captured when the computation was built, so ``proceed`` can
    re-run the same computation with different arguments.
    """

    id: int
    kind: str
    label: str
    args: tuple
    thunk: Callable[[tuple], Any]
    jp_id: int = 0
    advice: tuple[str, ...] = ()
    rule: Any = None

    def run(self, args: Optional[tuple] = None) -> Any:
        if args is None:
            args = self.args
        elif len(args) != len(self.args):
            raise RuntimeTypeError(
                f"{self.label}: expected {len(self.args)} argument(s), got {len(args)}")
        return self.thunk(args)


class Timeline:
    """Default store for executed computations (the evaluator's trace)."""

    def __init__(self):
        self.items: list[Computation] = []

    def append(self, item) -> None:
        self.items.append(item)

    def last(self):
        return self.items[-1]


def identity_advise(x_jp: Computation, desc: JoinPointDescription) -> Computation:
    return x_jp


# -- instructions ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CallInstr:
    receiver: Obj
    method: str
    args: tuple
    loc: Loc = NOWHERE


@dataclass(frozen=True, eq=False)
class ExecInstr:
    receiver: Obj
    declaring: str
    method: MethodDecl
    args: tuple


@dataclass(frozen=True, eq=False)
class NewInstr:
    class_name: str
    args: tuple
    loc: Loc = NOWHERE


@dataclass(frozen=True, eq=False)
class AdviceInstr:
    aspect: str
    advice_id: str
    body: Expr
    args: tuple = ()
    target: Any = None
    proceed: Optional[Callable[[tuple], Any]] = None


# -- program checks -------------------------------------------------------------

def validate_program(classes) -> dict[str, ClassDecl]:
    """Check cross-class well-formedness and return the class table."""
    table: dict[str, ClassDecl] = {}
    for cls in classes:
        if cls.name in table:
            raise DuplicateClassError(f"duplicate class {cls.name}")
        table[cls.name] = cls
        names = [f.name for f in cls.fields]
        if len(set(names)) != len(names):
            raise DuplicateMemberError(f"duplicate field in class {cls.name}")
        sigs = [m.signature for m in cls.methods]
        if len(set(sigs)) != len(sigs):
            raise DuplicateMemberError(f"duplicate method in class {cls.name}")
        for m in cls.methods:
            if len(set(m.params)) != len(m.params):
                raise DuplicateMemberError(f"duplicate parameter in {cls.name}.{m.name}")
            if any(isinstance(node, Proceed) for node in walk(m.body)):
                raise ProceedOutsideAround(f"proceed used in method {cls.name}.{m.name}")
    for cls in table.values():
        if cls.super_name is not None and cls.super_name not in table:
            raise UnknownClassError(f"class {cls.name} extends undeclared class {cls.super_name}")
    check_acyclic({c.name: c.super_name for c in table.values()})
    return table


def check_acyclic(supers: dict[str, Optional[str]]) -> None:
    for start in sorted(supers):
        seen = {start}
        cur = supers.get(start)
        while cur is not None:
            if cur in seen:
                raise InheritanceCycleError(f"inheritance cycle through {cur}")
            seen.add(cur)
            cur = supers.get(cur)


# -- interpreter ------------------------------------------------------------------

class Interpreter:
    def __init__(
        self,
        classes,
        *,
        advise: Callable[[Computation, JoinPointDescription], Computation] = identity_advise,
        timeline=None,
        step_budget: int = DEFAULT_STEP_BUDGET,
        max_depth: int = DEFAULT_MAX_DEPTH,
    ):
        self.classes = validate_program(classes)
        self.advise = advise
        self.timeline = timeline if timeline is not None else Timeline()
        self.step_budget = step_budget
        self.max_depth = max_depth
        self.events: list[TraceEvent] = []
        self.clock = 0
        self.steps = 0
        self.depth = 0
        self.advice_depth = 0
        self._next_id = 0
        self._next_oid = 0

    # -- bookkeeping -----------------------------------------------------------

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def emit(self, kind: str, text: str) -> None:
        self.events.append(TraceEvent(self.tick(), kind, text))

    # -- class table -------------------------------------------------------------

    def lookup(self, class_name: str, name: str, arity: int) -> tuple[str, MethodDecl]:
        cur: Optional[str] = class_name
        while cur is not None:
            cls = self.classes[cur]
            m = cls.method(name, arity)
            if m is not None:
                return cur, m
            cur = cls.super_name
        raise NoSuchMethodError(f"{class_name}.{name}/{arity}")

    def all_fields(self, class_name: str) -> list[FieldDecl]:
        chain = []
        cur: Optional[str] = class_name
        while cur is not None:
            chain.append(self.classes[cur])
            cur = self.classes[cur].super_name
        return [f for cls in reversed(chain) for f in cls.fields]

    # -- CONTROL ------------------------------------------------------------------

    def control(self, comp: Computation, args: Optional[tuple] = None) -> Any:
        self.steps += 1
        if self.steps > self.step_budget:
            raise StepBudgetExceeded(f"step budget of {self.step_budget} exhausted")
        if self.depth >= self.max_depth:
            raise StepBudgetExceeded(f"computation nesting exceeded {self.max_depth}")
        self.timeline.append(comp)
        current = self.timeline.last()
        self.depth += 1
        try:
            return current.run(args)
        finally:
            self.depth -= 1

    def join_point(self, instr) -> Any:
        x_jp, desc = self.compute(instr)
        return self.control(self.advise(x_jp, desc))

    # -- COMPUTE ------------------------------------------------------------------

    def compute(self, instr) -> tuple[Computation, JoinPointDescription]:
        jp_id = self.new_id()
        if isinstance(instr, CallInstr):
            recv = instr.receiver
            declaring, method = self.lookup(recv.class_name, instr.method, len(instr.args))
            label = f"{recv.class_name}.{instr.method}"

            def call(args, recv=recv, declaring=declaring, method=method, label=label):
                self.emit(METHOD_CALL, label)
                return self.join_point(ExecInstr(recv, declaring, method, args))

            desc = self._describe(METHOD_CALL, recv.class_name, instr.method, instr.args,
                                  recv, instr.loc, jp_id)
            return Computation(jp_id, METHOD_CALL, label, instr.args, call, jp_id), desc

        if isinstance(instr, ExecInstr):
            recv, method = instr.receiver, instr.method
            label = f"{instr.declaring}.{method.name}"

            def execute(args, recv=recv, method=method, label=label):
                self.emit(METHOD_EXECUTION, label)
                env = dict(zip(method.params, args))
                env["this"] = recv
                return self.eval(method.body, env)

            desc = self._describe(METHOD_EXECUTION, instr.declaring, method.name, instr.args,
                                  recv, NOWHERE, jp_id)
            return Computation(jp_id, METHOD_EXECUTION, label, instr.args, execute, jp_id), desc

        if isinstance(instr, NewInstr):
            name = instr.class_name
            if name not in self.classes:
                raise UnknownClassError(f"new of undeclared class {name}")

            def construct(args, name=name):
                self.emit(CONSTRUCTOR_EXECUTION, name)
                return self.allocate(name, args)

            desc = self._describe(CONSTRUCTOR_EXECUTION, name, "new", instr.args,
                                  None, instr.loc, jp_id)
            return Computation(jp_id, CONSTRUCTOR_EXECUTION, name, instr.args, construct, jp_id), desc

        if isinstance(instr, AdviceInstr):
            label = f"{instr.aspect}.{instr.advice_id}"

            def execute_advice(args, instr=instr, label=label):
                self.emit(ADVICE_EXECUTION, label)
                env: dict[str, Any] = {
                    "this": None,
                    "jpArgs": instr.args,
                    "jpTarget": instr.target,
                    PROCEED_SLOT: instr.proceed,
                }
                self.advice_depth += 1
                try:
                    return self.eval(instr.body, env)
                finally:
                    self.advice_depth -= 1

            desc = self._describe(ADVICE_EXECUTION, instr.aspect, instr.advice_id, (),
                                  None, NOWHERE, jp_id)
            return Computation(jp_id, ADVICE_EXECUTION, label, (), execute_advice, jp_id), desc

        raise TypeError(f"unknown instruction {instr!r}")

    def _describe(self, kind, type_name, member, args, target, loc, jp_id) -> JoinPointDescription:
        return JoinPointDescription(
            kind=kind,
            type_name=type_name,
            member_name=member,
            arity=len(args),
            target=target,
            args=tuple(args),
            loc=loc,
            depth=self.advice_depth,
            t=self.tick(),
            jp_id=jp_id,
        )

    def allocate(self, class_name: str, args: tuple) -> Obj:
        fields = self.all_fields(class_name)
        if len(args) > len(fields):
            raise RuntimeTypeError(
                f"new {class_name}: {len(args)} argument(s) for {len(fields)} field(s)")
        store: dict[str, Any] = {f.name: None for f in fields}
        for f, value in zip(fields, args):
            store[f.name] = value
        self._next_oid += 1
        return Obj(class_name, store, self._next_oid)

    # -- advice-execution instruction ---------------------------------------------

    def run_advice(self, aspect: str, advice_id: str, body: Expr, args: tuple = (),
                   target: Any = None, proceed=None) -> Any:
        """Execute an advice body as an (advisable) advice-execution join point."""
        return self.join_point(AdviceInstr(aspect, advice_id, body, tuple(args), target, proceed))

    # -- expression evaluation ------------------------------------------------------

    def eval(self, e: Expr, env: dict[str, Any]) -> Any:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, StrLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, Null):
            return None
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise UnboundVariableError(f"unbound variable {e.name}") from None
        if isinstance(e, This):
            if "this" not in env:
                raise UnboundVariableError("'this' used outside a method")
            return env["this"]
        if isinstance(e, FieldGet):
            obj = self._object(self.eval(e.target, env), f"read of field {e.field}")
            if e.field not in obj.fields:
                raise NoSuchFieldError(f"{obj.class_name}.{e.field}")
            return obj.fields[e.field]
        if isinstance(e, FieldSet):
            obj = self._object(self.eval(e.target, env), f"write of field {e.field}")
            value = self.eval(e.value, env)
            if e.field not in obj.fields:
                raise NoSuchFieldError(f"{obj.class_name}.{e.field}")
            obj.fields[e.field] = value
            return value
        if isinstance(e, Call):
            recv = self._object(self.eval(e.target, env), f"call of {e.method}")
            args = tuple(self.eval(a, env) for a in e.args)
            return self.join_point(CallInstr(recv, e.method, args, e.loc))
        if isinstance(e, New):
            args = tuple(self.eval(a, env) for a in e.args)
            return self.join_point(NewInstr(e.class_name, args, e.loc))
        if isinstance(e, Seq):
            result = None
            for item in e.items:
                result = self.eval(item, env)
            return result
        if isinstance(e, If):
            cond = self.eval(e.cond, env)
            if not isinstance(cond, bool):
                raise RuntimeTypeError(f"if condition is {render(cond)}, not a boolean")
            if cond:
                return self.eval(e.then, env)
            return None if e.else_ is None else self.eval(e.else_, env)
        if isinstance(e, Print):
            value = self.eval(e.arg, env)
            self.emit(PRINT, render(value))
            return value
        if isinstance(e, BinOp):
            return self._binop(e.op, self.eval(e.left, env), self.eval(e.right, env))
        if isinstance(e, Proceed):
            proceed = env.get(PROCEED_SLOT)
            if proceed is None:
                raise ProceedOutsideAround("proceed outside around advice")
            args = tuple(self.eval(a, env) for a in e.args)
            if len(args) == 1 and isinstance(args[0], tuple):
                args = args[0]
            return proceed(args)
        if isinstance(e, Realization):
            self.emit(REALIZATION_EXECUTION, e.label)
            return self.eval(e.body, env)
        raise TypeError(f"not an expression: {e!r}")

    def _object(self, value: Any, what: str) -> Obj:
        if value is None:
            raise NullTargetError(f"{what} on null")
        if not isinstance(value, Obj):
            raise RuntimeTypeError(f"{what} on non-object {render(value)}")
        return value

    @staticmethod
    def _binop(op: str, a: Any, b: Any) -> Any:
        if op == "==":
            return values_equal(a, b)
        if isinstance(a, str) or isinstance(b, str):
            return render(a) + render(b)
        if type(a) is int and type(b) is int:
            return a + b
        raise RuntimeTypeError(f"cannot add {render(a)} and {render(b)}")

    # -- entry ------------------------------------------------------------------------

    def run(self, entry: Expr) -> Any:
        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 40 * self.max_depth + 1000))
        try:
            return self.eval(entry, {})
        except RecursionError:
            raise StepBudgetExceeded("evaluation nested too deeply") from None
        finally:
            sys.setrecursionlimit(old_limit)


def evaluate(program, entry: Expr, *, step_budget: int = DEFAULT_STEP_BUDGET):
    """Run ``entry`` against ``program`` with no aspectual behavior.

    Returns ``(value, trace)`` where ``trace`` is the list of TraceEvents.
    """
    interp = Interpreter(program, step_budget=step_budget)
    value = interp.run(entry)
    return value, interp.events
