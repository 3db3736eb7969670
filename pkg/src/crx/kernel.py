"""The CRX weaving model: concern program, weaving plan, composed program.

A weaving process reads concern elements from the C register and integration
rules from the R register, and commits composed elements to the X register.
Registers count every access, so whether a process ever looked at what it had
already composed is a measured fact rather than a claim.

Nonreactive processes are handed an :class:`XSink`, which can only append;
there is no way for them to read X at all.  Reactive processes get the full
:class:`Register`.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

from crx.errors import MechanismError, ProvenanceMismatch, StepBudgetExceeded

DEFAULT_STEP_BUDGET = 10**6


def is_frozen(value: Any) -> bool:
    if isinstance(value, (str, int, float, bool, type(None), frozenset)):
        return True
    if isinstance(value, tuple):
        return all(is_frozen(v) for v in value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return value.__dataclass_params__.frozen
    return False


class Register:
    """An ordered store whose every access goes through a counting accessor."""

    def __init__(self, name: str, items: Iterable = ()):
        self.name = name
        self._store: list = []
        self._sealed: set[int] = set()
        self.reads = 0
        self.writes = 0
        for item in items:
            self.append(item)

    # reads
    def size(self) -> int:
        self.reads += 1
        return len(self._store)

    def read(self, index: int):
        self.reads += 1
        return self._store[index]

    def read_all(self) -> tuple:
        self.reads += len(self._store)
        return tuple(self._store)

    def last(self):
        self.reads += 1
        return self._store[-1]

    def find(self, predicate: Callable[[Any], bool]):
        """First element satisfying ``predicate``; each element examined is a read."""
        for item in self._store:
            self.reads += 1
            if predicate(item):
                return item
        return None

    def is_sealed(self, index: int) -> bool:
        self.reads += 1
        return index in self._sealed

    # writes
    def append(self, item) -> int:
        if not is_frozen(item):
            raise MechanismError(f"{self.name} register only stores immutable elements: {item!r}")
        self.writes += 1
        self._store.append(item)
        return len(self._store) - 1

    def seal(self, index: int) -> None:
        """Mark a committed element complete; its payload is left untouched."""
        if index in self._sealed:
            raise MechanismError(f"{self.name}[{index}] sealed twice")
        self.writes += 1
        self._sealed.add(index)

    # uncounted: only for the driver once the audit is taken
    def _snapshot(self) -> tuple:
        return tuple(self._store)

    def _sealed_snapshot(self) -> frozenset:
        return frozenset(self._sealed)


class RegisterReader:
    """Read-only view of a register (C and R are never written during weaving)."""

    def __init__(self, register: Register):
        self._register = register
        self.size = register.size
        self.read = register.read
        self.read_all = register.read_all
        self.find = register.find


class XSink:
    """Write-only view of the X register; the only X access a nonreactive process gets."""

    def __init__(self, register: Register):
        self._append = register.append

    def append(self, item) -> int:
        return self._append(item)


@dataclass(frozen=True)
class AccessCounts:
    reads: int
    writes: int


@dataclass(frozen=True)
class RegisterAudit:
    C: AccessCounts
    R: AccessCounts
    X: AccessCounts

    @classmethod
    def of(cls, c: Register, r: Register, x: Register) -> "RegisterAudit":
        return cls(*(AccessCounts(reg.reads, reg.writes) for reg in (c, r, x)))

    def serialize(self) -> str:
        lines = []
        for name in ("C", "R", "X"):
            counts = getattr(self, name)
            lines.append(f"{name}.reads={counts.reads}")
            lines.append(f"{name}.writes={counts.writes}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RegisterAudit":
        values = {}
        for line in text.splitlines():
            if line.strip():
                key, _, value = line.partition("=")
                values[key.strip()] = int(value)
        return cls(*(AccessCounts(values[f"{n}.reads"], values[f"{n}.writes"]) for n in "CRX"))


# -- C, R, X domains ---------------------------------------------------------

@dataclass(frozen=True)
class ConcernProgram:
    """P: concern elements partitioned into pairwise-disjoint modules."""

    elements: tuple
    partition: tuple[tuple[str, tuple], ...]

    def __post_init__(self):
        seen: set = set()
        for module, block in self.partition:
            for e in block:
                if e in seen:
                    raise MechanismError(f"concern element in two modules (second: {module}): {e!r}")
                seen.add(e)
        if seen != set(self.elements) or len(set(self.elements)) != len(self.elements):
            raise MechanismError("partition does not cover the concern elements exactly")

    @classmethod
    def from_modules(cls, modules: dict[str, Iterable]) -> "ConcernProgram":
        partition = tuple((name, tuple(block)) for name, block in modules.items())
        elements = tuple(e for _, block in partition for e in block)
        return cls(elements, partition)

    @classmethod
    def empty(cls) -> "ConcernProgram":
        return cls((), ())

    def module(self, name: str) -> tuple:
        for module, block in self.partition:
            if module == name:
                return block
        raise KeyError(name)

    @property
    def module_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.partition)


@dataclass(frozen=True)
class WeavingPlan:
    """ϱ: the integration rules; the payload type is mechanism specific."""

    rules: tuple = ()

    def of_type(self, kind) -> tuple:
        return tuple(r for r in self.rules if isinstance(r, kind))


@dataclass(frozen=True)
class Provenance:
    rule: Any
    matched: tuple


@dataclass(frozen=True)
class ComposedElement:
    payload: Any
    provenance: Provenance


@dataclass(frozen=True)
class ComposedProgram:
    """φ: the committed elements in commit order, plus the classes they assemble to."""

    elements: tuple[ComposedElement, ...] = ()
    classes: tuple = ()


class ProcessKind(enum.Enum):
    NONREACTIVE = "nonreactive"
    REACTIVE = "reactive"


class WeavingProcess:
    """A concrete mechanism.  Subclass one of the two kinds below.

    ``weave`` receives read-only C and R views, an X handle whose capabilities
    depend on the process kind, and a ``step`` callback to invoke once per
    weaving step.  Whatever it returns ends up in ``WeaveResult.outcome``.
    """

    kind: ProcessKind

    def weave(self, c: RegisterReader, r: RegisterReader, x, step: Callable[[], None]) -> Any:
        raise NotImplementedError

    def assemble(self, elements: tuple[ComposedElement, ...], sealed: frozenset) -> tuple:
        """Build the composed classes from committed elements (if meaningful)."""
        return ()


class NonreactiveProcess(WeavingProcess):
    kind = ProcessKind.NONREACTIVE

    def weave(self, c: RegisterReader, r: RegisterReader, x: XSink, step) -> Any:
        raise NotImplementedError


class ReactiveProcess(WeavingProcess):
    kind = ProcessKind.REACTIVE

    def weave(self, c: RegisterReader, r: RegisterReader, x: Register, step) -> Any:
        raise NotImplementedError


@dataclass
class WeaveResult:
    program: ComposedProgram
    audit: RegisterAudit
    steps: int
    outcome: Any = None
    sealed: frozenset = field(default_factory=frozenset)

    @property
    def elements(self) -> tuple[ComposedElement, ...]:
        return self.program.elements


def run_weaving(process: WeavingProcess, program: ConcernProgram, plan: WeavingPlan,
                *, step_budget: int = DEFAULT_STEP_BUDGET) -> WeaveResult:
    """Drive ``process`` over fresh C/R/X registers and audit the accesses."""
    c = Register("C", program.elements)
    r = Register("R", plan.rules)
    x = Register("X")
    steps = 0

    def step() -> None:
        nonlocal steps
        steps += 1
        if steps > step_budget:
            raise StepBudgetExceeded(f"weaving exceeded {step_budget} steps")

    if process.kind is ProcessKind.NONREACTIVE:
        x_handle = XSink(x)
    elif process.kind is ProcessKind.REACTIVE:
        x_handle = x
    else:
        raise MechanismError(f"unknown process kind {process.kind!r}")

    outcome = process.weave(RegisterReader(c), RegisterReader(r), x_handle, step)
    audit = RegisterAudit.of(c, r, x)
    if process.kind is ProcessKind.NONREACTIVE and audit.X.reads:
        raise MechanismError("nonreactive process read the X register")

    elements = x._snapshot()
    for e in elements:
        if not isinstance(e, ComposedElement):
            raise MechanismError(f"X register holds a non-element: {e!r}")
    sealed = x._sealed_snapshot()
    classes = process.assemble(elements, sealed)
    return WeaveResult(ComposedProgram(elements, tuple(classes)), audit, steps, outcome, sealed)


def check_provenance(elements: Iterable[ComposedElement]) -> list[ProvenanceMismatch]:
    """Re-apply each element's rule to its matched elements; report mismatches.

    An empty list means every composed element is exactly what its rule
    constructs from what it matched.
    """
    report = []
    for i, element in enumerate(elements):
        prov: Optional[Provenance] = element.provenance
        if prov is None or prov.rule is None or not prov.matched:
            report.append(ProvenanceMismatch(i, "nonempty provenance", prov))
            continue
        try:
            expected = prov.rule.mix(prov.matched)
        except Exception as exc:  # a rule that cannot even re-apply is a mismatch
            report.append(ProvenanceMismatch(i, f"rule application ({exc})", element.payload))
            continue
        if expected != element.payload:
            report.append(ProvenanceMismatch(i, expected, element.payload))
    return report


def assert_provenance(elements: Iterable[ComposedElement]) -> None:
    report = check_provenance(elements)
    if report:
        raise report[0]
