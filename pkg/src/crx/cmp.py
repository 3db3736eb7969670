"""Compositor: subject-oriented merge of hyperslices into a hypermodule.

A hyperspace maps every class (by its ``module`` namespace) into a hyperslice
and breaks it into units: type, field, operation (slice-level signature) and
realization (a method body of one class).  EXPAND turns a ``mergeByName``
hypermodule spec into fully explicit composition clauses; WEAVE applies each
clause exactly once, committing one hypermodule unit per clause.  Neither step
looks at the composed program.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

from crx.errors import (
    DuplicateClassError,
    EmptySliceError,
    FieldTypeConflictError,
    HyperspaceSpecError,
    KindConflictError,
    SuperclassConflictError,
    UnmappedClassError,
    UnresolvedUnitError,
)
from crx.kernel import (
    ComposedElement,
    ConcernProgram,
    NonreactiveProcess,
    Provenance,
    WeavingPlan,
    run_weaving,
)
from crx.lang.parser import TokenStream
from crx.lang.syntax import ClassDecl, FieldDecl, MethodDecl, Realization, Seq, SourceFile, rename_vars

MERGE_BY_NAME = "mergeByName"

OPERATIONS, CLASSES, MAPPING = "operations", "classes", "mapping"
SECTIONS = (OPERATIONS, CLASSES, MAPPING)

EQUIVALENT, IDENTITY = "equivalent", "identity"
SIMPLE, SEQUENCE = "Simple", "Sequence"


# -- specs ----------------------------------------------------------------------

@dataclass(frozen=True)
class HyperspaceSpec:
    name: str
    slice_map: tuple[tuple[str, str], ...]  # (namespace prefix, hyperslice name)

    def __post_init__(self):
        prefixes = [p for p, _ in self.slice_map]
        for i, a in enumerate(prefixes):
            for b in prefixes[i + 1:]:
                if _prefix_match(a, b) or _prefix_match(b, a):
                    raise HyperspaceSpecError(f"overlapping slice prefixes {a!r} and {b!r}")
        names = [s for _, s in self.slice_map]
        if len(set(names)) != len(names):
            raise HyperspaceSpecError("a hyperslice is declared twice")

    def slice_for(self, module: Optional[str]) -> Optional[str]:
        if module is None:
            return None
        for prefix, slice_name in self.slice_map:
            if _prefix_match(prefix, module):
                return slice_name
        return None


def _prefix_match(prefix: str, module: str) -> bool:
    return module == prefix or module.startswith(prefix + ".")


@dataclass(frozen=True)
class HypermoduleSpec:
    name: str
    hyperslices: tuple[str, ...]
    relationship: str = MERGE_BY_NAME


def parse_hyperspace_spec(text: str, path: str | None = None) -> HyperspaceSpec:
    """``hyperspace <ID>`` followed by ``slice <prefix> : <SliceName>`` lines."""
    ts = TokenStream(text, path)
    ts.expect("hyperspace")
    name = ts.expect_id("hyperspace name")
    entries = []
    while not ts.at_eof():
        ts.expect("slice")
        prefix = ts.qualified_name()
        ts.expect(":")
        entries.append((prefix, ts.expect_id("hyperslice name")))
        ts.accept(";")
    return HyperspaceSpec(name, tuple(entries))


def parse_hypermodule_spec(text: str, path: str | None = None) -> HypermoduleSpec:
    """``hypermodule <ID>``, ``hyperslices: A, B;``, ``relationships: mergeByName;``."""
    ts = TokenStream(text, path)
    ts.expect("hypermodule")
    name = ts.expect_id("hypermodule name")
    slices: list[str] = []
    relationship = None
    while not ts.at_eof() and not ts.at("end"):
        if ts.accept("hyperslices"):
            ts.expect(":")
            slices.append(ts.expect_id("hyperslice name"))
            while ts.accept(","):
                slices.append(ts.expect_id("hyperslice name"))
        elif ts.accept("relationships"):
            ts.expect(":")
            relationship = ts.expect_id("relationship")
        else:
            raise ts.error(f"unexpected {ts.peek()} in hypermodule")
        ts.expect(";")
    if ts.accept("end"):
        ts.expect("hypermodule")
        ts.accept(";")
    if not ts.at_eof():
        raise ts.error(f"unexpected {ts.peek()} after hypermodule")
    if not slices:
        raise HyperspaceSpecError(f"hypermodule {name} lists no hyperslices")
    if relationship is None:
        raise HyperspaceSpecError(f"hypermodule {name} has no relationship")
    if relationship != MERGE_BY_NAME:
        raise HyperspaceSpecError(f"unsupported relationship {relationship} (only {MERGE_BY_NAME})")
    return HypermoduleSpec(name, tuple(slices), relationship)


# -- hyperspace units -------------------------------------------------------------

@dataclass(frozen=True)
class TypeUnit:
    slice: str
    name: str
    super_name: Optional[str]

    @property
    def path(self) -> tuple:
        return (self.slice, "type", self.name)


@dataclass(frozen=True)
class FieldUnit:
    slice: str
    type_name: str
    name: str
    field_type: str

    @property
    def path(self) -> tuple:
        return (self.slice, "field", self.type_name, self.name)


@dataclass(frozen=True)
class OperationUnit:
    """A slice-level operation (method signature), shared by all its classes."""

    slice: str
    name: str
    arity: int

    @property
    def path(self) -> tuple:
        return (self.slice, "op", self.name, self.arity)


@dataclass(frozen=True)
class RealizationUnit:
    slice: str
    type_name: str
    method: MethodDecl

    @property
    def path(self) -> tuple:
        return (self.slice, "impl", self.method.name, self.method.arity, self.type_name)


@dataclass(frozen=True)
class UnitTree:
    """One hyperslice's units.  Root -> type names -> type declarations -> members."""

    slice: str
    types: tuple[TypeUnit, ...]
    fields: tuple[FieldUnit, ...]
    operations: tuple[OperationUnit, ...]
    realizations: tuple[RealizationUnit, ...]

    def units(self) -> tuple:
        return self.types + self.fields + self.operations + self.realizations

    def members(self, type_name: str) -> tuple:
        return tuple(u for u in self.fields + self.realizations if u.type_name == type_name)

    @classmethod
    def from_classes(cls, slice_name: str, classes: Iterable[ClassDecl]) -> "UnitTree":
        types, fields, ops, impls = [], [], [], []
        seen_ops = set()
        for c in classes:
            types.append(TypeUnit(slice_name, c.name, c.super_name))
            fields += [FieldUnit(slice_name, c.name, f.name, f.type_name) for f in c.fields]
            for m in c.methods:
                if m.signature not in seen_ops:
                    seen_ops.add(m.signature)
                    ops.append(OperationUnit(slice_name, m.name, m.arity))
                impls.append(RealizationUnit(slice_name, c.name, m))
        return cls(slice_name, tuple(types), tuple(fields), tuple(ops), tuple(impls))

    @classmethod
    def from_units(cls, slice_name: str, units: Iterable) -> "UnitTree":
        units = list(units)
        return cls(
            slice_name,
            tuple(u for u in units if isinstance(u, TypeUnit)),
            tuple(u for u in units if isinstance(u, FieldUnit)),
            tuple(u for u in units if isinstance(u, OperationUnit)),
            tuple(u for u in units if isinstance(u, RealizationUnit)),
        )


@dataclass(frozen=True)
class Hyperspace:
    name: str
    slices: tuple[UnitTree, ...]

    def slice(self, name: str) -> UnitTree:
        for s in self.slices:
            if s.slice == name:
                return s
        raise HyperspaceSpecError(f"no hyperslice named {name}")

    @property
    def slice_names(self) -> tuple[str, ...]:
        return tuple(s.slice for s in self.slices)

    def program(self) -> ConcernProgram:
        return ConcernProgram.from_modules({s.slice: s.units() for s in self.slices})

    @classmethod
    def from_program(cls, name: str, units_by_slice: Iterable[tuple[str, Iterable]]) -> "Hyperspace":
        return cls(name, tuple(UnitTree.from_units(s, us) for s, us in units_by_slice))


def build_hyperspace(sources: Iterable[SourceFile], spec: HyperspaceSpec) -> Hyperspace:
    """Bind every class to its hyperslice and split it into units."""
    by_slice: dict[str, list[ClassDecl]] = {s: [] for _, s in spec.slice_map}
    for src in sources:
        for cls in src.classes:
            slice_name = spec.slice_for(src.module)
            if slice_name is None:
                where = f"module {src.module}" if src.module else "no module header"
                raise UnmappedClassError(f"class {cls.name} ({where}) maps to no hyperslice")
            if any(c.name == cls.name for c in by_slice[slice_name]):
                raise DuplicateClassError(f"class {cls.name} declared twice in hyperslice {slice_name}")
            by_slice[slice_name].append(cls)
    for slice_name, classes in by_slice.items():
        if not classes:
            raise EmptySliceError(f"hyperslice {slice_name} is empty")
    return Hyperspace(spec.name, tuple(UnitTree.from_classes(s, cs) for s, cs in by_slice.items()))


# -- hypermodule units (composed payloads) -------------------------------------------

@dataclass(frozen=True)
class HMOperation:
    name: str
    arity: int


@dataclass(frozen=True)
class HMClass:
    name: str
    super_name: Optional[str]


@dataclass(frozen=True)
class HMField:
    type_name: str
    field: FieldDecl


@dataclass(frozen=True)
class HMMethod:
    type_name: str
    method: MethodDecl


def realization_label(unit: RealizationUnit) -> str:
    return f"{unit.slice}.{unit.method.name}.{unit.type_name}"


def _path_text(path: tuple) -> str:
    slice_name, kind, *rest = path
    if kind == "op":
        name, _arity = rest
        return f"{slice_name}.{name}"
    if kind == "impl":
        name, _arity, type_name = rest
        return f"{slice_name}.{name}.{type_name}"
    return ".".join([slice_name, *rest])


# -- composition clauses -------------------------------------------------------------

@dataclass(frozen=True)
class CompositionClause:
    """One fully expanded merge instruction; also the rule that built its unit."""

    section: str
    target: tuple
    combinator: str
    sources: tuple[tuple, ...]

    def sort_key(self) -> tuple:
        kind, *rest = self.target
        if kind == "op":
            key = tuple(rest)
        elif kind == "type":
            key = (rest[0], 0, "")
        elif kind == "field":
            key = (rest[0], 1, rest[1])
        else:  # impl: op name, arity, class
            key = tuple(rest)
        return (SECTIONS.index(self.section), key)

    def mix(self, matched: tuple):
        """Construct this clause's hypermodule unit from the matched hyperspace units."""
        kind = self.target[0]
        if tuple(u.path for u in matched) != self.sources:
            raise UnresolvedUnitError("matched units do not correspond to clause sources")
        if kind == "op":
            _, name, arity = self.target
            return HMOperation(name, arity)
        if kind == "type":
            supers = {u.super_name for u in matched} - {None}
            if len(supers) > 1:
                raise SuperclassConflictError(
                    f"class {self.target[1]} has conflicting superclasses {sorted(supers)}")
            return HMClass(self.target[1], supers.pop() if supers else None)
        if kind == "field":
            _, type_name, name = self.target
            types = {u.field_type for u in matched}
            if len(types) > 1:
                raise FieldTypeConflictError(f"field {type_name}.{name} declared with different types: {', '.join(sorted(types))}")
            return HMField(type_name, FieldDecl(name, types.pop()))
        if kind == "impl":
            _, name, _arity, type_name = self.target
            first = matched[0].method
            if self.combinator == SIMPLE:
                return HMMethod(type_name, first)
            parts = []
            for unit in matched:
                body = rename_vars(unit.method.body, dict(zip(unit.method.params, first.params)))
                parts.append(Realization(realization_label(unit), body))
            return HMMethod(type_name, MethodDecl(name, first.params, Seq(tuple(parts))))
        raise UnresolvedUnitError(f"unknown clause target {self.target!r}")


def expand(hyperspace: Hyperspace, hm: HypermoduleSpec) -> list[CompositionClause]:
    """Expand ``mergeByName`` against the hyperspace into canonical clauses."""
    if hm.relationship != MERGE_BY_NAME:
        raise HyperspaceSpecError(f"unsupported relationship {hm.relationship}")
    if len(set(hm.hyperslices)) != len(hm.hyperslices):
        raise HyperspaceSpecError(f"hypermodule {hm.name} lists a hyperslice twice")
    trees = [hyperspace.slice(name) for name in hm.hyperslices]

    ops: dict[tuple, list] = defaultdict(list)
    types: dict[str, list] = defaultdict(list)
    fields: dict[tuple, list] = defaultdict(list)
    impls: dict[tuple, list] = defaultdict(list)
    member_kinds: dict[tuple, dict[str, set]] = defaultdict(lambda: defaultdict(set))
    for tree in trees:
        for u in tree.operations:
            ops[(u.name, u.arity)].append(u)
        for u in tree.types:
            types[u.name].append(u)
        for u in tree.fields:
            fields[(u.type_name, u.name)].append(u)
            member_kinds[(u.type_name, u.name)][tree.slice].add("field")
        for u in tree.realizations:
            impls[(u.method.name, u.method.arity, u.type_name)].append(u)
            member_kinds[(u.type_name, u.method.name)][tree.slice].add("method")

    for (type_name, name), by_slice in member_kinds.items():
        kinds = set().union(*by_slice.values())
        if len(kinds) > 1 and len(by_slice) > 1:
            raise KindConflictError(
                f"{type_name}.{name} is a field in one hyperslice and a method in another")

    clauses = []
    for (name, arity), units in ops.items():
        clauses.append(CompositionClause(
            OPERATIONS, ("op", name, arity), EQUIVALENT if len(units) > 1 else IDENTITY,
            tuple(u.path for u in units)))
    for name, units in types.items():
        clause = CompositionClause(
            CLASSES, ("type", name), EQUIVALENT if len(units) > 1 else IDENTITY,
            tuple(u.path for u in units))
        clause.mix(tuple(units))  # surfaces superclass conflicts at expansion time
        clauses.append(clause)
    for (type_name, name), units in fields.items():
        clause = CompositionClause(
            CLASSES, ("field", type_name, name), EQUIVALENT if len(units) > 1 else IDENTITY,
            tuple(u.path for u in units))
        clause.mix(tuple(units))  # surfaces field type conflicts
        clauses.append(clause)
    for (name, arity, type_name), units in impls.items():
        clauses.append(CompositionClause(
            MAPPING, ("impl", name, arity, type_name), SEQUENCE if len(units) > 1 else SIMPLE,
            tuple(u.path for u in units)))
    clauses.sort(key=CompositionClause.sort_key)
    return clauses


def format_clauses(hm_name: str, clauses: Iterable[CompositionClause]) -> str:
    """Render clauses in the canonical text layout (operations, classes, mapping)."""
    clauses = sorted(clauses, key=CompositionClause.sort_key)
    arities: dict[str, set] = defaultdict(set)
    for c in clauses:
        if c.target[0] == "op":
            arities[c.target[1]].add(c.target[2])

    def op_name(name: str, arity: int) -> str:
        return name if len(arities[name]) <= 1 else f"{name}/{arity}"

    def sources(c: CompositionClause) -> str:
        return ", ".join(_path_text(p) for p in c.sources)

    lines = [f"hypermodule {hm_name}"]
    by_section = {s: [c for c in clauses if c.section == s] for s in SECTIONS}
    if by_section[OPERATIONS]:
        lines.append("operations")
        for c in by_section[OPERATIONS]:
            _, name, arity = c.target
            lines.append(f"    {op_name(name, arity)}: {c.combinator} (signatures (<{sources(c)}>))")
    if by_section[CLASSES]:
        lines.append("classes")
        in_class = None
        for c in by_section[CLASSES]:
            if c.target[0] == "type":
                lines.append(f"    class {c.target[1]}: {c.combinator} (types (<{sources(c)}>))")
                in_class = c.target[1]
                header_done = False
            else:
                _, type_name, name = c.target
                if type_name != in_class:
                    lines.append(f"    class {type_name}")
                    in_class = type_name
                    header_done = False
                if not header_done:
                    lines.append("        instance variables:")
                    header_done = True
                lines.append(f"            {name}: {c.combinator} (types (<{sources(c)}>))")
    if by_section[MAPPING]:
        lines.append("mapping")
        for c in by_section[MAPPING]:
            _, name, arity, type_name = c.target
            lines.append(f"    {op_name(name, arity)}: class {type_name}")
            if c.combinator == SIMPLE:
                lines.append(f"        CallAction: Simple {_path_text(c.sources[0])}")
            else:
                lines.append("        CallAction: Sequence")
                lines += [f"            {_path_text(p)}" for p in c.sources]
    lines.append("end hypermodule;")
    return "\n".join(lines) + "\n"


# -- weaving ------------------------------------------------------------------------------

def assemble_hypermodule(elements) -> tuple[ClassDecl, ...]:
    """Gather committed hypermodule units into classes, sorted by name."""
    classes: dict[str, HMClass] = {}
    fields: dict[str, list] = defaultdict(list)
    methods: dict[str, list] = defaultdict(list)
    for e in elements:
        p = e.payload
        if isinstance(p, HMClass):
            classes[p.name] = p
        elif isinstance(p, HMField):
            fields[p.type_name].append(p.field)
        elif isinstance(p, HMMethod):
            methods[p.type_name].append(p.method)
    return tuple(
        ClassDecl(
            name,
            classes[name].super_name,
            tuple(sorted(fields[name], key=lambda f: f.name)),
            tuple(sorted(methods[name], key=lambda m: m.signature)),
        )
        for name in sorted(classes)
    )


class _ClauseWeaver(NonreactiveProcess):
    def _apply(self, clauses, c, x, step) -> None:
        for clause in clauses:
            matched = []
            for path in clause.sources:
                unit = c.find(lambda u, path=path: u.path == path)
                if unit is None:
                    raise UnresolvedUnitError(f"clause source {_path_text(path)} does not resolve")
                matched.append(unit)
            matched = tuple(matched)
            x.append(ComposedElement(clause.mix(matched), Provenance(clause, matched)))
            step()

    def assemble(self, elements, sealed) -> tuple:
        return assemble_hypermodule(elements)


class WeaveClauses(_ClauseWeaver):
    """WEAVE alone: R holds already-expanded composition clauses."""

    def weave(self, c, r, x, step):
        clauses = r.read_all()
        self._apply(clauses, c, x, step)
        return list(clauses)


class Compositor(_ClauseWeaver):
    """COMPOSE = EXPAND then WEAVE; R holds the hypermodule spec."""

    def __init__(self, hyperspace_name: str = "hyperspace"):
        self.hyperspace_name = hyperspace_name

    def weave(self, c, r, x, step):
        specs = [rule for rule in r.read_all() if isinstance(rule, HypermoduleSpec)]
        if len(specs) != 1:
            raise HyperspaceSpecError(f"expected exactly one hypermodule spec, found {len(specs)}")
        hm = specs[0]
        units = c.read_all()
        by_slice: dict[str, list] = {}
        for u in units:
            by_slice.setdefault(u.slice, []).append(u)
        hyperspace = Hyperspace.from_program(self.hyperspace_name, by_slice.items())
        clauses = expand(hyperspace, hm)
        self._apply(clauses, c, x, step)
        return clauses


def weave_cmp(hyperspace: Hyperspace, clauses: Iterable[CompositionClause], **kwargs):
    """Apply each clause once; returns the kernel's WeaveResult."""
    return run_weaving(WeaveClauses(), hyperspace.program(), WeavingPlan(tuple(clauses)), **kwargs)


def compose(hyperspace: Hyperspace, hm: HypermoduleSpec, **kwargs):
    """EXPAND + WEAVE as one nonreactive weaving run."""
    return run_weaving(Compositor(hyperspace.name), hyperspace.program(), WeavingPlan((hm,)), **kwargs)
