"""READ: turn source, aspect, rule and spec files into (P, ϱ).

Whatever the packaging, the result is the same two things: concern elements
(classes, advice bodies, open-class effects, hyperspace units) and
integration rules.  A PA plan written inline in an aspect and the same plan
written as a separate ``.rules`` file normalize to equal plans.

Aspect files (``.asp``)::

    aspect Logging {
        pointcut getters: call(*.get*) && !call(Secret.*);
        before getters { print("LOG") }
        advice { print("unbound") }           // bound by a .rules file
        introduce Point.observers : Vector;
        introduce Point.notify() { print("n") }
        declare parents: Point extends Observable;
    }

Top-level classes may appear alongside aspects.  Advice ids are
``<Aspect>.<k>``, k counting the aspect's advice (bound or not) from 1.

Rule files (``.rules``)::

    pointcut Logging.getters : call(*.get*);
    before Logging.1 : Logging.getters;
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from crx.cmp import (
    HypermoduleSpec,
    build_hyperspace,
    parse_hypermodule_spec,
    parse_hyperspace_spec,
)
from crx.errors import DuplicateClassError, MissingInputError, ParseError, SyntaxErrors
from crx.kernel import ConcernProgram, WeavingPlan
from crx.lang.lexer import Token
from crx.lang.parser import Parser
from crx.lang.syntax import ClassDecl, FieldDecl, MethodDecl, SourceFile
from crx.oc import EffectMapping, MemberIntro, SuperTypeDecl
from crx.pa import (
    ADVICE_TYPES,
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
)

MECHANISMS = ("cmp", "pa", "oc")
SOURCE_SUFFIXES = {".mj": "mj", ".asp": "asp", ".rules": "rules", ".hs": "hs", ".hm": "hm"}


# -- aspect syntax -----------------------------------------------------------------

@dataclass(frozen=True)
class AspectDecl:
    name: str
    pointcuts: tuple[PointcutDef, ...] = ()
    advice: tuple[AdviceBody, ...] = ()
    bindings: tuple[tuple[str, str, str], ...] = ()  # (advice id, advice type, pointcut name)
    effects: tuple = ()


@dataclass(frozen=True)
class AspectFile:
    module: Optional[str]
    classes: tuple[ClassDecl, ...]
    aspects: tuple[AspectDecl, ...]
    path: Optional[str] = None


@dataclass(frozen=True)
class RuleDecl:
    advice_id: str
    advice_type: str
    pointcut_name: str


@dataclass(frozen=True)
class RulesFile:
    pointcuts: tuple[PointcutDef, ...]
    bindings: tuple[RuleDecl, ...]
    path: Optional[str] = None


class AspectParser(Parser):
    """MinJ parser extended with aspects, pointcuts and rule declarations."""

    def parse_aspect_file(self) -> AspectFile:
        module = self.module_header()
        classes, aspects = [], []
        names: set[str] = set()
        while not self.at_eof():
            tok = self.peek()
            if self.at("aspect"):
                decl = self.aspect_decl()
            else:
                decl = self.class_decl()
            if decl.name in names:
                raise DuplicateClassError(f"{self._where(tok)}duplicate declaration {decl.name}")
            names.add(decl.name)
            (aspects if isinstance(decl, AspectDecl) else classes).append(decl)
        return AspectFile(module, tuple(classes), tuple(aspects), self.path)

    def aspect_decl(self) -> AspectDecl:
        self.expect("aspect")
        name = self.expect_id("aspect name")
        self.expect("{")
        pointcuts, advice, bindings, effects = [], [], [], []
        while not self.accept("}"):
            if self.at_eof():
                raise self.error(f"unterminated aspect {name}")
            tok = self.peek()
            if self.accept("pointcut"):
                pc_name = self.expect_id("pointcut name")
                qualified = f"{name}.{pc_name}"
                if any(p.name == qualified for p in pointcuts):
                    raise self.error(f"duplicate pointcut {pc_name}", tok)
                self.expect(":")
                pointcuts.append(PointcutDef(qualified, self.pointcut()))
                self.expect(";")
            elif tok.kind == "id" and tok.value in ADVICE_TYPES:
                self.advance()
                target = self.qualified_name()
                if "." not in target:
                    target = f"{name}.{target}"
                advice_id = f"{name}.{len(advice) + 1}"
                advice.append(AdviceBody(advice_id, self.block()))
                bindings.append((advice_id, tok.value, target))
            elif self.accept("advice"):
                advice.append(AdviceBody(f"{name}.{len(advice) + 1}", self.block()))
            elif self.accept("introduce"):
                effects.append(self.introduction(f"{name}.oc{len(effects) + 1}"))
            elif self.accept("declare"):
                self.expect("parents")
                self.expect(":")
                target = self.expect_id("type name")
                self.expect("extends")
                new_super = self.expect_id("type name")
                self.expect(";")
                effects.append(SuperTypeDecl(f"{name}.oc{len(effects) + 1}", target, new_super))
            else:
                raise self.error(f"unexpected {tok} in aspect {name}")
        return AspectDecl(name, tuple(pointcuts), tuple(advice), tuple(bindings), tuple(effects))

    def introduction(self, effect_id: str) -> MemberIntro:
        target = self.expect_id("type name")
        self.expect(".")
        member = self.expect_id("member name")
        if self.at("("):
            return MemberIntro(effect_id, target, self.method_rest(member))
        self.expect(":")
        type_name = self.expect_id("type name")
        self.expect(";")
        return MemberIntro(effect_id, target, FieldDecl(member, type_name))

    # -- pointcut expressions --------------------------------------------------

    def pointcut(self):
        left = self.pc_and()
        while self.accept("||"):
            left = OrPC(left, self.pc_and())
        return left

    def pc_and(self):
        left = self.pc_not()
        while self.accept("&&"):
            left = AndPC(left, self.pc_not())
        return left

    def pc_not(self):
        if self.accept("!"):
            return NotPC(self.pc_not())
        return self.pc_primary()

    def pc_primary(self):
        if self.accept("("):
            inner = self.pointcut()
            self.expect(")")
            return inner
        tok = self.peek()
        if self.accept("call"):
            return CallPC(self.pattern_arg())
        if self.accept("execution"):
            return ExecutionPC(self.pattern_arg())
        if self.accept("adviceexecution"):
            self.expect("(")
            if self.accept(")"):
                return AdviceExecutionPC()
            pattern = self.pattern()
            self.expect(")")
            return AdviceExecutionPC(pattern)
        raise self.error(f"expected pointcut designator, found {tok}")

    def pattern_arg(self) -> Pattern:
        self.expect("(")
        pattern = self.pattern()
        self.expect(")")
        return pattern

    def pattern(self) -> Pattern:
        type_pattern = self.pattern_segment()
        self.expect(".")
        return Pattern(type_pattern, self.pattern_segment())

    def pattern_segment(self) -> str:
        """Adjacent identifier, integer and ``*`` tokens, e.g. ``set*`` or ``*``."""
        parts: list[Token] = []
        while True:
            tok = self.peek()
            wordish = tok.kind in ("id", "int") or (tok.kind == "op" and tok.value == "*")
            if not wordish or (parts and tok.start != parts[-1].end):
                break
            parts.append(self.advance())
        if not parts:
            raise self.error(f"expected name pattern, found {self.peek()}")
        return "".join(t.value for t in parts)

    # -- rules files ----------------------------------------------------------------

    def parse_rules_file(self) -> RulesFile:
        pointcuts, bindings = [], []
        while not self.at_eof():
            tok = self.peek()
            if self.accept("pointcut"):
                name = self.qualified_name()
                if "." not in name:
                    raise self.error("pointcut names in rules files are qualified: Aspect.name", tok)
                self.expect(":")
                pointcuts.append(PointcutDef(name, self.pointcut()))
                self.expect(";")
            elif tok.kind == "id" and tok.value in ADVICE_TYPES:
                self.advance()
                aspect = self.expect_id("aspect name")
                self.expect(".")
                ordinal = self.expect_int()
                self.expect(":")
                pc_name = self.qualified_name()
                self.expect(";")
                bindings.append(RuleDecl(f"{aspect}.{ordinal}", tok.value, pc_name))
            else:
                raise self.error(f"expected rule, found {tok}")
        return RulesFile(tuple(pointcuts), tuple(bindings), self.path)


def parse_aspect_file(source: str, path: Optional[str] = None) -> AspectFile:
    return AspectParser(source, path).parse_aspect_file()


def parse_rules_file(source: str, path: Optional[str] = None) -> RulesFile:
    return AspectParser(source, path).parse_rules_file()


# -- bundles --------------------------------------------------------------------------

@dataclass
class InputBundle:
    mechanism: str
    mj_files: list[Path] = field(default_factory=list)
    asp_files: list[Path] = field(default_factory=list)
    rules_files: list[Path] = field(default_factory=list)
    hs_file: Optional[Path] = None
    hm_file: Optional[Path] = None
    entry: Optional[str] = None
    trace: bool = False
    variant: str = "nonreactive"
    step_budget: Optional[int] = None

    @classmethod
    def from_paths(cls, mechanism: str, paths, **options) -> "InputBundle":
        """Classify files by extension; directories contribute their files, sorted."""
        bundle = cls(mechanism, **options)
        for path in expand_paths(paths):
            kind = SOURCE_SUFFIXES.get(path.suffix)
            if kind is None:
                raise MissingInputError(f"{path}: unrecognized file type")
            if kind in ("hs", "hm"):
                if getattr(bundle, f"{kind}_file") is not None:
                    raise MissingInputError(f"{path}: only one .{kind} file is allowed")
                setattr(bundle, f"{kind}_file", path)
            else:
                getattr(bundle, f"{kind}_files").append(path)
        return bundle

    @property
    def files(self) -> list[Path]:
        extra = [p for p in (self.hs_file, self.hm_file) if p is not None]
        return self.mj_files + self.asp_files + self.rules_files + extra


def expand_paths(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.is_file() and q.suffix in SOURCE_SUFFIXES)
        else:
            out.append(p)
    return out


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingInputError(f"{path}: no such file") from None


@dataclass(frozen=True)
class ParsedInputs:
    sources: tuple[SourceFile, ...]
    aspect_files: tuple[AspectFile, ...]
    rules_files: tuple[RulesFile, ...]
    hyperspace_text: Optional[tuple[str, str]]
    hypermodule_text: Optional[tuple[str, str]]


def parse_bundle(bundle: InputBundle) -> ParsedInputs:
    """Parse every file, reporting all syntax errors together."""
    errors: list[ParseError] = []
    sources, aspects, rules = [], [], []
    for path in bundle.mj_files:
        try:
            sources.append(Parser(_read(path), str(path)).parse_file())
        except ParseError as e:
            errors.append(e)
    for path in bundle.asp_files:
        try:
            aspects.append(parse_aspect_file(_read(path), str(path)))
        except ParseError as e:
            errors.append(e)
    for path in bundle.rules_files:
        try:
            rules.append(parse_rules_file(_read(path), str(path)))
        except ParseError as e:
            errors.append(e)
    hs = (_read(bundle.hs_file), str(bundle.hs_file)) if bundle.hs_file else None
    hm = (_read(bundle.hm_file), str(bundle.hm_file)) if bundle.hm_file else None
    if errors:
        raise SyntaxErrors(errors)
    return ParsedInputs(tuple(sources), tuple(aspects), tuple(rules), hs, hm)


def _module_name(module: Optional[str], path: Optional[str]) -> str:
    if module:
        return module
    return Path(path).stem if path else "main"


def normalize_pa_plan(rules) -> WeavingPlan:
    """Canonical rule order, so equal rule sets give equal plans."""
    pointcuts = sorted((r for r in rules if isinstance(r, PointcutDef)), key=lambda r: r.name)
    bindings = sorted((r for r in rules if isinstance(r, AdviceBinding)),
                      key=lambda r: (r.order, r.advice_id))
    types = sorted((r for r in rules if isinstance(r, AdviceTypeRule)), key=lambda r: r.advice_id)
    return WeavingPlan(tuple(pointcuts) + tuple(bindings) + tuple(types))


def read_inputs(bundle: InputBundle) -> tuple[ConcernProgram, WeavingPlan]:
    """READ: concern elements into P, integration rules into ϱ."""
    if bundle.mechanism not in MECHANISMS:
        raise MissingInputError(f"unknown mechanism {bundle.mechanism!r}")
    if not bundle.files:
        raise MissingInputError("no input files")
    parsed = parse_bundle(bundle)
    if bundle.mechanism == "cmp":
        return _read_cmp(bundle, parsed)
    return _read_aspectual(bundle, parsed)


def read_hyperspace(bundle: InputBundle):
    """CMP inputs as a hyperspace and hypermodule spec (what EXPAND consumes)."""
    if bundle.hs_file is None or bundle.hm_file is None:
        raise MissingInputError("cmp needs a .hs hyperspace spec and a .hm hypermodule spec")
    if not bundle.mj_files:
        raise MissingInputError("cmp needs at least one .mj source file")
    parsed = parse_bundle(bundle)
    spec = parse_hyperspace_spec(*parsed.hyperspace_text)
    hm = parse_hypermodule_spec(*parsed.hypermodule_text)
    return build_hyperspace(parsed.sources, spec), hm


def _read_cmp(bundle: InputBundle, parsed: ParsedInputs):
    hyperspace, hm = read_hyperspace(bundle)
    return hyperspace.program(), WeavingPlan((hm,))


def _read_aspectual(bundle: InputBundle, parsed: ParsedInputs):
    modules: dict[str, list] = {}
    class_names: set[str] = set()

    def add_class(module: str, cls: ClassDecl) -> None:
        if cls.name in class_names:
            raise DuplicateClassError(f"class {cls.name} declared in more than one file")
        class_names.add(cls.name)
        modules.setdefault(module, []).append(cls)

    for src in parsed.sources:
        for cls in src.classes:
            add_class(_module_name(src.module, src.path), cls)

    rules: list = []
    effects: list = []
    order = 0
    for af in parsed.aspect_files:
        module = _module_name(af.module, af.path)
        for cls in af.classes:
            add_class(module, cls)
        for aspect in af.aspects:
            if aspect.name in modules or aspect.name in class_names:
                raise DuplicateClassError(f"aspect {aspect.name} clashes with another declaration")
            modules[aspect.name] = list(aspect.advice) + list(aspect.effects)
            rules += aspect.pointcuts
            for advice_id, advice_type, pc_name in aspect.bindings:
                order += 1
                rules.append(AdviceBinding(advice_id, pc_name, order))
                rules.append(AdviceTypeRule(advice_id, advice_type))
            effects += aspect.effects
    for rf in parsed.rules_files:
        rules += rf.pointcuts
        for decl in rf.bindings:
            order += 1
            rules.append(AdviceBinding(decl.advice_id, decl.pointcut_name, order))
            rules.append(AdviceTypeRule(decl.advice_id, decl.advice_type))

    program = ConcernProgram.from_modules(modules)
    if bundle.mechanism == "pa":
        if not bundle.entry:
            raise MissingInputError("pa needs an entry point (--entry C.m)")
        return program, normalize_pa_plan(rules)
    if not effects:
        raise MissingInputError("oc needs at least one .asp file with open-class declarations")
    return program, WeavingPlan(tuple(EffectMapping(e.target, e.effect_id) for e in effects))


def hypermodule_of(plan: WeavingPlan) -> HypermoduleSpec:
    (hm,) = plan.of_type(HypermoduleSpec)
    return hm
