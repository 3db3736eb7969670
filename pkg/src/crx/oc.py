"""Open classes: member introduction and ``declare parents`` effects.

Two weaving processes produce the same composed program:

* :class:`OCNonreactive` walks the concern program's types, picks each
  type's effects through the plan and commits the transformed type.  It
  never reads X.
* :class:`OCReactive` grows a composed AST (root, type name, type
  declaration, type member) from a single open root.  Each step selects an
  open node from X, takes its base children from P, turns the effects mapped
  to it into extra children and commits both.  It ends when nothing is open.

Both variants collect every error they encounter and raise the one with the
highest precedence (unknown target, ambiguous parent, member collision,
inheritance cycle), so an invalid input fails the same way in either.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from crx.errors import (
    AmbiguousParentError,
    CRXError,
    InheritanceCycleError,
    MechanismError,
    MemberCollisionError,
    UnknownTargetError,
)
from crx.kernel import (
    ComposedElement,
    ConcernProgram,
    NonreactiveProcess,
    Provenance,
    ReactiveProcess,
    WeavingPlan,
    run_weaving,
)
from crx.lang.interp import validate_program
from crx.lang.syntax import ClassDecl, FieldDecl, MethodDecl, canonical_program

NONREACTIVE, REACTIVE = "nonreactive", "reactive"


# -- effects and rules ------------------------------------------------------------

@dataclass(frozen=True)
class MemberIntro:
    effect_id: str
    target: str
    member: Union[FieldDecl, MethodDecl]


@dataclass(frozen=True)
class SuperTypeDecl:
    effect_id: str
    target: str
    new_super: str


OCEffect = Union[MemberIntro, SuperTypeDecl]


@dataclass(frozen=True)
class EffectMapping:
    """Plan entry: apply effect ``effect_id`` to type ``target``."""

    target: str
    effect_id: str


def oc_program(classes, effects=(), modules: Optional[dict] = None) -> ConcernProgram:
    if modules is not None:
        return ConcernProgram.from_modules(modules)
    blocks: dict[str, list] = {}
    for cls in classes:
        blocks.setdefault(cls.name, []).append(cls)
    for e in effects:
        blocks.setdefault(e.effect_id.rpartition(".")[0] or "effects", []).append(e)
    return ConcernProgram.from_modules(blocks)


def oc_plan(effects) -> WeavingPlan:
    return WeavingPlan(tuple(EffectMapping(e.target, e.effect_id) for e in effects))


# -- error bookkeeping --------------------------------------------------------------

_PRECEDENCE = (UnknownTargetError, AmbiguousParentError, MemberCollisionError, InheritanceCycleError)


def _rank(err: CRXError) -> tuple:
    for i, kind in enumerate(_PRECEDENCE):
        if isinstance(err, kind):
            return (i, str(err))
    return (len(_PRECEDENCE), str(err))


def _raise_first(errors: list) -> None:
    if errors:
        raise min(errors, key=_rank)


def _unknown_target(effect_id: str, target: str) -> UnknownTargetError:
    return UnknownTargetError(f"effect {effect_id} targets undeclared type {target}")


def _unknown_super(effect_id: str, target: str, new_super: str) -> UnknownTargetError:
    return UnknownTargetError(f"effect {effect_id} makes {target} extend undeclared type {new_super}")


def _ambiguous(target: str, supers) -> AmbiguousParentError:
    return AmbiguousParentError(f"type {target} given several parents: {', '.join(sorted(supers))}")


def _collision(target: str, member) -> MemberCollisionError:
    if isinstance(member, FieldDecl):
        return MemberCollisionError(f"field {target}.{member.name} already declared")
    return MemberCollisionError(f"method {target}.{member.name}/{member.arity} already declared")


def _cycle_errors(supers: dict[str, Optional[str]]) -> list:
    for start in sorted(supers):
        seen = {start}
        cur = supers.get(start)
        while cur is not None and cur in supers:
            if cur in seen:
                return [InheritanceCycleError(f"inheritance cycle through {cur}")]
            seen.add(cur)
            cur = supers[cur]
    return []


def _member_key(member) -> tuple:
    if isinstance(member, FieldDecl):
        return ("field", member.name)
    return ("method", member.name, member.arity)


def _split(elements):
    classes = [e for e in elements if isinstance(e, ClassDecl)]
    effects = {e.effect_id: e for e in elements if isinstance(e, (MemberIntro, SuperTypeDecl))}
    return classes, effects


def _resolve_rules(rules, effects: dict) -> tuple[list, list]:
    """Pair each mapping with its effect; collect mappings that do not resolve."""
    pairs, errors = [], []
    for rule in rules:
        if not isinstance(rule, EffectMapping):
            continue
        effect = effects.get(rule.effect_id)
        if effect is None:
            errors.append(UnknownTargetError(f"mapping for {rule.target} names undeclared effect {rule.effect_id}"))
        elif effect.target != rule.target:
            errors.append(UnknownTargetError(
                f"effect {rule.effect_id} declared for {effect.target} but mapped to {rule.target}"))
        else:
            pairs.append((rule, effect))
    return pairs, errors


# -- nonreactive ------------------------------------------------------------------------

@dataclass(frozen=True)
class TypeTransform:
    """Provenance rule: apply these effects, in order, to one concern type."""

    target: str
    effect_ids: tuple[str, ...]

    def mix(self, matched: tuple) -> ClassDecl:
        cls, *effects = matched
        if cls.name != self.target or tuple(e.effect_id for e in effects) != self.effect_ids:
            raise MechanismError("matched elements do not fit the transform")
        supers = {e.new_super for e in effects if isinstance(e, SuperTypeDecl)}
        if len(supers) > 1:
            raise _ambiguous(cls.name, supers)
        super_name = supers.pop() if supers else cls.super_name
        fields = list(cls.fields)
        methods = list(cls.methods)
        for e in effects:
            if not isinstance(e, MemberIntro):
                continue
            m = e.member
            if isinstance(m, FieldDecl):
                if any(f.name == m.name for f in fields):
                    raise _collision(cls.name, m)
                fields.append(m)
            else:
                if any(x.signature == m.signature for x in methods):
                    raise _collision(cls.name, m)
                methods.append(m)
        return ClassDecl(cls.name, super_name, tuple(fields), tuple(methods))


class OCNonreactive(NonreactiveProcess):
    """Iterate over P's types; transform each by its mapped effects."""

    def weave(self, c, r, x, step):
        classes, effects = _split(c.read_all())
        validate_program(classes)
        pairs, errors = _resolve_rules(r.read_all(), effects)
        names = {cls.name for cls in classes}
        for rule, effect in pairs:
            if rule.target not in names:
                errors.append(_unknown_target(effect.effect_id, rule.target))
            elif isinstance(effect, SuperTypeDecl) and effect.new_super not in names:
                errors.append(_unknown_super(effect.effect_id, rule.target, effect.new_super))

        supers: dict[str, Optional[str]] = {}
        for cls in sorted(classes, key=lambda k: k.name):
            selected = tuple(e for rule, e in pairs if rule.target == cls.name)
            transform = TypeTransform(cls.name, tuple(e.effect_id for e in selected))
            matched = (cls, *selected)
            try:
                woven = transform.mix(matched)
            except (AmbiguousParentError, MemberCollisionError) as err:
                errors.append(err)
                supers[cls.name] = cls.super_name
                step()
                continue
            supers[cls.name] = woven.super_name
            x.append(ComposedElement(woven, Provenance(transform, matched)))
            step()
        errors += _cycle_errors(supers)
        _raise_first(errors)

    def assemble(self, elements, sealed) -> tuple:
        return tuple(e.payload for e in elements if isinstance(e.payload, ClassDecl))


# -- reactive ------------------------------------------------------------------------------

@dataclass(frozen=True)
class RootNode:
    pass


@dataclass(frozen=True)
class TypeNameNode:
    name: str


@dataclass(frozen=True)
class TypeDeclNode:
    name: str
    super_name: Optional[str]


@dataclass(frozen=True)
class MemberNode:
    type_name: str
    member: Union[FieldDecl, MethodDecl]


def _level(node) -> int:
    if isinstance(node, RootNode):
        return 0
    if isinstance(node, TypeNameNode):
        return 1
    if isinstance(node, TypeDeclNode):
        return 2
    return 3


def _node_name(node) -> str:
    return getattr(node, "name", "")


@dataclass(frozen=True)
class ProgramSeed:
    """Stand-in for the concern program as a whole (what the root is built from)."""


@dataclass(frozen=True)
class RootRule:
    def mix(self, matched: tuple) -> RootNode:
        return RootNode()


@dataclass(frozen=True)
class BaseChildRule:
    """A child copied from P: a type name, a type declaration, or a declared member."""

    kind: str  # "typeName", "typeDeclaration", "member"
    key: tuple = ()

    def mix(self, matched: tuple):
        (cls,) = matched
        if self.kind == "typeName":
            return TypeNameNode(cls.name)
        if self.kind == "typeDeclaration":
            return TypeDeclNode(cls.name, cls.super_name)
        for m in cls.fields + cls.methods:
            if _member_key(m) == self.key:
                return MemberNode(cls.name, m)
        raise MechanismError(f"{cls.name} has no member {self.key}")


@dataclass(frozen=True)
class ParentRule:
    """Type declaration whose superclass comes from ``declare parents`` effects."""

    effect_ids: tuple[str, ...]

    def mix(self, matched: tuple) -> TypeDeclNode:
        cls, *effects = matched
        supers = {e.new_super for e in effects}
        if len(supers) != 1:
            raise _ambiguous(cls.name, supers)
        return TypeDeclNode(cls.name, supers.pop())


@dataclass(frozen=True)
class IntroRule:
    effect_id: str

    def mix(self, matched: tuple) -> MemberNode:
        (effect,) = matched
        return MemberNode(effect.target, effect.member)


class OCReactive(ReactiveProcess):
    """Grow the composed AST from an open root until every node is closed."""

    def weave(self, c, r, x, step):
        classes, effects = _split(c.read_all())
        validate_program(classes)
        by_name = {cls.name: cls for cls in classes}
        pairs, errors = _resolve_rules(r.read_all(), effects)
        consumed: set[str] = set()

        x.append(ComposedElement(RootNode(), Provenance(RootRule(), (ProgramSeed(),))))
        while True:
            parent_index = self._select(x)
            if parent_index is None:
                break
            step()
            parent = x.read(parent_index).payload

            if isinstance(parent, RootNode):
                # OC never adds or removes types: root children are P's type names.
                for cls in sorted(classes, key=lambda k: k.name):
                    x.append(ComposedElement(TypeNameNode(cls.name),
                                             Provenance(BaseChildRule("typeName"), (cls,))))

            elif isinstance(parent, TypeNameNode):
                cls = by_name[parent.name]
                advice = [e for rule, e in pairs
                          if rule.target == parent.name and isinstance(e, SuperTypeDecl)]
                consumed.update(e.effect_id for e in advice)
                known = self._type_names(x)
                for e in advice:
                    if e.new_super not in known:
                        errors.append(_unknown_super(e.effect_id, parent.name, e.new_super))
                supers = {e.new_super for e in advice}
                if len(supers) > 1:
                    errors.append(_ambiguous(parent.name, supers))
                    node = ComposedElement(TypeDeclNode(cls.name, cls.super_name),
                                           Provenance(BaseChildRule("typeDeclaration"), (cls,)))
                elif supers:
                    rule = ParentRule(tuple(e.effect_id for e in advice))
                    matched = (cls, *advice)
                    node = ComposedElement(rule.mix(matched), Provenance(rule, matched))
                else:
                    node = ComposedElement(TypeDeclNode(cls.name, cls.super_name),
                                           Provenance(BaseChildRule("typeDeclaration"), (cls,)))
                x.append(node)

            elif isinstance(parent, TypeDeclNode):
                cls = by_name[parent.name]
                base = [ComposedElement(MemberNode(cls.name, m),
                                        Provenance(BaseChildRule("member", _member_key(m)), (cls,)))
                        for m in cls.fields + cls.methods]
                advice = [e for rule, e in pairs
                          if rule.target == parent.name and isinstance(e, MemberIntro)]
                consumed.update(e.effect_id for e in advice)
                taken = {_member_key(n.payload.member) for n in base}
                children = list(base)
                for e in advice:
                    key = _member_key(e.member)
                    if key in taken:
                        errors.append(_collision(parent.name, e.member))
                        continue
                    taken.add(key)
                    children.append(ComposedElement(MemberNode(parent.name, e.member),
                                                    Provenance(IntroRule(e.effect_id), (e,))))
                for child in children:
                    x.seal(x.append(child))  # type members are born closed

            x.seal(parent_index)

        for rule, effect in pairs:
            if effect.effect_id not in consumed:
                errors.append(_unknown_target(effect.effect_id, rule.target))
        supers = {n.name: n.super_name for n in self._payloads(x) if isinstance(n, TypeDeclNode)}
        errors += _cycle_errors(supers)
        _raise_first(errors)

    @staticmethod
    def _select(x) -> Optional[int]:
        """Breadth-first, then lexicographic, among open nodes."""
        best, best_key = None, None
        for i in range(x.size()):
            if x.is_sealed(i):
                continue
            node = x.read(i).payload
            key = (_level(node), _node_name(node))
            if best_key is None or key < best_key:
                best, best_key = i, key
        return best

    @staticmethod
    def _payloads(x):
        return [e.payload for e in x.read_all()]

    def _type_names(self, x) -> set[str]:
        return {n.name for n in self._payloads(x) if isinstance(n, TypeNameNode)}

    def assemble(self, elements, sealed) -> tuple:
        decls = [e.payload for e in elements if isinstance(e.payload, TypeDeclNode)]
        members = [e.payload for e in elements if isinstance(e.payload, MemberNode)]
        classes = []
        for d in sorted(decls, key=lambda n: n.name):
            mine = [m.member for m in members if m.type_name == d.name]
            classes.append(ClassDecl(
                d.name, d.super_name,
                tuple(m for m in mine if isinstance(m, FieldDecl)),
                tuple(m for m in mine if isinstance(m, MethodDecl)),
            ))
        return tuple(classes)


# -- entry points ---------------------------------------------------------------------------

def weave_oc_nonreactive(program: ConcernProgram, plan: WeavingPlan, **kwargs):
    return run_weaving(OCNonreactive(), program, plan, **kwargs)


def weave_oc_reactive(program: ConcernProgram, plan: WeavingPlan, **kwargs):
    return run_weaving(OCReactive(), program, plan, **kwargs)


def weave_oc(program: ConcernProgram, plan: WeavingPlan, variant: str = NONREACTIVE, **kwargs):
    if variant == NONREACTIVE:
        return weave_oc_nonreactive(program, plan, **kwargs)
    if variant == REACTIVE:
        return weave_oc_reactive(program, plan, **kwargs)
    raise ValueError(f"unknown open-classes variant {variant!r}")


@dataclass(frozen=True)
class DualityReport:
    ok: bool
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_duality(program: ConcernProgram, plan: WeavingPlan) -> DualityReport:
    """Run both variants; they must agree on the canonical result or the error kind."""
    outcomes = []
    for weave in (weave_oc_nonreactive, weave_oc_reactive):
        try:
            outcomes.append(canonical_program(weave(program, plan).program.classes))
        except CRXError as err:
            outcomes.append(err)
    left, right = outcomes
    if isinstance(left, CRXError) or isinstance(right, CRXError):
        if type(left) is type(right):
            return DualityReport(True, f"both variants fail with {type(left).__name__}")
        return DualityReport(False, f"nonreactive: {left!r}; reactive: {right!r}")
    if left == right:
        return DualityReport(True)
    diff = []
    lmap = {c.name: c for c in left}
    rmap = {c.name: c for c in right}
    for name in sorted(set(lmap) | set(rmap)):
        if lmap.get(name) != rmap.get(name):
            diff.append(f"{name}: nonreactive={lmap.get(name)!r} reactive={rmap.get(name)!r}")
    return DualityReport(False, "; ".join(diff))
