"""
Parser and serializer for the STRIPS subset of PDDL used by the planner.

Supported: ``:strips``, ``:typing`` (flat types, optionally declared as
``- object``) and ``:negative-preconditions``. Everything else (quantifiers,
conditional effects, numeric fluents, constants, derived predicates) is
rejected with an ``UnsupportedFeatureError`` that points at the offending
token.

Keywords are case-insensitive, identifiers keep their case.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from pyparsing import (
    Forward,
    ParseException,
    ParserElement,
    Regex,
    StringEnd,
    Suppress,
    ZeroOrMore,
    col,
    lineno,
    rest_of_line,
)

from planner.exceptions import PDDLParseError, UnsupportedFeatureError


OBJECT_TYPE = "object"
TOOL_PART_TYPE = "tool-part"
JOIN_PREFIX = "join-"

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing", ":negative-preconditions"})

UNSUPPORTED_HEADS = frozenset({
    "or", "imply", "forall", "exists", "when", "=",
    "increase", "decrease", "assign", "scale-up", "scale-down",
    "at", "over",
})
UNSUPPORTED_SECTIONS = frozenset({
    ":constants", ":functions", ":derived", ":durative-action", ":axiom",
    ":constraints", ":metric", ":timed-initial-literals",
})


# ── Model ─────────────────────────────────────────────────────────────────────

class Atom(NamedTuple):
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"


class Literal(NamedTuple):
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"


class TypedName(NamedTuple):
    name: str
    type: str = OBJECT_TYPE


@dataclass(frozen=True)
class PredicateDef:
    name: str
    params: tuple[TypedName, ...]

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[TypedName, ...]
    precondition: tuple[Literal, ...]
    add_effects: tuple[Atom, ...]
    del_effects: tuple[Atom, ...]
    object_param_indices: tuple[int, ...] = ()

    @property
    def is_tool_action(self) -> bool:
        return bool(self.object_param_indices)


@dataclass(frozen=True)
class DomainDef:
    name: str
    requirements: tuple[str, ...]
    types: tuple[str, ...]
    predicates: tuple[PredicateDef, ...]
    action_schemas: tuple[ActionSchema, ...]

    def predicate(self, name: str) -> PredicateDef | None:
        for predicate in self.predicates:
            if predicate.name == name:
                return predicate
        return None

    def schema(self, name: str) -> ActionSchema | None:
        for schema in self.action_schemas:
            if schema.name == name:
                return schema
        return None

    def is_type(self, name: str) -> bool:
        return name == OBJECT_TYPE or name in self.types


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...]
    init: frozenset[Atom]
    goal: tuple[Literal, ...]

    def object_type(self, name: str) -> str | None:
        for obj in self.objects:
            if obj.name == name:
                return obj.type
        return None


# ── Reader ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Token:
    value: str
    line: int
    column: int

    @property
    def keyword(self) -> str:
        return self.value.lower()


@dataclass
class SList:
    items: list
    line: int
    column: int


def _sexpr_grammar() -> ParserElement:
    atom = Regex(r"[^()\s;]+").set_parse_action(lambda s, loc, toks: Token(toks[0], lineno(loc, s), col(loc, s)))
    nested = Forward()
    nested <<= (Suppress("(") + ZeroOrMore(atom | nested) + Suppress(")")).set_parse_action(
        lambda s, loc, toks: SList(list(toks), lineno(loc, s), col(loc, s))
    )
    document = nested + StringEnd()
    document.ignore(";" + rest_of_line)
    return document


SEXPR = _sexpr_grammar()


def read_sexpr(text: str) -> SList:
    """Reads exactly one parenthesised form; comments run from ``;`` to the end of the line."""
    try:
        return SEXPR.parse_string(text)[0]
    except ParseException as exc:
        raise PDDLParseError(f"malformed s-expression: {exc.msg}, found {_found(exc)}", exc.lineno, exc.col) from None


def _found(exc: ParseException) -> str:
    rest = exc.line[exc.col - 1:].strip()
    return f"'{rest.split()[0]}'" if rest else "end of input"


def _where(node) -> tuple[int, int]:
    return node.line, node.column


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PDDLParseError(f"expected {what}, got '{node.value}'", *_where(node))
    return node


def _expect_token(node, what: str) -> Token:
    if not isinstance(node, Token):
        raise PDDLParseError(f"expected {what}, got a list", *_where(node))
    return node


def _head(node: SList) -> Token | None:
    if node.items and isinstance(node.items[0], Token):
        return node.items[0]
    return None


def _parse_typed_list(items: list, variables: bool) -> list[TypedName]:
    result: list[TypedName] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        token = _expect_token(items[i], "a name")
        if token.value == "-":
            if i + 1 >= len(items):
                raise PDDLParseError("missing type after '-'", token.line, token.column)
            type_node = items[i + 1]
            if isinstance(type_node, SList):
                head = _head(type_node)
                raise UnsupportedFeatureError(
                    f"'{head.value if head else '()'}' types", *_where(type_node)
                )
            if not pending:
                raise PDDLParseError("type given without names", token.line, token.column)
            result.extend(TypedName(t.value, type_node.value) for t in pending)
            pending = []
            i += 2
            continue
        if variables and not token.value.startswith("?"):
            raise PDDLParseError(f"expected a variable, got '{token.value}'", token.line, token.column)
        pending.append(token)
        i += 1
    result.extend(TypedName(t.value, OBJECT_TYPE) for t in pending)
    return result


def _flatten_formula(node, positive_only: bool = False) -> list[tuple[SList, bool]]:
    """Flatten a conjunction into ``(atom-node, positive)`` pairs."""
    node = _expect_list(node, "a formula")
    if not node.items:
        return []
    head = _head(node)
    if head is None:
        raise PDDLParseError("expected a predicate or connective", *_where(node))
    keyword = head.keyword
    if keyword == "and":
        result = []
        for child in node.items[1:]:
            result.extend(_flatten_formula(child, positive_only))
        return result
    if keyword == "not":
        if positive_only:
            raise UnsupportedFeatureError("negation here", head.line, head.column)
        if len(node.items) != 2:
            raise PDDLParseError("'not' takes exactly one argument", head.line, head.column)
        inner = _expect_list(node.items[1], "an atom")
        inner_head = _head(inner)
        if inner_head is None or inner_head.keyword in UNSUPPORTED_HEADS or inner_head.keyword in ("and", "not"):
            raise UnsupportedFeatureError("negated compound formulas", *_where(inner))
        return [(inner, False)]
    if keyword in UNSUPPORTED_HEADS:
        raise UnsupportedFeatureError(f"'{head.value}'", head.line, head.column)
    return [(node, True)]


def _atom_from(node: SList) -> tuple[Atom, Token]:
    head = _head(node)
    args = []
    for item in node.items[1:]:
        args.append(_expect_token(item, "a term").value)
    return Atom(head.value, tuple(args)), head


def _check_requirements(items: list) -> tuple[str, ...]:
    requirements = []
    for item in items:
        token = _expect_token(item, "a requirement")
        if token.keyword not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedFeatureError(f"requirement {token.value}", token.line, token.column)
        requirements.append(token.keyword)
    return tuple(requirements)


def _define_header(root: SList, kind: str) -> tuple[Token, list]:
    head = _head(root)
    if head is None or head.keyword != "define":
        raise PDDLParseError("expected (define ...)", *_where(root))
    if len(root.items) < 2:
        raise PDDLParseError(f"missing ({kind} <name>)", *_where(root))
    header = _expect_list(root.items[1], f"({kind} <name>)")
    header_head = _head(header)
    if header_head is None or header_head.keyword != kind or len(header.items) != 2:
        raise PDDLParseError(f"expected ({kind} <name>)", *_where(header))
    return _expect_token(header.items[1], f"a {kind} name"), root.items[2:]


def _section(node) -> tuple[Token, SList]:
    node = _expect_list(node, "a section")
    head = _head(node)
    if head is None or not head.value.startswith(":"):
        raise PDDLParseError("expected a ':section'", *_where(node))
    if head.keyword in UNSUPPORTED_SECTIONS:
        raise UnsupportedFeatureError(f"section {head.value}", head.line, head.column)
    return head, node


# ── Domain ────────────────────────────────────────────────────────────────────

def parse_domain(text: str, tool_actions: Iterable[str] = ()) -> DomainDef:
    """
    Parse a domain definition.

    Schemas named ``join-<tool>`` (and any schema named in ``tool_actions``)
    designate their ``tool-part`` parameters, in declaration order, as the
    object parameters O_a.
    """
    tool_actions = frozenset(tool_actions)
    root = read_sexpr(text)
    name, sections = _define_header(root, "domain")

    requirements: tuple[str, ...] = ()
    types: list[str] = []
    predicates: dict[str, PredicateDef] = {}
    raw_actions: list[SList] = []
    declared_at: dict[str, Token] = {}

    for node in sections:
        head, section = _section(node)
        keyword = head.keyword
        if keyword == ":requirements":
            requirements = _check_requirements(section.items[1:])
        elif keyword == ":types":
            for typed in _parse_typed_list(section.items[1:], variables=False):
                if typed.type != OBJECT_TYPE:
                    raise UnsupportedFeatureError(
                        f"type hierarchy ({typed.name} - {typed.type})", head.line, head.column
                    )
                if typed.name != OBJECT_TYPE and typed.name not in types:
                    types.append(typed.name)
        elif keyword == ":predicates":
            for item in section.items[1:]:
                item = _expect_list(item, "a predicate declaration")
                pred_head = _head(item)
                if pred_head is None:
                    raise PDDLParseError("expected a predicate name", *_where(item))
                params = _parse_typed_list(item.items[1:], variables=True)
                predicates[pred_head.value] = PredicateDef(pred_head.value, tuple(params))
                declared_at[pred_head.value] = pred_head
        elif keyword == ":action":
            raw_actions.append(section)
        else:
            raise UnsupportedFeatureError(f"section {head.value}", head.line, head.column)

    declared_types = set(types) | {OBJECT_TYPE}
    for predicate in predicates.values():
        for param in predicate.params:
            if param.type not in declared_types:
                raise PDDLParseError(
                    f"undeclared type '{param.type}' in predicate '{predicate.name}'",
                    *_where(declared_at[predicate.name]),
                )

    schemas = tuple(
        _parse_action(section, predicates, declared_types, requirements, tool_actions)
        for section in raw_actions
    )
    return DomainDef(
        name=name.value,
        requirements=requirements,
        types=tuple(types),
        predicates=tuple(predicates.values()),
        action_schemas=schemas,
    )


def _parse_action(
    section: SList,
    predicates: dict[str, PredicateDef],
    declared_types: set[str],
    requirements: tuple[str, ...],
    tool_actions: frozenset[str],
) -> ActionSchema:
    if len(section.items) < 2:
        raise PDDLParseError("action without a name", *_where(section))
    name = _expect_token(section.items[1], "an action name").value
    params: list[TypedName] = []
    precondition: list[Literal] = []
    adds: list[Atom] = []
    dels: list[Atom] = []

    rest = section.items[2:]
    if len(rest) % 2:
        raise PDDLParseError(f"action '{name}': expected ':key value' pairs", *_where(section))
    fields = {}
    for key_node, value in zip(rest[::2], rest[1::2]):
        key = _expect_token(key_node, "an action key")
        fields[key.keyword] = (key, value)
    for key, (token, _) in fields.items():
        if key not in (":parameters", ":precondition", ":effect"):
            raise UnsupportedFeatureError(f"action key {token.value}", token.line, token.column)

    if ":parameters" in fields:
        params = _parse_typed_list(_expect_list(fields[":parameters"][1], "a parameter list").items, variables=True)
    param_types = {}
    for param in params:
        if param.type not in declared_types:
            raise PDDLParseError(f"action '{name}': undeclared type '{param.type}'", *_where(section))
        if param.name in param_types:
            raise PDDLParseError(f"action '{name}': duplicate parameter '{param.name}'", *_where(section))
        param_types[param.name] = param.type

    def build(node: SList) -> Atom:
        atom, head = _atom_from(node)
        predicate = predicates.get(atom.predicate)
        if predicate is None:
            raise PDDLParseError(
                f"action '{name}': undeclared predicate '{atom.predicate}'", head.line, head.column
            )
        if predicate.arity != len(atom.args):
            raise PDDLParseError(
                f"action '{name}': predicate '{atom.predicate}' expects {predicate.arity} "
                f"argument(s), got {len(atom.args)}",
                head.line, head.column,
            )
        for arg, declared in zip(atom.args, predicate.params):
            if arg not in param_types:
                raise PDDLParseError(f"action '{name}': unknown parameter '{arg}'", head.line, head.column)
            if declared.type != OBJECT_TYPE and param_types[arg] != declared.type:
                raise PDDLParseError(
                    f"action '{name}': '{arg}' has type '{param_types[arg]}', "
                    f"'{atom.predicate}' expects '{declared.type}'",
                    head.line, head.column,
                )
        return atom

    if ":precondition" in fields:
        for node, positive in _flatten_formula(fields[":precondition"][1]):
            if not positive and ":negative-preconditions" not in requirements:
                raise PDDLParseError(
                    f"action '{name}': negative precondition requires :negative-preconditions",
                    *_where(node),
                )
            precondition.append(Literal(build(node), positive))
    if ":effect" in fields:
        for node, positive in _flatten_formula(fields[":effect"][1]):
            (adds if positive else dels).append(build(node))

    indices: tuple[int, ...] = ()
    if name.lower().startswith(JOIN_PREFIX) or name in tool_actions:
        indices = tuple(i for i, param in enumerate(params) if param.type == TOOL_PART_TYPE)
    return ActionSchema(
        name=name,
        params=tuple(params),
        precondition=tuple(precondition),
        add_effects=tuple(adds),
        del_effects=tuple(dels),
        object_param_indices=indices,
    )


# ── Problem ───────────────────────────────────────────────────────────────────

def parse_problem(text: str, domain: DomainDef) -> ProblemDef:
    root = read_sexpr(text)
    name, sections = _define_header(root, "problem")

    domain_name = None
    objects: list[TypedName] = []
    init: set[Atom] = set()
    goal: list[Literal] = []
    object_types: dict[str, str] = {}

    def check(node: SList) -> Atom:
        atom, head = _atom_from(node)
        predicate = domain.predicate(atom.predicate)
        if predicate is None:
            raise PDDLParseError(f"undeclared predicate '{atom.predicate}'", head.line, head.column)
        if predicate.arity != len(atom.args):
            raise PDDLParseError(
                f"predicate '{atom.predicate}' expects {predicate.arity} argument(s), got {len(atom.args)}",
                head.line, head.column,
            )
        for arg, declared in zip(atom.args, predicate.params):
            if arg not in object_types:
                raise PDDLParseError(f"unknown object '{arg}'", head.line, head.column)
            if declared.type != OBJECT_TYPE and object_types[arg] != declared.type:
                raise PDDLParseError(
                    f"object '{arg}' has type '{object_types[arg]}', "
                    f"'{atom.predicate}' expects '{declared.type}'",
                    head.line, head.column,
                )
        return atom

    deferred: list[tuple[Token, SList]] = []
    for node in sections:
        head, section = _section(node)
        keyword = head.keyword
        if keyword == ":domain":
            domain_name = _expect_token(section.items[1], "a domain name").value if len(section.items) > 1 else None
            if domain_name != domain.name:
                raise PDDLParseError(
                    f"problem is for domain '{domain_name}', parsed domain is '{domain.name}'",
                    head.line, head.column,
                )
        elif keyword == ":requirements":
            _check_requirements(section.items[1:])
        elif keyword == ":objects":
            for typed in _parse_typed_list(section.items[1:], variables=False):
                if not domain.is_type(typed.type):
                    raise PDDLParseError(f"object '{typed.name}': undeclared type '{typed.type}'", head.line, head.column)
                if typed.name in object_types:
                    raise PDDLParseError(f"duplicate object '{typed.name}'", head.line, head.column)
                object_types[typed.name] = typed.type
                objects.append(typed)
        elif keyword in (":init", ":goal"):
            deferred.append((head, section))
        else:
            raise UnsupportedFeatureError(f"section {head.value}", head.line, head.column)

    if domain_name is None:
        raise PDDLParseError("missing (:domain <name>)", *_where(root))

    for head, section in deferred:
        if head.keyword == ":init":
            for item in section.items[1:]:
                item = _expect_list(item, "an initial atom")
                item_head = _head(item)
                if item_head is not None and item_head.keyword == "not":
                    raise UnsupportedFeatureError("negative initial atoms", item_head.line, item_head.column)
                if item_head is not None and item_head.keyword in UNSUPPORTED_HEADS:
                    raise UnsupportedFeatureError(f"'{item_head.value}' in :init", item_head.line, item_head.column)
                init.add(check(item))
        else:
            if len(section.items) > 2:
                raise PDDLParseError(":goal takes one formula", head.line, head.column)
            if len(section.items) == 2:
                for node, positive in _flatten_formula(section.items[1]):
                    goal.append(Literal(check(node), positive))

    return ProblemDef(
        name=name.value,
        domain_name=domain_name,
        objects=tuple(objects),
        init=frozenset(init),
        goal=tuple(goal),
    )


def parse_domain_file(path: str | Path, tool_actions: Iterable[str] = ()) -> DomainDef:
    return parse_domain(Path(path).read_text(encoding="utf-8"), tool_actions)


def parse_problem_file(path: str | Path, domain: DomainDef) -> ProblemDef:
    return parse_problem(Path(path).read_text(encoding="utf-8"), domain)


# ── Writer ────────────────────────────────────────────────────────────────────

def _typed(names: Iterable[TypedName]) -> str:
    return " ".join(f"{item.name} - {item.type}" for item in names)


def _conjunction(parts: list[str]) -> str:
    if not parts:
        return "(and)"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def serialize_domain(domain: DomainDef) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        lines.append(f"  (:types {' '.join(domain.types)})")
    lines.append("  (:predicates")
    for predicate in domain.predicates:
        params = _typed(predicate.params)
        lines.append(f"    ({predicate.name}{' ' + params if params else ''})")
    lines.append("  )")
    for schema in domain.action_schemas:
        lines.append(f"  (:action {schema.name}")
        lines.append(f"    :parameters ({_typed(schema.params)})")
        lines.append(f"    :precondition {_conjunction([str(lit) for lit in schema.precondition])}")
        effects = [str(atom) for atom in schema.add_effects] + [f"(not {atom})" for atom in schema.del_effects]
        lines.append(f"    :effect {_conjunction(effects)})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def serialize_problem(problem: ProblemDef) -> str:
    lines = [
        f"(define (problem {problem.name})",
        f"  (:domain {problem.domain_name})",
        f"  (:objects {_typed(problem.objects)})",
        "  (:init",
    ]
    for atom in sorted(problem.init, key=str):
        lines.append(f"    {atom}")
    lines.append("  )")
    lines.append(f"  (:goal {_conjunction([str(lit) for lit in problem.goal])})")
    lines.append(")")
    return "\n".join(lines) + "\n"
