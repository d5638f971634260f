"""The code structure: a mutable project/package/scope graph.

Scopes house variables, logical types, streamlets, implementations, ports,
instances and connections, and are linked by typed scope relationships that
govern which name categories may resolve through them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .errors import ResolutionError, Span, TydiError
from .tree import AstNode
from .values import Value


class ScopeRelationKind(enum.Enum):
    GROUP = "GroupScope"
    UNION = "UnionScope"
    STREAM = "StreamScope"
    STREAMLET = "StreamletScope"
    IMPLEMENT = "ImplementScope"
    IFFOR = "IfForScope"


# Which relation kinds each name category may traverse during resolution.
# Ports and instances never traverse; if/for relations are dissolved by the
# generative expansion and are never traversed by ordinary resolution.
_VALUE_RELATIONS = frozenset({
    ScopeRelationKind.GROUP, ScopeRelationKind.UNION, ScopeRelationKind.STREAM,
    ScopeRelationKind.STREAMLET, ScopeRelationKind.IMPLEMENT,
})
TRAVERSABLE = {
    "variable": _VALUE_RELATIONS,
    "type": _VALUE_RELATIONS,
    "streamlet": frozenset({ScopeRelationKind.IMPLEMENT}),
    "implementation": frozenset({ScopeRelationKind.IMPLEMENT}),
    "port": frozenset(),
    "instance": frozenset(),
}

_CATEGORY_MAPS = {
    "variable": "variables",
    "type": "types",
    "streamlet": "streamlets",
    "implementation": "implements",
    "port": "ports",
    "instance": "instances",
}


class EvalState(enum.Enum):
    NOT_INFERRED = "NotInferred"
    EVALUATED = "Evaluated"
    ERROR = "Error"


@dataclass
class Variable:
    id: str
    raw: str  # source text of the initializer, "" when absent
    scope: Optional["Scope"] = None
    declared_kind: Optional[str] = None  # int/str/float/bool/clockdomain
    expr_ast: Optional[AstNode] = None
    dump_tag: Optional[str] = None  # display tag when not yet evaluated
    is_magic: bool = False
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    value: Optional[Value] = None
    error: Optional[TydiError] = None

    def label(self) -> str:
        owner = self.scope.name if self.scope else "?"
        return f"{owner}.{self.id}"


@dataclass
class TypeEntry:
    id: str
    ast: Optional[AstNode]  # the logical-type expression; None for bound args
    scope: Optional["Scope"] = None  # defining scope (resolution starts here)
    own_scope: Optional["Scope"] = None  # group/union inner scope, if any
    field_names: list[str] = field(default_factory=list)  # group/union order
    asserts: list[AstNode] = field(default_factory=list)
    src_text: str = ""  # source the AST spans index into (for dumps)
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    evaluated: object = None  # LogicalType
    error: Optional[TydiError] = None
    alias_of: Optional["TypeEntry"] = None  # set for bound template args
    terminal: object = None  # declaration identity used by strict type checks

    def label(self) -> str:
        owner = self.scope.name if self.scope else "?"
        return f"{owner}.{self.id}"


@dataclass
class TemplateParam:
    name: str
    kind: str  # int/str/float/bool/clockdomain/type/impl
    impl_of: Optional[str] = None  # streamlet name for impl-of parameters


@dataclass
class Port:
    name: str
    type_ast: AstNode
    raw_type: str
    direction: str  # in | out
    array_size_ast: Optional[AstNode] = None
    raw_size: Optional[str] = None
    cd_ast: Optional[AstNode] = None
    raw_cd: Optional[str] = None
    span: Optional[Span] = None
    # evaluated:
    state: EvalState = EvalState.NOT_INFERRED
    logical_type: object = None
    type_terminal: object = None  # strictness identity (TypeEntry or LogicalType)
    array_size: Optional[int] = None
    clockdomain: Optional[Value] = None


@dataclass
class Streamlet:
    id: str
    scope: "Scope"
    doc: Optional[str] = None
    template_params: list[TemplateParam] = field(default_factory=list)
    ports: dict[str, Port] = field(default_factory=dict)
    asserts: list[AstNode] = field(default_factory=list)
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    error: Optional[TydiError] = None

    @property
    def is_template(self) -> bool:
        return bool(self.template_params)

    def label(self) -> str:
        return f"streamlet {self.id}"


@dataclass
class Instance:
    name: str
    target_ast: Optional[AstNode] = None  # None for compiler-inserted instances
    raw_target: str = ""
    array_size_ast: Optional[AstNode] = None
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    target: Optional["Implementation"] = None
    array_size: Optional[int] = None


@dataclass
class EndRef:
    owner_ast: Optional[AstNode]  # None for Self ends
    owner_index_ast: Optional[AstNode]
    port_ast: AstNode
    port_index_ast: Optional[AstNode]
    raw_owner: Optional[str] = None
    raw_port: str = ""
    # resolved:
    owner_name: Optional[str] = None
    owner_index: Optional[int] = None
    port_name: Optional[str] = None
    port_index: Optional[int] = None
    instance: Optional[Instance] = None
    port: Optional[Port] = None

    @property
    def is_self(self) -> bool:
        return self.owner_ast is None and self.owner_name is None \
            and self.instance is None

    def key(self):
        """Identity of the port end for census and single-use checks."""
        return (self.owner_name, self.owner_index, self.port_name, self.port_index)

    def display(self) -> str:
        owner = "Self" if self.is_self else (
            f"{self.owner_name}[{self.owner_index}]" if self.owner_index is not None
            else self.owner_name)
        port = self.port_name if self.port_index is None else f"{self.port_name}[{self.port_index}]"
        return f"{owner}.{port}"


@dataclass
class Connection:
    name: str
    source: EndRef
    sink: EndRef
    fifo_ast: Optional[AstNode] = None
    raw_fifo: Optional[str] = None
    no_strict: bool = False
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    fifo_depth: int = 0


@dataclass
class Implementation:
    id: str
    scope: "Scope"
    of_ast: Optional[AstNode] = None
    raw_of: str = ""
    doc: Optional[str] = None
    template_params: list[TemplateParam] = field(default_factory=list)
    external: bool = False
    instances: dict[str, Instance] = field(default_factory=dict)
    connections: list[Connection] = field(default_factory=list)
    asserts: list[AstNode] = field(default_factory=list)
    generative: list[AstNode] = field(default_factory=list)  # pending if/for
    process_block: Optional[str] = None
    derived_from: Optional[AstNode] = None  # ImplInstDecl target, if any
    src_text: str = ""  # source the AST spans index into (for dumps)
    span: Optional[Span] = None
    state: EvalState = EvalState.NOT_INFERRED
    error: Optional[TydiError] = None
    streamlet: Optional[Streamlet] = None

    @property
    def is_template(self) -> bool:
        return bool(self.template_params)

    def label(self) -> str:
        return f"impl {self.id}"


@dataclass
class Scope:
    name: str
    category: str  # package/group/union/stream/streamlet/implement/iffor
    variables: dict[str, Variable] = field(default_factory=dict)
    types: dict[str, TypeEntry] = field(default_factory=dict)
    streamlets: dict[str, Streamlet] = field(default_factory=dict)
    implements: dict[str, Implementation] = field(default_factory=dict)
    ports: dict[str, Port] = field(default_factory=dict)
    instances: dict[str, Instance] = field(default_factory=dict)
    connections: list[Connection] = field(default_factory=list)
    relations: list[tuple[ScopeRelationKind, "Scope"]] = field(default_factory=list)
    impl_args: dict[str, "Implementation"] = field(default_factory=dict)

    def add_relation(self, kind: ScopeRelationKind, target: "Scope"):
        self.relations.append((kind, target))

    def __repr__(self):
        return f"Scope({self.name})"


@dataclass
class Package:
    name: str
    scope: Scope
    path: str = "<memory>"
    text: str = ""


@dataclass
class Project:
    name: str
    packages: dict[str, Package] = field(default_factory=dict)

    def package_scope(self, name: str) -> Scope:
        return self.packages[name].scope


def declare(scope: Scope, entity, category: str, span: Optional[Span] = None,
            path: Optional[str] = None) -> None:
    """Insert an entity into one category map of a scope.

    Forward references are legal because resolution happens at evaluation
    time; the only checks are uniqueness and the package-scope-only rule for
    streamlets and implementations.
    """
    if category in ("streamlet", "implementation") and scope.category != "package":
        raise TydiError(
            "resolution",
            f"{category} {entity.id!r} may only be declared in a package scope,"
            f" not inside {scope.name}", path, span)
    table = getattr(scope, _CATEGORY_MAPS[category])
    key = entity.id if hasattr(entity, "id") else entity.name
    if key in table:
        raise TydiError(
            "resolution",
            f"duplicate {category} {key!r} in scope {scope.name}", path, span)
    table[key] = entity


def resolve_name(start_scope: Scope, name: str, category: str):
    """Find `name` in `start_scope` or outward through permitted relations.

    Inner names shadow outer names. Returns (entity, owning scope); raises
    ResolutionError with the chain of scopes searched on a miss.
    """
    allowed = TRAVERSABLE[category]
    attr = _CATEGORY_MAPS[category]
    searched: list[str] = []
    seen: set[int] = set()

    def walk(scope: Scope):
        if id(scope) in seen:
            return None
        seen.add(id(scope))
        searched.append(scope.name)
        table = getattr(scope, attr)
        if name in table:
            return table[name], scope
        for kind, target in scope.relations:
            if kind not in allowed:
                continue
            hit = walk(target)
            if hit is not None:
                return hit
        return None

    found = walk(start_scope)
    if found is None:
        chain = " -> ".join(searched)
        raise ResolutionError(f"{category} {name!r} not found (searched {chain})")
    return found


def enclosing_package_scope(scope: Scope) -> Optional[Scope]:
    """The package scope a scope ultimately belongs to, or None if detached."""
    seen = set()
    cur = scope
    while cur is not None and id(cur) not in seen:
        seen.add(id(cur))
        if cur.category == "package":
            return cur
        cur = cur.relations[0][1] if cur.relations else None
    return None
