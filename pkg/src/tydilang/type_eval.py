"""Logical type evaluation: aliases, bit widths, streams and their properties.

Every type entry evaluates at most once. Strict type checking compares the
*declaration* two references resolve to (through any alias chain), while
compatibility is the structural comparison from `logical_types`.
"""

from __future__ import annotations

from typing import Optional

from .context import EvalContext
from .errors import ResolutionError, TydiError, TypeError_
from .logical_types import (DIRECTION_VALUES, NULL, SYNCHRONICITY_VALUES,
                            BitType, GroupType, StreamProperties, StreamType,
                            UnionType)
from .math_engine import evaluate_expression
from .model import EvalState, Scope, TypeEntry, resolve_name
from .tree import AstNode
from .values import BoolValue, FloatValue, IntValue, StrValue, variant_name

_PROPERTY_KEYS = {
    "StreamPropertyDimension": "dimension",
    "StreamPropertyUser": "user",
    "StreamPropertyThroughput": "throughput",
    "StreamPropertySynchronicity": "synchronicity",
    "StreamPropertyComplexity": "complexity",
    "StreamPropertyDirection": "direction",
    "StreamPropertyKeep": "keep",
}


def force_type_entry(ctx: EvalContext, entry: TypeEntry):
    """Evaluate a type entry once; returns the evaluated LogicalType."""
    if entry.state is EvalState.EVALUATED:
        return entry.evaluated
    if entry.state is EvalState.ERROR:
        raise entry.error
    if not ctx.begin(entry, entry.label()):
        if entry.state is EvalState.ERROR:
            raise entry.error
        return entry.evaluated
    try:
        ctx.count_eval(entry.label())
        _compute_type_entry(ctx, entry)
        entry.state = EvalState.EVALUATED
        return entry.evaluated
    except TydiError as e:
        entry.error = e
        entry.state = EvalState.ERROR
        raise
    finally:
        ctx.finish(entry)


def _compute_type_entry(ctx: EvalContext, entry: TypeEntry):
    if entry.alias_of is not None:
        force_type_entry(ctx, entry.alias_of)
        entry.evaluated = entry.alias_of.evaluated
        entry.terminal = entry.alias_of.terminal
        return
    ast = entry.ast
    inner = ast.children[0] if ast.kind == "LogicalType" else ast
    if inner.kind in ("LogicalGroupType", "LogicalUnionType"):
        entry.evaluated = _evaluate_group(ctx, entry, inner)
        entry.terminal = entry
        return
    if inner.kind == "LogicalUserDefinedType":
        target = _resolve_type_ref(ctx, entry.scope, inner)
        force_type_entry(ctx, target)
        entry.evaluated = target.evaluated
        entry.terminal = target.terminal
        return
    if inner.kind == "LogicalTypeExtract":
        from .elaboration import extract_member_type
        evaluated, terminal = extract_member_type(ctx, entry.scope, inner)
        entry.evaluated = evaluated
        entry.terminal = terminal
        return
    entry.evaluated = evaluate_type_ast(ctx, entry.scope, inner,
                                        declared_name=entry.id)
    entry.terminal = entry


def _evaluate_group(ctx: EvalContext, entry: TypeEntry, inner: AstNode):
    name = inner.children[0].leaf_text
    scope = entry.own_scope
    cls = GroupType if inner.kind == "LogicalGroupType" else UnionType
    result = cls(name=name, scope=scope)
    for fname in entry.field_names:
        fentry = scope.types[fname]
        result.fields.append((fname, force_type_entry(ctx, fentry)))
    from .elaboration import check_assertion
    for a in entry.asserts:
        check_assertion(ctx, scope, a)
    return result


def _resolve_type_ref(ctx: EvalContext, scope: Scope, ref: AstNode) -> TypeEntry:
    path = ctx.path_for(scope)
    ids = [c.leaf_text for c in ref.children]
    if len(ids) == 1:
        try:
            entry, _ = resolve_name(scope, ids[0], "type")
            return entry
        except ResolutionError as e:
            raise TydiError("resolution", e.message, path, ref.span) from None
    pkg_name, member = ids
    from .model import enclosing_package_scope
    pkg_scope = enclosing_package_scope(scope)
    if pkg_scope is None or f"$package${pkg_name}" not in pkg_scope.variables:
        raise TydiError("resolution", f"package {pkg_name!r} is not imported here",
                        path, ref.span)
    target = ctx.project.packages.get(pkg_name)
    if target is None:
        raise TydiError("resolution", f"package {pkg_name!r} does not exist",
                        path, ref.span)
    entry = target.scope.types.get(member)
    if entry is None:
        raise TydiError("resolution",
                        f"type {member!r} not found in package {pkg_name!r}",
                        path, ref.span)
    return entry


def evaluate_type_ast(ctx: EvalContext, scope: Scope, type_node: AstNode,
                      declared_name: Optional[str] = None):
    """Evaluate a logical-type expression to a concrete LogicalType.

    `declared_name` names the stream when the expression sits directly under
    a `type x = Stream(...)` declaration; inline streams stay anonymous.
    """
    inner = type_node.children[0] if type_node.kind == "LogicalType" else type_node
    path = ctx.path_for(scope)
    kind = inner.kind
    if kind == "LogicalNullType":
        return NULL
    if kind == "LogicalBitType":
        width = evaluate_expression(ctx, scope, inner.children[0])
        if not isinstance(width, IntValue):
            raise TypeError_(f"Bit width must be an int, got {variant_name(width)}",
                             path, inner.span)
        if width.value < 1:
            raise TypeError_(f"Bit width must be at least 1, got {width.value}",
                             path, inner.span)
        return BitType(width.value)
    if kind == "LogicalStreamType":
        return _evaluate_stream(ctx, scope, inner, declared_name)
    if kind == "LogicalUserDefinedType":
        target = _resolve_type_ref(ctx, scope, inner)
        return force_type_entry(ctx, target)
    if kind == "LogicalTypeExtract":
        from .elaboration import extract_member_type
        evaluated, _ = extract_member_type(ctx, scope, inner)
        return evaluated
    if kind in ("LogicalGroupType", "LogicalUnionType"):
        raise TypeError_(
            "inline group/union types must be declared with their own `type` "
            "statement", path, inner.span)
    raise TypeError_(f"cannot evaluate type node {kind}", path, inner.span)


def _evaluate_stream(ctx: EvalContext, scope: Scope, stream_node: AstNode,
                     declared_name: Optional[str]) -> StreamType:
    path = ctx.path_for(scope)
    element = evaluate_type_ast(ctx, scope, stream_node.children[0])
    props = StreamProperties()
    for child in stream_node.children[1:]:
        key = _PROPERTY_KEYS[child.kind]
        if key == "user":
            user = evaluate_type_ast(ctx, scope, child.children[0])
            if isinstance(user, StreamType):
                raise TypeError_("stream user type must not be a stream",
                                 path, child.span)
            props.user = user
            continue
        value = evaluate_expression(ctx, scope, child.children[0])
        if key == "dimension":
            if not isinstance(value, IntValue) or value.value < 0:
                raise TypeError_("dimension must be a non-negative int", path, child.span)
            props.dimension = value.value
        elif key == "throughput":
            if isinstance(value, IntValue):
                value = FloatValue(float(value.value))
            if not isinstance(value, FloatValue) or value.value < 0:
                raise TypeError_("throughput must be a non-negative number",
                                 path, child.span)
            props.throughput = value.value
        elif key == "synchronicity":
            if not isinstance(value, StrValue) or value.value not in SYNCHRONICITY_VALUES:
                raise TypeError_(
                    f"synchronicity must be one of {'/'.join(SYNCHRONICITY_VALUES)}",
                    path, child.span)
            props.synchronicity = value.value
        elif key == "complexity":
            if not isinstance(value, IntValue) or not 1 <= value.value <= 7:
                raise TypeError_(
                    f"complexity must be an int in [1, 7], got "
                    f"{value.value if isinstance(value, IntValue) else variant_name(value)}",
                    path, child.span)
            props.complexity = value.value
        elif key == "direction":
            if not isinstance(value, StrValue) or value.value not in DIRECTION_VALUES:
                raise TypeError_(
                    f"direction must be one of {'/'.join(DIRECTION_VALUES)}",
                    path, child.span)
            props.direction = value.value
        elif key == "keep":
            if not isinstance(value, BoolValue):
                raise TypeError_("keep must be a bool", path, child.span)
            props.keep = value.value
    return StreamType(name=declared_name, element=element, properties=props)


def types_strictly_equal(terminal_a, terminal_b) -> bool:
    """Identity of definition: both references resolve, through aliases, to
    the same declaration (or to the very same inline type value)."""
    return terminal_a is not None and terminal_a is terminal_b
