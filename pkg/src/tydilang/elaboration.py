"""Streamlet/implementation evaluation, template monomorphization and
generative for/if expansion.

Evaluation is demand-driven: an implementation pulls in its streamlet, the
targets of its instances (instantiating templates on the way), the types of
every port it touches, and nothing else. Template instantiation deep-copies
the template, binds each parameter's magic variable, registers the copy under
a mangled ``name@arg@arg`` id and evaluates it; instantiating the same
arguments twice returns the existing entity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .builder import StatementBuilder, name_of, snip
from .context import EvalContext
from .errors import AssertionFailure, ResolutionError, TydiError, TypeError_
from .logical_types import StreamType, short_name
from .math_engine import (ExpressionEvaluator, evaluate_expression,
                          evaluate_range, force_variable)
from .model import (Connection, EndRef, EvalState, Implementation, Instance,
                    Port, Scope, Streamlet, TypeEntry, Variable,
                    enclosing_package_scope, resolve_name)
from .tree import AstNode, node as make_node
from .type_eval import evaluate_type_ast, force_type_entry
from .values import (ArrayValue, BoolValue, ClockDomainValue, FloatValue,
                     IntValue, StrValue, Value, format_value, mangle_text,
                     variant_name)

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass
class TemplateArg:
    kind: str  # value | type | impl
    mangle: str
    value: Optional[Value] = None
    logical_type: object = None
    terminal: object = None
    impl: Optional[Implementation] = None


# -- streamlet evaluation ------------------------------------------------------


def evaluate_streamlet(ctx: EvalContext, s: Streamlet):
    if s.state is EvalState.EVALUATED:
        return
    if s.state is EvalState.ERROR:
        raise s.error
    if not ctx.begin(s, s.label()):
        if s.state is EvalState.ERROR:
            raise s.error
        return
    try:
        ctx.count_eval(s.label())
        path = ctx.path_for(s.scope)
        if s.is_template:
            raise TydiError(
                "resolution",
                f"streamlet template {s.id!r} must be instantiated with "
                "arguments before use", path, s.span)
        for port in s.ports.values():
            evaluate_port(ctx, s.scope, port)
        for a in s.asserts:
            check_assertion(ctx, s.scope, a)
        s.state = EvalState.EVALUATED
    except TydiError as e:
        s.error = e
        s.state = EvalState.ERROR
        raise
    finally:
        ctx.finish(s)


def evaluate_port(ctx: EvalContext, scope: Scope, port: Port):
    path = ctx.path_for(scope)
    inner = port.type_ast.children[0]
    if inner.kind == "LogicalUserDefinedType":
        from .type_eval import _resolve_type_ref
        entry = _resolve_type_ref(ctx, scope, inner)
        port.logical_type = force_type_entry(ctx, entry)
        port.type_terminal = entry.terminal
    else:
        port.logical_type = evaluate_type_ast(ctx, scope, port.type_ast)
        port.type_terminal = port.logical_type
    if not isinstance(port.logical_type, StreamType):
        raise TypeError_(
            f"port {port.name!r} must have a stream type, got "
            f"{short_name(port.logical_type)}", path, port.span)
    if port.array_size_ast is not None:
        size = evaluate_expression(ctx, scope, port.array_size_ast)
        if not isinstance(size, IntValue) or size.value < 1:
            raise TypeError_(f"port array size must be a positive int", path, port.span)
        port.array_size = size.value
    if port.cd_ast is None:
        from .values import DEFAULT_CLOCKDOMAIN
        port.clockdomain = DEFAULT_CLOCKDOMAIN
    else:
        body = port.cd_ast.children[0]
        if body.kind == "STR":
            port.clockdomain = ClockDomainValue(body.leaf_text)
        else:
            try:
                var, _ = resolve_name(scope, body.leaf_text, "variable")
            except ResolutionError as e:
                raise TydiError("resolution", e.message, path, body.span) from None
            cd = force_variable(ctx, var)
            if not isinstance(cd, ClockDomainValue):
                raise TypeError_(
                    f"port clockdomain {body.leaf_text!r} must be a clockdomain "
                    f"value, got {variant_name(cd)}", path, body.span)
            port.clockdomain = cd
    port.state = EvalState.EVALUATED


# -- implementation evaluation -------------------------------------------------


def evaluate_implementation(ctx: EvalContext, impl: Implementation):
    if impl.state is EvalState.EVALUATED:
        return
    if impl.state is EvalState.ERROR:
        raise impl.error
    if not ctx.begin(impl, impl.label()):
        if impl.state is EvalState.ERROR:
            raise impl.error
        return
    try:
        ctx.count_eval(impl.label())
        _compute_implementation(ctx, impl)
        impl.state = EvalState.EVALUATED
    except TydiError as e:
        impl.error = e
        impl.state = EvalState.ERROR
        raise
    finally:
        ctx.finish(impl)


def _compute_implementation(ctx: EvalContext, impl: Implementation):
    path = ctx.path_for(impl.scope)
    if impl.is_template:
        raise TydiError(
            "resolution",
            f"implementation template {impl.id!r} must be instantiated with "
            "arguments before use", path, impl.span)
    if impl.derived_from is not None:
        _evaluate_derived(ctx, impl)
        return
    impl.streamlet = _resolve_of_streamlet(ctx, impl)
    evaluate_streamlet(ctx, impl.streamlet)
    if impl.generative:
        sb = StatementBuilder(impl.src_text, path or "<memory>")
        blocks, impl.generative = impl.generative, []
        for block in blocks:
            _expand_block(ctx, impl, block, sb, "")
    for inst in impl.scope.instances.values():
        _evaluate_instance(ctx, impl, inst)
    for conn in impl.scope.connections:
        resolve_connection(ctx, impl, conn)
    for a in impl.asserts:
        check_assertion(ctx, impl.scope, a)


def _evaluate_derived(ctx: EvalContext, impl: Implementation):
    """`impl name(template<args>);` — a fresh monomorph under the user name."""
    inst_ast = impl.derived_from
    template, args = _resolve_template_use(ctx, impl.scope, inst_ast, "implementation")
    clone = _do_instantiate(ctx, template, args, impl.id)
    impl.scope = clone.scope
    impl.instances = clone.scope.instances
    impl.connections = clone.scope.connections
    impl.external = clone.external
    impl.asserts = clone.asserts
    impl.generative = clone.generative
    impl.process_block = clone.process_block
    impl.of_ast = clone.of_ast
    impl.raw_of = clone.raw_of
    impl.src_text = clone.src_text
    impl.derived_from = None
    # evaluating the adopted body binds the streamlet and resolves the rest
    _compute_implementation(ctx, impl)


def _resolve_of_streamlet(ctx: EvalContext, impl: Implementation) -> Streamlet:
    path = ctx.path_for(impl.scope)
    of = impl.of_ast
    if of.kind == "TemplateInstance":
        template, args = _resolve_template_use(ctx, impl.scope, of, "streamlet")
        return instantiate_template(ctx, template, args)
    s = _resolve_entity(ctx, impl.scope, of, "streamlet")
    if s.is_template:
        raise TydiError(
            "resolution",
            f"streamlet {s.id!r} is a template; supply template arguments",
            path, of.span)
    return s


def _evaluate_instance(ctx: EvalContext, impl: Implementation, inst: Instance):
    path = ctx.path_for(impl.scope)
    target_ast = inst.target_ast
    if target_ast.kind == "TemplateInstance":
        template, args = _resolve_template_use(ctx, impl.scope, target_ast,
                                               "implementation")
        target = instantiate_template(ctx, template, args)
    else:
        bound = None
        if target_ast.kind == "ID":
            bound = impl.scope.impl_args.get(target_ast.leaf_text)
        target = bound or _resolve_entity(ctx, impl.scope, target_ast, "implementation")
        if target.is_template:
            raise TydiError(
                "resolution",
                f"instance {inst.name!r} targets template {target.id!r} "
                "without arguments", path, inst.span)
    evaluate_implementation(ctx, target)
    inst.target = target
    if inst.array_size_ast is not None:
        size = evaluate_expression(ctx, impl.scope, inst.array_size_ast)
        if not isinstance(size, IntValue) or size.value < 1:
            raise TypeError_("instance array size must be a positive int",
                             path, inst.span)
        inst.array_size = size.value
    inst.state = EvalState.EVALUATED


def _resolve_entity(ctx: EvalContext, scope: Scope, ref: AstNode, category: str):
    """Resolve an ID or pkg.ID reference to a streamlet or implementation."""
    path = ctx.path_for(scope)
    if ref.kind == "ID":
        try:
            entity, _ = resolve_name(scope, ref.leaf_text, category)
            return entity
        except ResolutionError as e:
            raise TydiError("resolution", e.message, path, ref.span) from None
    if ref.kind == "QualifiedId":
        pkg_name, member = (c.leaf_text for c in ref.children)
        pkg_scope = enclosing_package_scope(scope)
        if pkg_scope is None or f"$package${pkg_name}" not in pkg_scope.variables:
            raise TydiError("resolution",
                            f"package {pkg_name!r} is not imported here",
                            path, ref.span)
        pkg = ctx.project.packages.get(pkg_name)
        if pkg is None:
            raise TydiError("resolution", f"package {pkg_name!r} does not exist",
                            path, ref.span)
        table = pkg.scope.streamlets if category == "streamlet" else pkg.scope.implements
        entity = table.get(member)
        if entity is None:
            raise TydiError("resolution",
                            f"{category} {member!r} not found in package {pkg_name!r}",
                            path, ref.span)
        return entity
    raise TydiError("resolution", f"cannot resolve {ref.kind} as a {category}",
                    path, ref.span)


# -- connections ---------------------------------------------------------------


def resolve_connection(ctx: EvalContext, impl: Implementation, conn: Connection):
    path = ctx.path_for(impl.scope)
    for end in (conn.source, conn.sink):
        _resolve_end(ctx, impl, end, path)
    if conn.fifo_ast is not None:
        depth = evaluate_expression(ctx, impl.scope, conn.fifo_ast)
        if not isinstance(depth, IntValue) or depth.value < 0:
            raise TypeError_("FIFO depth must be a non-negative int", path, conn.span)
        conn.fifo_depth = depth.value
    conn.state = EvalState.EVALUATED


def _resolve_end(ctx: EvalContext, impl: Implementation, end: EndRef, path):
    port_name = name_of(end.port_ast, path)
    end.port_name = port_name
    if end.owner_ast is None:
        port = impl.streamlet.ports.get(port_name)
        if port is None:
            raise TydiError(
                "resolution",
                f"unknown port {port_name!r} on streamlet {impl.streamlet.id!r}",
                path, end.port_ast.span)
    else:
        owner_name = name_of(end.owner_ast, path)
        end.owner_name = owner_name
        inst = impl.scope.instances.get(owner_name)
        if inst is None:
            raise TydiError(
                "resolution",
                f"unknown instance {owner_name!r} in implementation {impl.id!r}",
                path, end.owner_ast.span)
        end.instance = inst
        end.owner_index = _end_index(ctx, impl.scope, end.owner_index_ast,
                                     inst.array_size, f"instance {owner_name!r}", path)
        port = inst.target.streamlet.ports.get(port_name)
        if port is None:
            raise TydiError(
                "resolution",
                f"unknown port {port_name!r} on instance {owner_name!r} "
                f"(streamlet {inst.target.streamlet.id!r})",
                path, end.port_ast.span)
    end.port = port
    end.port_index = _end_index(ctx, impl.scope, end.port_index_ast,
                                port.array_size, f"port {port_name!r}", path)


def _end_index(ctx, scope, index_ast, size, what, path) -> Optional[int]:
    if index_ast is None:
        if size is not None:
            raise TydiError("resolution", f"{what} is an array; an index is required",
                            path, None)
        return None
    if size is None:
        raise TydiError("resolution", f"{what} is not an array", path, index_ast.span)
    idx = evaluate_expression(ctx, scope, index_ast)
    if not isinstance(idx, IntValue):
        raise TypeError_(f"index of {what} must be an int", path, index_ast.span)
    if not 0 <= idx.value < size:
        raise TydiError("resolution",
                        f"index {idx.value} out of bounds for {what} of size {size}",
                        path, index_ast.span)
    return idx.value


# -- assertions ------------------------------------------------------------------


def check_assertion(ctx: EvalContext, scope: Scope, assert_stmt: AstNode):
    path = ctx.path_for(scope)
    exp = assert_stmt.children[0]
    value = evaluate_expression(ctx, scope, exp)
    if not isinstance(value, BoolValue):
        raise TypeError_(
            f"assert expects a boolean argument, got {variant_name(value)}",
            path, assert_stmt.span)
    if value.value:
        return
    pkg = ctx.package_of(scope)
    raw = snip(pkg.text, exp.span) if pkg else "<expression>"
    ev = ExpressionEvaluator(ctx, scope)
    operands = ", ".join(
        format_value(ev.eval_term(t)) for t in exp.children if t.kind == "Term")
    raise AssertionFailure(
        f"assertion failed: {raw} (operands: {operands})", path, assert_stmt.span)


# -- member extraction -------------------------------------------------------------


def _extract_owner_scope(ctx: EvalContext, scope: Scope, extract: AstNode) -> Scope:
    keyword = extract.children[0].leaf_text
    owner_ast = extract.children[1]
    path = ctx.path_for(scope)
    if keyword in ("streamlet", "impl"):
        category = "streamlet" if keyword == "streamlet" else "implementation"
        if owner_ast.kind == "TemplateInstance":
            template, args = _resolve_template_use(ctx, scope, owner_ast, category)
            entity = instantiate_template(ctx, template, args)
        else:
            entity = _resolve_entity(ctx, scope, owner_ast, category)
        return entity.scope
    # keyword 'type': group/union member access
    from .type_eval import _resolve_type_ref
    if owner_ast.kind not in ("ID", "QualifiedId"):
        raise TydiError("resolution", "type member extraction needs a type name",
                        path, owner_ast.span)
    entry = _resolve_type_ref(ctx, scope, owner_ast if owner_ast.kind == "QualifiedId"
                              else make_node("LogicalUserDefinedType",
                                             owner_ast.span.start, owner_ast.span.end,
                                             [owner_ast]))
    evaluated = force_type_entry(ctx, entry)
    inner_scope = getattr(evaluated, "scope", None)
    if inner_scope is None:
        raise TydiError(
            "resolution",
            f"type {entry.id!r} has no member scope (only groups and unions do)",
            path, owner_ast.span)
    return inner_scope


def extract_member_value(ctx: EvalContext, scope: Scope, extract: AstNode) -> Value:
    owner_scope = _extract_owner_scope(ctx, scope, extract)
    member = extract.children[2].leaf_text
    path = ctx.path_for(scope)
    var = owner_scope.variables.get(member)
    if var is None:
        raise TydiError("resolution",
                        f"member {member!r} not found in scope {owner_scope.name!r}",
                        path, extract.span)
    return force_variable(ctx, var)


def extract_member_type(ctx: EvalContext, scope: Scope, extract: AstNode):
    owner_scope = _extract_owner_scope(ctx, scope, extract)
    member = extract.children[2].leaf_text
    path = ctx.path_for(scope)
    entry = owner_scope.types.get(member)
    if entry is None:
        raise TydiError("resolution",
                        f"type member {member!r} not found in scope "
                        f"{owner_scope.name!r}", path, extract.span)
    force_type_entry(ctx, entry)
    return entry.evaluated, entry.terminal


# -- template instantiation ----------------------------------------------------------


def _resolve_template_use(ctx: EvalContext, scope: Scope, inst_ast: AstNode,
                          category: str):
    """Resolve a `name<args>` use; evaluates the arguments in `scope`."""
    path = ctx.path_for(scope)
    base = inst_ast.children[0]
    template = _resolve_entity(ctx, scope, base, category)
    if not template.is_template:
        raise TydiError("resolution",
                        f"{category} {template.id!r} is not a template",
                        path, inst_ast.span)
    arg_nodes = inst_ast.children[1:]
    params = template.template_params
    if len(arg_nodes) != len(params):
        raise TydiError(
            "resolution",
            f"template {template.id!r} expects {len(params)} argument(s), "
            f"got {len(arg_nodes)}", path, inst_ast.span)
    args = [_evaluate_template_arg(ctx, scope, template, p, a)
            for p, a in zip(params, arg_nodes)]
    return template, args


def _evaluate_template_arg(ctx: EvalContext, scope: Scope, template, param,
                           arg_node: AstNode) -> TemplateArg:
    path = ctx.path_for(scope)
    if param.kind == "type":
        if arg_node.kind != "TemplateArgType":
            raise TypeError_(
                f"template parameter {param.name!r} expects a logical type; "
                "use the `type` keyword before the argument", path, arg_node.span)
        type_ast = arg_node.children[0]
        inner = type_ast.children[0]
        if inner.kind == "LogicalUserDefinedType":
            from .type_eval import _resolve_type_ref
            entry = _resolve_type_ref(ctx, scope, inner)
            lt = force_type_entry(ctx, entry)
            terminal = entry.terminal
        else:
            lt = evaluate_type_ast(ctx, scope, type_ast)
            terminal = lt
        return TemplateArg("type", short_name(lt), logical_type=lt, terminal=terminal)
    if param.kind == "impl":
        if arg_node.kind != "TemplateArgImpl":
            raise TypeError_(
                f"template parameter {param.name!r} expects an implementation; "
                "use the `impl` keyword before the argument", path, arg_node.span)
        target = _resolve_entity(ctx, scope, arg_node.children[0], "implementation")
        if target.is_template:
            raise TydiError(
                "resolution",
                f"component argument {target.id!r} must be a concrete "
                "implementation, not a template", path, arg_node.span)
        evaluate_implementation(ctx, target)
        wanted, _ = resolve_name(template.scope, param.impl_of, "streamlet")
        if target.streamlet is not wanted:
            raise TypeError_(
                f"implementation {target.id!r} implements streamlet "
                f"{target.streamlet.id!r}, but parameter {param.name!r} requires "
                f"an implementation of {param.impl_of!r}", path, arg_node.span)
        return TemplateArg("impl", target.id, impl=target)
    if arg_node.kind != "TemplateArgExp":
        raise TypeError_(
            f"template parameter {param.name!r} expects a {param.kind} value",
            path, arg_node.span)
    value = evaluate_expression(ctx, scope, arg_node.children[0])
    if variant_name(value) != param.kind:
        raise TypeError_(
            f"template parameter {param.name!r} expects {param.kind}, got "
            f"{variant_name(value)}", path, arg_node.span)
    return TemplateArg("value", mangle_text(value), value=value)


def mangled_name(template_id: str, args: list[TemplateArg]) -> str:
    return template_id + "".join("@" + a.mangle for a in args)


def instantiate_template(ctx: EvalContext, template, args: list[TemplateArg]):
    """Monomorphize; memoized per (owning package, mangled name)."""
    mangled = mangled_name(template.id, args)
    pkg_scope = enclosing_package_scope(template.scope)
    kind = "streamlet" if isinstance(template, Streamlet) else "implementation"
    cell = ctx.instantiation_cell((id(pkg_scope), kind, mangled))
    if not ctx.begin(cell, f"instantiate {mangled}"):
        if cell.error is not None:
            raise cell.error
        return cell.entity
    try:
        entity = _do_instantiate(ctx, template, args, mangled)
        table = pkg_scope.streamlets if kind == "streamlet" else pkg_scope.implements
        ctx.register(table, mangled, entity)
        cell.entity = entity
        # evaluate after registration so partial results appear in dumps
        if kind == "streamlet":
            evaluate_streamlet(ctx, entity)
        else:
            evaluate_implementation(ctx, entity)
        return entity
    except TydiError as e:
        cell.error = e
        raise
    finally:
        ctx.finish(cell)


def _do_instantiate(ctx: EvalContext, template, args: list[TemplateArg],
                    new_name: str):
    cloner = _Cloner()
    if isinstance(template, Streamlet):
        clone = cloner.clone_streamlet(template, new_name)
    else:
        clone = cloner.clone_implementation(template, new_name)
    _bind_args(clone.scope, template.template_params, args)
    return clone


def _bind_args(scope: Scope, params, args: list[TemplateArg]):
    for param, arg in zip(params, args):
        scope.variables.pop(param.name, None)
        if arg.kind == "type":
            scope.types[param.name] = TypeEntry(
                id=param.name, ast=None, scope=scope,
                state=EvalState.EVALUATED, evaluated=arg.logical_type,
                terminal=arg.terminal)
        elif arg.kind == "impl":
            scope.impl_args[param.name] = arg.impl
        else:
            scope.variables[param.name] = Variable(
                id=param.name, raw=mangle_text(arg.value), scope=scope,
                declared_kind=variant_name(arg.value),
                state=EvalState.EVALUATED, value=arg.value)


class _Cloner:
    """Deep copy of a template's scope tree.

    ASTs are shared (immutable); evaluation state is reset; scope relations
    pointing inside the copied tree are retargeted to the fresh scopes while
    outward relations (to the package) stay shared.
    """

    def __init__(self):
        self.scope_map: dict[int, Scope] = {}

    def _retarget(self, target: Scope) -> Scope:
        return self.scope_map.get(id(target), target)

    def clone_scope(self, scope: Scope, new_name: Optional[str] = None) -> Scope:
        s = Scope(new_name or scope.name, scope.category)
        self.scope_map[id(scope)] = s
        s.relations = [(kind, self._retarget(t)) for kind, t in scope.relations]
        for k, v in scope.variables.items():
            s.variables[k] = Variable(
                id=v.id, raw=v.raw, scope=s, declared_kind=v.declared_kind,
                expr_ast=v.expr_ast, dump_tag=v.dump_tag, is_magic=v.is_magic,
                span=v.span)
        for k, t in scope.types.items():
            s.types[k] = self.clone_type_entry(t, s)
        for k, p in scope.ports.items():
            s.ports[k] = Port(
                name=p.name, type_ast=p.type_ast, raw_type=p.raw_type,
                direction=p.direction, array_size_ast=p.array_size_ast,
                raw_size=p.raw_size, cd_ast=p.cd_ast, raw_cd=p.raw_cd, span=p.span)
        for k, i in scope.instances.items():
            s.instances[k] = Instance(
                name=i.name, target_ast=i.target_ast, raw_target=i.raw_target,
                array_size_ast=i.array_size_ast, span=i.span)
        for c in scope.connections:
            s.connections.append(self.clone_connection(c))
        s.impl_args = dict(scope.impl_args)
        return s

    def clone_type_entry(self, t: TypeEntry, new_scope: Scope) -> TypeEntry:
        own = self.clone_scope(t.own_scope) if t.own_scope is not None else None
        return TypeEntry(
            id=t.id, ast=t.ast, scope=new_scope, own_scope=own,
            field_names=list(t.field_names), asserts=list(t.asserts),
            src_text=t.src_text, span=t.span, alias_of=t.alias_of,
            state=t.state if t.ast is None else EvalState.NOT_INFERRED,
            evaluated=t.evaluated if t.ast is None else None,
            terminal=t.terminal if t.ast is None else None)

    def clone_connection(self, c: Connection) -> Connection:
        return Connection(
            name=c.name, source=self.clone_end(c.source), sink=self.clone_end(c.sink),
            fifo_ast=c.fifo_ast, raw_fifo=c.raw_fifo, no_strict=c.no_strict,
            span=c.span)

    def clone_end(self, e: EndRef) -> EndRef:
        return EndRef(
            owner_ast=e.owner_ast, owner_index_ast=e.owner_index_ast,
            port_ast=e.port_ast, port_index_ast=e.port_index_ast,
            raw_owner=e.raw_owner, raw_port=e.raw_port)

    def clone_streamlet(self, s: Streamlet, new_name: str) -> Streamlet:
        scope = self.clone_scope(s.scope, f"streamlet_{new_name}")
        clone = Streamlet(id=new_name, scope=scope, doc=s.doc,
                          asserts=list(s.asserts), span=s.span)
        clone.ports = scope.ports
        return clone

    def clone_implementation(self, i: Implementation, new_name: str) -> Implementation:
        scope = self.clone_scope(i.scope, f"implement_{new_name}")
        clone = Implementation(
            id=new_name, scope=scope, of_ast=i.of_ast, raw_of=i.raw_of, doc=i.doc,
            external=i.external, asserts=list(i.asserts),
            generative=list(i.generative), process_block=i.process_block,
            span=i.span, src_text=i.src_text)
        clone.instances = scope.instances
        clone.connections = scope.connections
        return clone


# -- generative for/if expansion -----------------------------------------------------


def _expand_block(ctx: EvalContext, impl: Implementation, block: AstNode,
                  sb: StatementBuilder, suffix: str):
    path = ctx.path_for(impl.scope)
    if block.kind == "IfBlock":
        body = _select_if_branch(ctx, impl.scope, block, path)
        if body is not None:
            for item in body.children:
                _add_expanded_item(ctx, impl, item, sb, suffix)
        return
    if block.kind == "ForBlock":
        expand_for(ctx, impl, block, sb, suffix)
        return
    raise TydiError("syntax", f"unexpected generative block {block.kind}",
                    path, block.span)


def _select_if_branch(ctx, scope, block: AstNode, path) -> Optional[AstNode]:
    def test(exp: AstNode) -> bool:
        v = evaluate_expression(ctx, scope, exp)
        if not isinstance(v, BoolValue):
            raise TypeError_(
                f"if condition must be a boolean value, got {variant_name(v)}",
                path, exp.span)
        return v.value

    if test(block.children[0]):
        return block.children[1]
    for clause in block.children[2:]:
        if clause.kind == "ElifClause":
            if test(clause.children[0]):
                return clause.children[1]
        elif clause.kind == "ElseClause":
            return clause.children[0]
    return None


def expand_for(ctx: EvalContext, impl: Implementation, block: AstNode,
               sb: StatementBuilder, suffix: str):
    path = ctx.path_for(impl.scope)
    var = block.children[0].leaf_text
    iterable = block.children[1]
    body = block.children[2]
    if iterable.kind == "RangeExp":
        values = evaluate_range(ctx, impl.scope, iterable)
    else:
        v = evaluate_expression(ctx, impl.scope, iterable)
        if not isinstance(v, ArrayValue):
            raise TypeError_(
                f"for iterates an array of basic values, got {variant_name(v)}",
                path, iterable.span)
        values = v
    _reject_plain_instances(body, path)
    for index, element in enumerate(values.elements):
        substituted = substitute(body, var, element, path)
        for item in substituted.children:
            _add_expanded_item(ctx, impl, item, sb, f"{suffix}_for_{var}_{index}")


def _reject_plain_instances(body: AstNode, path):
    """Plain-named instances inside a for body would collide after expansion."""
    for item in body.children:
        if item.kind == "InstanceDecl" and item.children[0].kind == "ID":
            raise TydiError(
                "resolution",
                f"instance {item.children[0].leaf_text!r} cannot be declared in "
                "a for scope; interpolate the name with {{...}} instead",
                path, item.span)
        if item.kind in ("IfBlock", "ForBlock", "StatementBlock", "ElifClause",
                         "ElseClause"):
            _reject_plain_instances(item, path)


def _add_expanded_item(ctx: EvalContext, impl: Implementation, item: AstNode,
                       sb: StatementBuilder, suffix: str):
    if item.kind in ("IfBlock", "ForBlock"):
        _expand_block(ctx, impl, item, sb, suffix)
        return
    if item.kind == "ConnectionStmt":
        impl.scope.connections.append(sb.build_connection(item, name_suffix=suffix))
        return
    sb.build_impl_item(item, impl, impl.scope)


# -- loop-variable substitution --------------------------------------------------------


def _literal_node(value: Value, span) -> AstNode:
    s, e = span.start, span.end
    if isinstance(value, IntValue):
        leaf = make_node("INT_RAW_NORAML", s, e, leaf_text=str(value.value))
        return make_node("IntExp", s, e, [leaf])
    if isinstance(value, FloatValue):
        leaf = make_node("FLOAT_RAW", s, e, leaf_text=repr(value.value))
        return make_node("FloatExp", s, e, [leaf])
    if isinstance(value, StrValue):
        leaf = make_node("STR", s, e, leaf_text=value.value)
        return make_node("StringExp", s, e, [leaf])
    if isinstance(value, BoolValue):
        leaf = make_node("BOOL_RAW", s, e, leaf_text="true" if value.value else "false")
        return make_node("BoolExp", s, e, [leaf])
    if isinstance(value, ClockDomainValue):
        leaf = make_node("ID", s, e, leaf_text=value.expression)
        return make_node("ClockDomainExp", s, e, [leaf])
    raise TypeError_(f"loop value of type {variant_name(value)} cannot be substituted")


def _hole_text(value: Value, path, span) -> str:
    if isinstance(value, IntValue):
        return str(value.value)
    if isinstance(value, StrValue):
        return value.value
    raise TydiError(
        "type",
        f"loop variable of type {variant_name(value)} cannot be interpolated "
        "into an identifier", path, span)


def substitute(node: AstNode, var: str, value: Value, path) -> AstNode:
    """Clone `node` with every reference to the loop variable replaced by the
    element value. Inner for-blocks that rebind the variable shadow it."""
    if node.kind == "VarExp" and len(node.children) == 1 \
            and node.children[0].leaf_text == var:
        term = _literal_node(value, node.span)
        return term
    if node.kind == "ForBlock" and node.children[0].leaf_text == var:
        new_iter = substitute(node.children[1], var, value, path)
        if new_iter is node.children[1]:
            return node
        return AstNode(node.kind, node.span,
                       (node.children[0], new_iter, node.children[2]))
    if node.kind == "InterpolatedId":
        return _substitute_interpolated(node, var, value, path)
    if not node.children:
        return node
    new_children = []
    changed = False
    for c in node.children:
        nc = substitute(c, var, value, path)
        changed = changed or nc is not c
        new_children.append(nc)
    if not changed:
        return node
    return AstNode(node.kind, node.span, tuple(new_children), node.leaf_text)


def _substitute_interpolated(node: AstNode, var: str, value: Value, path) -> AstNode:
    parts = []
    changed = False
    for part in node.children:
        if part.kind == "VarHole" and part.children[0].leaf_text == var:
            text = _hole_text(value, path, part.span)
            parts.append(make_node("ID", part.span.start, part.span.end,
                                   leaf_text=text))
            changed = True
        else:
            parts.append(part)
    if not changed:
        return node
    if all(p.kind == "ID" for p in parts):
        merged = "".join(p.leaf_text for p in parts)
        if not _IDENT_RE.match(merged) or "__" in merged:
            raise TydiError(
                "resolution",
                f"interpolated identifier {merged!r} is not a valid identifier",
                path, node.span)
        return make_node("ID", node.span.start, node.span.end, leaf_text=merged)
    return AstNode(node.kind, node.span, tuple(parts))
