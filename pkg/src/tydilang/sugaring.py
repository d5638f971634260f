"""Implicit stream plumbing: duplicator and voider insertion.

After elaboration every port must ultimately be connected exactly once. A
source end used k >= 2 times gets a k-channel duplicator spliced in; an
instance output that is never used gets a voider to complete its handshake.
Self ports of an implementation are its external interface and stay untouched
when unused.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import EvalContext
from .elaboration import TemplateArg, instantiate_template
from .errors import TydiError
from .logical_types import short_name
from .model import (Connection, EndRef, EvalState, Implementation, Instance,
                    Port, Project)
from .values import IntValue

STD_PACKAGE = "tydi_std"
DUPLICATOR_IMPL = "duplicator_i"
VOIDER_IMPL = "void_i"


@dataclass(frozen=True)
class PortUsage:
    owner: object  # None for Self, otherwise the instance name
    owner_index: object
    port_name: str
    port_index: object
    role: str  # source | sink
    use_count: int
    port: Port

    def key(self):
        return (self.owner, self.owner_index, self.port_name, self.port_index)


def end_role(end: EndRef) -> str:
    """A Self `in` port acts as a source inside its own implementation; an
    instance's `out` port is a source."""
    if end.is_self:
        return "source" if end.port.direction == "in" else "sink"
    return "source" if end.port.direction == "out" else "sink"


def _universe(impl: Implementation):
    """Every addressable port end of an implementation, array-expanded."""
    ends = []

    def port_ends(owner, owner_index, port: Port, self_side: bool):
        indices = [None] if port.array_size is None else list(range(port.array_size))
        if self_side:
            role = "source" if port.direction == "in" else "sink"
        else:
            role = "source" if port.direction == "out" else "sink"
        for pi in indices:
            ends.append(((owner, owner_index, port.name, pi), role, port))

    for port in impl.streamlet.ports.values():
        port_ends(None, None, port, self_side=True)
    for inst in impl.instances.values():
        inst_indices = [None] if inst.array_size is None else list(range(inst.array_size))
        for ii in inst_indices:
            for port in inst.target.streamlet.ports.values():
                port_ends(inst.name, ii, port, self_side=False)
    return ends


def usage_census(impl: Implementation) -> list[PortUsage]:
    counts: dict[tuple, int] = {}
    for conn in impl.connections:
        for end in (conn.source, conn.sink):
            counts[end.key()] = counts.get(end.key(), 0) + 1
    out = []
    for key, role, port in _universe(impl):
        out.append(PortUsage(key[0], key[1], key[2], key[3], role,
                             counts.get(key, 0), port))
    return out


def _sanitize(name: str) -> str:
    while "__" in name:
        name = name.replace("__", "_")
    return name.strip("_") or "p"


def _unique_name(impl: Implementation, base: str) -> str:
    name = base
    n = 2
    while name in impl.scope.instances:
        name = f"{base}_{n}"
        n += 1
    return name


def _end_path_name(usage: PortUsage) -> str:
    parts = []
    if usage.owner is None:
        parts.append("self")
    else:
        parts.append(usage.owner)
        if usage.owner_index is not None:
            parts.append(str(usage.owner_index))
    parts.append(usage.port_name)
    if usage.port_index is not None:
        parts.append(str(usage.port_index))
    return _sanitize("_".join(parts))


def _make_end(usage: PortUsage) -> EndRef:
    end = EndRef(owner_ast=None, owner_index_ast=None, port_ast=None,
                 port_index_ast=None,
                 raw_owner=usage.owner, raw_port=usage.port_name)
    end.owner_name = usage.owner
    end.owner_index = usage.owner_index
    end.port_name = usage.port_name
    end.port_index = usage.port_index
    end.port = usage.port
    return end


def _instance_end(inst: Instance, port: Port, port_index=None) -> EndRef:
    end = EndRef(owner_ast=None, owner_index_ast=None, port_ast=None,
                 port_index_ast=None, raw_owner=inst.name, raw_port=port.name)
    end.owner_name = inst.name
    end.owner_index = None
    end.port_name = port.name
    end.port_index = port_index
    end.instance = inst
    end.port = port
    return end


def _std_template(project: Project, name: str) -> Implementation:
    pkg = project.packages.get(STD_PACKAGE)
    template = pkg.scope.implements.get(name) if pkg else None
    if template is None:
        raise TydiError(
            "resolution",
            f"standard-library template {name!r} is required for sugaring but "
            "is not loaded")
    return template


def _type_arg(port: Port) -> TemplateArg:
    return TemplateArg("type", short_name(port.logical_type),
                       logical_type=port.logical_type,
                       terminal=port.type_terminal)


def sugar_implementation(ctx: EvalContext, project: Project,
                         impl: Implementation) -> None:
    """Rewrite one implementation so every port end is singly connected."""
    if impl.external or impl.state is not EvalState.EVALUATED:
        return
    census = usage_census(impl)
    index = {u.key(): u for u in census}
    ordered = sorted(
        (u for u in census if u.role == "source"),
        key=lambda u: (u.owner or "", u.owner_index if u.owner_index is not None else -1,
                       u.port_name, u.port_index if u.port_index is not None else -1))
    for usage in ordered:
        if usage.use_count >= 2:
            _insert_duplicator(ctx, project, impl, usage)
        elif usage.use_count == 0 and usage.owner is not None:
            _insert_voider(ctx, project, impl, usage)


def _insert_duplicator(ctx, project, impl, usage: PortUsage):
    k = usage.use_count
    template = _std_template(project, DUPLICATOR_IMPL)
    dup_impl = instantiate_template(
        ctx, template, [_type_arg(usage.port), TemplateArg("value", str(k),
                                                           value=IntValue(k))])
    gen_name = _unique_name(impl, _sanitize(f"duplicate_{_end_path_name(usage)}_{k}"))
    inst = Instance(name=gen_name, target=dup_impl, state=EvalState.EVALUATED)
    impl.scope.instances[gen_name] = inst
    in_port = dup_impl.streamlet.ports["input"]
    out_port = dup_impl.streamlet.ports["output"]
    # retarget the k existing uses onto the duplicator's outputs, keeping each
    # connection's fifo depth, marker and name on its sink edge
    j = 0
    key = usage.key()
    for conn in impl.connections:
        if conn.source.key() == key:
            conn.source = _instance_end(inst, out_port, port_index=j)
            j += 1
    feed = Connection(name=f"{gen_name}_in", source=_make_end(usage),
                      sink=_instance_end(inst, in_port))
    feed.state = EvalState.EVALUATED
    impl.scope.connections.append(feed)


def _insert_voider(ctx, project, impl, usage: PortUsage):
    template = _std_template(project, VOIDER_IMPL)
    void_impl = instantiate_template(ctx, template, [_type_arg(usage.port)])
    gen_name = _unique_name(impl, _sanitize(f"void_{_end_path_name(usage)}"))
    inst = Instance(name=gen_name, target=void_impl, state=EvalState.EVALUATED)
    impl.scope.instances[gen_name] = inst
    in_port = void_impl.streamlet.ports["input"]
    conn = Connection(name=f"{gen_name}_in", source=_make_end(usage),
                      sink=_instance_end(inst, in_port))
    conn.state = EvalState.EVALUATED
    impl.scope.connections.append(conn)


def sugar_project(ctx: EvalContext, project: Project) -> None:
    for pkg_name in sorted(project.packages):
        scope = project.packages[pkg_name].scope
        for impl_id in sorted(scope.implements):
            sugar_implementation(ctx, project, scope.implements[impl_id])
