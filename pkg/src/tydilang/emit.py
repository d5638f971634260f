"""Hierarchy flattening and artifact emission (DOT graph, JSON IR).

Flattening walks the instance tree from a chosen top implementation; every
visited implementation becomes one flat component whose name is the instance
path joined by ``__`` (array elements as ``_AT_<i>`` segments). Connections
at every level become nets between flat components; a wrapper's own port
appears as both an inner and an outer endpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import TydiError
from .logical_types import (BitType, GroupType, NullType, StreamType,
                            UnionType, stream_display_name)
from .model import EndRef, EvalState, Implementation, Port, Project
from .values import format_float


@dataclass
class FlatComponent:
    flat_name: str
    is_wrapper: bool
    ports: list[tuple[str, str]]  # (display name, anchor name)
    impl_id: str


@dataclass
class FlatNet:
    source: tuple[str, str]  # (component anchor, port anchor)
    sink: tuple[str, str]
    label: str


@dataclass
class FlatCircuit:
    top: str
    components: list[FlatComponent] = field(default_factory=list)
    nets: list[FlatNet] = field(default_factory=list)


def _port_anchor(name: str, index) -> str:
    return name if index is None else f"{name}_AT_{index}"


def _component_ports(impl: Implementation) -> list[tuple[str, str]]:
    out = []
    for pname in sorted(impl.streamlet.ports):
        port = impl.streamlet.ports[pname]
        if port.array_size is None:
            out.append((pname, pname))
        else:
            for i in range(port.array_size):
                out.append((f"{pname}@{i}", f"{pname}_AT_{i}"))
    return out


def flatten(project: Project, top_package: str, top_impl: str) -> FlatCircuit:
    pkg = project.packages.get(top_package)
    impl = pkg.scope.implements.get(top_impl) if pkg else None
    if impl is None:
        raise TydiError("resolution",
                        f"top implementation {top_package}.{top_impl} not found")
    if impl.is_template:
        raise TydiError("resolution",
                        f"top implementation {top_impl!r} is a template")
    if impl.state is not EvalState.EVALUATED:
        raise TydiError("resolution",
                        f"top implementation {top_impl!r} is not evaluated")
    circuit = FlatCircuit(top=impl.id)
    _walk(impl, impl.id, circuit)
    return circuit


def _walk(impl: Implementation, flat_name: str, circuit: FlatCircuit):
    circuit.components.append(FlatComponent(
        flat_name=flat_name,
        is_wrapper=bool(impl.instances),
        ports=_component_ports(impl),
        impl_id=impl.id))

    def child_name(inst_name: str, index) -> str:
        seg = inst_name if index is None else f"{inst_name}_AT_{index}"
        return f"{flat_name}__{seg}"

    for inst_name in sorted(impl.instances):
        inst = impl.instances[inst_name]
        if inst.target is None:
            raise TydiError("resolution",
                            f"instance {inst_name!r} of {impl.id!r} is unresolved")
        indices = [None] if inst.array_size is None else list(range(inst.array_size))
        for i in indices:
            _walk(inst.target, child_name(inst_name, i), circuit)

    def end_point(end: EndRef) -> tuple[str, str]:
        anchor = _port_anchor(end.port_name, end.port_index)
        if end.is_self:
            return flat_name, anchor
        return child_name(end.owner_name, end.owner_index), anchor

    for conn in impl.connections:
        if conn.state is not EvalState.EVALUATED:
            continue
        src = end_point(conn.source)
        snk = end_point(conn.sink)
        label = f"{conn.name}__{src[0]}::{src[1]}__{snk[0]}"
        circuit.nets.append(FlatNet(source=src, sink=snk, label=label))


def emit_dot(circuit: FlatCircuit) -> str:
    lines = ["digraph {"]
    for comp in sorted(circuit.components, key=lambda c: c.flat_name):
        cells = [f"<component>{comp.flat_name}"]
        cells += [f"<{anchor}>{display}" for display, anchor in comp.ports]
        label = "{" + "|".join(cells) + "}"
        attrs = "color=red, shape=record" if comp.is_wrapper else "shape=record"
        lines.append(f'{comp.flat_name} [{attrs}, label="{label}"];')
    for net in sorted(circuit.nets, key=lambda n: n.label):
        lines.append(f"{net.source[0]}:{net.source[1]} -> "
                     f"{net.sink[0]}:{net.sink[1]} "
                     f'[label="{net.label}"] ;')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- structured IR ---------------------------------------------------------------


def _type_json(t):
    if isinstance(t, NullType):
        return {"kind": "null"}
    if isinstance(t, BitType):
        return {"kind": "bit", "width": t.width}
    if isinstance(t, GroupType):
        return {"kind": "group", "name": t.name,
                "fields": [{"name": n, "type": _type_json(ft)} for n, ft in t.fields]}
    if isinstance(t, UnionType):
        return {"kind": "union", "name": t.name,
                "fields": [{"name": n, "type": _type_json(ft)} for n, ft in t.fields]}
    if isinstance(t, StreamType):
        p = t.properties
        return {
            "kind": "stream",
            "name": stream_display_name(t),
            "element": _type_json(t.element),
            "properties": {
                "dimension": p.dimension,
                "user": _type_json(p.user),
                "throughput": float(format_float(p.throughput)),
                "synchronicity": p.synchronicity,
                "complexity": p.complexity,
                "direction": p.direction,
                "keep": p.keep,
            },
        }
    raise TydiError("type", f"cannot serialize type {t!r}")


def _port_json(port: Port):
    out = {
        "type": _type_json(port.logical_type),
        "direction": port.direction,
        "clockdomain": port.clockdomain.expression,
    }
    if port.array_size is not None:
        out["array_size"] = port.array_size
    return out


def _end_json(end: EndRef):
    out = {"owner": end.owner_name, "port": end.port_name}
    if end.owner_index is not None:
        out["owner_index"] = end.owner_index
    if end.port_index is not None:
        out["port_index"] = end.port_index
    return out


def emit_ir(project: Project) -> str:
    """Serialize every evaluated streamlet, implementation and named type."""
    packages = {}
    for pkg_name in sorted(project.packages):
        scope = project.packages[pkg_name].scope
        types = {tid: _type_json(e.evaluated)
                 for tid, e in sorted(scope.types.items())
                 if e.state is EvalState.EVALUATED}
        streamlets = {}
        for sid, s in sorted(scope.streamlets.items()):
            if s.is_template or s.state is not EvalState.EVALUATED:
                continue
            entry = {"ports": {p.name: _port_json(p)
                               for p in sorted(s.ports.values(), key=lambda p: p.name)}}
            if s.doc:
                entry["doc"] = s.doc
            streamlets[sid] = entry
        implementations = {}
        for iid, impl in sorted(scope.implements.items()):
            if impl.is_template or impl.state is not EvalState.EVALUATED:
                continue
            entry = {
                "streamlet": impl.streamlet.id,
                "external": impl.external,
                "instances": {
                    inst.name: ({"target": inst.target.id, "array_size": inst.array_size}
                                if inst.array_size is not None
                                else {"target": inst.target.id})
                    for inst in sorted(impl.instances.values(), key=lambda i: i.name)
                },
                "connections": [
                    {
                        "name": c.name,
                        "source": _end_json(c.source),
                        "sink": _end_json(c.sink),
                        "fifo_depth": c.fifo_depth,
                        "no_strict_type": c.no_strict,
                    }
                    for c in impl.connections if c.state is EvalState.EVALUATED
                ],
            }
            if impl.doc:
                entry["doc"] = impl.doc
            implementations[iid] = entry
        packages[pkg_name] = {
            "types": types,
            "streamlets": streamlets,
            "implementations": implementations,
        }
    doc = {"project": project.name, "packages": packages}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
