"""Post-sugaring design rule check.

Rules enforced per connection of every non-external implementation:
  R1  unmarked connections must resolve to the same type declaration; merely
      structural equality is a warning, anything else an error
  R2  @NoStrictType@ connections must at least be structurally compatible
  R3  connections run source -> sink (a Self `in` port is a source inside
      its own implementation, an instance `out` port is a source)
  R4  both ends must live in the same clockdomain
  R5  every port end appears in exactly one connection
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import Span
from .logical_types import types_compatible
from .model import EvalState, Implementation, Project
from .sugaring import end_role, usage_census
from .type_eval import types_strictly_equal


@dataclass(frozen=True)
class DrcDiagnostic:
    severity: str  # Error | Warning
    rule: str  # R1..R5
    package: str
    implementation: str
    connection: str
    message: str
    span: Optional[Span] = None

    def line(self) -> str:
        return (f"[{self.severity}] {self.rule} {self.package}.{self.implementation}"
                f" ({self.connection}): {self.message}")


def run_drc(project: Project) -> list[DrcDiagnostic]:
    diags: list[DrcDiagnostic] = []
    for pkg_name in sorted(project.packages):
        scope = project.packages[pkg_name].scope
        for impl_id in sorted(scope.implements):
            impl = scope.implements[impl_id]
            if impl.external or impl.is_template or impl.state is not EvalState.EVALUATED:
                continue
            diags.extend(_check_implementation(pkg_name, impl))
    diags.sort(key=lambda d: (d.package, d.implementation, d.connection, d.rule,
                              d.message))
    return diags


def _check_implementation(pkg_name: str, impl: Implementation) -> list[DrcDiagnostic]:
    out: list[DrcDiagnostic] = []

    def report(severity, rule, conn, message, span=None):
        out.append(DrcDiagnostic(severity, rule, pkg_name, impl.id,
                                 conn.name if conn is not None else "-",
                                 message, span))

    for conn in impl.connections:
        if conn.state is not EvalState.EVALUATED:
            continue
        src, snk = conn.source, conn.sink
        # R1 / R2: exactly one of the two type rules applies per connection
        if conn.no_strict:
            if not types_compatible(src.port.logical_type, snk.port.logical_type):
                report("Error", "R2", conn,
                       f"{src.display()} and {snk.display()} have incompatible "
                       "stream types", conn.span)
        else:
            if types_strictly_equal(src.port.type_terminal, snk.port.type_terminal):
                pass
            elif types_compatible(src.port.logical_type, snk.port.logical_type):
                report("Warning", "R1", conn,
                       f"{src.display()} and {snk.display()} are structurally "
                       "compatible but do not name the same type declaration; "
                       "add @NoStrictType@ to accept", conn.span)
            else:
                report("Error", "R1", conn,
                       f"{src.display()} and {snk.display()} have incompatible "
                       "stream types", conn.span)
        # R3: direction
        if end_role(src) != "source":
            report("Error", "R3", conn,
                   f"{src.display()} is not a source end", conn.span)
        if end_role(snk) != "sink":
            report("Error", "R3", conn,
                   f"{snk.display()} is not a sink end", conn.span)
        # R4: clockdomain equality
        src_cd = src.port.clockdomain
        snk_cd = snk.port.clockdomain
        if src_cd is not None and snk_cd is not None \
                and src_cd.expression != snk_cd.expression:
            report("Error", "R4", conn,
                   f"clockdomain mismatch: {src.display()} is `{src_cd.expression}"
                   f" but {snk.display()} is `{snk_cd.expression}", conn.span)
    # R5: single-connection per end (Self ends may legitimately stay unused --
    # they are the circuit's external interface)
    for usage in usage_census(impl):
        if usage.use_count > 1:
            out.append(DrcDiagnostic(
                "Error", "R5", pkg_name, impl.id, "-",
                f"port end {_usage_display(usage)} appears in {usage.use_count} "
                "connections"))
        elif usage.use_count == 0 and usage.owner is not None:
            out.append(DrcDiagnostic(
                "Error", "R5", pkg_name, impl.id, "-",
                f"port end {_usage_display(usage)} is never connected"))
    return out


def _usage_display(usage) -> str:
    owner = "Self" if usage.owner is None else (
        usage.owner if usage.owner_index is None
        else f"{usage.owner}[{usage.owner_index}]")
    port = usage.port_name if usage.port_index is None \
        else f"{usage.port_name}[{usage.port_index}]"
    return f"{owner}.{port}"


def render_drc_report(diags: list[DrcDiagnostic]) -> str:
    lines = [d.line() for d in diags]
    errors = sum(1 for d in diags if d.severity == "Error")
    warnings = sum(1 for d in diags if d.severity == "Warning")
    lines.append(f"{errors} errors, {warnings} warnings")
    return "\n".join(lines) + "\n"


def drc_has_errors(diags: list[DrcDiagnostic]) -> bool:
    return any(d.severity == "Error" for d in diags)
