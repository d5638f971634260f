"""Compilation pipeline: parse -> build -> evaluate -> sugar -> DRC -> emit.

Stage boundaries are barriers; artifacts are written as soon as their stage
completes, so everything produced before a failure survives it. The worker
count only affects scheduling, never results: all dumps are byte-identical
for any number of jobs.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass, field
from typing import Optional

from .builder import build_project
from .context import EvalContext
from .drc import drc_has_errors, render_drc_report, run_drc
from .dump import dump_code_structure
from .elaboration import evaluate_implementation
from .errors import Diagnostic, TydiError, offset_to_line_col
from .math_engine import force_variable
from .model import Project, Variable
from .parser import ParsedFile, parse_project
from .stdlib import PRELUDE_PACKAGE, PRELUDE_PATH, PRELUDE_SOURCE
from .sugaring import sugar_project
from .tree import dump_ast
from .type_eval import force_type_entry
from .emit import emit_dot, emit_ir, flatten


@dataclass
class CompileConfig:
    inputs: list[str]
    project_name: str = "project"
    output_dir: Optional[str] = None  # None: no artifacts written
    top: Optional[str] = None  # "package.impl"
    emit_drc: bool = False
    emit_dot: bool = False
    emit_ir: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("worker count must be >= 1")


@dataclass
class CompileResult:
    project: Optional[Project] = None
    diagnostics: list[Diagnostic] = field(default_factory=list)
    drc_diagnostics: list = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)  # name -> text
    exit_code: int = 0

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


def _write(config: CompileConfig, result: CompileResult, name: str, text: str):
    result.artifacts[name] = text
    if config.output_dir is None:
        return
    path = os.path.join(config.output_dir, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def render_error_report(diagnostics: list[Diagnostic],
                        sources: dict[str, str]) -> str:
    """One line per diagnostic with file, line/column, category and message,
    sorted by file then offset."""
    def sort_key(d: Diagnostic):
        return (d.path or "", d.span.start if d.span else -1, d.message)

    lines = []
    for d in sorted(diagnostics, key=sort_key):
        where = d.path or "<project>"
        if d.span is not None and d.path in sources:
            line, col = offset_to_line_col(sources[d.path], d.span.start)
            where = f"{d.path}:{line}:{col}"
        lines.append(f"{where}: [{d.category}] {d.message}")
    return "\n".join(lines) + "\n"


def collect_sources(inputs: list[str]) -> list[tuple[str, str]]:
    """Expand directories into their `.td` files and read everything."""
    paths: list[str] = []
    for item in inputs:
        if os.path.isdir(item):
            for entry in sorted(os.listdir(item)):
                if entry.endswith(".td"):
                    paths.append(os.path.join(item, entry))
        else:
            paths.append(item)
    out = []
    for p in paths:
        with open(p, "r", encoding="utf-8") as f:
            out.append((p, f.read()))
    return out


def evaluation_roots(project: Project):
    """Default evaluation roots.

    Every concrete (non-template) implementation in every package is a root.
    In addition, the variables and named types of entry packages -- packages
    no other package imports -- are roots, so a project of plain constant
    files still evaluates what its own files use.
    """
    imported: set[str] = set()
    for pkg in project.packages.values():
        for vid in pkg.scope.variables:
            if vid.startswith("$package$") and vid != f"$package${pkg.name}":
                imported.add(vid[len("$package$"):])
    impl_roots = []
    value_roots = []
    for pkg_name in sorted(project.packages):
        pkg = project.packages[pkg_name]
        for iid in sorted(pkg.scope.implements):
            impl = pkg.scope.implements[iid]
            if not impl.is_template:
                impl_roots.append(impl)
        if pkg_name not in imported and pkg_name != PRELUDE_PACKAGE:
            for vid in sorted(pkg.scope.variables):
                var = pkg.scope.variables[vid]
                if not var.is_magic:
                    value_roots.append(var)
            for tid in sorted(pkg.scope.types):
                value_roots.append(pkg.scope.types[tid])
    return impl_roots, value_roots


def evaluate_project(ctx: EvalContext, project: Project,
                     top: Optional[str] = None) -> list[Diagnostic]:
    """Drive lazy evaluation from the configured roots; aggregate failures."""
    if top is not None:
        pkg_name, _, impl_name = top.partition(".")
        pkg = project.packages.get(pkg_name)
        impl = pkg.scope.implements.get(impl_name) if pkg else None
        if impl is None:
            return [Diagnostic("usage", f"top implementation {top!r} not found")]
        if impl.is_template:
            return [Diagnostic("usage", f"top implementation {top!r} is a template")]
        roots = [("impl", impl)]
    else:
        impl_roots, value_roots = evaluation_roots(project)
        roots = [("impl", r) for r in impl_roots] + [("value", r) for r in value_roots]

    def run_root(item) -> Optional[Diagnostic]:
        kind, root = item
        try:
            if kind == "impl":
                evaluate_implementation(ctx, root)
            elif isinstance(root, Variable):
                force_variable(ctx, root)
            else:
                force_type_entry(ctx, root)
            return None
        except TydiError as e:
            return e.diagnostic

    if ctx.jobs > 1 and len(roots) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=ctx.jobs) as pool:
            outcomes = list(pool.map(run_root, roots))
    else:
        outcomes = [run_root(r) for r in roots]

    seen = set()
    diagnostics = []
    for d in outcomes:
        if d is None:
            continue
        key = (d.category, d.message, d.path, str(d.span))
        if key not in seen:
            seen.add(key)
            diagnostics.append(d)
    diagnostics.sort(key=lambda d: (d.path or "", d.span.start if d.span else -1,
                                    d.message))
    return diagnostics


def compile_project(config: CompileConfig) -> CompileResult:
    result = CompileResult()
    try:
        sources = collect_sources(config.inputs)
    except OSError as e:
        result.diagnostics.append(Diagnostic("io", str(e)))
        result.exit_code = 2
        return result
    if not sources:
        result.diagnostics.append(Diagnostic("usage", "no input files"))
        result.exit_code = 2
        return result
    return compile_sources(config, sources, result)


def compile_sources(config: CompileConfig, sources: list[tuple[str, str]],
                    result: Optional[CompileResult] = None) -> CompileResult:
    result = result or CompileResult()
    sources = sources + [(PRELUDE_PATH, PRELUDE_SOURCE)]
    source_texts = dict(sources)

    # stage: parse
    parsed, diagnostics = parse_project(sources, jobs=config.jobs)
    _write_ast_dumps(config, result, parsed)
    if diagnostics:
        result.diagnostics.extend(diagnostics)
        _finish_with_errors(config, result, source_texts)
        return result

    # stage: build the code structure
    try:
        project = build_project(config.project_name, parsed)
    except TydiError as e:
        result.diagnostics.append(e.diagnostic)
        _finish_with_errors(config, result, source_texts)
        return result
    _inject_prelude_imports(project)
    result.project = project
    _write(config, result, "1_parser_output.txt", dump_code_structure(project))

    # stage: evaluation and expansion
    ctx = EvalContext(project, jobs=config.jobs)
    diagnostics = evaluate_project(ctx, project, config.top)
    if diagnostics:
        result.diagnostics.extend(diagnostics)
        _finish_with_errors(config, result, source_texts)
        return result
    _write(config, result, "2_evaluation_output.txt", dump_code_structure(project))

    # stage: sugaring
    try:
        sugar_project(ctx, project)
    except TydiError as e:
        result.diagnostics.append(e.diagnostic)
        _finish_with_errors(config, result, source_texts)
        return result
    _write(config, result, "2_evaluation_output_after_sugaring.txt",
           dump_code_structure(project))

    # stage: design rule check
    if config.emit_drc:
        result.drc_diagnostics = run_drc(project)
        _write(config, result, "drc_report.txt",
               render_drc_report(result.drc_diagnostics))
        if drc_has_errors(result.drc_diagnostics):
            result.exit_code = 1

    # stage: emission
    try:
        if config.emit_dot:
            if config.top is None:
                result.diagnostics.append(Diagnostic(
                    "usage", "--dot requires --top <package.impl>"))
                result.exit_code = 2
                return result
            pkg_name, _, impl_name = config.top.partition(".")
            circuit = flatten(project, pkg_name, impl_name)
            _write(config, result, "circuit.dot", emit_dot(circuit))
        if config.emit_ir:
            _write(config, result, "ir.json", emit_ir(project))
    except TydiError as e:
        result.diagnostics.append(e.diagnostic)
        _finish_with_errors(config, result, source_texts)
        return result
    return result


def _write_ast_dumps(config: CompileConfig, result: CompileResult,
                     parsed: dict[str, ParsedFile]):
    used: set[str] = set()
    for pkg_name in sorted(parsed):
        if pkg_name == PRELUDE_PACKAGE:
            continue
        pf = parsed[pkg_name]
        stem = os.path.splitext(os.path.basename(pf.source.path))[0]
        name = stem
        n = 2
        while name in used:
            name = f"{stem}_{n}"
            n += 1
        used.add(name)
        _write(config, result, os.path.join("0_ast", f"{name}.txt"),
               "[" + dump_ast(pf.ast) + "]\n")


def _inject_prelude_imports(project: Project):
    magic = f"$package${PRELUDE_PACKAGE}"
    for pkg in project.packages.values():
        if pkg.name == PRELUDE_PACKAGE:
            continue
        if magic not in pkg.scope.variables:
            pkg.scope.variables[magic] = Variable(
                id=magic, raw="", scope=pkg.scope, dump_tag="PackageType",
                is_magic=True)


def _finish_with_errors(config: CompileConfig, result: CompileResult,
                        sources: dict[str, str]):
    result.exit_code = 1
    _write(config, result, "error_report.txt",
           render_error_report(result.diagnostics, sources))
