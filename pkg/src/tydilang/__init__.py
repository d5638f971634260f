"""Tydi-lang compiler frontend.

Parses multi-file Tydi-lang projects, evaluates constants and logical types,
monomorphizes templates, expands generative for/if blocks, desugars implicit
stream plumbing, runs high-level design-rule checks, and emits code-structure
dumps, a flattened circuit graph in DOT form, and a structured JSON IR.

Library use mirrors the CLI:

    from tydilang import CompileConfig, compile_project
    result = compile_project(CompileConfig(inputs=["design/"], emit_ir=True,
                                           output_dir="build"))
"""

from .pipeline import CompileConfig, CompileResult, compile_project, compile_sources

__version__ = "0.1.0"

__all__ = ["CompileConfig", "CompileResult", "compile_project",
           "compile_sources", "__version__"]
