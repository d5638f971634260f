import os

import pytest

from tydilang.builder import build_project
from tydilang.context import EvalContext
from tydilang.parser import parse_project
from tydilang.pipeline import (CompileConfig, compile_sources,
                               evaluate_project)

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def project_of(*texts, name="test_project"):
    """Parse + build a project (with the built-in prelude); no evaluation."""
    from tydilang.pipeline import _inject_prelude_imports
    from tydilang.stdlib import PRELUDE_PATH, PRELUDE_SOURCE
    files = [(f"file_{i}.td", t) for i, t in enumerate(texts)]
    files.append((PRELUDE_PATH, PRELUDE_SOURCE))
    parsed, diags = parse_project(files)
    assert not diags, diags
    project = build_project(name, parsed)
    _inject_prelude_imports(project)
    return project


def evaluated_project(*texts, name="test_project", top=None, jobs=1):
    """Parse, build and fully evaluate; fails the test on any diagnostic."""
    project = project_of(*texts, name=name)
    ctx = EvalContext(project, jobs=jobs)
    diags = evaluate_project(ctx, project, top)
    assert not diags, diags
    return project, ctx


def compile_texts(*texts, name="test_project", top=None, drc=False, dot=False,
                  ir=False, jobs=1):
    """Full pipeline over in-memory sources; returns the CompileResult."""
    config = CompileConfig(inputs=["<memory>"], project_name=name,
                           output_dir=None, top=top, emit_drc=drc,
                           emit_dot=dot, emit_ir=ir, jobs=jobs)
    files = [(f"file_{i}.td", t) for i, t in enumerate(texts)]
    return compile_sources(config, files)


@pytest.fixture(scope="session")
def tpch1_source() -> str:
    with open(os.path.join(DATA_DIR, "tpch1.td"), encoding="utf-8") as f:
        return f.read()
