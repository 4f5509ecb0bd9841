import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from loopshrink import (  # noqa: E402
    DiffusionConfig,
    PipelineConfig,
    assemble_laplacian,
    generate_genus_g,
    generate_sphere,
    generate_torus,
    run_initial_pass,
    run_pipeline,
)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running scaling checks (select with -m slow)")


@functools.lru_cache(maxsize=None)
def mesh(name):
    if name == "sphere":
        return generate_sphere(3)
    if name == "torus":
        return generate_torus(16, 8)
    if name == "torus32":
        return generate_torus(32, 16)
    if name == "g2":
        return generate_genus_g(2)
    raise KeyError(name)


@functools.lru_cache(maxsize=None)
def initial(name, seed=0):
    m = mesh(name)
    return run_initial_pass(m, assemble_laplacian(m), seed, DiffusionConfig())


@functools.lru_cache(maxsize=None)
def pipeline(name, seed=0):
    return run_pipeline(mesh(name), PipelineConfig(seed_vertex=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(mod.RESULTS):
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
