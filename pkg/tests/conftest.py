"""Shared fixtures: a reusable problem corpus, solver handle, and patterns."""

import pytest

from nesykit.evalharness import load_patterns
from nesykit.problems import generate_problems
from nesykit.smt import resolve_solver


@pytest.fixture(scope="session")
def problems_300():
    """100 problems per hop count 1-3, the corpus used by the slow suites."""
    out = []
    for hops in (1, 2, 3):
        out.extend(generate_problems(count=100, hops=hops, distractors=2, seed=0))
    return out


@pytest.fixture(scope="session")
def builtin_solver():
    return resolve_solver("builtin", timeout=60.0)


@pytest.fixture(scope="session")
def default_patterns():
    return load_patterns()
