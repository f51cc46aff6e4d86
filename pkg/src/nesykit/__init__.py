"""Neuro-symbolic deduction toolkit.

Generates synthetic deduction problems, parses a standardized logic
format into typed knowledge bases, adjudicates entailment through an
external SMT solver, drives chat-completion endpoints (or deterministic
stubs) through the translation/repair pipeline, scores the results, and
models transformer inference FLOPs.

Heavier subsystems (HTTP gateway, plotting) live in their own modules
and are imported on demand; this namespace re-exports only the cheap
core types.
"""

from .logic import (
    STRATEGIES,
    VAR,
    GoldenChain,
    KnowledgeBase,
    Literal,
    Rule,
    Step,
    Verdict,
    decide_query,
    forward_chain,
    golden_transform,
)
from .problems import (
    DEFAULT_LEXICON,
    Lexicon,
    Problem,
    generate_problems,
    read_problems,
    rename_concepts,
    write_problems,
)

__version__ = "0.1.0"

__all__ = [
    "STRATEGIES",
    "VAR",
    "GoldenChain",
    "KnowledgeBase",
    "Literal",
    "Rule",
    "Step",
    "Verdict",
    "decide_query",
    "forward_chain",
    "golden_transform",
    "DEFAULT_LEXICON",
    "Lexicon",
    "Problem",
    "generate_problems",
    "read_problems",
    "rename_concepts",
    "write_problems",
    "__version__",
]
