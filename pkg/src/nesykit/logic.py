"""Typed knowledge bases and a forward-chaining entailment oracle.

The representation is deliberately narrow: unary predicates over named
constants, universally quantified single-antecedent implications, and one
query literal. Within that fragment, grounding over the named constants is
exact, so the closure computed here is ground truth for every other
decision procedure in the package.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from enum import Enum

# Subject marker for the universally quantified variable inside rules.
VAR = "x"

STRATEGIES = ("bottom_up", "top_down", "magic_set")


def article(word: str) -> str:
    """Return the indefinite article ("a" or "an") for a word."""
    return "an" if word[:1].lower() in "aeiou" else "a"


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    """A possibly negated unary predicate applied to a single subject.

    ``subject`` is either a named constant (stored lowercase, e.g. "alex")
    or :data:`VAR` when the literal sits inside a rule. Both strings are
    interned so equality checks reduce to identity comparisons.
    """

    predicate: str
    subject: str
    negated: bool = False

    def __post_init__(self) -> None:
        if not self.predicate or any(ch.isspace() for ch in self.predicate):
            raise ValueError(f"malformed predicate: {self.predicate!r}")
        if not self.subject or any(ch.isspace() for ch in self.subject):
            raise ValueError(f"malformed subject: {self.subject!r}")
        object.__setattr__(self, "predicate", sys.intern(self.predicate))
        object.__setattr__(self, "subject", sys.intern(self.subject))

    @property
    def is_ground(self) -> bool:
        return self.subject != VAR

    def complement(self) -> Literal:
        """The same literal with its negation flipped."""
        return replace(self, negated=not self.negated)

    def bind(self, subject: str) -> Literal:
        """Instantiate a variable-subject literal at a named constant."""
        return Literal(self.predicate, subject, self.negated)

    def __str__(self) -> str:
        sign = "not " if self.negated else ""
        return f"{sign}{self.predicate}({self.subject})"


@dataclass(frozen=True)
class Rule:
    """A universally quantified implication between two unary literals.

    Both sides carry the variable subject marker. Negated antecedents are
    representable for generality but nothing in the package produces them.
    """

    antecedent: Literal
    consequent: Literal

    def __post_init__(self) -> None:
        for side in (self.antecedent, self.consequent):
            if side.subject != VAR:
                raise ValueError(f"rule literal must quantify over {VAR!r}: {side}")

    def __str__(self) -> str:
        return f"{self.antecedent} -> {self.consequent}"


Step = Literal | Rule


@dataclass(frozen=True)
class KnowledgeBase:
    """Facts, rules, and at most one query literal.

    A well-formed knowledge base has exactly one query; ``query`` is
    allowed to be None so that the parser can hand back a partial result
    alongside its diagnostics, and the operations that need a query raise.

    ``article_free`` records predicates whose surface form appeared
    without an indefinite article ("x is Fast"), so the renderer can
    reproduce the original spelling.
    """

    facts: tuple[Literal, ...]
    rules: tuple[Rule, ...]
    query: Literal | None
    article_free: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "article_free", frozenset(self.article_free))
        for fact in self.facts:
            if not fact.is_ground:
                raise ValueError(f"fact must have a named-constant subject: {fact}")
        if self.query is not None and not self.query.is_ground:
            raise ValueError(f"query must have a named-constant subject: {self.query}")

    def require_query(self) -> Literal:
        if self.query is None:
            raise ValueError("knowledge base has no query")
        return self.query

    @property
    def constants(self) -> tuple[str, ...]:
        """Named constants in first-appearance order (facts, then query)."""
        seen: dict[str, None] = {}
        for fact in self.facts:
            seen.setdefault(fact.subject)
        if self.query is not None:
            seen.setdefault(self.query.subject)
        return tuple(seen)

    @property
    def predicates(self) -> tuple[str, ...]:
        """Predicate names in first-appearance order across the whole KB."""
        seen: dict[str, None] = {}
        for fact in self.facts:
            seen.setdefault(fact.predicate)
        for rule in self.rules:
            seen.setdefault(rule.antecedent.predicate)
            seen.setdefault(rule.consequent.predicate)
        if self.query is not None:
            seen.setdefault(self.query.predicate)
        return tuple(seen)


@dataclass(frozen=True)
class GoldenChain:
    """The ordered facts and rules a correct derivation must pass through.

    Stored bottom-up: the initiating fact first, then each applied rule
    followed by the fact it derives, ending at the query literal (or its
    complement for problems whose answer is False).
    """

    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("golden chain must be nonempty")

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, index: int) -> Step:
        return self.steps[index]


class Verdict(Enum):
    """Outcome of deciding a query against a knowledge base."""

    TRUE = "true"
    FALSE = "false"
    UNDETERMINED = "undetermined"
    INCONSISTENT = "inconsistent"


# ---------------------------------------------------------------------------
# Entailment oracle
# ---------------------------------------------------------------------------


def forward_chain(kb: KnowledgeBase) -> frozenset[Literal]:
    """Least fixpoint of modus ponens over the knowledge base.

    Rule A(x) -> B(x) plus derived fact A(c) yields B(c); negation flags
    must match on the antecedent side and carry through on the consequent
    side. Terminates because the ground-literal universe is finite.
    """
    by_antecedent: dict[tuple[str, bool], list[Rule]] = {}
    for rule in kb.rules:
        key = (rule.antecedent.predicate, rule.antecedent.negated)
        by_antecedent.setdefault(key, []).append(rule)

    closure: set[Literal] = set(kb.facts)
    frontier: list[Literal] = list(kb.facts)
    while frontier:
        fact = frontier.pop()
        for rule in by_antecedent.get((fact.predicate, fact.negated), ()):
            derived = rule.consequent.bind(fact.subject)
            if derived not in closure:
                closure.add(derived)
                frontier.append(derived)
    return frozenset(closure)


def decide_query(kb: KnowledgeBase) -> Verdict:
    """Decide the query by membership in the forward-chaining closure.

    True if the closure contains the query literal, False if it contains
    the complement, Inconsistent if both, Undetermined if neither.
    """
    query = kb.require_query()
    closure = forward_chain(kb)
    has_query = query in closure
    has_complement = query.complement() in closure
    if has_query and has_complement:
        return Verdict.INCONSISTENT
    if has_query:
        return Verdict.TRUE
    if has_complement:
        return Verdict.FALSE
    return Verdict.UNDETERMINED


# ---------------------------------------------------------------------------
# Strategy transforms
# ---------------------------------------------------------------------------


def golden_transform(
    chain: GoldenChain, strategy: str, *, dedupe_pivot: bool = False
) -> GoldenChain:
    """Reorder a golden chain for a reasoning strategy.

    bottom_up is the identity, top_down reverses the chain, and magic_set
    is the reversed chain followed by the original (a backward pass that
    locates the relevant fact, then the forward derivation). The pivot
    step where the two passes meet appears twice by default;
    ``dedupe_pivot`` collapses it to a single occurrence.
    """
    if strategy == "bottom_up":
        return chain
    if strategy == "top_down":
        return GoldenChain(tuple(reversed(chain.steps)))
    if strategy == "magic_set":
        forward = chain.steps[1:] if dedupe_pivot else chain.steps
        return GoldenChain(tuple(reversed(chain.steps)) + forward)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
