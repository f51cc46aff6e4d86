"""Deterministic offline endpoints for tests and dry runs.

Three stub modes share the chat-endpoint interface:

* ``stub:faithful`` -- translates generated problem text into the
  standardized logic format without mistakes, and answers repair prompts
  with the same correct translation.
* ``stub:faulty:RATE[:SEED]`` -- per problem, with probability RATE,
  emits the classic plural-rule mistake ("Snakes are Luminous.") on the
  rule that derives the query predicate; repair prompts always get the
  corrected translation. Corruption is a pure function of (seed, problem
  text), so runs are reproducible at any worker count.
* ``stub:replay:STRATEGY`` -- answers reasoning prompts by narrating the
  problem's golden chain in STRATEGY order and stating the answer, which
  makes it a ground-truth fixture for step detection and faithfulness.

The translator stubs parse the generator's surface templates back into
(kind, subject, predicate, negation) tuples; they are not general NL
parsers and raise on sentences the generator never emits.
"""

from __future__ import annotations

import random
import re
import zlib
from dataclasses import dataclass

from .evalharness import strategy_indices
from .gateway import (
    REPAIR_MARKER,
    TRANSLATE_MARKER,
    ChatResponse,
    EndpointError,
    Usage,
    estimate_tokens,
)
from .logic import STRATEGIES, article
from .problems import Problem

_QUERY_RE = re.compile(
    r"^True or false: (?P<name>[A-Za-z]+) is (?P<neg>not )?(?:an? )?(?P<pred>[a-z]+)$"
)
_RULE_QUANT_RE = re.compile(
    r"^(?:Every|Each) (?P<ante>[a-z]+) is (?P<neg>not )?(?:an? )?(?P<cons>[a-z]+)$"
)
_RULE_PLURAL_RE = re.compile(
    r"^(?P<ante>[A-Za-z]+)s are (?P<neg>not )?(?P<cons>[A-Za-z]+)$"
)
_FACT_RE = re.compile(
    r"^(?P<name>[A-Z][a-z]*) is (?P<neg>not )?(?:an? )?(?P<pred>[a-z]+)$"
)
_SENTENCE_RE = re.compile(r"[^.]+")


@dataclass(frozen=True)
class _Statement:
    kind: str  # "fact", "rule", "query"
    subject: str  # proper name, or rule antecedent predicate
    predicate: str
    negated: bool


def _singular(token: str, vocabulary: set[str]) -> str:
    """Undo the generator's regular plural, keeping known words intact.

    Plural rule sentences are the only place predicates appear
    pluralized; adjectives stay unchanged there ("Felines are luminous").
    A token already seen in singular position (facts, quantified rules,
    the query) is taken as-is, which protects s-final adjectives.
    """
    if token in vocabulary:
        return token
    if token.endswith("s") and token[:-1] in vocabulary:
        return token[:-1]
    if token.endswith("s"):
        return token[:-1]
    return token


def parse_problem_text(text: str) -> list[_Statement]:
    """Parse generator-surface problem text into statements, query last."""
    sentences = [m.group(0).strip() for m in _SENTENCE_RE.finditer(text)]
    sentences = [s for s in sentences if s]

    vocabulary: set[str] = set()
    plural_pending: list[tuple[int, str, str, bool]] = []
    parsed: list[_Statement | None] = []

    for index, sentence in enumerate(sentences):
        if match := _QUERY_RE.match(sentence):
            vocabulary.add(match["pred"])
            parsed.append(_Statement("query", match["name"], match["pred"], bool(match["neg"])))
        elif match := _RULE_QUANT_RE.match(sentence):
            vocabulary.update((match["ante"], match["cons"]))
            parsed.append(_Statement("rule", match["ante"], match["cons"], bool(match["neg"])))
        elif match := _RULE_PLURAL_RE.match(sentence):
            plural_pending.append(
                (index, match["ante"].lower(), match["cons"].lower(), bool(match["neg"]))
            )
            parsed.append(None)
        elif match := _FACT_RE.match(sentence):
            vocabulary.add(match["pred"])
            parsed.append(_Statement("fact", match["name"], match["pred"], bool(match["neg"])))
        else:
            raise EndpointError(f"stub cannot parse sentence: {sentence!r}")

    for index, ante, cons, negated in plural_pending:
        parsed[index] = _Statement(
            "rule", _singular(ante, vocabulary), _singular(cons, vocabulary), negated
        )

    statements = [s for s in parsed if s is not None]
    queries = [s for s in statements if s.kind == "query"]
    if len(queries) != 1:
        raise EndpointError(f"stub expected exactly one query, found {len(queries)}")
    return statements


def _noun_phrase(predicate: str, negated: bool) -> str:
    name = predicate.capitalize()
    neg = "not " if negated else ""
    return f"is {neg}{article(name)} {name}"


def render_translation(statements: list[_Statement], corrupt_rule: int | None = None) -> str:
    """Emit the standardized logic format, query marked last.

    ``corrupt_rule`` is a rule ordinal (index among rules); that rule is
    written in the plural surface form the format forbids.
    """
    lines: list[str] = []
    query_line: str | None = None
    rule_ordinal = -1
    for statement in statements:
        if statement.kind == "query":
            query_line = (
                f"??? {statement.subject.capitalize()} "
                f"{_noun_phrase(statement.predicate, statement.negated)}. ???"
            )
        elif statement.kind == "rule":
            rule_ordinal += 1
            ante = statement.subject.capitalize()
            if rule_ordinal == corrupt_rule:
                neg = "not " if statement.negated else ""
                lines.append(f"{ante}s are {neg}{statement.predicate.capitalize()}.")
            else:
                lines.append(
                    f"For all x, if x is {article(ante)} {ante}, "
                    f"then x {_noun_phrase(statement.predicate, statement.negated)}."
                )
        else:
            lines.append(
                f"{statement.subject.capitalize()} "
                f"{_noun_phrase(statement.predicate, statement.negated)}."
            )
    if query_line is not None:
        lines.append(query_line)
    return "\n".join(lines)


def _extract_translate_nl(prompt: str) -> str:
    tail = prompt.rsplit("Natural Language:", 1)
    if len(tail) != 2:
        raise EndpointError("stub: translate prompt has no 'Natural Language:' marker")
    return tail[1].split(TRANSLATE_MARKER, 1)[0].strip()


def _extract_repair_nl(prompt: str) -> str:
    start = prompt.rsplit("Here is the original natural language:", 1)
    if len(start) != 2:
        raise EndpointError("stub: repair prompt has no original-text marker")
    return start[1].split("Here is your previous translation:", 1)[0].strip()


class TranslatorStub:
    """Offline translator endpoint; ``error_rate`` > 0 makes it faulty."""

    def __init__(self, error_rate: float = 0.0, seed: int = 0) -> None:
        if not 0.0 <= error_rate <= 1.0:
            raise ValueError(f"error rate must be in [0, 1], got {error_rate}")
        self.error_rate = error_rate
        self.seed = seed

    def _should_corrupt(self, problem_nl: str) -> bool:
        if self.error_rate == 0.0:
            return False
        digest = zlib.crc32(problem_nl.encode("utf-8"))
        return random.Random(f"{self.seed}:{digest}").random() < self.error_rate

    def _corrupt_target(self, statements: list[_Statement]) -> int:
        """Ordinal of the rule deriving the query predicate, else the first."""
        query = next(s for s in statements if s.kind == "query")
        ordinal = -1
        first_hit = None
        for statement in statements:
            if statement.kind != "rule":
                continue
            ordinal += 1
            if statement.predicate == query.predicate and first_hit is None:
                first_hit = ordinal
        return first_hit if first_hit is not None else 0

    def complete(self, prompt: str) -> ChatResponse:
        if REPAIR_MARKER in prompt:
            statements = parse_problem_text(_extract_repair_nl(prompt))
            text = render_translation(statements)
        elif TRANSLATE_MARKER in prompt:
            problem_nl = _extract_translate_nl(prompt)
            statements = parse_problem_text(problem_nl)
            corrupt = (
                self._corrupt_target(statements) if self._should_corrupt(problem_nl) else None
            )
            text = render_translation(statements, corrupt_rule=corrupt)
        else:
            raise EndpointError("translator stub got a prompt without a translation marker")
        return ChatResponse(
            text=text,
            usage=Usage(estimate_tokens(prompt), estimate_tokens(text), estimated=True),
        )


class ReplayStub:
    """Narrates golden chains in strategy order; a step-detection fixture."""

    def __init__(self, strategy: str, problems: list[Problem]) -> None:
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        self.strategy = strategy
        self.problems = list(problems)

    def _find_problem(self, prompt: str) -> Problem:
        for problem in self.problems:
            if problem.query_text in prompt and problem.question in prompt:
                return problem
        raise EndpointError("replay stub: prompt matches none of the loaded problems")

    def complete(self, prompt: str) -> ChatResponse:
        problem = self._find_problem(prompt)
        if problem.chain is None:
            raise EndpointError(f"replay stub: problem {problem.id} has no golden chain")
        order = strategy_indices(problem.chain, self.strategy)
        sentences = [problem.chain_texts[i] for i in order]
        sentences.append(f"Therefore the answer is {problem.answer}.")
        text = " ".join(sentences)
        return ChatResponse(
            text=text,
            usage=Usage(estimate_tokens(prompt), estimate_tokens(text), estimated=True),
        )


def make_stub(spec: str, problems: list[Problem] | None = None):
    """Build a stub endpoint from a ``stub:...`` spec string.

    Syntax: ``stub:faithful``, ``stub:faulty:RATE[:SEED]``, or
    ``stub:replay:STRATEGY``.
    """
    parts = spec.split(":")
    if parts[0] != "stub" or len(parts) < 2:
        raise ValueError(f"not a stub spec: {spec!r}")
    mode = parts[1]
    if mode == "faithful":
        if len(parts) != 2:
            raise ValueError(f"stub:faithful takes no arguments: {spec!r}")
        return TranslatorStub()
    if mode == "faulty":
        if len(parts) not in (3, 4):
            raise ValueError(f"expected stub:faulty:RATE[:SEED], got {spec!r}")
        rate = float(parts[2])
        seed = int(parts[3]) if len(parts) == 4 else 0
        return TranslatorStub(error_rate=rate, seed=seed)
    if mode == "replay":
        if len(parts) != 3:
            raise ValueError(f"expected stub:replay:STRATEGY, got {spec!r}")
        if problems is None:
            raise ValueError("replay stubs need the problem list")
        return ReplayStub(parts[2], problems)
    raise ValueError(f"unknown stub mode {mode!r} in {spec!r}")
