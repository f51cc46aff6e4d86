"""Scoring: answer accuracy, reasoning-step detection, and Wilson intervals.

Three progressively stricter judgments are made about a model response:

* **correct** -- the extracted True/False answer matches the ground truth.
* **complete** -- every golden-chain step is expressed somewhere in the
  response (set inclusion over detected step indices, order ignored).
* **faithful** -- the strategy-ordered golden chain appears as an in-order
  subsequence of the detected step sequence. Faithfulness is only defined
  for derivation-strategy conditions; elsewhere it is ``None``.

Step detection is regex-based: each golden step is instantiated into every
applicable pattern template and all matches are collected, sorted by start
position (ties broken by pattern id), then consumed greedily so no two
detections overlap in the response text. Detection is intentionally
surface-level; occurrences inside a restated query are counted, and a
manual-override overlay exists for hand-reviewed transcripts.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .logic import GoldenChain, Literal, Rule, Step, golden_transform
from .problems import Problem, problem_from_json

DEFAULT_Z = 3.0

PATTERN_KINDS = ("fact", "rule", "query")

_PLACEHOLDER_RE = re.compile(r"\{(subject|predicate|antecedent|consequent|negation)\}")
_ANSWER_RE = re.compile(r"\b(true|false)\b", re.IGNORECASE)


# ---------------------------------------------------------------------------
# Answer extraction and Wilson intervals
# ---------------------------------------------------------------------------


def extract_answer(text: str) -> bool:
    """Return the last standalone true/false token; default False if none."""
    matches = _ANSWER_RE.findall(text)
    if not matches:
        return False
    return matches[-1].lower() == "true"


@dataclass(frozen=True)
class WilsonInterval:
    """Wilson score interval for a binomial proportion at half-width z."""

    p_low: float
    p_high: float
    p: float
    n: int
    z: float

    def to_json(self) -> dict:
        return {"p_low": self.p_low, "p_high": self.p_high, "p": self.p, "n": self.n, "z": self.z}


def wilson_interval(p: float, n: int, z: float = DEFAULT_Z) -> WilsonInterval:
    """Wilson score interval around observed proportion ``p`` of ``n`` trials.

    The bounds are clamped to [0, 1] to absorb float rounding at the
    endpoints; the exact formula never leaves the unit interval.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"proportion must be in [0, 1], got {p}")
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if z <= 0.0:
        raise ValueError(f"z must be positive, got {z}")
    denom = n + z * z
    center = (n * p + z * z / 2.0) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) * n + z * z / 4.0)
    return WilsonInterval(
        p_low=max(0.0, center - half),
        p_high=min(1.0, center + half),
        p=p,
        n=n,
        z=z,
    )


# ---------------------------------------------------------------------------
# Step patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepPattern:
    """A regex template that recognizes one kind of golden step in prose.

    Templates use ``{subject}``/``{predicate}`` (fact and query kinds) or
    ``{antecedent}``/``{consequent}`` (rule kind), plus ``{negation}``
    which expands to ``not\\s+`` for negated steps and to a negative
    lookahead for positive ones. Everything else is raw regex.
    """

    id: str
    kind: str
    template: str

    def __post_init__(self) -> None:
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"pattern {self.id!r}: unknown kind {self.kind!r}")
        allowed = (
            {"antecedent", "consequent", "negation"}
            if self.kind == "rule"
            else {"subject", "predicate", "negation"}
        )
        for match in _PLACEHOLDER_RE.finditer(self.template):
            name = match.group(1)
            if name not in allowed:
                raise ValueError(
                    f"pattern {self.id!r}: placeholder {{{name}}} not allowed in "
                    f"{self.kind} templates"
                )
        try:
            re.compile(_PLACEHOLDER_RE.sub("x", self.template))
        except re.error as exc:
            raise ValueError(f"pattern {self.id!r}: invalid regex template: {exc}") from None


def _token_pattern(word: str) -> str:
    """Match ``word`` with the first letter in either case, rest verbatim."""
    if not word:
        return ""
    first = word[0]
    if first.isalpha():
        return f"[{first.upper()}{first.lower()}]{re.escape(word[1:])}"
    return re.escape(word)


def _negation_pattern(negated: bool) -> str:
    return r"not\s+" if negated else r"(?!not\b)"


def instantiate_pattern(pattern: StepPattern, step: Step, terminal: bool) -> re.Pattern[str] | None:
    """Compile ``pattern`` against one golden step, or None if inapplicable.

    Fact patterns apply to ground-literal steps, rule patterns to rule
    steps, and query patterns only to the terminal literal of a chain
    (the step the query restates).
    """
    if isinstance(step, Rule):
        if pattern.kind != "rule":
            return None
        values = {
            "antecedent": _token_pattern(step.antecedent.predicate),
            "consequent": _token_pattern(step.consequent.predicate),
            "negation": _negation_pattern(step.consequent.negated),
        }
    else:
        if pattern.kind == "rule":
            return None
        if pattern.kind == "query" and not terminal:
            return None
        values = {
            "subject": _token_pattern(step.subject.capitalize()),
            "predicate": _token_pattern(step.predicate),
            "negation": _negation_pattern(step.negated),
        }
    text = _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], pattern.template)
    return re.compile(text)


def load_patterns(path: str | Path | None = None) -> tuple[StepPattern, ...]:
    """Load step patterns from a file: one ``id kind template`` per line.

    Fields are whitespace-separated with the template taking the rest of
    the line; blank lines and ``#`` comments are skipped. With no path the
    bundled default pattern set is used.
    """
    if path is None:
        path = Path(__file__).parent / "assets" / "patterns.txt"
    patterns: list[StepPattern] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(maxsplit=2)
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'id kind template'")
            pattern_id, kind, template = parts
            if pattern_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate pattern id {pattern_id!r}")
            seen.add(pattern_id)
            patterns.append(StepPattern(pattern_id, kind, template))
    if not patterns:
        raise ValueError(f"{path}: no patterns defined")
    return tuple(patterns)


# ---------------------------------------------------------------------------
# Step detection
# ---------------------------------------------------------------------------


def detect_steps(
    text: str,
    chain: GoldenChain,
    patterns: Sequence[StepPattern],
) -> list[int]:
    """Find golden-chain steps expressed in ``text``, as chain indices.

    Every pattern is instantiated against every applicable step and all
    matches are pooled, sorted by (start position, pattern id), then
    consumed greedily: a match whose span overlaps an already-consumed
    span is dropped. The surviving step indices are returned in match
    order; a step mentioned twice appears twice.
    """
    last = len(chain) - 1
    candidates: list[tuple[int, int, str, int]] = []
    for index, step in enumerate(chain):
        for pattern in patterns:
            regex = instantiate_pattern(pattern, step, terminal=index == last)
            if regex is None:
                continue
            for match in regex.finditer(text):
                candidates.append((match.start(), match.end(), pattern.id, index))
    candidates.sort(key=lambda item: (item[0], item[2]))

    detected: list[int] = []
    consumed: list[tuple[int, int]] = []
    for start, end, _, index in candidates:
        if any(start < c_end and c_start < end for c_start, c_end in consumed):
            continue
        consumed.append((start, end))
        detected.append(index)
    return detected


def check_completeness(chain: GoldenChain, detected: Iterable[int]) -> bool:
    """True when every golden step index was detected (order ignored)."""
    return set(detected) >= set(range(len(chain)))


def check_faithfulness(golden: Sequence, detected: Sequence) -> bool:
    """True when ``golden`` is an in-order subsequence of ``detected``.

    Elements are compared with ``==``; both index sequences and step
    sequences work. Edge cases follow from the subsequence definition:
    an empty golden sequence is faithful (vacuously, even against an
    empty detection list); a non-empty golden sequence against an empty
    detection list is not.
    """
    remaining = list(golden)
    if not remaining:
        return True
    for item in detected:
        if item == remaining[0]:
            remaining.pop(0)
            if not remaining:
                return True
    return False


def strategy_indices(chain: GoldenChain, strategy: str, dedupe_pivot: bool = False) -> list[int]:
    """Original-chain indices in strategy presentation order.

    This is the reference sequence faithfulness is checked against:
    transform the chain, then map each transformed step back to its index
    in the stored (bottom-up) chain.
    """
    transformed = golden_transform(chain, strategy, dedupe_pivot=dedupe_pivot)
    steps = list(chain.steps)
    return [steps.index(step) for step in transformed]


# ---------------------------------------------------------------------------
# Records and grading
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    """One scored response. ``faithful`` is None outside strategy conditions."""

    problem_id: str
    condition: str
    final_answer: bool
    ground_truth: bool
    correct: bool
    detected_steps: tuple[int, ...] = ()
    complete: bool = False
    faithful: bool | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    overridden: bool = False

    def __post_init__(self) -> None:
        if self.correct != (self.final_answer == self.ground_truth):
            raise ValueError(
                f"record {self.problem_id!r}: correct flag contradicts answers"
            )
        if self.faithful and not self.complete:
            raise ValueError(
                f"record {self.problem_id!r}: faithful implies complete"
            )

    def to_json(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "final_answer": self.final_answer,
            "ground_truth": self.ground_truth,
            "correct": self.correct,
            "detected_steps": list(self.detected_steps),
            "complete": self.complete,
            "faithful": self.faithful,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "overridden": self.overridden,
        }

    @classmethod
    def from_json(cls, record: dict) -> "EvalRecord":
        return cls(
            problem_id=str(record["problem_id"]),
            condition=record["condition"],
            final_answer=bool(record["final_answer"]),
            ground_truth=bool(record["ground_truth"]),
            correct=bool(record["correct"]),
            detected_steps=tuple(record.get("detected_steps", ())),
            complete=bool(record.get("complete", False)),
            faithful=record.get("faithful"),
            prompt_tokens=int(record.get("prompt_tokens", 0)),
            completion_tokens=int(record.get("completion_tokens", 0)),
            overridden=bool(record.get("overridden", False)),
        )


def grade_response(
    problem: Problem,
    condition: str,
    response_text: str,
    *,
    patterns: Sequence[StepPattern] | None = None,
    strategy: str | None = None,
    prompt_tokens: int = 0,
    completion_tokens: int = 0,
    final_answer: bool | None = None,
) -> EvalRecord:
    """Score one prose response against a problem's golden chain.

    ``strategy`` names the derivation order the response was asked to
    follow; without one, faithfulness is not graded. ``final_answer``
    overrides answer extraction for pipelines that decide the answer
    outside the response text. Problems without a golden chain are scored
    for accuracy only.
    """
    answer = extract_answer(response_text) if final_answer is None else final_answer
    detected: tuple[int, ...] = ()
    complete = False
    faithful: bool | None = None
    if problem.chain is not None:
        if patterns is None:
            patterns = load_patterns()
        detected = tuple(detect_steps(response_text, problem.chain, patterns))
        complete = check_completeness(problem.chain, detected)
        if strategy is not None:
            faithful = check_faithfulness(strategy_indices(problem.chain, strategy), detected)
    return EvalRecord(
        problem_id=problem.id,
        condition=condition,
        final_answer=answer,
        ground_truth=problem.answer,
        correct=answer == problem.answer,
        detected_steps=detected,
        complete=complete,
        faithful=faithful,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )


# ---------------------------------------------------------------------------
# Manual review overrides
# ---------------------------------------------------------------------------


def apply_overrides(
    records: Sequence[EvalRecord],
    overlay_path: str | Path,
    strict: bool = True,
) -> list[EvalRecord]:
    """Overlay hand-reviewed completeness/faithfulness judgments.

    The overlay is JSONL with ``{"id": ..., "complete": ..., "faithful": ...}``
    entries; either judgment may be omitted. Overridden records are
    flagged. Marking a record faithful also marks it complete (faithful
    implies complete). With ``strict``, an overlay id matching no record
    is an error.
    """
    overlays: dict[str, dict] = {}
    with open(overlay_path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            entry = json.loads(line)
            if "id" not in entry:
                raise ValueError(f"{overlay_path}:{lineno}: overlay entry has no 'id'")
            overlays[str(entry["id"])] = entry

    known = {record.problem_id for record in records}
    if strict:
        unknown = sorted(set(overlays) - known)
        if unknown:
            raise ValueError(f"overlay ids match no record: {unknown}")

    out: list[EvalRecord] = []
    for record in records:
        entry = overlays.get(record.problem_id)
        if entry is None or not ({"complete", "faithful"} & entry.keys()):
            out.append(record)
            continue
        complete = bool(entry.get("complete", record.complete))
        faithful = entry["faithful"] if "faithful" in entry else record.faithful
        if faithful:
            complete = True
        out.append(replace(record, complete=complete, faithful=faithful, overridden=True))
    return out


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionSummary:
    """Aggregate statistics for one condition.

    ``completeness`` and ``faithfulness`` are fractions of the *correct*
    records (a wrong answer makes the derivation moot); both are None
    when no record in the condition was graded for them.
    """

    condition: str
    n: int
    n_correct: int
    accuracy: float
    accuracy_interval: WilsonInterval
    completeness: float | None
    faithfulness: float | None
    avg_prompt_tokens: float
    avg_completion_tokens: float

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "n": self.n,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "accuracy_interval": self.accuracy_interval.to_json(),
            "completeness": self.completeness,
            "faithfulness": self.faithfulness,
            "avg_prompt_tokens": self.avg_prompt_tokens,
            "avg_completion_tokens": self.avg_completion_tokens,
        }


@dataclass(frozen=True)
class EvalSummary:
    conditions: dict[str, ConditionSummary] = field(default_factory=dict)
    random_reference: WilsonInterval | None = None

    def to_json(self) -> dict:
        return {
            "conditions": {name: cond.to_json() for name, cond in self.conditions.items()},
            "random_reference": None
            if self.random_reference is None
            else self.random_reference.to_json(),
        }


def summarize(records: Sequence[EvalRecord], z: float = DEFAULT_Z) -> EvalSummary:
    """Aggregate records per condition; order of ``records`` is irrelevant.

    The random-guess reference interval (Wilson at p=0.5 over the largest
    condition's n) is included so accuracy can be read against chance.
    """
    if not records:
        raise ValueError("cannot summarize zero records")

    by_condition: dict[str, list[EvalRecord]] = {}
    for record in records:
        by_condition.setdefault(record.condition, []).append(record)

    conditions: dict[str, ConditionSummary] = {}
    for name in sorted(by_condition):
        group = by_condition[name]
        n = len(group)
        correct = [r for r in group if r.correct]
        n_correct = len(correct)
        accuracy = n_correct / n

        graded_steps = any(r.detected_steps or r.complete for r in group)
        completeness = None
        if graded_steps and n_correct:
            completeness = sum(1 for r in correct if r.complete) / n_correct

        faithfulness = None
        faithful_graded = [r for r in correct if r.faithful is not None]
        if faithful_graded:
            faithfulness = sum(1 for r in faithful_graded if r.faithful) / len(faithful_graded)

        conditions[name] = ConditionSummary(
            condition=name,
            n=n,
            n_correct=n_correct,
            accuracy=accuracy,
            accuracy_interval=wilson_interval(accuracy, n, z),
            completeness=completeness,
            faithfulness=faithfulness,
            avg_prompt_tokens=sum(r.prompt_tokens for r in group) / n,
            avg_completion_tokens=sum(r.completion_tokens for r in group) / n,
        )

    largest = max(cond.n for cond in conditions.values())
    return EvalSummary(
        conditions=conditions,
        random_reference=wilson_interval(0.5, largest, z),
    )


# ---------------------------------------------------------------------------
# Record and problem I/O
# ---------------------------------------------------------------------------


def write_records(path: str | Path, records: Sequence[EvalRecord]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json()) + "\n")


def read_records(path: str | Path) -> list[EvalRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(EvalRecord.from_json(json.loads(line)))
    return records


def ingest_problems(
    path: str | Path,
    field_mapping: dict[str, str] | None = None,
) -> list[Problem]:
    """Read problems from JSONL, optionally remapping foreign field names.

    ``field_mapping`` maps our field names to the dump's (for example
    ``{"question": "context", "query": "goal"}``). Records without a
    golden chain are accepted; they are scored for accuracy only. A
    record missing a required field is an error naming its index.
    """
    mapping = {"id": "id", "question": "question", "query": "query", "answer": "answer"}
    optional = {"hops": "hops", "chain": "chain"}
    if field_mapping:
        for ours, theirs in field_mapping.items():
            if ours in mapping:
                mapping[ours] = theirs
            elif ours in optional:
                optional[ours] = theirs
            else:
                raise ValueError(f"unknown problem field in mapping: {ours!r}")

    problems: list[Problem] = []
    with open(path, encoding="utf-8") as handle:
        for index, raw in enumerate(handle):
            line = raw.strip()
            if not line:
                continue
            source = json.loads(line)
            record = {}
            for ours, theirs in mapping.items():
                if theirs not in source:
                    raise ValueError(f"record {index}: missing field {theirs!r}")
                record[ours] = source[theirs]
            for ours, theirs in optional.items():
                if theirs in source:
                    record[ours] = source[theirs]
            problems.append(problem_from_json(record))
    return problems
