"""The translate-solve-repair pipeline and parallel run orchestration.

A pipeline run takes natural-language problems through four stages:
prompt an endpoint for a standardized-logic translation, parse it, decide
the query with two solver calls (query asserted, then its negation), and
adjudicate. Conditions differ in how many worked examples the prompt
carries and whether an inconsistent adjudication triggers a bounded
repair round-trip:

* ``no_repair_3shot`` -- one attempt; the answer comes from the
  negated-query run alone (unsat means entailed, sat means not), with the
  dual-run adjudication recorded as a consistency signal.
* ``repair_3shot`` / ``repair_1shot`` -- the dual-run adjudication is the
  verdict; while it is INCONSISTENT, the endpoint is reprompted with its
  previous translation, up to ``max_repairs`` times.

Whatever the condition, a final verdict that is not TRUE answers False
(negation as failure at the answer level). Problems are dispatched to a
thread pool; transcripts come back in submission order regardless of
completion order, so runs are reproducible at any worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import FIRST_EXCEPTION, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .evalharness import EvalRecord
from .gateway import Endpoint, PromptTemplate, Usage, load_examples, load_template
from .logic import Verdict
from .problems import Problem
from .slparser import ParseDiagnostic, parse_program
from .smt import (
    Adjudication,
    SolverConfig,
    SolverResult,
    SolverStatus,
    decide_with_solver,
)

REASON_MISSING_QUERY = "missing_query"


@dataclass(frozen=True)
class PipelineCondition:
    name: str
    n_examples: int
    repair: bool


CONDITIONS: dict[str, PipelineCondition] = {
    "no_repair_3shot": PipelineCondition("no_repair_3shot", n_examples=3, repair=False),
    "repair_3shot": PipelineCondition("repair_3shot", n_examples=3, repair=True),
    "repair_1shot": PipelineCondition("repair_1shot", n_examples=1, repair=True),
}


@dataclass(frozen=True)
class PipelineAttempt:
    """One translation attempt with its parse and solver outcome.

    ``verdict`` follows the condition's answer policy; ``adjudication``
    is always the dual-run result, so no-repair transcripts still record
    whether the translation was consistent.
    """

    translation: str
    diagnostics: tuple[ParseDiagnostic, ...]
    verdict: Verdict
    reason: str | None
    adjudication: Verdict | None
    pos: SolverResult | None
    neg: SolverResult | None
    usage: Usage

    def to_json(self) -> dict:
        return {
            "translation": self.translation,
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "verdict": self.verdict.name,
            "reason": self.reason,
            "adjudication": None if self.adjudication is None else self.adjudication.name,
            "pos": None if self.pos is None else self.pos.to_json(),
            "neg": None if self.neg is None else self.neg.to_json(),
            "usage": self.usage.to_json(),
        }


@dataclass(frozen=True)
class PipelineTranscript:
    problem_id: str
    condition: str
    attempts: tuple[PipelineAttempt, ...]
    final_verdict: Verdict
    final_answer: bool

    @property
    def repair_count(self) -> int:
        return len(self.attempts) - 1

    @property
    def prompt_tokens(self) -> int:
        return sum(a.usage.prompt_tokens for a in self.attempts)

    @property
    def completion_tokens(self) -> int:
        return sum(a.usage.completion_tokens for a in self.attempts)

    def to_json(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "condition": self.condition,
            "attempts": [a.to_json() for a in self.attempts],
            "final_verdict": self.final_verdict.name,
            "final_answer": self.final_answer,
            "repair_count": self.repair_count,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }


def _no_repair_verdict(neg: SolverResult) -> tuple[Verdict, str | None]:
    """Single-check policy: trust the negated-query run by itself."""
    if neg.status is SolverStatus.UNSAT:
        return Verdict.TRUE, None
    if neg.status is SolverStatus.SAT:
        return Verdict.FALSE, None
    return Verdict.INCONSISTENT, "solver_unknown"


@dataclass
class PipelineContext:
    """Everything one pipeline run shares across problems and threads."""

    endpoint: Endpoint
    solver: SolverConfig
    translate: PromptTemplate
    repair: PromptTemplate
    examples_3shot: str
    examples_1shot: str
    max_repairs: int = 1
    save_smt_dir: Path | None = None

    @classmethod
    def build(
        cls,
        endpoint: Endpoint,
        solver: SolverConfig,
        examples_path: str | Path | None = None,
        max_repairs: int = 1,
        save_smt_dir: str | Path | None = None,
    ) -> "PipelineContext":
        return cls(
            endpoint=endpoint,
            solver=solver,
            translate=load_template("small_model_translate"),
            repair=load_template("small_model_repair"),
            examples_3shot=load_examples(examples_path, count=3),
            examples_1shot=load_examples(examples_path, count=1),
            max_repairs=max_repairs,
            save_smt_dir=None if save_smt_dir is None else Path(save_smt_dir),
        )

    def examples_for(self, condition: PipelineCondition) -> str:
        return self.examples_1shot if condition.n_examples == 1 else self.examples_3shot


def solve_problem(
    context: PipelineContext,
    condition: PipelineCondition,
    problem_nl: str,
    problem_id: str,
) -> PipelineTranscript:
    """Run one problem through translate, parse, solve, and bounded repair."""
    examples = context.examples_for(condition)
    prompt = context.translate.render(examples=examples, problem_nl=problem_nl)
    max_attempts = 1 + (context.max_repairs if condition.repair else 0)
    attempts: list[PipelineAttempt] = []

    for attempt_index in range(1, max_attempts + 1):
        response = context.endpoint.complete(prompt)
        kb, diagnostics = parse_program(response.text)

        adjudication: Adjudication | None = None
        pos = neg = None
        if kb.query is None:
            verdict, reason = Verdict.INCONSISTENT, REASON_MISSING_QUERY
        else:
            save_dir = None
            if context.save_smt_dir is not None:
                save_dir = context.save_smt_dir / condition.name
                save_dir.mkdir(parents=True, exist_ok=True)
            adjudication, pos, neg = decide_with_solver(
                kb, context.solver, save_dir=save_dir, stem=f"{problem_id}-a{attempt_index}"
            )
            if condition.repair:
                verdict, reason = adjudication.verdict, adjudication.reason
            else:
                verdict, reason = _no_repair_verdict(neg)

        attempts.append(
            PipelineAttempt(
                translation=response.text,
                diagnostics=tuple(diagnostics),
                verdict=verdict,
                reason=reason,
                adjudication=None if adjudication is None else adjudication.verdict,
                pos=pos,
                neg=neg,
                usage=response.usage,
            )
        )
        if verdict in (Verdict.TRUE, Verdict.FALSE) or attempt_index == max_attempts:
            break
        prompt = context.repair.render(
            examples=examples,
            problem_nl=problem_nl,
            previous_translation=response.text,
        )

    final = attempts[-1].verdict
    return PipelineTranscript(
        problem_id=problem_id,
        condition=condition.name,
        attempts=tuple(attempts),
        final_verdict=final,
        final_answer=final is Verdict.TRUE,
    )


@dataclass
class RunResult:
    transcripts: list[PipelineTranscript] = field(default_factory=list)
    interrupted: bool = False


def run_pipeline(
    problems: Sequence[Problem],
    context: PipelineContext,
    conditions: Sequence[str],
    workers: int = 4,
    progress: Callable[[PipelineTranscript], None] | None = None,
) -> RunResult:
    """Solve every problem under every condition on a thread pool.

    Transcripts are ordered by (condition, problem) submission order. On
    KeyboardInterrupt the pool is drained and the completed prefix is
    returned with ``interrupted`` set; a worker exception cancels what it
    can and re-raises.
    """
    unknown = sorted(set(conditions) - set(CONDITIONS))
    if unknown:
        raise ValueError(f"unknown conditions: {unknown}; known: {sorted(CONDITIONS)}")

    jobs: list[tuple[PipelineCondition, Problem]] = [
        (CONDITIONS[name], problem) for name in conditions for problem in problems
    ]
    result = RunResult()
    executor = ThreadPoolExecutor(max_workers=max(1, workers))
    futures: list[Future] = []
    try:
        for condition, problem in jobs:
            futures.append(
                executor.submit(solve_problem, context, condition, problem.full_text, problem.id)
            )
        wait(futures, return_when=FIRST_EXCEPTION)
        for future in futures:
            transcript = future.result()
            result.transcripts.append(transcript)
            if progress is not None:
                progress(transcript)
    except KeyboardInterrupt:
        result.interrupted = True
        for future in futures:
            future.cancel()
        for future in futures:
            if future.done() and not future.cancelled() and future.exception() is None:
                result.transcripts.append(future.result())
            else:
                break
    finally:
        executor.shutdown(wait=not result.interrupted, cancel_futures=result.interrupted)
    return result


def records_from_transcripts(
    transcripts: Sequence[PipelineTranscript],
    problems: Sequence[Problem],
) -> list[EvalRecord]:
    """Accuracy-only records: pipeline answers carry no prose reasoning."""
    by_id = {problem.id: problem for problem in problems}
    records = []
    for transcript in transcripts:
        problem = by_id.get(transcript.problem_id)
        if problem is None:
            raise ValueError(f"transcript {transcript.problem_id!r} matches no problem")
        records.append(
            EvalRecord(
                problem_id=transcript.problem_id,
                condition=transcript.condition,
                final_answer=transcript.final_answer,
                ground_truth=problem.answer,
                correct=transcript.final_answer == problem.answer,
                prompt_tokens=transcript.prompt_tokens,
                completion_tokens=transcript.completion_tokens,
            )
        )
    return records


# ---------------------------------------------------------------------------
# Transcript I/O
# ---------------------------------------------------------------------------


def write_transcripts(path: str | Path, transcripts: Sequence[PipelineTranscript]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for transcript in transcripts:
            handle.write(json.dumps(transcript.to_json()) + "\n")


def _attempt_from_json(record: dict) -> PipelineAttempt:
    return PipelineAttempt(
        translation=record["translation"],
        diagnostics=tuple(ParseDiagnostic.from_json(d) for d in record.get("diagnostics", ())),
        verdict=Verdict[record["verdict"]],
        reason=record.get("reason"),
        adjudication=None
        if record.get("adjudication") is None
        else Verdict[record["adjudication"]],
        pos=None,
        neg=None,
        usage=Usage(
            prompt_tokens=int(record["usage"]["prompt_tokens"]),
            completion_tokens=int(record["usage"]["completion_tokens"]),
            estimated=bool(record["usage"].get("estimated", False)),
        ),
    )


def read_transcripts(path: str | Path) -> list[PipelineTranscript]:
    """Read transcripts back; solver raw outputs are not round-tripped."""
    transcripts = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            transcripts.append(
                PipelineTranscript(
                    problem_id=str(record["problem_id"]),
                    condition=record["condition"],
                    attempts=tuple(_attempt_from_json(a) for a in record["attempts"]),
                    final_verdict=Verdict[record["final_verdict"]],
                    final_answer=bool(record["final_answer"]),
                )
            )
    return transcripts
