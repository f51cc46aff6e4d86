"""Knowledge-base compilation to SMT-LIB and subprocess solver adjudication.

Entailment is decided by refutation: the knowledge base entails the query
exactly when the program asserting the negated query is unsatisfiable.
Each knowledge base is therefore solved twice, once per query polarity,
and the pair of results is adjudicated into a verdict; agreement between
the two runs signals a broken translation rather than an answer.
"""

from __future__ import annotations

import re
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .logic import KnowledgeBase, Literal, Verdict

ASSERT_QUERY = "assert_query"
ASSERT_NEGATED_QUERY = "assert_negated_query"

# Reason tags carried by Inconsistent verdicts.
REASON_UNDERDETERMINED = "underdetermined_translation"
REASON_CONTRADICTORY = "contradictory_kb"
REASON_SOLVER_UNKNOWN = "solver_unknown"

_STATUS_RE = re.compile(r"\b(unsat|sat|unknown)\b")


class SolverError(Exception):
    """Solver missing, crashed, or produced no parseable status token."""


class SolverStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SmtProgram:
    text: str
    polarity: str  # ASSERT_QUERY or ASSERT_NEGATED_QUERY


@dataclass(frozen=True)
class SolverResult:
    status: SolverStatus
    wall_time: float
    raw_output: str
    timed_out: bool = False

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "wall_time": round(self.wall_time, 6),
            "timed_out": self.timed_out,
        }


@dataclass(frozen=True)
class SolverConfig:
    """External solver invocation: binary path, argument list, timeout."""

    path: str
    args: tuple[str, ...] = ()
    timeout: float | None = 30.0


@dataclass(frozen=True)
class Adjudication:
    verdict: Verdict
    reason: str | None = None  # populated when verdict is INCONSISTENT


def resolve_solver(spec: str | None = None, timeout: float | None = 30.0) -> SolverConfig:
    """Pick a solver binary.

    ``spec`` may be "z3" or any binary path (SMT-LIB v2 on stdin is
    assumed; z3 needs ``-in`` and gets it automatically), or "builtin"
    for the bundled minismt solver. With no spec, z3 is preferred when
    present on PATH and the bundled solver is the fallback.
    """
    if spec in (None, "auto"):
        found = shutil.which("z3")
        if found:
            return SolverConfig(found, ("-in",), timeout)
        return SolverConfig(sys.executable, ("-m", "nesykit.minismt"), timeout)
    if spec == "builtin":
        return SolverConfig(sys.executable, ("-m", "nesykit.minismt"), timeout)
    args = ("-in",) if Path(spec).name in ("z3", "z3.exe") else ()
    return SolverConfig(spec, args, timeout)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _assert_ground(literal: Literal) -> str:
    application = f"({literal.predicate} {literal.subject})"
    if literal.negated:
        return f"(assert (not {application}))"
    return f"(assert {application})"


def emit_smtlib(kb: KnowledgeBase, polarity: str) -> SmtProgram:
    """Compile a knowledge base to one SMT-LIB program for one polarity.

    Declares a single uninterpreted sort, one constant per named subject,
    and one (U -> Bool) predicate per symbol, all in first-appearance
    order, so identical knowledge bases yield byte-identical programs.
    """
    if polarity not in (ASSERT_QUERY, ASSERT_NEGATED_QUERY):
        raise ValueError(f"unknown polarity {polarity!r}")
    query = kb.require_query()
    if polarity == ASSERT_NEGATED_QUERY:
        query = query.complement()

    lines = ["(set-logic UF)", "(declare-sort U 0)"]
    for constant in kb.constants:
        lines.append(f"(declare-const {constant} U)")
    for predicate in kb.predicates:
        lines.append(f"(declare-fun {predicate} (U) Bool)")
    for fact in kb.facts:
        lines.append(_assert_ground(fact))
    for rule in kb.rules:
        antecedent = f"({rule.antecedent.predicate} x)"
        if rule.antecedent.negated:
            antecedent = f"(not {antecedent})"
        consequent = f"({rule.consequent.predicate} x)"
        if rule.consequent.negated:
            consequent = f"(not {consequent})"
        lines.append(f"(assert (forall ((x U)) (=> {antecedent} {consequent})))")
    lines.append(_assert_ground(query))
    lines.append("(check-sat)")
    return SmtProgram(text="\n".join(lines) + "\n", polarity=polarity)


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def check_sat(program: SmtProgram, config: SolverConfig) -> SolverResult:
    """Run one fresh solver process on one program and parse its status.

    The first standalone sat/unsat/unknown token in stdout is the status.
    A timeout yields Unknown with the timed_out flag rather than an error;
    everything else unparseable raises SolverError.
    """
    start = time.perf_counter()
    try:
        proc = subprocess.run(
            [config.path, *config.args],
            input=program.text,
            capture_output=True,
            text=True,
            timeout=config.timeout,
        )
    except FileNotFoundError as exc:
        raise SolverError(f"solver binary not found: {config.path}") from exc
    except subprocess.TimeoutExpired as exc:
        elapsed = time.perf_counter() - start
        raw = (exc.stdout or b"")
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8", "replace")
        return SolverResult(SolverStatus.UNKNOWN, elapsed, raw, timed_out=True)
    elapsed = time.perf_counter() - start

    match = _STATUS_RE.search(proc.stdout)
    if not match:
        detail = (proc.stdout + proc.stderr).strip() or "<no output>"
        raise SolverError(
            f"unparseable solver output (exit {proc.returncode}): {detail[:500]}"
        )
    return SolverResult(SolverStatus(match.group(1)), elapsed, proc.stdout)


def adjudicate(pos: SolverResult, neg: SolverResult) -> Adjudication:
    """Combine the two polarity runs into a verdict.

    Disagreement is an answer; agreement or any Unknown is an
    inconsistency signal that feeds the repair loop.
    """
    if SolverStatus.UNKNOWN in (pos.status, neg.status):
        return Adjudication(Verdict.INCONSISTENT, REASON_SOLVER_UNKNOWN)
    if pos.status is SolverStatus.SAT and neg.status is SolverStatus.UNSAT:
        return Adjudication(Verdict.TRUE)
    if pos.status is SolverStatus.UNSAT and neg.status is SolverStatus.SAT:
        return Adjudication(Verdict.FALSE)
    if pos.status is SolverStatus.SAT:
        return Adjudication(Verdict.INCONSISTENT, REASON_UNDERDETERMINED)
    return Adjudication(Verdict.INCONSISTENT, REASON_CONTRADICTORY)


def decide_with_solver(
    kb: KnowledgeBase,
    config: SolverConfig,
    save_dir: Path | None = None,
    stem: str = "query",
) -> tuple[Adjudication, SolverResult, SolverResult]:
    """Emit both polarities, solve each in a fresh process, adjudicate."""
    pos_program = emit_smtlib(kb, ASSERT_QUERY)
    neg_program = emit_smtlib(kb, ASSERT_NEGATED_QUERY)
    if save_dir is not None:
        save_dir.mkdir(parents=True, exist_ok=True)
        (save_dir / f"{stem}.pos.smt2").write_text(pos_program.text, encoding="utf-8")
        (save_dir / f"{stem}.neg.smt2").write_text(neg_program.text, encoding="utf-8")
    pos = check_sat(pos_program, config)
    neg = check_sat(neg_program, config)
    return adjudicate(pos, neg), pos, neg
