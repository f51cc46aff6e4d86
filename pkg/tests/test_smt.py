"""SMT-LIB emission, subprocess solving, and dual-run adjudication."""

import sys

import pytest

from nesykit.logic import VAR, KnowledgeBase, Literal, Rule, Verdict, decide_query
from nesykit.problems import generate_problems
from nesykit.smt import (
    ASSERT_NEGATED_QUERY,
    ASSERT_QUERY,
    REASON_CONTRADICTORY,
    REASON_SOLVER_UNKNOWN,
    REASON_UNDERDETERMINED,
    Adjudication,
    SolverConfig,
    SolverError,
    SolverResult,
    SolverStatus,
    SmtProgram,
    adjudicate,
    check_sat,
    decide_with_solver,
    emit_smtlib,
    resolve_solver,
)


def toy_kb(query):
    return KnowledgeBase(
        facts=(Literal("Cat", "rex"),),
        rules=(
            Rule(Literal("Cat", VAR), Literal("Mammal", VAR)),
            Rule(Literal("Cat", VAR), Literal("Shy", VAR, negated=True)),
        ),
        query=query,
    )


class TestEmission:
    def test_golden_program(self):
        program = emit_smtlib(toy_kb(Literal("Mammal", "rex")), ASSERT_QUERY)
        assert program.text == (
            "(set-logic UF)\n"
            "(declare-sort U 0)\n"
            "(declare-const rex U)\n"
            "(declare-fun Cat (U) Bool)\n"
            "(declare-fun Mammal (U) Bool)\n"
            "(declare-fun Shy (U) Bool)\n"
            "(assert (Cat rex))\n"
            "(assert (forall ((x U)) (=> (Cat x) (Mammal x))))\n"
            "(assert (forall ((x U)) (=> (Cat x) (not (Shy x)))))\n"
            "(assert (Mammal rex))\n"
            "(check-sat)\n"
        )

    def test_polarities_differ_only_in_final_assert(self):
        kb = toy_kb(Literal("Mammal", "rex"))
        pos = emit_smtlib(kb, ASSERT_QUERY).text.splitlines()
        neg = emit_smtlib(kb, ASSERT_NEGATED_QUERY).text.splitlines()
        assert pos[:-2] == neg[:-2]
        assert pos[-2] == "(assert (Mammal rex))"
        assert neg[-2] == "(assert (not (Mammal rex)))"

    def test_negated_query_polarity_flip(self):
        kb = toy_kb(Literal("Shy", "rex", negated=True))
        pos = emit_smtlib(kb, ASSERT_QUERY).text.splitlines()
        neg = emit_smtlib(kb, ASSERT_NEGATED_QUERY).text.splitlines()
        assert pos[-2] == "(assert (not (Shy rex)))"
        assert neg[-2] == "(assert (Shy rex))"

    def test_deterministic_output(self):
        kb = toy_kb(Literal("Mammal", "rex"))
        assert emit_smtlib(kb, ASSERT_QUERY) == emit_smtlib(kb, ASSERT_QUERY)

    def test_requires_query(self):
        kb = KnowledgeBase(facts=(), rules=(), query=None)
        with pytest.raises(ValueError):
            emit_smtlib(kb, ASSERT_QUERY)

    def test_rejects_unknown_polarity(self):
        with pytest.raises(ValueError):
            emit_smtlib(toy_kb(Literal("Mammal", "rex")), "sideways")


class TestResolveSolver:
    def test_builtin_uses_bundled_module(self):
        config = resolve_solver("builtin", timeout=5.0)
        assert config.path == sys.executable
        assert config.args == ("-m", "nesykit.minismt")
        assert config.timeout == 5.0

    def test_explicit_z3_path_gets_stdin_flag(self):
        config = resolve_solver("/opt/bin/z3")
        assert config.args == ("-in",)

    def test_other_binaries_get_no_flags(self):
        assert resolve_solver("/usr/bin/cvc5").args == ()


class TestCheckSat:
    def test_parses_status(self, builtin_solver):
        program = SmtProgram("(assert true) (check-sat)\n", ASSERT_QUERY)
        result = check_sat(program, builtin_solver)
        assert result.status is SolverStatus.SAT
        assert not result.timed_out
        assert result.wall_time > 0

    def test_missing_binary(self):
        config = SolverConfig("/nonexistent/solver", (), 5.0)
        with pytest.raises(SolverError, match="not found"):
            check_sat(SmtProgram("(check-sat)\n", ASSERT_QUERY), config)

    def test_unparseable_output(self):
        config = SolverConfig("/bin/sh", ("-c", "echo hello"), 5.0)
        with pytest.raises(SolverError, match="unparseable"):
            check_sat(SmtProgram("(check-sat)\n", ASSERT_QUERY), config)

    def test_timeout_becomes_unknown(self):
        config = SolverConfig("/bin/sh", ("-c", "sleep 5"), 0.2)
        result = check_sat(SmtProgram("(check-sat)\n", ASSERT_QUERY), config)
        assert result.status is SolverStatus.UNKNOWN
        assert result.timed_out


def result(status):
    return SolverResult(status, 0.0, status.value)


class TestAdjudicate:
    def test_sat_unsat_is_true(self):
        out = adjudicate(result(SolverStatus.SAT), result(SolverStatus.UNSAT))
        assert out == Adjudication(Verdict.TRUE)

    def test_unsat_sat_is_false(self):
        out = adjudicate(result(SolverStatus.UNSAT), result(SolverStatus.SAT))
        assert out == Adjudication(Verdict.FALSE)

    def test_sat_sat_is_underdetermined(self):
        out = adjudicate(result(SolverStatus.SAT), result(SolverStatus.SAT))
        assert out.verdict is Verdict.INCONSISTENT
        assert out.reason == REASON_UNDERDETERMINED

    def test_unsat_unsat_is_contradictory(self):
        out = adjudicate(result(SolverStatus.UNSAT), result(SolverStatus.UNSAT))
        assert out.verdict is Verdict.INCONSISTENT
        assert out.reason == REASON_CONTRADICTORY

    @pytest.mark.parametrize("other", [SolverStatus.SAT, SolverStatus.UNSAT])
    def test_any_unknown_wins(self, other):
        for pair in (
            (result(SolverStatus.UNKNOWN), result(other)),
            (result(other), result(SolverStatus.UNKNOWN)),
        ):
            out = adjudicate(*pair)
            assert out.verdict is Verdict.INCONSISTENT
            assert out.reason == REASON_SOLVER_UNKNOWN


class TestDecideWithSolver:
    def test_true_query(self, builtin_solver):
        adj, pos, neg = decide_with_solver(toy_kb(Literal("Mammal", "rex")), builtin_solver)
        assert adj.verdict is Verdict.TRUE
        assert (pos.status, neg.status) == (SolverStatus.SAT, SolverStatus.UNSAT)

    def test_false_query(self, builtin_solver):
        adj, _, _ = decide_with_solver(toy_kb(Literal("Shy", "rex")), builtin_solver)
        assert adj.verdict is Verdict.FALSE

    def test_underdetermined_query(self, builtin_solver):
        adj, _, _ = decide_with_solver(toy_kb(Literal("Green", "rex")), builtin_solver)
        assert adj.verdict is Verdict.INCONSISTENT
        assert adj.reason == REASON_UNDERDETERMINED

    def test_contradictory_kb(self, builtin_solver):
        kb = KnowledgeBase(
            facts=(Literal("Cat", "rex"), Literal("Cat", "rex", negated=True)),
            rules=(),
            query=Literal("Cat", "rex"),
        )
        adj, _, _ = decide_with_solver(kb, builtin_solver)
        assert adj.verdict is Verdict.INCONSISTENT
        assert adj.reason == REASON_CONTRADICTORY

    def test_save_dir_writes_both_programs(self, builtin_solver, tmp_path):
        kb = toy_kb(Literal("Mammal", "rex"))
        decide_with_solver(kb, builtin_solver, save_dir=tmp_path, stem="t1")
        pos = (tmp_path / "t1.pos.smt2").read_text()
        neg = (tmp_path / "t1.neg.smt2").read_text()
        assert pos == emit_smtlib(kb, ASSERT_QUERY).text
        assert neg == emit_smtlib(kb, ASSERT_NEGATED_QUERY).text

    def test_agrees_with_forward_chaining_oracle(self, builtin_solver):
        for problem in generate_problems(count=10, hops=2, seed=21):
            adj, _, _ = decide_with_solver(problem.kb, builtin_solver)
            assert adj.verdict is decide_query(problem.kb)
