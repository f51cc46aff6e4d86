"""Acceptance checks for the toolkit's headline guarantees.

Each test covers one numbered criterion end to end and prints a single
PASS line on the real stdout (bypassing capture) so a test log always
shows one line per criterion. Reference numbers are frozen in this file;
the one reference row that disagrees with the approximation rule beyond
tolerance is kept as a strict xfail so the gap stays visible.
"""

from __future__ import annotations

import itertools
import random
import string
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, getcontext

import pytest

from nesykit.evalharness import check_faithfulness, wilson_interval
from nesykit.flops import TokenCount, cost_breakdown, discrepancy, flops_approx, load_bundled_arch
from nesykit.gateway import make_endpoint
from nesykit.logic import Verdict, decide_query, golden_transform
from nesykit.problems import generate_problems
from nesykit.runner import PipelineContext, run_pipeline
from nesykit.slparser import parse_program, render_program
from nesykit.smt import decide_with_solver


def _report(capfd, criterion: str, detail: str) -> None:
    # Suspend fd-level capture so the line reaches the real stdout and
    # shows up once per criterion in any test log.
    with capfd.disabled():
        print(f"ACCEPTANCE {criterion}: PASS ({detail})", flush=True)


def _report_fail(capfd, criterion: str, detail: str) -> None:
    with capfd.disabled():
        print(f"ACCEPTANCE {criterion}: FAIL ({detail})", flush=True)


# ---------------------------------------------------------------------------
# Reference data: per model and condition, the published token totals,
# the 2*N*n approximation they report, and the prompt/completion split
# that reproduces their theoretical cost. Splits may be half-integral
# because they are averages over a problem set.
# ---------------------------------------------------------------------------

REFERENCE_ROWS = [
    # model, condition, approx reference, (n_ctx, n_out)
    ("deepseek-r1", "normal", 1.419e14, (116, 1812)),
    ("deepseek-r1", "cot", 1.658e14, (161, 1990)),
    ("deepseek-r1", "one_shot_cot", 1.538e14, (299, 1790)),
    ("deepseek-r1", "bottom_up", 1.862e14, (506, 2025)),
    ("deepseek-r1", "top_down", 1.968e14, (494, 2180)),
    ("llama-3.1-405b", "normal", 1.75e14, (128, 87.5)),
    ("llama-3.1-405b", "cot", 3.58e14, (171, 271)),
    ("llama-3.1-405b", "one_shot_cot", 4.16e14, (308, 206)),
    ("llama-3.1-405b", "bottom_up", 7.65e14, (522, 423)),
    ("llama-3.1-405b", "top_down", 7.29e14, (514, 386)),
    ("llama-3.1-405b", "magic_set", 7.32e14, (459, 445)),
    ("phi-4-14b", "translate_3shot", 5.29e13, (1338, 550)),
    ("phi-4-14b", "repair_3shot", 5.32e13, (1349, 550)),
    ("phi-4-14b", "repair_1shot", 3.59e13, (731, 550)),
    ("gemma-3-12b", "translate_3shot", 4.56e13, (1250, 650)),
    ("gemma-3-12b", "repair_3shot", 4.56e13, (1250, 650)),
    ("gemma-3-12b", "repair_1shot", 3.10e13, (643, 650)),
    ("falcon-3-10b", "translate_3shot", 3.88e13, (1298, 640)),
    ("falcon-3-10b", "repair_3shot", 3.88e13, (1301, 640)),
    ("falcon-3-10b", "repair_1shot", 2.68e13, (702, 640)),
]

NOMINAL_PARAMS = {
    "deepseek-r1": 37e9,
    "llama-3.1-405b": 405e9,
    "phi-4-14b": 14e9,
    "gemma-3-12b": 12e9,
    "falcon-3-10b": 10e9,
}

# Reference discrepancy (percent) between the theoretical cost and the
# 2*N*n approximation, for the two model families where the reference
# figure is reproducible to within one percentage point.
REFERENCE_DISCREPANCY = {"gemma-3-12b": 9.4, "phi-4-14b": 0.4}

APPROX_TOLERANCE_PERCENT = 1.5
KNOWN_BAD_APPROX_ROW = ("deepseek-r1", "cot")


class TestCriterion1ApproximationRule:
    def test_criterion_1_two_n_rule_matches_reference(self, capfd):
        errors = {}
        for model, condition, approx_ref, (n_ctx, n_out) in REFERENCE_ROWS:
            if (model, condition) == KNOWN_BAD_APPROX_ROW:
                continue
            tokens = TokenCount(n_ctx=n_ctx, n_out=n_out)
            approx = float(flops_approx(NOMINAL_PARAMS[model], tokens))
            errors[(model, condition)] = 100 * abs(approx - approx_ref) / approx_ref
        worst = max(errors, key=errors.get)
        assert all(err <= APPROX_TOLERANCE_PERCENT for err in errors.values()), (
            worst,
            errors[worst],
        )
        _report(
            capfd,
            "criterion 1",
            f"{len(errors)} rows within {APPROX_TOLERANCE_PERCENT}% of the reference "
            f"approximation; worst {errors[worst]:.3f}% at {worst}",
        )

    @pytest.mark.xfail(
        strict=True,
        reason="the deepseek-r1 cot reference row disagrees with the 2*N*n rule"
        " by 4.0%, beyond the 1.5% tolerance; kept failing so the gap stays visible",
    )
    def test_criterion_1_deepseek_cot_reference_row(self, capfd):
        model, condition = KNOWN_BAD_APPROX_ROW
        row = next(r for r in REFERENCE_ROWS if (r[0], r[1]) == (model, condition))
        _, _, approx_ref, (n_ctx, n_out) = row
        approx = float(flops_approx(NOMINAL_PARAMS[model], TokenCount(n_ctx=n_ctx, n_out=n_out)))
        error = 100 * abs(approx - approx_ref) / approx_ref
        _report_fail(
            capfd,
            "criterion 1",
            f"{model} {condition} reference row is {error:.3f}% from the 2*N*n rule",
        )
        assert error <= APPROX_TOLERANCE_PERCENT


class TestCriterion2TheoreticalDiscrepancy:
    def test_criterion_2_theoretical_vs_approximation(self, capfd):
        arches = {name: load_bundled_arch(name) for name in NOMINAL_PARAMS}
        results = {}
        for model, condition, _, (n_ctx, n_out) in REFERENCE_ROWS:
            tokens = TokenCount(n_ctx=n_ctx, n_out=n_out)
            theoretical = cost_breakdown(arches[model], tokens).c_total
            approx = flops_approx(NOMINAL_PARAMS[model], tokens)
            results[(model, condition)] = discrepancy(theoretical, approx)

        assert len(results) == 20
        assert all(value < 10.0 for value in results.values()), results
        for (model, condition), value in results.items():
            reference = REFERENCE_DISCREPANCY.get(model)
            if reference is not None:
                assert abs(value - reference) <= 1.0, (model, condition, value)
        _report(
            capfd,
            "criterion 2",
            "20 conditions below 10% discrepancy; gemma rows within 9.4+/-1 "
            "and phi rows within 0.4+/-1 percentage points",
        )


class TestCriterion3WilsonInterval:
    # Closed form evaluated at 60 digits for p=0.5, n=300, z=3.
    FROZEN_LOW = 0.4146679814017139
    FROZEN_HIGH = 0.5853320185982861

    @staticmethod
    def _decimal_reference(p: float, n: int, z: float) -> tuple[float, float]:
        getcontext().prec = 60
        dp, dn, dz = Decimal(str(p)), Decimal(n), Decimal(str(z))
        center = (dn * dp + dz * dz / 2) / (dn + dz * dz)
        half = (dz / (dn + dz * dz)) * (dp * (1 - dp) * dn + dz * dz / 4).sqrt()
        return float(max(Decimal(0), center - half)), float(min(Decimal(1), center + half))

    def test_criterion_3_wilson_interval_oracle(self, capfd):
        interval = wilson_interval(0.5, 300, z=3.0)
        low_ref, high_ref = self._decimal_reference(0.5, 300, 3.0)
        assert abs(interval.p_low - low_ref) < 1e-6
        assert abs(interval.p_high - high_ref) < 1e-6
        assert abs(interval.p_low - self.FROZEN_LOW) < 1e-6
        assert abs(interval.p_high - self.FROZEN_HIGH) < 1e-6

        rng = random.Random(2026)
        for _ in range(1000):
            n = rng.randint(1, 5000)
            p = rng.randint(0, n) / n
            z = rng.uniform(0.2, 5.0)
            interval = wilson_interval(p, n, z=z)
            assert 0.0 <= interval.p_low <= p <= interval.p_high <= 1.0
            wider = interval.p_high - interval.p_low
            tighter = wilson_interval(p, 2 * n, z=z)
            assert tighter.p_high - tighter.p_low < wider
        _report(
            capfd,
            "criterion 3",
            "frozen point matches the 60-digit reference to 1e-6; 1000 random "
            "(p, n, z) triples keep containment, bounds, and width shrinkage",
        )


class TestCriterion4FaithfulnessOracle:
    @staticmethod
    def _oracle(golden, detected) -> bool:
        position = 0
        for symbol in detected:
            if position < len(golden) and symbol == golden[position]:
                position += 1
        return position == len(golden)

    def test_criterion_4_subsequence_oracle(self, capfd):
        alphabet = "abcd"
        sequences = [
            seq
            for length in range(5)
            for seq in itertools.product(alphabet, repeat=length)
        ]
        assert len(sequences) == 341
        checked = 0
        for golden in sequences:
            for detected in sequences:
                expected = self._oracle(golden, detected)
                assert check_faithfulness(golden, detected) is expected
                if expected:
                    assert set(golden) <= set(detected)
                checked += 1

        rng = random.Random(41)
        for _ in range(10000):
            golden = [rng.choice(alphabet) for _ in range(rng.randint(5, 6))]
            detected = [rng.choice(alphabet) for _ in range(rng.randint(5, 6))]
            expected = self._oracle(golden, detected)
            assert check_faithfulness(golden, detected) is expected
            if expected:
                assert set(golden) <= set(detected)
            checked += 1
        _report(
            capfd,
            "criterion 4",
            f"{checked} golden/detected pairs agree with the subsequence oracle, "
            "and faithful always implies set coverage",
        )


class TestCriterion5SolverAgreement:
    def test_criterion_5_solver_agrees_with_forward_chaining(
        self, capfd, problems_300, builtin_solver
    ):
        def check(problem):
            adjudication, _, _ = decide_with_solver(problem.kb, builtin_solver)
            return problem, adjudication

        with ThreadPoolExecutor(max_workers=16) as executor:
            results = list(executor.map(check, problems_300))

        inconsistent = sum(
            1 for _, adj in results if adj.verdict is Verdict.INCONSISTENT
        )
        assert inconsistent == 0
        for problem, adjudication in results:
            expected = Verdict.TRUE if problem.answer else Verdict.FALSE
            assert adjudication.verdict is expected, problem.id
            assert decide_query(problem.kb) is expected, problem.id
        _report(
            capfd,
            "criterion 5",
            f"{len(results)}/300 dual-polarity solver verdicts match forward "
            "chaining with 0 inconsistent",
        )


class TestCriterion6RepairPipeline:
    def test_criterion_6_repair_pipeline_end_to_end(self, capfd, problems_300, builtin_solver):
        answers = {p.id: p.answer for p in problems_300}

        faithful = PipelineContext.build(
            make_endpoint("stub:faithful", problems=problems_300), builtin_solver
        )
        result = run_pipeline(problems_300, faithful, ["repair_3shot"], workers=8)
        assert len(result.transcripts) == 300
        assert all(t.final_answer == answers[t.problem_id] for t in result.transcripts)
        assert sum(t.repair_count for t in result.transcripts) == 0

        faulty = PipelineContext.build(
            make_endpoint("stub:faulty:0.2:7", problems=problems_300), builtin_solver
        )
        result = run_pipeline(problems_300, faulty, ["repair_3shot"], workers=8)
        assert all(t.final_answer == answers[t.problem_id] for t in result.transcripts)
        repaired = [t for t in result.transcripts if t.repair_count]
        assert 40 <= len(repaired) <= 80, len(repaired)
        for transcript in repaired:
            assert transcript.repair_count == 1
            assert len(transcript.attempts) == 2
        for transcript in result.transcripts:
            if not transcript.repair_count:
                assert len(transcript.attempts) == 1
        _report(
            capfd,
            "criterion 6",
            "faithful endpoint solved 300/300 with 0 repairs; faulty endpoint "
            f"solved 300/300 with {len(repaired)} single-repair transcripts in [40, 80]",
        )


class TestCriterion7ParserRoundTrip:
    KNOWN_MISTAKES = [
        ("Cows are Angry.", "PLURAL_RULE_FORM"),
        ("Max is not a FruityThing.", "ADJECTIVE_NOMINALIZATION"),
        ("For all x, if x is a Lepidopteran, then it is Sweet.", "ILLEGAL_PRONOUN"),
    ]

    def test_criterion_7_render_parse_round_trip(self, capfd):
        programs = []
        for seed in range(4):
            for hops in (1, 2, 3):
                for problem in generate_problems(84, hops, seed=seed):
                    programs.append(render_program(problem.kb))
        programs = programs[:1000]
        assert len(programs) == 1000
        for text in programs:
            kb, diagnostics = parse_program(text)
            assert diagnostics == [], (text, diagnostics)
            assert render_program(kb) == text

        for sentence, expected_code in self.KNOWN_MISTAKES:
            _, diagnostics = parse_program(sentence)
            codes = {d.code for d in diagnostics}
            assert expected_code in codes, (sentence, codes)

        rng = random.Random(5)
        charset = string.ascii_letters + string.digits + " .?,:()\n-"
        for _ in range(10000):
            base = programs[rng.randrange(len(programs))]
            position = rng.randrange(len(base) + 1)
            operation = rng.randrange(3)
            if operation == 0:
                mutated = base[:position] + rng.choice(charset) + base[position:]
            elif operation == 1 and base:
                mutated = base[:position] + base[position + 1 :]
            else:
                mutated = (
                    base[:position] + rng.choice(charset) + base[position + 1 :]
                )
            parse_program(mutated)  # must diagnose, never raise
        _report(
            capfd,
            "criterion 7",
            "1000 rendered programs round-trip with zero diagnostics, 3 known "
            "mistakes get their designated codes, 10000 mutations parse without crashing",
        )


class TestCriterion8ChainTransformLaws:
    def test_criterion_8_chain_transform_laws(self, capfd):
        chains = []
        for hops in (1, 2, 3):
            chains.extend(p.chain for p in generate_problems(167, hops, seed=9))
        chains = chains[:500]
        assert len(chains) == 500
        for chain in chains:
            n = len(chain)
            assert golden_transform(chain, "bottom_up") is chain
            flipped = golden_transform(chain, "top_down")
            assert list(golden_transform(flipped, "top_down")) == list(chain)
            assert len(golden_transform(chain, "magic_set")) == 2 * n
            assert len(golden_transform(chain, "magic_set", dedupe_pivot=True)) == 2 * n - 1
        _report(
            capfd,
            "criterion 8",
            "500 golden chains: top-down is an involution and magic-set doubles "
            "the length (2n, or 2n-1 with the pivot deduplicated)",
        )
