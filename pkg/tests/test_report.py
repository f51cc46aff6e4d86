"""Report rendering: the summary CSV and the two figures."""

import csv

import pytest

from nesykit.evalharness import EvalRecord, summarize, wilson_interval
from nesykit.flops import load_bundled_arch
from nesykit.report import (
    accuracy_vs_flops_figure,
    error_vs_tokens_figure,
    render_report,
    write_summary_csv,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def record(pid, condition, correct, complete=False, faithful=None, detected=(),
           prompt=100, completion=40):
    return EvalRecord(
        problem_id=pid,
        condition=condition,
        final_answer=correct,
        ground_truth=True,
        correct=correct,
        detected_steps=tuple(detected),
        complete=complete,
        faithful=faithful,
        prompt_tokens=prompt,
        completion_tokens=completion,
    )


@pytest.fixture
def records():
    out = []
    for i in range(10):
        out.append(record(f"a{i}", "cot", correct=i < 8, prompt=120, completion=60))
    for i in range(10):
        out.append(
            record(
                f"b{i}", "bottom_up", correct=True, complete=True, faithful=True,
                detected=(0, 1, 2), prompt=200, completion=150,
            )
        )
    return out


class TestSummaryCsv:
    def test_rows_and_cells(self, records, tmp_path):
        path = write_summary_csv(summarize(records), tmp_path / "summary.csv")
        with open(path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [row["condition"] for row in rows] == ["bottom_up", "cot"]

        cot = next(row for row in rows if row["condition"] == "cot")
        assert cot["n"] == "10"
        assert cot["n_correct"] == "8"
        assert cot["accuracy"] == "0.8"
        interval = wilson_interval(0.8, 10)
        assert cot["accuracy_low"] == f"{interval.p_low:.6g}"
        assert cot["accuracy_high"] == f"{interval.p_high:.6g}"
        assert cot["completeness"] == ""  # never graded for steps
        assert cot["faithfulness"] == ""
        assert cot["avg_completion_tokens"] == "60"

        graded = next(row for row in rows if row["condition"] == "bottom_up")
        assert graded["accuracy"] == "1"
        assert graded["completeness"] == "1"
        assert graded["faithfulness"] == "1"

    def test_header_order(self, records, tmp_path):
        path = write_summary_csv(summarize(records), tmp_path / "summary.csv")
        header = path.read_text().splitlines()[0]
        assert header == (
            "condition,n,n_correct,accuracy,accuracy_low,accuracy_high,"
            "completeness,faithfulness,avg_prompt_tokens,avg_completion_tokens"
        )


class TestFigures:
    def test_error_figure_renders_png(self, records, tmp_path):
        path = error_vs_tokens_figure(summarize(records), tmp_path / "fig.png")
        assert path.read_bytes()[:8] == PNG_MAGIC

    def test_zero_error_condition_survives_the_log_axis(self, tmp_path):
        perfect = [record(f"p{i}", "cot", correct=True) for i in range(5)]
        path = error_vs_tokens_figure(summarize(perfect), tmp_path / "fig.png")
        assert path.exists()

    def test_flops_figure_renders_png(self, records, tmp_path):
        arch = load_bundled_arch("falcon-3-10b")
        path = accuracy_vs_flops_figure(summarize(records), arch, tmp_path / "fig.png")
        assert path.read_bytes()[:8] == PNG_MAGIC


class TestRenderReport:
    def test_without_arch(self, records, tmp_path):
        written = render_report(records, tmp_path / "out")
        assert [p.name for p in written] == ["summary.csv", "error_vs_tokens.png"]
        assert all(p.exists() for p in written)

    def test_with_arch_adds_the_flops_figure(self, records, tmp_path):
        arch = load_bundled_arch("phi-4-14b")
        written = render_report(records, tmp_path / "out", arch=arch)
        assert [p.name for p in written] == [
            "summary.csv",
            "error_vs_tokens.png",
            "accuracy_vs_flops.png",
        ]

    def test_custom_z_changes_the_interval(self, records, tmp_path):
        narrow = render_report(records, tmp_path / "narrow", z=1.0)[0]
        wide = render_report(records, tmp_path / "wide", z=3.0)[0]

        def low(path):
            with open(path, newline="") as handle:
                return float(next(csv.DictReader(handle))["accuracy_low"])

        assert low(narrow) > low(wide)
