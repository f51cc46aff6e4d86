"""Run reports: delimited summaries and rendered figures.

The CSV is the primary artifact (one row per condition); the figures put
accuracy in context, either against completion-token spend with the
random-guess Wilson band, or against modeled inference FLOPs when an
architecture is supplied. Matplotlib is imported lazily with the Agg
backend so report generation works headless and nothing else in the
package pays the import cost.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .evalharness import DEFAULT_Z, EvalRecord, EvalSummary, summarize
from .flops import ModelArch, TokenCount, flops_total

_ERROR_FLOOR = 1e-3


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_summary_csv(summary: EvalSummary, path: str | Path) -> Path:
    """One row per condition; None statistics become empty cells."""
    path = Path(path)
    columns = (
        "condition",
        "n",
        "n_correct",
        "accuracy",
        "accuracy_low",
        "accuracy_high",
        "completeness",
        "faithfulness",
        "avg_prompt_tokens",
        "avg_completion_tokens",
    )

    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for name in sorted(summary.conditions):
            cond = summary.conditions[name]
            writer.writerow(
                [
                    cond.condition,
                    cond.n,
                    cond.n_correct,
                    cell(cond.accuracy),
                    cell(cond.accuracy_interval.p_low),
                    cell(cond.accuracy_interval.p_high),
                    cell(cond.completeness),
                    cell(cond.faithfulness),
                    cell(cond.avg_prompt_tokens),
                    cell(cond.avg_completion_tokens),
                ]
            )
    return path


def error_vs_tokens_figure(summary: EvalSummary, path: str | Path) -> Path:
    """Log-log error rate against completion tokens, per condition.

    Error bars come from each condition's Wilson interval; the shaded
    horizontal band is the Wilson interval of a random guesser at the
    same n, so points inside it are indistinguishable from chance. Zero
    error is floored for the log axis and annotated by the marker edge.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))

    reference = summary.random_reference
    if reference is not None:
        ax.axhspan(
            max(_ERROR_FLOOR, 1.0 - reference.p_high),
            1.0 - reference.p_low,
            color="0.85",
            zorder=0,
            label=f"random guess (Wilson, n={reference.n})",
        )

    for name in sorted(summary.conditions):
        cond = summary.conditions[name]
        error = 1.0 - cond.accuracy
        low = max(_ERROR_FLOOR, 1.0 - cond.accuracy_interval.p_high)
        high = max(_ERROR_FLOOR, 1.0 - cond.accuracy_interval.p_low)
        y = max(_ERROR_FLOOR, error)
        x = max(1.0, cond.avg_completion_tokens)
        ax.errorbar(
            [x],
            [y],
            yerr=[[y - low], [high - y]],
            fmt="o",
            capsize=4,
            markeredgecolor="black" if error == 0.0 else "none",
            label=name,
        )

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("completion tokens (average)")
    ax.set_ylabel("error rate")
    ax.set_title("Error rate vs completion tokens")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def accuracy_vs_flops_figure(summary: EvalSummary, arch: ModelArch, path: str | Path) -> Path:
    """Accuracy against modeled inference FLOPs per answer, log x-axis.

    FLOPs are computed from each condition's average token counts under
    the given architecture, so the figure shows what the accuracy cost
    curve looks like on one model.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))

    for name in sorted(summary.conditions):
        cond = summary.conditions[name]
        tokens = TokenCount(
            n_ctx=max(1, round(cond.avg_prompt_tokens)),
            n_out=max(1, round(cond.avg_completion_tokens)),
        )
        flops = float(flops_total(arch, tokens))
        low = cond.accuracy - cond.accuracy_interval.p_low
        high = cond.accuracy_interval.p_high - cond.accuracy
        ax.errorbar(
            [flops], [cond.accuracy], yerr=[[low], [high]], fmt="s", capsize=4, label=name
        )

    ax.set_xscale("log")
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel(f"inference FLOPs ({arch.name})")
    ax.set_ylabel("accuracy")
    ax.set_title("Accuracy vs inference FLOPs")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report(
    records: Sequence[EvalRecord],
    out_dir: str | Path,
    arch: ModelArch | None = None,
    z: float = DEFAULT_Z,
) -> list[Path]:
    """Write summary.csv and figures into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(records, z=z)
    written = [
        write_summary_csv(summary, out_dir / "summary.csv"),
        error_vs_tokens_figure(summary, out_dir / "error_vs_tokens.png"),
    ]
    if arch is not None:
        written.append(accuracy_vs_flops_figure(summary, arch, out_dir / "accuracy_vs_flops.png"))
    return written
