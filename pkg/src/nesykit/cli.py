"""Command-line interface.

Subcommands cover the full workflow: ``gen`` synthesizes problem sets,
``translate`` checks endpoint translations without solving, ``solve``
runs the translate-solve-repair pipeline into a run directory, ``eval``
re-scores stored transcripts, ``faithfulness`` grades prose reasoning
against golden chains, ``cost`` prints the inference FLOPs model, and
``report`` renders the summary CSV and figures for a finished run.

Exit codes: 0 success, 2 configuration problem, 3 endpoint failure,
4 solver failure, 5 partial results (interrupted run).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, build_config
from .evalharness import (
    apply_overrides,
    grade_response,
    load_patterns,
    read_records,
    summarize,
    write_records,
)
from .flops import ModelArch, TokenCount, cost_breakdown, list_bundled_arches, load_arch, load_bundled_arch
from .gateway import EndpointError, load_examples, load_template, make_endpoint
from .logic import STRATEGIES
from .problems import generate_problems, read_problems, write_problems
from .report import render_report
from .runner import (
    CONDITIONS,
    PipelineContext,
    records_from_transcripts,
    read_transcripts,
    run_pipeline,
    write_transcripts,
)
from .slparser import parse_program
from .smt import SolverError, resolve_solver

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENDPOINT = 3
EXIT_SOLVER = 4
EXIT_PARTIAL = 5


def _parse_hops(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"bad hops list {text!r}; expected e.g. 1,2,3") from None
    if not values:
        raise ConfigError("hops list is empty")
    return values


def _resolve_arch(spec: str) -> ModelArch:
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_arch(path)
    try:
        return load_bundled_arch(spec)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _print_summary(summary) -> None:
    for name in sorted(summary.conditions):
        cond = summary.conditions[name]
        interval = cond.accuracy_interval
        parts = [
            f"{cond.condition}: n={cond.n}",
            f"accuracy={cond.accuracy:.3f} [{interval.p_low:.3f}, {interval.p_high:.3f}]",
        ]
        if cond.completeness is not None:
            parts.append(f"complete={cond.completeness:.3f}")
        if cond.faithfulness is not None:
            parts.append(f"faithful={cond.faithfulness:.3f}")
        parts.append(
            f"tokens=({cond.avg_prompt_tokens:.0f}, {cond.avg_completion_tokens:.0f})"
        )
        print("  " + " ".join(parts))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace, config: RunConfig) -> int:
    problems = []
    for hops in _parse_hops(args.hops):
        problems.extend(
            generate_problems(args.count, hops, distractors=args.distractors, seed=args.seed)
        )
    write_problems(args.out, problems)
    print(f"wrote {len(problems)} problems to {args.out}")
    return EXIT_OK


def cmd_translate(args: argparse.Namespace, config: RunConfig) -> int:
    problems = read_problems(args.problems)
    endpoint = make_endpoint(
        args.endpoint or config.endpoint,
        problems=problems,
        api_key=config.api_key,
        model=config.model,
    )
    template = load_template("small_model_translate")
    examples = load_examples(config.examples, count=args.examples)

    failures = 0
    with open(args.out, "w", encoding="utf-8") as handle:
        for problem in problems:
            prompt = template.render(examples=examples, problem_nl=problem.full_text)
            response = endpoint.complete(prompt)
            kb, diagnostics = parse_program(response.text)
            errors = sum(1 for d in diagnostics if d.is_error)
            failures += bool(errors or kb.query is None)
            handle.write(
                json.dumps(
                    {
                        "id": problem.id,
                        "translation": response.text,
                        "diagnostics": [d.to_json() for d in diagnostics],
                        "has_query": kb.query is not None,
                        "ok": not errors and kb.query is not None,
                    }
                )
                + "\n"
            )
    print(f"translated {len(problems)} problems, {failures} with errors, to {args.out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, config: RunConfig) -> int:
    problems_path = Path(args.problems)
    problems = read_problems(problems_path)
    conditions = args.condition or list(config.conditions)
    unknown = sorted(set(conditions) - set(CONDITIONS))
    if unknown:
        raise ConfigError(f"unknown conditions: {unknown}; known: {sorted(CONDITIONS)}")

    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(problems_path, run_dir / "problems.jsonl")

    endpoint = make_endpoint(
        config.endpoint, problems=problems, api_key=config.api_key, model=config.model
    )
    solver = resolve_solver(config.solver, timeout=config.solver_timeout)
    context = PipelineContext.build(
        endpoint,
        solver,
        examples_path=config.examples,
        max_repairs=config.max_repairs,
        save_smt_dir=run_dir / "smt" if config.save_smt else None,
    )
    (run_dir / "config.json").write_text(
        json.dumps(
            {
                **config.to_json(),
                "conditions": conditions,
                "problems_path": str(problems_path),
                "problems_sha256": _sha256(problems_path),
                "solver_command": [solver.path, *solver.args],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    done = 0

    def progress(transcript) -> None:
        nonlocal done
        done += 1
        if args.verbose:
            print(
                f"[{done}/{len(problems) * len(conditions)}] {transcript.condition} "
                f"{transcript.problem_id}: {transcript.final_verdict.name}"
            )

    result = run_pipeline(
        problems, context, conditions, workers=config.workers, progress=progress
    )
    write_transcripts(run_dir / "transcripts.jsonl", result.transcripts)
    if result.transcripts:
        records = records_from_transcripts(result.transcripts, problems)
        write_records(run_dir / "records.jsonl", records)
        summary = summarize(records, z=config.z)
        (run_dir / "summary.json").write_text(
            json.dumps(summary.to_json(), indent=2) + "\n", encoding="utf-8"
        )
        repairs = sum(t.repair_count for t in result.transcripts)
        print(f"solved {len(result.transcripts)} transcripts ({repairs} repairs) -> {run_dir}")
        _print_summary(summary)

    if result.interrupted:
        print("interrupted: artifacts hold the completed prefix", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    transcripts = read_transcripts(args.transcripts)
    problems = read_problems(args.problems)
    records = records_from_transcripts(transcripts, problems)
    if args.overrides:
        records = apply_overrides(records, args.overrides)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(out_dir / "records.jsonl", records)
    summary = summarize(records, z=config.z)
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"scored {len(records)} records -> {out_dir}")
    _print_summary(summary)
    return EXIT_OK


def cmd_faithfulness(args: argparse.Namespace, config: RunConfig) -> int:
    problems = read_problems(args.problems)
    strategy = args.strategy
    endpoint = make_endpoint(
        args.endpoint or f"stub:replay:{strategy}",
        problems=problems,
        api_key=config.api_key,
        model=config.model,
    )
    template = load_template(strategy)
    patterns = load_patterns(config.patterns)

    def grade_one(problem):
        prompt = template.render(question=problem.question, query=problem.query_text)
        response = endpoint.complete(prompt)
        record = grade_response(
            problem,
            strategy,
            response.text,
            patterns=patterns,
            strategy=strategy,
            prompt_tokens=response.usage.prompt_tokens,
            completion_tokens=response.usage.completion_tokens,
        )
        return response, record

    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as executor:
        graded = list(executor.map(grade_one, problems))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "responses.jsonl", "w", encoding="utf-8") as handle:
        for problem, (response, _) in zip(problems, graded):
            handle.write(
                json.dumps(
                    {
                        "id": problem.id,
                        "condition": strategy,
                        "response": response.text,
                        "usage": response.usage.to_json(),
                    }
                )
                + "\n"
            )
    records = [record for _, record in graded]
    if args.overrides:
        records = apply_overrides(records, args.overrides)
    write_records(out_dir / "records.jsonl", records)
    summary = summarize(records, z=config.z)
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"graded {len(records)} {strategy} responses -> {out_dir}")
    _print_summary(summary)
    return EXIT_OK


def cmd_cost(args: argparse.Namespace, config: RunConfig) -> int:
    if args.list:
        for name in list_bundled_arches():
            print(name)
        return EXIT_OK
    if not args.arch:
        raise ConfigError("cost needs --arch (or --list)")
    arch = _resolve_arch(args.arch)
    tokens = TokenCount(n_ctx=args.n_ctx, n_out=args.n_out)
    breakdown = cost_breakdown(arch, tokens, n_active_params=args.active_params)
    if args.json:
        print(json.dumps(breakdown.to_json(), indent=2))
        return EXIT_OK
    print(f"{arch.name}  n_ctx={tokens.n_ctx}  n_out={tokens.n_out}")
    rows = [
        ("embedding", breakdown.embedding),
        ("attention (first token)", breakdown.attention),
        ("feed-forward (first token)", breakdown.feed_forward),
        ("output head", breakdown.output),
        ("C_1 first-token cost", breakdown.c1),
        ("C_i0 per-token base", breakdown.c_i0),
        ("C_ic per-position increment", breakdown.c_ic),
        ("C_total", breakdown.c_total),
    ]
    for label, value in rows:
        print(f"  {label:<28} {float(value):.6e}")
    if breakdown.approx_2nn is not None:
        print(f"  {'2*N*n_tokens approximation':<28} {float(breakdown.approx_2nn):.6e}")
        print(f"  {'discrepancy':<28} {breakdown.discrepancy_percent:.3f}%")
    return EXIT_OK


def cmd_report(args: argparse.Namespace, config: RunConfig) -> int:
    if args.records:
        records_path = Path(args.records)
        default_out = records_path.parent
    else:
        run_dir = Path(args.run_dir)
        records_path = run_dir / "records.jsonl"
        default_out = run_dir
    records = read_records(records_path)
    arch = _resolve_arch(args.arch) if args.arch else None
    out_dir = Path(args.out_dir) if args.out_dir else default_out
    written = render_report(records, out_dir, arch=arch, z=config.z)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nesykit",
        description="Deductive-reasoning problems, solver-checked LLM translations, and inference cost models.",
    )
    parser.add_argument("--version", action="version", version=f"nesykit {__version__}")
    parser.add_argument("--config", help="JSON config file (CLI flags win over it)")
    parser.add_argument("--verbose", action="store_true", help="per-item progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic problems")
    p.add_argument("--out", required=True, help="output problems JSONL")
    p.add_argument("--count", type=int, default=100, help="problems per hops value")
    p.add_argument("--hops", default="1,2,3", help="comma-separated hop counts")
    p.add_argument("--distractors", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("translate", help="translate problems without solving")
    p.add_argument("--problems", required=True)
    p.add_argument("--out", required=True, help="output translations JSONL")
    p.add_argument("--endpoint", help="endpoint spec (default from config)")
    p.add_argument("--examples", type=int, default=3, help="worked examples in the prompt")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("solve", help="run the translate-solve-repair pipeline")
    p.add_argument("--problems", required=True)
    p.add_argument("--run-dir", required=True, help="directory for run artifacts")
    p.add_argument(
        "--condition",
        action="append",
        choices=sorted(CONDITIONS),
        help="pipeline condition (repeatable; default from config)",
    )
    p.add_argument("--endpoint", help="endpoint spec override")
    p.add_argument("--solver", help="solver spec override (auto, builtin, or a path)")
    p.add_argument("--workers", type=int, help="thread-pool size override")
    p.add_argument("--max-repairs", type=int, help="repair round-trips per problem")
    p.add_argument("--save-smt", action="store_true", help="keep generated solver programs")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="re-score stored transcripts")
    p.add_argument("--transcripts", required=True)
    p.add_argument("--problems", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--overrides", help="manual-review overlay JSONL")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("faithfulness", help="grade strategy-ordered reasoning")
    p.add_argument("--problems", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--endpoint", help="endpoint spec (default: replay stub)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--overrides", help="manual-review overlay JSONL")
    p.set_defaults(func=cmd_faithfulness)

    p = sub.add_parser("cost", help="inference FLOPs for an architecture")
    p.add_argument("--arch", help="bundled arch name or arch JSON path")
    p.add_argument("--list", action="store_true", help="list bundled architectures")
    p.add_argument("--n-ctx", type=int, default=1024, help="prompt tokens")
    p.add_argument("--n-out", type=int, default=256, help="completion tokens")
    p.add_argument("--active-params", type=float, help="N for the 2*N*n_tokens approximation")
    p.add_argument("--json", action="store_true", help="emit the breakdown as JSON")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("report", help="render summary.csv and figures")
    p.add_argument("--run-dir", help="run directory holding records.jsonl")
    p.add_argument("--records", help="records JSONL (alternative to --run-dir)")
    p.add_argument("--out-dir", help="output directory (default: alongside records)")
    p.add_argument("--arch", help="architecture for the accuracy-vs-FLOPs figure")
    p.set_defaults(func=cmd_report)

    return parser


def _config_overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for cli_name, config_name in (
        ("endpoint", "endpoint"),
        ("solver", "solver"),
        ("workers", "workers"),
        ("max_repairs", "max_repairs"),
    ):
        value = getattr(args, cli_name, None)
        if value is not None:
            overrides[config_name] = value
    if getattr(args, "save_smt", False):
        overrides["save_smt"] = True
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report" and bool(args.run_dir) == bool(args.records):
        parser.error("report needs exactly one of --run-dir or --records")
    try:
        config = build_config(args.config, _config_overrides(args))
        return args.func(args, config)
    except ValueError as exc:
        # ConfigError and the argument validation errors raised by the
        # library (bad endpoint specs, bad generator parameters) are all
        # user input problems at this level.
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EndpointError as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
