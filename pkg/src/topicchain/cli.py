"""Command-line front end.

Subcommands mirror the pipeline stages: ``validate``, ``summarize``,
``table`` (usage-table dump), ``salience``, and ``analyze`` (full pipeline).
Each reads the same flat key-value config file, with command-line flags
taking precedence. Exit status reflects input and validation problems only,
never statistical outcomes: 0 ok, 1 validation findings, 2 operational error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chains import build_usage_table, format_usage_table
from .corpus import parse_annotations, summarize, validate
from .pipeline import (
    PipelineError,
    RunConfig,
    SourceSpec,
    load_source,
    run_pipeline,
)
from .relevance import format_relevance_dump
from .salience import format_salience_csv, salience_dataset


def parse_source_spec(text: str) -> SourceSpec:
    """Parse ``NAME=lexicon:PATH``, ``NAME=per_token:PATH``, or ``NAME=seed:N,dim:D``."""
    if "=" not in text:
        raise ValueError(f"source spec {text!r} must look like NAME=KIND:...")
    name, rest = text.split("=", 1)
    name = name.strip()
    if not name:
        raise ValueError(f"source spec {text!r} has an empty name")
    if rest.startswith("lexicon:"):
        return SourceSpec(name, "lexicon", path=rest[len("lexicon:") :])
    if rest.startswith("per_token:"):
        return SourceSpec(name, "per_token", path=rest[len("per_token:") :])
    if rest.startswith("seed:"):
        fields = dict(
            part.split(":", 1) for part in rest.split(",") if ":" in part
        )
        try:
            return SourceSpec(
                name, "baseline", seed=int(fields["seed"]), dim=int(fields["dim"])
            )
        except (KeyError, ValueError):
            raise ValueError(
                f"baseline spec {text!r} must look like NAME=seed:N,dim:D"
            ) from None
    raise ValueError(f"unknown source kind in {text!r}")


def parse_ranges(text: str) -> tuple[int | None, ...]:
    out: list[int | None] = []
    for part in text.split(","):
        part = part.strip()
        if part == "all":
            out.append(None)
        else:
            value = int(part)
            if value <= 0:
                raise ValueError(f"range must be positive, got {part}")
            out.append(value)
    return tuple(out)


def read_config_file(path: Path) -> dict[str, list[str]]:
    """Flat ``key = value`` lines; repeated keys accumulate (e.g. source)."""
    values: dict[str, list[str]] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected `key = value`")
        key, value = line.split("=", 1)
        values.setdefault(key.strip(), []).append(value.strip())
    return values


_BOOL_KEYS = ("range_truncates_history", "salience_exclude_self")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values: dict[str, list[str]] = {}
    if args.config:
        file_values = read_config_file(Path(args.config))

    def pick(key: str, flag_value):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key][-1]
        return None

    annotations = pick("annotations", args.annotations)
    if annotations is None:
        raise ValueError("an annotations path is required (--annotations)")
    source_texts = list(args.source or [])
    if not source_texts and "source" in file_values:
        source_texts = file_values["source"]
    sources = tuple(parse_source_spec(s) for s in source_texts)
    ranges_text = pick("ranges", args.ranges)
    weighting_text = pick("weighting", args.weighting)
    out_dir = pick("out", args.out) or "out"

    def pick_int(key: str, flag_value, default: int) -> int:
        value = pick(key, flag_value)
        return default if value is None else int(value)

    bools = {}
    for key in _BOOL_KEYS:
        flag = getattr(args, key)
        if flag:
            bools[key] = True
        elif key in file_values:
            bools[key] = file_values[key][-1].lower() in ("1", "true", "yes", "on")
        else:
            bools[key] = False

    return RunConfig(
        annotations=str(annotations),
        sources=sources,
        out_dir=str(out_dir),
        weightings=tuple(
            w.strip() for w in (weighting_text or "weighted,unweighted").split(",")
        ),
        ranges=parse_ranges(ranges_text) if ranges_text else (None, 10, 20, 30),
        test_repeats=pick_int("test_repeats", args.test_repeats, 1000),
        predict_repeats=pick_int("predict_repeats", args.predict_repeats, 100),
        seed=pick_int("seed", args.seed, 0),
        role_filter=pick("role_filter", args.role_filter) or "agent_only",
        range_truncates_history=bools["range_truncates_history"],
        salience_exclude_self=bools["salience_exclude_self"],
        oov_policy=pick("oov_policy", args.oov_policy) or "skip",
    )


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--annotations", help="annotation TSV path")
    p.add_argument(
        "--source",
        action="append",
        help="NAME=lexicon:PATH | NAME=per_token:PATH | NAME=seed:N,dim:D (repeatable)",
    )
    p.add_argument("--ranges", help="comma list: all,10,20,30")
    p.add_argument("--weighting", help="comma list: weighted,unweighted")
    p.add_argument("--test-repeats", dest="test_repeats", type=int)
    p.add_argument("--predict-repeats", dest="predict_repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--role-filter", dest="role_filter", choices=("agent_only", "agent_and_patient"))
    p.add_argument("--range-truncates-history", dest="range_truncates_history", action="store_true")
    p.add_argument("--salience-exclude-self", dest="salience_exclude_self", action="store_true")
    p.add_argument("--oov-policy", dest="oov_policy", choices=("skip",))


def _read_discourse(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineError("corpus", f"cannot read {path}: {exc}") from exc
    try:
        return parse_annotations(text)
    except ValueError as exc:
        raise PipelineError("corpus", str(exc)) from exc


def _cmd_validate(args: argparse.Namespace) -> int:
    discourse = _read_discourse(args.annotations)
    report = validate(discourse)
    for finding in report.findings:
        print(f"{finding.severity}: {finding.location}: {finding.message}")
    if report.ok():
        print("ok: 0 findings")
        return 0
    return 1


def _cmd_summarize(args: argparse.Namespace) -> int:
    discourse = _read_discourse(args.annotations)
    s = summarize(discourse)
    payload = {
        "clause_count": discourse.clause_count,
        "word_count": discourse.word_count,
        "event_count": len(discourse.events),
        "agents": s.agents,
        "patients": s.patients,
        "dropped_agents": s.dropped_agents,
        "dropped_patients": s.dropped_patients,
        "character_occurrences": [
            {"character": name, "count": count}
            for name, count in s.character_occurrences
        ],
    }
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    discourse = _read_discourse(args.annotations)
    table = build_usage_table(discourse, args.role_filter or "agent_only")
    text = format_usage_table(discourse, table)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_salience(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    discourse = _read_discourse(cfg.annotations)
    report = validate(discourse)
    if report.errors:
        for finding in report.errors:
            print(f"error: {finding.location}: {finding.message}", file=sys.stderr)
        return 1
    sources = [load_source(spec) for spec in cfg.sources]
    table = build_usage_table(discourse, cfg.role_filter)
    dataset = salience_dataset(
        discourse,
        table,
        sources,
        ranges=cfg.ranges,
        weightings=cfg.weightings,
        exclude_self=cfg.salience_exclude_self,
        range_truncates_history=cfg.range_truncates_history,
        oov_policy=cfg.oov_policy,
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_text = format_salience_csv(
        dataset, [s.name for s in sources], cfg.weightings, cfg.ranges
    )
    (out / "salience.csv").write_text(csv_text, encoding="utf-8")
    if args.dump_relevance:
        for source in sources:
            dump = format_relevance_dump(discourse, table, source)
            (out / f"relevance_{source.name}.tsv").write_text(dump, encoding="utf-8")
    print(
        f"wrote {out / 'salience.csv'}: {len(dataset.records)} records, "
        f"{dataset.excluded_records} excluded"
    )
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    bundle = run_pipeline(cfg)
    dataset = bundle.dataset
    assert dataset is not None
    print(
        f"wrote {len(bundle.files)} artifacts to {cfg.out_dir} "
        f"({len(dataset.records)} records, {dataset.excluded_records} excluded)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicchain",
        description="Character-verb continuity analysis over annotated discourse",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check annotation invariants")
    p_validate.add_argument("--annotations", required=True)
    p_validate.set_defaults(func=_cmd_validate)

    p_summary = sub.add_parser("summarize", help="corpus counts as JSON")
    p_summary.add_argument("--annotations", required=True)
    p_summary.set_defaults(func=_cmd_summarize)

    p_table = sub.add_parser("table", help="dump the character-verb usage table")
    p_table.add_argument("--annotations", required=True)
    p_table.add_argument("--role-filter", dest="role_filter", choices=("agent_only", "agent_and_patient"))
    p_table.add_argument("--out")
    p_table.set_defaults(func=_cmd_table)

    p_salience = sub.add_parser("salience", help="write the salience dataset CSV")
    _add_run_flags(p_salience)
    p_salience.add_argument(
        "--dump-relevance",
        dest="dump_relevance",
        action="store_true",
        help="also write per-source relevance TSVs",
    )
    p_salience.set_defaults(func=_cmd_salience)

    p_analyze = sub.add_parser("analyze", help="run the full pipeline")
    _add_run_flags(p_analyze)
    p_analyze.set_defaults(func=_cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
