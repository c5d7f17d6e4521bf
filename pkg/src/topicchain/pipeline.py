"""End-to-end batch pipeline: corpus -> chains -> salience -> statistics.

A run is a pure function of (config, input files). All artifacts are built in
memory first and written only when every stage has succeeded, so a failed run
leaves no partial outputs. The master seed fans out to a named substream per
grid cell; toggling one stage never perturbs another's randomness.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .chains import ROLE_FILTERS, build_usage_table
from .corpus import Discourse, parse_annotations, summarize, validate
from .embeddings import (
    EmbeddingSource,
    baseline_source,
    fnv1a64,
    load_lexicon,
    load_token_table,
)
from .salience import (
    SalienceDataset,
    format_salience_csv,
    range_label,
    salience_dataset,
)
from .stats import (
    StatsInputError,
    repeated_split_accuracy,
    resampled_group_test,
)

SOURCE_KINDS = ("lexicon", "per_token", "baseline")

REASON_EMPTY_DROP = "no_pro_drop_records"
REASON_EMPTY_NONDROP = "no_overt_records"
REASON_DROP_EXCEEDS = "drop_group_larger_than_overt"

BUNDLE_FILES = (
    "summary.json",
    "salience.csv",
    "group_tests.csv",
    "accuracy.csv",
    "diagnostics.json",
    "manifest.json",
)


class PipelineError(RuntimeError):
    """A stage failure with its owning stage and input location."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


@dataclass(frozen=True)
class SourceSpec:
    name: str
    kind: str
    path: str | None = None
    seed: int | None = None
    dim: int | None = None

    def describe(self) -> str:
        if self.kind == "baseline":
            return f"{self.name}=seed:{self.seed},dim:{self.dim}"
        return f"{self.name}={self.kind}:{self.path}"


@dataclass(frozen=True)
class RunConfig:
    annotations: str
    sources: tuple[SourceSpec, ...]
    out_dir: str
    weightings: tuple[str, ...] = ("weighted", "unweighted")
    ranges: tuple[int | None, ...] = (None, 10, 20, 30)
    test_repeats: int = 1000
    predict_repeats: int = 100
    seed: int = 0
    role_filter: str = "agent_only"
    range_truncates_history: bool = False
    salience_exclude_self: bool = False
    oov_policy: str = "skip"


@dataclass(frozen=True)
class CellStats:
    rank_sum_statistic: float | None
    p_value: float | None
    mean_accuracy: float | None
    test_seed: int
    predict_seed: int
    n_drop: int
    n_nondrop: int
    reason: str | None = None
    accuracy_reason: str | None = None


@dataclass(frozen=True)
class ReportBundle:
    config: RunConfig
    files: dict[str, str] = field(default_factory=dict)
    dataset: SalienceDataset | None = None
    cells: dict[str, CellStats] = field(default_factory=dict)
    grid_rows: tuple[tuple[str, str], ...] = ()


def derive_seed(master: int, label: str) -> int:
    """A named 63-bit substream seed, stable across runs and platforms."""
    mask = (1 << 64) - 1
    x = (master & mask) ^ fnv1a64(label.encode("utf-8"))
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & mask
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & mask
    return (x ^ (x >> 31)) >> 1


def _cell_id(source: str, weighting: str, within: int | None) -> str:
    return f"{source}|{weighting}|{range_label(within)}"


def load_source(spec: SourceSpec) -> EmbeddingSource:
    if spec.kind not in SOURCE_KINDS:
        raise PipelineError("embeddings", f"unknown source kind {spec.kind!r}")
    if spec.kind == "baseline":
        if spec.seed is None or spec.dim is None:
            raise PipelineError(
                "embeddings", f"baseline source {spec.name!r} needs seed and dim"
            )
        return baseline_source(spec.seed, spec.dim, spec.name)
    if spec.path is None:
        raise PipelineError(
            "embeddings", f"{spec.kind} source {spec.name!r} needs a path"
        )
    path = Path(spec.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineError("embeddings", f"cannot read {path}: {exc}") from exc
    try:
        if spec.kind == "lexicon":
            return load_lexicon(text, spec.name)
        return load_token_table(text, spec.name)
    except ValueError as exc:
        raise PipelineError("embeddings", f"{path}: {exc}") from exc


def run_pipeline(cfg: RunConfig) -> ReportBundle:
    """Execute every stage and write the bundle to cfg.out_dir."""
    _check_config(cfg)

    try:
        text = Path(cfg.annotations).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineError("corpus", f"cannot read {cfg.annotations}: {exc}") from exc
    try:
        discourse = parse_annotations(text)
    except ValueError as exc:
        raise PipelineError("corpus", str(exc)) from exc
    report = validate(discourse)
    if report.errors:
        first = report.errors[0]
        raise PipelineError(
            "corpus",
            f"validation failed with {len(report.errors)} error(s); "
            f"first: {first.location}: {first.message}",
        )
    summary = summarize(discourse)

    sources = [load_source(spec) for spec in cfg.sources]
    names = [s.name for s in sources]
    if len(set(names)) != len(names):
        raise PipelineError("embeddings", f"duplicate source names in {names}")

    try:
        table = build_usage_table(discourse, cfg.role_filter)
    except ValueError as exc:
        raise PipelineError("chains", str(exc)) from exc

    try:
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
    except ValueError as exc:
        raise PipelineError("salience", str(exc)) from exc

    cells = _run_stats(cfg, dataset)

    files: dict[str, str] = {}
    files["summary.json"] = _summary_json(discourse, summary)
    files["salience.csv"] = format_salience_csv(
        dataset, names, cfg.weightings, cfg.ranges
    )
    grid_rows = tuple((w, s) for w in cfg.weightings for s in names)
    bundle = ReportBundle(
        config=cfg, files=files, dataset=dataset, cells=cells, grid_rows=grid_rows
    )
    files.update(emit_tables(bundle))
    files["diagnostics.json"] = _diagnostics_json(bundle)
    files["manifest.json"] = _manifest_json(cfg)

    out = Path(cfg.out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            target = out / name
            target.write_text(content, encoding="utf-8")
            written.append(target)
    except OSError as exc:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise PipelineError("report", f"cannot write bundle: {exc}") from exc
    return bundle


def _check_config(cfg: RunConfig) -> None:
    if not cfg.sources:
        raise PipelineError("config", "at least one embedding source is required")
    if cfg.role_filter not in ROLE_FILTERS:
        raise PipelineError("config", f"unknown role_filter {cfg.role_filter!r}")
    for w in cfg.weightings:
        if w not in ("weighted", "unweighted"):
            raise PipelineError("config", f"unknown weighting {w!r}")
    if not cfg.ranges:
        raise PipelineError("config", "at least one range is required")
    for r in cfg.ranges:
        if r is not None and r <= 0:
            raise PipelineError("config", f"ranges must be positive, got {r}")
    if cfg.test_repeats < 1 or cfg.predict_repeats < 1:
        raise PipelineError("config", "repeat counts must be >= 1")


def _run_stats(cfg: RunConfig, dataset: SalienceDataset) -> dict[str, CellStats]:
    cells: dict[str, CellStats] = {}
    names = [spec.name for spec in cfg.sources]
    for source in names:
        for weighting in cfg.weightings:
            for within in cfg.ranges:
                key = (source, weighting, within)
                cid = _cell_id(*key)
                drop = []
                nondrop = []
                for record in dataset.records:
                    cell = record.cells[key]
                    if cell.value is None:
                        continue
                    (drop if record.pro_drop else nondrop).append(cell.value)
                test_seed = derive_seed(cfg.seed, f"test|{cid}")
                predict_seed = derive_seed(cfg.seed, f"predict|{cid}")
                reason = None
                if not drop:
                    reason = REASON_EMPTY_DROP
                elif not nondrop:
                    reason = REASON_EMPTY_NONDROP
                elif len(drop) > len(nondrop):
                    reason = REASON_DROP_EXCEEDS
                stat = p = acc = None
                acc_reason = None
                if reason is None:
                    result = resampled_group_test(
                        drop, nondrop, repeats=cfg.test_repeats, seed=test_seed
                    )
                    stat, p = result.mean_statistic, result.mean_p
                    pairs = [(v, True) for v in drop] + [(v, False) for v in nondrop]
                    try:
                        accuracy = repeated_split_accuracy(
                            pairs, repeats=cfg.predict_repeats, seed=predict_seed
                        )
                        acc = accuracy.mean_accuracy
                    except StatsInputError as exc:
                        acc_reason = str(exc)
                else:
                    acc_reason = reason
                cells[cid] = CellStats(
                    rank_sum_statistic=stat,
                    p_value=p,
                    mean_accuracy=acc,
                    test_seed=test_seed,
                    predict_seed=predict_seed,
                    n_drop=len(drop),
                    n_nondrop=len(nondrop),
                    reason=reason,
                    accuracy_reason=acc_reason,
                )
    return cells


def emit_tables(bundle: ReportBundle) -> dict[str, str]:
    """Render the group-test and accuracy grids as CSV and aligned text.

    Grid shape: one row per (weighting, source), one column per range.
    Group-test cells are ``statistic/p``; absent cells are ``NA(reason)``.
    """
    cfg = bundle.config
    ranges = cfg.ranges
    header = ["weighting", "source"] + [f"range_{range_label(r)}" for r in ranges]

    def cell_text(cid: str, grid: str) -> str:
        stats = bundle.cells[cid]
        if grid == "tests":
            if stats.reason is not None:
                return f"NA({stats.reason})"
            return f"{stats.rank_sum_statistic:.3f}/{stats.p_value:.6g}"
        if stats.accuracy_reason is not None:
            return f"NA({stats.accuracy_reason})"
        return f"{stats.mean_accuracy:.6f}"

    out: dict[str, str] = {}
    for grid, stem in (("tests", "group_tests"), ("accuracy", "accuracy")):
        rows = []
        for weighting, source in bundle.grid_rows:
            cells = [
                cell_text(_cell_id(source, weighting, r), grid) for r in ranges
            ]
            rows.append([weighting, source] + cells)
        out[f"{stem}.csv"] = (
            "\n".join(",".join(row) for row in [header] + rows) + "\n"
        )
        widths = [
            max(len(row[i]) for row in [header] + rows) for i in range(len(header))
        ]
        aligned = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in [header] + rows
        ]
        out[f"{stem}.txt"] = "\n".join(aligned) + "\n"
    return out


def read_grid_csv(text: str) -> tuple[list[str], list[list[str]]]:
    """Parse an emitted grid CSV back into (header, rows of cell strings)."""
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _summary_json(d: Discourse, summary) -> str:
    payload = {
        "clause_count": d.clause_count,
        "word_count": d.word_count,
        "event_count": len(d.events),
        "character_count": len(d.characters),
        "agents": summary.agents,
        "patients": summary.patients,
        "dropped_agents": summary.dropped_agents,
        "dropped_patients": summary.dropped_patients,
        "character_occurrences": [
            {"character": name, "count": count}
            for name, count in summary.character_occurrences
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _diagnostics_json(bundle: ReportBundle) -> str:
    dataset = bundle.dataset
    assert dataset is not None
    cfg = bundle.config
    cells = {}
    for cid, stats in bundle.cells.items():
        cells[cid] = {
            "rank_sum_statistic": stats.rank_sum_statistic,
            "p_value": stats.p_value,
            "mean_accuracy": stats.mean_accuracy,
            "repeats": {"test": cfg.test_repeats, "predict": cfg.predict_repeats},
            "seed": {"test": stats.test_seed, "predict": stats.predict_seed},
            "n_drop": stats.n_drop,
            "n_nondrop": stats.n_nondrop,
            "reason": stats.reason,
            "accuracy_reason": stats.accuracy_reason,
        }
    payload = {
        "records": len(dataset.records),
        "excluded_records": dataset.excluded_records,
        "degenerate_cells": dataset.degenerate_cells,
        "sources": {
            name: {
                "current_verbs_uncovered": diag.current_verbs_uncovered,
                "history_entries_skipped": diag.history_entries_skipped,
            }
            for name, diag in sorted(dataset.source_diagnostics.items())
        },
        "cells": cells,
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def config_payload(cfg: RunConfig) -> dict:
    """The reproducibility-relevant config (out_dir excluded by design)."""
    return {
        "annotations": cfg.annotations,
        "sources": [spec.describe() for spec in cfg.sources],
        "weightings": list(cfg.weightings),
        "ranges": [range_label(r) for r in cfg.ranges],
        "test_repeats": cfg.test_repeats,
        "predict_repeats": cfg.predict_repeats,
        "seed": cfg.seed,
        "role_filter": cfg.role_filter,
        "range_truncates_history": cfg.range_truncates_history,
        "salience_exclude_self": cfg.salience_exclude_self,
        "oov_policy": cfg.oov_policy,
    }


def _manifest_json(cfg: RunConfig) -> str:
    payload = config_payload(cfg)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    inputs = {}
    paths = [cfg.annotations] + [
        spec.path for spec in cfg.sources if spec.path is not None
    ]
    for p in paths:
        digest = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        inputs[str(p)] = digest
    manifest = {
        "config": payload,
        "config_hash": hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
        "inputs": inputs,
        "seed": cfg.seed,
        "version": __version__,
    }
    return json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
