"""Correct-character salience against candidate characters.

For candidate set of size n containing the correct character k, the salience
is ``sum_i (R(k)+1)/(R(i)+1) / (n+1)`` where i spans all n candidates, so the
self term contributes exactly 1 and equal relevances sit at the fixed point
n/(n+1). The alternate index convention (i skips k) is available as
``exclude_self`` for sensitivity checks.

Raw unweighted sums can fall below -1, so each denominator R(i)+1 is guarded
by an epsilon; a degenerate denominator voids that cell and is tallied rather
than clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .chains import UsageTable
from .corpus import CharacterLabel, Discourse
from .embeddings import EmbeddingSource
from .relevance import RelevanceComputer

DENOMINATOR_EPSILON = 1e-9

REASON_CURRENT_UNCOVERED = "current_verb_uncovered"
REASON_NOT_A_CANDIDATE = "not_a_candidate"
REASON_DEGENERATE = "degenerate_denominator"

WEIGHTINGS = ("weighted", "unweighted")


class NotACandidateError(ValueError):
    """The scored character is not in the candidate set."""


class DegenerateDenominatorError(ValueError):
    """Some candidate's R+1 fell inside the epsilon guard."""


def salience_score(
    relevance_by_candidate: Mapping[int, float], k: int, exclude_self: bool = False
) -> float:
    """Relative standing of character k among the candidates.

    ``relevance_by_candidate`` maps candidate character id to its relevance
    under one weighting; k must be one of the candidates.
    """
    if k not in relevance_by_candidate:
        raise NotACandidateError(f"character {k} is not a candidate")
    rk = relevance_by_candidate[k] + 1.0
    terms = []
    for i, ri in relevance_by_candidate.items():
        denom = ri + 1.0
        if denom <= DENOMINATOR_EPSILON:
            raise DegenerateDenominatorError(
                f"candidate {i} has relevance {ri} (denominator {denom} <= epsilon)"
            )
        if exclude_self and i == k:
            continue
        terms.append(rk / denom)
    return math.fsum(terms) / (len(relevance_by_candidate) + 1)


# One grid cell key: (source name, weighting, range in clauses or None for all).
CellKey = tuple[str, str, int | None]


@dataclass(frozen=True)
class CellResult:
    """A salience value or the reason it is absent."""

    value: float | None
    candidate_count: int
    reason: str | None = None


@dataclass(frozen=True)
class SalienceRecord:
    position: int
    verb_token_id: int
    correct_character: CharacterLabel
    pro_drop: bool
    cells: dict[CellKey, CellResult]


@dataclass(frozen=True)
class SourceDiagnostics:
    current_verbs_uncovered: int = 0
    history_entries_skipped: int = 0


@dataclass(frozen=True)
class SalienceDataset:
    records: tuple[SalienceRecord, ...]
    # agent-resolved events whose current verb no source covers
    excluded_records: int
    degenerate_cells: int
    source_diagnostics: dict[str, SourceDiagnostics] = field(default_factory=dict)


def range_label(within: int | None) -> str:
    return "all" if within is None else str(within)


def salience_dataset(
    d: Discourse,
    table: UsageTable,
    sources: Sequence[EmbeddingSource],
    ranges: Sequence[int | None] = (None, 10, 20, 30),
    weightings: Sequence[str] = WEIGHTINGS,
    exclude_self: bool = False,
    range_truncates_history: bool = False,
    oov_policy: str = "skip",
) -> SalienceDataset:
    """One record per agent-resolved event covered by at least one source.

    Every (source, weighting, range) cell is either a salience value with its
    candidate count or a reason code. Records are ordered by verb position;
    identical inputs produce identical datasets.
    """
    for w in weightings:
        if w not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {w!r}")
    if oov_policy != "skip":
        raise ValueError(f"unknown oov_policy {oov_policy!r}")
    computers = {s.name: RelevanceComputer(d, table, s) for s in sources}
    records: list[SalienceRecord] = []
    excluded = 0
    degenerate = 0
    uncovered_current: dict[str, int] = {s.name: 0 for s in sources}
    skipped_history: dict[str, int] = {s.name: 0 for s in sources}

    for t, event in enumerate(d.events):
        if event.agent is None:
            continue
        k = event.agent.id
        covered_by = [s for s in sources if computers[s.name].covered(t)]
        for s in sources:
            if s not in covered_by:
                uncovered_current[s.name] += 1
        if not covered_by:
            excluded += 1
            continue
        candidate_sets = {
            within: table.candidates(t, within) for within in ranges
        }
        cells: dict[CellKey, CellResult] = {}
        for source in sources:
            computer = computers[source.name]
            if source not in covered_by:
                for within in ranges:
                    n = len(candidate_sets[within])
                    for weighting in weightings:
                        cells[(source.name, weighting, within)] = CellResult(
                            None, n, REASON_CURRENT_UNCOVERED
                        )
                continue
            full = {}
            for char_id in table.characters:
                rel = computer.character_relevance(char_id, t)
                if rel is not None:
                    full[char_id] = rel
                    skipped_history[source.name] += rel.skipped_oov_count
            for within in ranges:
                candidates = candidate_sets[within]
                n = len(candidates)
                if k not in candidates:
                    for weighting in weightings:
                        cells[(source.name, weighting, within)] = CellResult(
                            None, n, REASON_NOT_A_CANDIDATE
                        )
                    continue
                if range_truncates_history and within is not None:
                    min_clause = event.clause_id - within
                    rels = {
                        c: computer.character_relevance(c, t, min_clause)
                        for c in candidates
                    }
                else:
                    rels = {c: full[c] for c in candidates}
                for weighting in weightings:
                    by_candidate = {
                        c: (rel.weighted if weighting == "weighted" else rel.unweighted)
                        for c, rel in rels.items()
                        if rel is not None
                    }
                    try:
                        value = salience_score(by_candidate, k, exclude_self)
                        cells[(source.name, weighting, within)] = CellResult(value, n)
                    except DegenerateDenominatorError:
                        degenerate += 1
                        cells[(source.name, weighting, within)] = CellResult(
                            None, n, REASON_DEGENERATE
                        )
                    except NotACandidateError:
                        cells[(source.name, weighting, within)] = CellResult(
                            None, n, REASON_NOT_A_CANDIDATE
                        )
        records.append(
            SalienceRecord(t, event.verb_token_id, event.agent, event.agent_dropped, cells)
        )

    return SalienceDataset(
        records=tuple(records),
        excluded_records=excluded,
        degenerate_cells=degenerate,
        source_diagnostics={
            s.name: SourceDiagnostics(
                current_verbs_uncovered=uncovered_current[s.name],
                history_entries_skipped=skipped_history[s.name],
            )
            for s in sources
        },
    )


def format_salience_csv(
    dataset: SalienceDataset,
    sources: Sequence[str],
    weightings: Sequence[str],
    ranges: Sequence[int | None],
) -> str:
    """Dataset CSV: verb_id, correct_character, pro_drop, one value column and
    one reason column per (source, weighting, range) cell."""
    keys: list[CellKey] = [
        (s, w, r) for s in sources for w in weightings for r in ranges
    ]
    header = ["verb_id", "correct_character", "pro_drop"]
    for s, w, r in keys:
        base = f"{s}_{w}_{range_label(r)}"
        header.extend((base, f"{base}_reason"))
    lines = [",".join(header)]
    for record in dataset.records:
        row = [
            str(record.verb_token_id),
            record.correct_character.name,
            "true" if record.pro_drop else "false",
        ]
        for key in keys:
            cell = record.cells[key]
            row.append("" if cell.value is None else repr(cell.value))
            row.append(cell.reason or "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
