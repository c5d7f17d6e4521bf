"""History-verb / current-verb relevance per character.

The clause-distance weight is 1/(|j - k| + 1) for clause numbers j, k.
Weighted relevance is the weight-scaled sum of cosine similarities between a
character's history verbs and the current verb; the unweighted variant sets
every weight to 1. Final reductions use exact compensated summation
(``math.fsum``), so reordering history entries cannot change a result.

Out-of-vocabulary policy ``skip``: uncovered history verbs contribute nothing
and are counted; an uncovered *current* verb flags the whole profile as
unusable (no vectors are ever fabricated).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import UsageTable
from .corpus import Discourse
from .embeddings import EmbeddingSource, ZeroVectorError, cosine, vector_for

OOV_POLICIES = ("skip",)


def clause_weight(j: int, k: int) -> float:
    """Decay weight 1/(d+1) for clause distance d = |j - k|."""
    return 1.0 / (abs(j - k) + 1)


def weighted_relevance(
    history: list[tuple[np.ndarray, int]], current: tuple[np.ndarray, int]
) -> float:
    """Sum of clause-weighted cosines between history verbs and the current verb."""
    vec, clause = current
    terms = [
        clause_weight(c, clause) * cosine(v, vec) for v, c in history
    ]
    return math.fsum(terms)


def unweighted_relevance(
    history: list[tuple[np.ndarray, int]], current: tuple[np.ndarray, int]
) -> float:
    """weighted_relevance with every weight equal to 1."""
    vec, _ = current
    return math.fsum(cosine(v, vec) for v, _ in history)


@dataclass(frozen=True)
class CharacterRelevance:
    weighted: float
    unweighted: float
    used_history_count: int
    skipped_oov_count: int


@dataclass(frozen=True)
class RelevanceProfile:
    """Per-character relevance at one verb position.

    ``characters`` is empty when the current verb itself is uncovered.
    """

    position: int
    current_verb_covered: bool
    characters: dict[int, CharacterRelevance]


class RelevanceComputer:
    """Shared per-(discourse, source) state for profiles at many positions.

    Event verb vectors are normalized once; a profile then reduces to index
    gathers, one dot product per history entry, and exact summation.
    """

    def __init__(self, d: Discourse, table: UsageTable, source: EmbeddingSource):
        self.discourse = d
        self.table = table
        self.source = source
        n = len(d.events)
        dim = source.dim
        mat = np.zeros((n, dim), dtype=np.float64)
        covered = np.zeros(n, dtype=bool)
        for pos, event in enumerate(d.events):
            vec = vector_for(source, event)
            if vec is None:
                continue
            norm = math.sqrt(float(np.dot(vec, vec)))
            if norm == 0.0:
                raise ZeroVectorError(
                    f"zero-norm vector for verb at token {event.verb_token_id}"
                )
            mat[pos] = vec / norm
            covered[pos] = True
        self._unit = mat
        self._covered = covered
        self._clauses = np.array([e.clause_id for e in d.events], dtype=np.int64)
        # per character: (event positions, entry clause ids) as arrays
        self._char_positions: dict[int, np.ndarray] = {}
        self._char_clauses: dict[int, np.ndarray] = {}
        for char_id in table.characters:
            pairs = table.entries_for(char_id)
            self._char_positions[char_id] = np.array(
                [pos for pos, _ in pairs], dtype=np.int64
            )
            self._char_clauses[char_id] = np.array(
                [entry.clause_id for _, entry in pairs], dtype=np.int64
            )

    def covered(self, t: int) -> bool:
        return bool(self._covered[t])

    def character_relevance(
        self, char_id: int, t: int, min_clause: int | None = None
    ) -> CharacterRelevance | None:
        """Relevance of one character's history to the verb at position t.

        ``min_clause`` restricts history to entries at clause >= min_clause
        (the optional range-truncation mode). Returns None when the character
        has no history at t under that restriction.
        """
        positions = self._char_positions.get(char_id)
        if positions is None:
            return None
        mask = positions < t
        if min_clause is not None:
            mask &= self._char_clauses[char_id] >= min_clause
        hist = positions[mask]
        if hist.size == 0:
            return None
        usable = self._covered[hist]
        used = hist[usable]
        skipped = int(hist.size - used.size)
        if used.size == 0:
            return CharacterRelevance(0.0, 0.0, 0, skipped)
        sims = self._unit[used] @ self._unit[t]
        weights = 1.0 / (np.abs(self._clauses[used] - self._clauses[t]) + 1.0)
        return CharacterRelevance(
            weighted=math.fsum(weights * sims),
            unweighted=math.fsum(sims),
            used_history_count=int(used.size),
            skipped_oov_count=skipped,
        )

    def profile(self, t: int, min_clause: int | None = None) -> RelevanceProfile:
        if not self.covered(t):
            return RelevanceProfile(t, False, {})
        characters = {}
        for char_id in sorted(self._char_positions):
            rel = self.character_relevance(char_id, t, min_clause)
            if rel is not None:
                characters[char_id] = rel
        return RelevanceProfile(t, True, characters)


def relevance_profile(
    d: Discourse,
    table: UsageTable,
    source: EmbeddingSource,
    t: int,
    oov_policy: str = "skip",
    min_clause: int | None = None,
) -> RelevanceProfile:
    """Profile at one position; loops should reuse a RelevanceComputer instead."""
    if oov_policy not in OOV_POLICIES:
        raise ValueError(f"oov_policy must be one of {OOV_POLICIES}")
    return RelevanceComputer(d, table, source).profile(t, min_clause)


def format_relevance_dump(
    d: Discourse, table: UsageTable, source: EmbeddingSource
) -> str:
    """Per-verb relevance TSV: verb_id, character, weighted, unweighted, used, skipped."""
    computer = RelevanceComputer(d, table, source)
    lines = ["verb_id\tcharacter\tweighted\tunweighted\tused\tskipped"]
    names = {c.id: c.name for c in d.characters}
    for t, event in enumerate(d.events):
        if not computer.covered(t):
            continue
        profile = computer.profile(t)
        for char_id, rel in profile.characters.items():
            lines.append(
                "\t".join(
                    (
                        str(event.verb_token_id),
                        names.get(char_id, f"ch{char_id}"),
                        repr(rel.weighted),
                        repr(rel.unweighted),
                        str(rel.used_history_count),
                        str(rel.skipped_oov_count),
                    )
                )
            )
    return "\n".join(lines) + "\n"
