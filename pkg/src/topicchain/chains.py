"""Dynamic character-verb usage table.

For every verb position the table answers: which verbs were previously
predicated of each character. Histories are strictly *previous* verbs (the
current verb is excluded from its own agent's chain), and the table is
immutable after construction, so concurrent queries are safe.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

from .corpus import Discourse

ROLE_FILTERS = ("agent_only", "agent_and_patient")


@dataclass(frozen=True)
class HistoryEntry:
    verb_token_id: int
    clause_id: int
    surface: str


class UsageTable:
    """Per-character ordered verb histories keyed by event position."""

    def __init__(
        self,
        event_clauses: tuple[int, ...],
        entries: dict[int, list[tuple[int, HistoryEntry]]],
        role_filter: str,
    ):
        self._event_clauses = event_clauses
        self._entries = entries
        self._positions = {c: [pos for pos, _ in lst] for c, lst in entries.items()}
        self.role_filter = role_filter

    @property
    def event_count(self) -> int:
        return len(self._event_clauses)

    @property
    def characters(self) -> set[int]:
        """Ids of characters with at least one table entry."""
        return set(self._entries)

    def entries_for(self, char_id: int) -> tuple[tuple[int, HistoryEntry], ...]:
        """All (event position, entry) pairs for a character, in order."""
        return tuple(self._entries.get(char_id, ()))

    def history(self, char_id: int, t: int) -> list[HistoryEntry]:
        """Verbs predicated of the character strictly before event position t."""
        self._check_position(t)
        lst = self._entries.get(char_id, [])
        cut = bisect_left(self._positions.get(char_id, []), t)
        return [entry for _, entry in lst[:cut]]

    def candidates(self, t: int, within: int | None = None) -> set[int]:
        """Characters with history at t, optionally active within N clauses.

        ``within=N`` keeps a character only if some history entry lies in a
        clause >= clause(t) - N. Candidacy restricts the comparison set; it
        does not truncate relevance sums (see the relevance module).
        """
        self._check_position(t)
        if within is not None and within <= 0:
            raise ValueError(f"range must be positive, got {within}")
        cutoff = None if within is None else self._event_clauses[t] - within
        found = set()
        for char_id, lst in self._entries.items():
            cut = bisect_left(self._positions[char_id], t)
            if cutoff is None:
                if cut > 0:
                    found.add(char_id)
            elif any(entry.clause_id >= cutoff for _, entry in lst[:cut]):
                found.add(char_id)
        return found

    def _check_position(self, t: int) -> None:
        if not 0 <= t < len(self._event_clauses):
            raise IndexError(f"event position {t} out of range")


def build_usage_table(d: Discourse, role_filter: str = "agent_only") -> UsageTable:
    """One forward pass over the events; patients join only when asked.

    An event whose agent and patient are the same character contributes a
    single entry to that character's chain.
    """
    if role_filter not in ROLE_FILTERS:
        raise ValueError(f"role_filter must be one of {ROLE_FILTERS}")
    entries: dict[int, list[tuple[int, HistoryEntry]]] = {}
    for pos, event in enumerate(d.events):
        chars = set()
        if event.agent is not None:
            chars.add(event.agent.id)
        if role_filter == "agent_and_patient" and event.patient is not None:
            chars.add(event.patient.id)
        entry = HistoryEntry(event.verb_token_id, event.clause_id, event.surface)
        for char_id in chars:
            entries.setdefault(char_id, []).append((pos, entry))
    return UsageTable(
        tuple(e.clause_id for e in d.events), entries, role_filter
    )


def format_usage_table(d: Discourse, table: UsageTable) -> str:
    """TSV dump of every character's history at the final event.

    One row per declared character: name, then space-joined
    ``surface:verb_token_id`` entries.
    """
    if not d.events:
        return ""
    t = len(d.events) - 1
    lines = []
    for c in d.characters:
        hist = table.history(c.id, t)
        cell = " ".join(f"{h.surface}:{h.verb_token_id}" for h in hist)
        lines.append(f"{c.name}\t{cell}")
    return "\n".join(lines) + "\n"
