"""Annotated discourse model and TSV ingestion.

The annotation format is a per-token TSV (UTF-8, LF, literal tabs) with a
header line::

    token_id	clause_id	surface	role	agent	patient

``role`` is one of ``S`` (subject), ``V`` (verb), ``O`` (object), ``-``.
On verb rows, ``agent``/``patient`` hold either a token_id (overt argument),
``chNN`` / ``chNN_name`` (directly labeled character), ``chNN!`` (dropped
argument resolved to character NN), or ``-``. On non-verb rows they hold
``chNN`` when the token itself denotes that character, else ``-``.
Character declarations are implicit: the union of labels seen anywhere.
Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, TextIO

HEADER_COLUMNS = ("token_id", "clause_id", "surface", "role", "agent", "patient")

_ROLE_BY_CODE = {"S": "subject", "V": "verb", "O": "object", "-": "none"}
_CODE_BY_ROLE = {v: k for k, v in _ROLE_BY_CODE.items()}
_CHAR_LABEL_RE = re.compile(r"^ch([1-9][0-9]*)(_[^\s!]+)?$")


class AnnotationError(ValueError):
    """Malformed annotation input. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CharacterLabel:
    """A story character: small positive id plus its text tag (e.g. ``ch4_prince``)."""

    id: int
    name: str


@dataclass(frozen=True)
class Token:
    token_id: int
    clause_id: int
    surface: str
    grammatical_role: str  # "subject" | "verb" | "object" | "none"
    character: CharacterLabel | None = None


@dataclass(frozen=True)
class VerbEvent:
    """One main-verb occurrence with its resolved argument characters.

    A dropped argument has no token of its own, so the drop flag always comes
    with a resolved character. Arguments that exist but do not denote a story
    character (e.g. inanimate objects) resolve to ``None``.
    """

    verb_token_id: int
    clause_id: int
    surface: str
    agent: CharacterLabel | None = None
    patient: CharacterLabel | None = None
    agent_dropped: bool = False
    patient_dropped: bool = False


@dataclass(frozen=True)
class Discourse:
    tokens: tuple[Token, ...]
    characters: tuple[CharacterLabel, ...]
    events: tuple[VerbEvent, ...]
    clause_count: int
    word_count: int


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    def ok(self) -> bool:
        return not self.findings


@dataclass(frozen=True)
class CorpusSummary:
    agents: int
    patients: int
    dropped_agents: int
    dropped_patients: int
    # (character name, occurrence count), sorted by count descending
    character_occurrences: tuple[tuple[str, int], ...]


def _parse_character(text: str, line: int) -> tuple[int, str]:
    m = _CHAR_LABEL_RE.match(text)
    if not m:
        raise AnnotationError(f"unrecognized character label {text!r}", line)
    return int(m.group(1)), text


class _CharacterRegistry:
    """Collects implicit character declarations, preferring named forms."""

    def __init__(self) -> None:
        self._names: dict[int, str] = {}

    def add(self, text: str, line: int) -> int:
        cid, name = _parse_character(text, line)
        seen = self._names.get(cid)
        if seen is None:
            self._names[cid] = name
        elif seen != name:
            # A bare chNN and a named chNN_x refer to the same character; two
            # distinct named forms for one id are contradictory.
            bare = f"ch{cid}"
            if seen == bare:
                self._names[cid] = name
            elif name != bare:
                raise AnnotationError(
                    f"character {cid} declared as both {seen!r} and {name!r}", line
                )
        return cid

    def labels(self) -> tuple[CharacterLabel, ...]:
        return tuple(
            CharacterLabel(cid, self._names[cid]) for cid in sorted(self._names)
        )


def _iter_lines(stream: TextIO | str | Iterable[str]) -> Iterable[tuple[int, str]]:
    lines = stream.splitlines() if isinstance(stream, str) else stream
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def parse_annotations(stream: TextIO | str | Iterable[str]) -> Discourse:
    """Parse the annotation TSV into a validated :class:`Discourse`.

    Raises :class:`AnnotationError` (with line number) on malformed rows,
    non-monotone clause ids, duplicate token ids, unrecognizable character
    labels, or dangling token references.
    """
    registry = _CharacterRegistry()
    tokens: list[Token] = []
    # verb rows awaiting argument resolution: (line, token fields, agent, patient)
    verb_rows: list[tuple[int, int, int, str, str, str]] = []
    header_seen = False
    last_token_id = 0
    last_clause_id = 0

    for lineno, line in _iter_lines(stream):
        cols = line.split("\t")
        if not header_seen:
            if tuple(c.strip() for c in cols) != HEADER_COLUMNS:
                raise AnnotationError(
                    f"expected header {list(HEADER_COLUMNS)}, got {cols}", lineno
                )
            header_seen = True
            continue
        if len(cols) != 6:
            raise AnnotationError(f"expected 6 columns, got {len(cols)}", lineno)
        tid_s, cid_s, surface, role_code, agent_s, patient_s = cols
        try:
            token_id = int(tid_s)
            clause_id = int(cid_s)
        except ValueError as exc:
            raise AnnotationError(f"non-integer id field: {exc}", lineno) from None
        if token_id <= 0 or clause_id <= 0:
            raise AnnotationError("token_id and clause_id must be positive", lineno)
        if token_id == last_token_id:
            raise AnnotationError(f"duplicate token_id {token_id}", lineno)
        if token_id < last_token_id:
            raise AnnotationError(
                f"token_id {token_id} not increasing (previous {last_token_id})", lineno
            )
        if clause_id < last_clause_id:
            raise AnnotationError(
                f"clause_id {clause_id} decreases (previous {last_clause_id})"
                f" at token {token_id}",
                lineno,
            )
        last_token_id, last_clause_id = token_id, clause_id
        if role_code not in _ROLE_BY_CODE:
            raise AnnotationError(f"unknown role {role_code!r}", lineno)
        role = _ROLE_BY_CODE[role_code]

        character: CharacterLabel | None = None
        if role == "verb":
            verb_rows.append((lineno, token_id, clause_id, surface, agent_s, patient_s))
        else:
            for value in (agent_s, patient_s):
                if value == "-":
                    continue
                if value.endswith("!"):
                    raise AnnotationError(
                        f"drop marker {value!r} is only valid on verb rows", lineno
                    )
                if value.isdigit():
                    raise AnnotationError(
                        f"token reference {value!r} is only valid on verb rows", lineno
                    )
                cid = registry.add(value, lineno)
                if character is not None and character.id != cid:
                    raise AnnotationError(
                        f"token denotes two characters: {character.name!r} and {value!r}",
                        lineno,
                    )
                character = CharacterLabel(cid, value)
        tokens.append(Token(token_id, clause_id, surface, role, character))

    if not header_seen:
        raise AnnotationError("empty input: header line missing", None)

    by_id = {t.token_id: t for t in tokens}

    def resolve(value: str, lineno: int) -> tuple[CharacterLabel | None, bool]:
        if value == "-":
            return None, False
        dropped = value.endswith("!")
        if dropped:
            value = value[:-1]
        if value.isdigit():
            if dropped:
                raise AnnotationError(
                    "drop marker cannot follow a token reference", lineno
                )
            ref = int(value)
            target = by_id.get(ref)
            if target is None:
                raise AnnotationError(f"dangling token reference {ref}", lineno)
            return target.character, False
        cid = registry.add(value, lineno)
        return CharacterLabel(cid, registry._names[cid]), dropped

    events = []
    for lineno, token_id, clause_id, surface, agent_s, patient_s in verb_rows:
        agent, agent_dropped = resolve(agent_s, lineno)
        patient, patient_dropped = resolve(patient_s, lineno)
        events.append(
            VerbEvent(
                verb_token_id=token_id,
                clause_id=clause_id,
                surface=surface,
                agent=agent,
                patient=patient,
                agent_dropped=agent_dropped,
                patient_dropped=patient_dropped,
            )
        )

    # Named forms may have been registered after a bare reference was resolved;
    # normalize every label to the registry's final name.
    final = {lbl.id: lbl for lbl in registry.labels()}

    def canon(lbl: CharacterLabel | None) -> CharacterLabel | None:
        return None if lbl is None else final[lbl.id]

    tokens = [
        Token(t.token_id, t.clause_id, t.surface, t.grammatical_role, canon(t.character))
        for t in tokens
    ]
    events = [
        VerbEvent(
            e.verb_token_id,
            e.clause_id,
            e.surface,
            canon(e.agent),
            canon(e.patient),
            e.agent_dropped,
            e.patient_dropped,
        )
        for e in events
    ]

    return Discourse(
        tokens=tuple(tokens),
        characters=registry.labels(),
        events=tuple(events),
        clause_count=len({t.clause_id for t in tokens}),
        word_count=len(tokens),
    )


def format_annotations(d: Discourse) -> str:
    """Serialize a discourse back to the annotation TSV (normalized form).

    Overt arguments are emitted as direct character labels, which re-parses to
    a structurally identical discourse.
    """
    event_by_verb = {e.verb_token_id: e for e in d.events}
    lines = ["\t".join(HEADER_COLUMNS)]
    for t in d.tokens:
        if t.grammatical_role == "verb" and t.token_id in event_by_verb:
            e = event_by_verb[t.token_id]
            agent = _argument_cell(e.agent, e.agent_dropped)
            patient = _argument_cell(e.patient, e.patient_dropped)
        else:
            agent = t.character.name if t.character else "-"
            patient = "-"
        lines.append(
            "\t".join(
                (
                    str(t.token_id),
                    str(t.clause_id),
                    t.surface,
                    _CODE_BY_ROLE[t.grammatical_role],
                    agent,
                    patient,
                )
            )
        )
    return "\n".join(lines) + "\n"


def _argument_cell(label: CharacterLabel | None, dropped: bool) -> str:
    if label is None:
        return "-"
    return label.name + ("!" if dropped else "")


def validate(d: Discourse) -> ValidationReport:
    """Check every type invariant; findings are data, not failures."""
    findings: list[Finding] = []

    def err(location: str, message: str) -> None:
        findings.append(Finding("error", location, message))

    declared = {}
    for c in d.characters:
        if c.id in declared:
            err(f"character {c.name}", f"duplicate character id {c.id}")
        declared[c.id] = c
        if c.id <= 0:
            err(f"character {c.name}", "character id must be positive")

    prev_tid = 0
    prev_cid = 0
    token_by_id: dict[int, Token] = {}
    for t in d.tokens:
        loc = f"token {t.token_id}"
        if t.token_id <= 0:
            err(loc, "token_id must be positive")
        if t.token_id in token_by_id:
            err(loc, "duplicate token_id")
        token_by_id[t.token_id] = t
        if prev_tid and t.token_id != prev_tid + 1:
            err(loc, f"token ids not contiguous after {prev_tid}")
        if not prev_tid and t.token_id != 1:
            err(loc, "token ids must start at 1")
        if t.clause_id <= 0:
            err(loc, "clause_id must be positive")
        if t.clause_id < prev_cid:
            err(loc, f"clause_id decreases from {prev_cid} to {t.clause_id}")
        if t.grammatical_role not in _CODE_BY_ROLE:
            err(loc, f"unknown grammatical_role {t.grammatical_role!r}")
        if t.character is not None and t.character.id not in declared:
            err(loc, f"character {t.character.name} not declared")
        prev_tid, prev_cid = t.token_id, max(prev_cid, t.clause_id)

    prev_verb = 0
    for e in d.events:
        loc = f"event at token {e.verb_token_id}"
        if e.verb_token_id <= prev_verb:
            err(loc, "events not strictly ordered by verb_token_id")
        prev_verb = e.verb_token_id
        tok = token_by_id.get(e.verb_token_id)
        if tok is None:
            err(loc, "verb_token_id refers to no token")
        else:
            if tok.grammatical_role != "verb":
                err(loc, f"token role is {tok.grammatical_role}, expected verb")
            if tok.clause_id != e.clause_id:
                err(loc, f"event clause {e.clause_id} != token clause {tok.clause_id}")
            if tok.surface != e.surface:
                err(loc, f"event surface {e.surface!r} != token surface {tok.surface!r}")
        if e.agent_dropped and e.agent is None:
            err(loc, "agent_dropped implies a resolved agent character")
        if e.patient_dropped and e.patient is None:
            err(loc, "patient_dropped implies a resolved patient character")
        for lbl in (e.agent, e.patient):
            if lbl is not None and lbl.id not in declared:
                err(loc, f"character {lbl.name} not declared")

    if d.clause_count != len({t.clause_id for t in d.tokens}):
        err("discourse", f"clause_count {d.clause_count} != distinct clause ids")
    if d.word_count != len(d.tokens):
        err("discourse", f"word_count {d.word_count} != token count")

    return ValidationReport(tuple(findings))


def summarize(d: Discourse) -> CorpusSummary:
    """Count role fills per character and per role, drops included.

    An occurrence is one (event, role) pair resolving to the character, so the
    counts are exactly reproducible by scanning the event list.
    """
    agents = sum(1 for e in d.events if e.agent is not None)
    patients = sum(1 for e in d.events if e.patient is not None)
    dropped_agents = sum(1 for e in d.events if e.agent_dropped)
    dropped_patients = sum(1 for e in d.events if e.patient_dropped)
    occurrences: Counter[int] = Counter()
    for e in d.events:
        if e.agent is not None:
            occurrences[e.agent.id] += 1
        if e.patient is not None:
            occurrences[e.patient.id] += 1
    by_char = sorted(
        ((c.name, occurrences.get(c.id, 0)) for c in d.characters),
        key=lambda item: (-item[1], item[0]),
    )
    return CorpusSummary(
        agents=agents,
        patients=patients,
        dropped_agents=dropped_agents,
        dropped_patients=dropped_patients,
        character_occurrences=tuple(by_char),
    )
