"""Verb vector sources: static word lexicons, per-token tables, seeded baseline.

Lexicon text format: an optional first header line ``<vocab_size> <dim>``,
then one entry per line, ``word c1 c2 ... cD`` with space-separated decimal
floats. Per-token format: ``token_id<TAB>c1 c2 ... cD``. Both UTF-8.

The baseline source generates, per word type, components independently
uniform on [-1, 1] from a splitmix64 stream seeded by mixing the source seed
with an FNV-1a hash of the word's UTF-8 bytes. Both algorithms are fixed by
definition here (not by library identity), so baseline vectors are
bit-identical across platforms and releases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .corpus import VerbEvent

_MASK64 = (1 << 64) - 1


class VectorFormatError(ValueError):
    """Malformed vector input. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ZeroVectorError(ValueError):
    """Cosine similarity is undefined for zero-norm vectors."""


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash (offset 0xcbf29ce484222325, prime 0x100000001b3)."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _MASK64
    return h


def _mix64(x: int) -> int:
    # splitmix64 output scrambler
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def splitmix64_uniforms(seed: int, n: int) -> list[float]:
    """n splitmix64 outputs mapped to [-1, 1) via their top 53 bits."""
    state = seed & _MASK64
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = _mix64(state)
        out.append((z >> 11) * 2.0**-53 * 2.0 - 1.0)
    return out


def baseline_word_vector(seed: int, dim: int, word: str) -> np.ndarray:
    """The baseline vector for one word type: a pure function of (seed, word)."""
    stream_seed = _mix64((seed & _MASK64) ^ fnv1a64(word.encode("utf-8")))
    return np.array(splitmix64_uniforms(stream_seed, dim), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class EmbeddingSource:
    """A named word->vector or token->vector provider.

    ``kind`` is one of ``lexicon`` (word lookup), ``per_token`` (token-id
    lookup), or ``baseline`` (seeded generation, full coverage).
    """

    name: str
    kind: str
    dim: int
    words: dict[str, np.ndarray] | None = None
    tokens: dict[int, np.ndarray] | None = None
    seed: int | None = None
    duplicate_words: int = 0
    _cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def coverage(self) -> set[int] | None:
        """Token ids present, for per_token sources."""
        return set(self.tokens) if self.tokens is not None else None


def _parse_components(fields: list[str], lineno: int) -> np.ndarray:
    try:
        vec = np.array([float(f) for f in fields], dtype=np.float64)
    except ValueError:
        raise VectorFormatError(f"non-numeric component in {fields}", lineno) from None
    if not np.all(np.isfinite(vec)):
        raise VectorFormatError("non-finite component", lineno)
    if not np.any(vec):
        raise VectorFormatError("zero vector (cosine undefined)", lineno)
    return vec


def load_lexicon(stream: TextIO | str | Iterable[str], name: str) -> EmbeddingSource:
    """Load a word-vector text file; duplicate words keep the first occurrence."""
    lines = stream.splitlines() if isinstance(stream, str) else stream
    words: dict[str, np.ndarray] = {}
    dim: int | None = None
    duplicates = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        fields = line.split(" ")
        if dim is None and not words and len(fields) == 2:
            header: tuple[int, int] | None
            try:
                header = (int(fields[0]), int(fields[1]))
            except ValueError:
                header = None  # not a header; fall through to entry parsing
            if header is not None:
                if header[1] <= 0:
                    raise VectorFormatError("header dimension must be positive", lineno)
                dim = header[1]
                continue
        if len(fields) < 2:
            raise VectorFormatError("expected `word c1 ... cD`", lineno)
        word, components = fields[0], fields[1:]
        if dim is None:
            dim = len(components)
        elif len(components) != dim:
            raise VectorFormatError(
                f"expected {dim} components, got {len(components)}", lineno
            )
        if word in words:
            duplicates += 1
            continue
        words[word] = _parse_components(components, lineno)
    if dim is None or not words:
        raise VectorFormatError("empty lexicon", None)
    return EmbeddingSource(
        name=name, kind="lexicon", dim=dim, words=words, duplicate_words=duplicates
    )


def load_token_table(stream: TextIO | str | Iterable[str], name: str) -> EmbeddingSource:
    """Load per-token vectors keyed by token_id."""
    lines = stream.splitlines() if isinstance(stream, str) else stream
    tokens: dict[int, np.ndarray] = {}
    dim: int | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise VectorFormatError("expected `token_id<TAB>c1 ... cD`", lineno)
        try:
            token_id = int(parts[0])
        except ValueError:
            raise VectorFormatError(f"non-integer token_id {parts[0]!r}", lineno) from None
        if token_id in tokens:
            raise VectorFormatError(f"duplicate token_id {token_id}", lineno)
        components = parts[1].split(" ")
        if dim is None:
            dim = len(components)
        elif len(components) != dim:
            raise VectorFormatError(
                f"expected {dim} components, got {len(components)}", lineno
            )
        tokens[token_id] = _parse_components(components, lineno)
    if dim is None:
        raise VectorFormatError("empty token table (no dimension derivable)", None)
    return EmbeddingSource(name=name, kind="per_token", dim=dim, tokens=tokens)


def baseline_source(seed: int, dim: int, name: str = "baseline") -> EmbeddingSource:
    if dim <= 0:
        raise ValueError(f"dim must be positive, got {dim}")
    return EmbeddingSource(name=name, kind="baseline", dim=dim, seed=seed)


def word_vector(source: EmbeddingSource, word: str) -> np.ndarray | None:
    """Vector for a word type, or None when uncovered (lexicon only)."""
    if source.kind == "lexicon":
        assert source.words is not None
        return source.words.get(word)
    if source.kind == "baseline":
        assert source.seed is not None
        cached = source._cache.get(word)
        if cached is None:
            cached = baseline_word_vector(source.seed, source.dim, word)
            source._cache[word] = cached
        return cached
    raise ValueError(f"source kind {source.kind!r} has no word lookup")


def token_vector(source: EmbeddingSource, token_id: int) -> np.ndarray | None:
    if source.kind != "per_token":
        raise ValueError(f"source kind {source.kind!r} has no token lookup")
    assert source.tokens is not None
    return source.tokens.get(token_id)


def vector_lookup(
    source: EmbeddingSource, surface: str, token_id: int
) -> np.ndarray | None:
    """Dispatch a verb lookup: by surface for lexicon/baseline, by id for per_token."""
    if source.kind == "per_token":
        return token_vector(source, token_id)
    return word_vector(source, surface)


def vector_for(source: EmbeddingSource, event: VerbEvent) -> np.ndarray | None:
    return vector_lookup(source, event.surface, event.verb_token_id)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a||b|); raises ZeroVectorError rather than returning a silent 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine of a zero-norm vector")
    return float(np.dot(a, b)) / (na * nb)
