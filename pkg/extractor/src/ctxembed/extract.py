"""Windowed per-token contextual embeddings.

The discourse's token surfaces are grouped into consecutive non-overlapping
windows (default 50 words, final short window allowed) and each window is
encoded on its own, joined by single spaces. A word's vector is the
arithmetic mean of its subword-piece vectors from the chosen hidden layer
(default: the final one). Output lines are ``token_id<TAB>c1 c2 ... cD``,
aligned 1:1 with the input tokens and byte-compatible with the analysis
toolkit's per-token loader.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class ExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExtractionJob:
    tokens: tuple[tuple[int, str], ...]  # (token_id, surface) in discourse order
    model: str
    out_path: str
    window: int = 50
    layer: int | None = None  # None = final hidden layer
    debug_pieces_path: str | None = None


@dataclass(frozen=True)
class ExtractionResult:
    token_count: int
    window_count: int
    dim: int


def read_annotation_tokens(text: str) -> tuple[tuple[int, str], ...]:
    """(token_id, surface) pairs from the annotation TSV, order preserved."""
    lines = [
        line
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise ExtractionError("empty annotation file")
    header = lines[0].split("\t")
    try:
        id_col = header.index("token_id")
        surface_col = header.index("surface")
    except ValueError:
        raise ExtractionError(
            f"annotation header must name token_id and surface, got {header}"
        ) from None
    tokens = []
    for lineno, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(header):
            raise ExtractionError(
                f"line {lineno}: expected {len(header)} columns, got {len(cols)}"
            )
        tokens.append((int(cols[id_col]), cols[surface_col]))
    return tuple(tokens)


def _windows(tokens: tuple[tuple[int, str], ...], size: int):
    for start in range(0, len(tokens), size):
        yield tokens[start : start + size]


def extract(job: ExtractionJob) -> ExtractionResult:
    """Run the job and write the per-token vector file atomically."""
    if job.window < 1:
        raise ExtractionError(f"window must be >= 1, got {job.window}")
    if not job.tokens:
        raise ExtractionError("no tokens to encode")

    tokenizer = AutoTokenizer.from_pretrained(job.model)
    if not getattr(tokenizer, "is_fast", False):
        raise ExtractionError(
            "a fast tokenizer is required for word-piece alignment"
        )
    model = AutoModel.from_pretrained(job.model)
    model.eval()

    lines: list[str] = []
    debug_lines: list[str] = []
    dim = None
    window_count = 0
    with torch.no_grad():
        for window in _windows(job.tokens, job.window):
            window_count += 1
            words = [surface for _, surface in window]
            # encoding the pre-split words equals encoding the space-joined
            # window string: the backbone's pre-tokenizer splits on whitespace
            enc = tokenizer(words, is_split_into_words=True, return_tensors="pt")
            seq_len = enc["input_ids"].shape[1]
            max_len = getattr(model.config, "max_position_embeddings", None)
            if max_len is not None and seq_len > max_len:
                raise ExtractionError(
                    f"window of {len(words)} words encodes to {seq_len} pieces, "
                    f"above the model maximum {max_len}; use a smaller --window"
                )
            if job.layer is None:
                states = model(**enc).last_hidden_state[0]
            else:
                outputs = model(**enc, output_hidden_states=True)
                try:
                    states = outputs.hidden_states[job.layer][0]
                except IndexError:
                    raise ExtractionError(
                        f"layer {job.layer} out of range: model has "
                        f"{len(outputs.hidden_states)} hidden states"
                    ) from None
            word_ids = enc.word_ids(0)
            pieces_by_word: dict[int, list[int]] = {}
            for piece_index, word_index in enumerate(word_ids):
                if word_index is not None:
                    pieces_by_word.setdefault(word_index, []).append(piece_index)
            piece_strings = tokenizer.convert_ids_to_tokens(enc["input_ids"][0])
            for word_index, (token_id, surface) in enumerate(window):
                piece_indices = pieces_by_word.get(word_index)
                if not piece_indices:
                    raise ExtractionError(
                        f"token {token_id} ({surface!r}) mapped to zero pieces"
                    )
                piece_vectors = states[piece_indices].to(torch.float32).numpy()
                vector = piece_vectors.mean(axis=0)
                dim = int(vector.shape[0])
                lines.append(
                    f"{token_id}\t" + " ".join(repr(float(x)) for x in vector)
                )
                if job.debug_pieces_path is not None:
                    for piece_index, piece_vec in zip(piece_indices, piece_vectors):
                        debug_lines.append(
                            "\t".join(
                                (
                                    str(token_id),
                                    surface,
                                    piece_strings[piece_index],
                                    " ".join(repr(float(x)) for x in piece_vec),
                                )
                            )
                        )

    _write_atomic(Path(job.out_path), "\n".join(lines) + "\n")
    if job.debug_pieces_path is not None:
        _write_atomic(Path(job.debug_pieces_path), "\n".join(debug_lines) + "\n")
    assert dim is not None
    return ExtractionResult(
        token_count=len(job.tokens), window_count=window_count, dim=dim
    )


def _write_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
