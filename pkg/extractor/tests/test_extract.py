import numpy as np
import pytest

from ctxembed.cli import main
from ctxembed.extract import (
    ExtractionError,
    ExtractionJob,
    extract,
    read_annotation_tokens,
)

HEADER = "token_id\tclause_id\tsurface\trole\tagent\tpatient"

SINGLE_PIECE_WORDS = ["run", "walk", "jump", "see", "stop", "xy"]
MULTI_PIECE_WORDS = ["abcd", "abef", "abgh", "xyz"]


def _annotation_text(surfaces):
    lines = [HEADER]
    for i, surface in enumerate(surfaces, start=1):
        lines.append(f"{i}\t{(i + 1) // 2}\t{surface}\t-\t-\t-")
    return "\n".join(lines) + "\n"


def _fixture_surfaces(n: int) -> list[str]:
    out = []
    for i in range(n):
        if i % 4 == 3:
            out.append(MULTI_PIECE_WORDS[i % len(MULTI_PIECE_WORDS)])
        else:
            out.append(SINGLE_PIECE_WORDS[i % len(SINGLE_PIECE_WORDS)])
    return out


class TestReadAnnotationTokens:
    def test_order_and_ids(self):
        tokens = read_annotation_tokens(_annotation_text(["run", "abcd", "walk"]))
        assert tokens == ((1, "run"), (2, "abcd"), (3, "walk"))

    def test_rejects_missing_columns(self):
        with pytest.raises(ExtractionError, match="token_id and surface"):
            read_annotation_tokens("a\tb\n1\t2\n")

    def test_rejects_empty(self):
        with pytest.raises(ExtractionError, match="empty"):
            read_annotation_tokens("")


class TestExtract:
    def test_three_tokens_window_50(self, tiny_model_dir, tmp_path):
        out = tmp_path / "vectors.tsv"
        job = ExtractionJob(
            tokens=((1, "run"), (2, "walk"), (3, "jump")),
            model=tiny_model_dir,
            out_path=str(out),
            window=50,
        )
        result = extract(job)
        assert result.window_count == 1
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 3
        assert [line.split("\t")[0] for line in lines] == ["1", "2", "3"]

    def test_windowing_counts(self, tiny_model_dir, tmp_path):
        surfaces = _fixture_surfaces(23)
        job = ExtractionJob(
            tokens=tuple((i + 1, s) for i, s in enumerate(surfaces)),
            model=tiny_model_dir,
            out_path=str(tmp_path / "v.tsv"),
            window=10,
        )
        result = extract(job)
        assert result.window_count == 3  # 10 + 10 + 3

    def test_multi_piece_word_is_piece_mean(self, tiny_model_dir, tmp_path):
        out = tmp_path / "vectors.tsv"
        debug = tmp_path / "pieces.tsv"
        job = ExtractionJob(
            tokens=((1, "run"), (2, "abcd"), (3, "walk")),
            model=tiny_model_dir,
            out_path=str(out),
            debug_pieces_path=str(debug),
        )
        extract(job)
        vectors = {
            line.split("\t")[0]: np.array(
                [float(x) for x in line.split("\t")[1].split(" ")]
            )
            for line in out.read_text(encoding="utf-8").strip().splitlines()
        }
        pieces: dict[str, list[np.ndarray]] = {}
        names: dict[str, list[str]] = {}
        for line in debug.read_text(encoding="utf-8").strip().splitlines():
            token_id, _surface, piece, comps = line.split("\t")
            pieces.setdefault(token_id, []).append(
                np.array([float(x) for x in comps.split(" ")])
            )
            names.setdefault(token_id, []).append(piece)
        assert names["2"] == ["ab", "##cd"]
        mean = np.mean(pieces["2"], axis=0)
        assert np.max(np.abs(vectors["2"] - mean)) <= 1e-6

    def test_unknown_word_maps_to_unk_single_piece(self, tiny_model_dir, tmp_path):
        out = tmp_path / "v.tsv"
        job = ExtractionJob(
            tokens=((1, "穿山甲"),),
            model=tiny_model_dir,
            out_path=str(out),
        )
        result = extract(job)
        assert result.token_count == 1

    def test_layer_selection(self, tiny_model_dir, tmp_path):
        tokens = ((1, "run"), (2, "abcd"))
        final = tmp_path / "final.tsv"
        early = tmp_path / "early.tsv"
        extract(ExtractionJob(tokens, tiny_model_dir, str(final)))
        extract(ExtractionJob(tokens, tiny_model_dir, str(early), layer=0))
        assert final.read_bytes() != early.read_bytes()
        # final hidden layer is the default
        explicit = tmp_path / "explicit.tsv"
        extract(ExtractionJob(tokens, tiny_model_dir, str(explicit), layer=-1))
        assert explicit.read_bytes() == final.read_bytes()

    def test_layer_out_of_range(self, tiny_model_dir, tmp_path):
        with pytest.raises(ExtractionError, match="out of range"):
            extract(
                ExtractionJob(
                    ((1, "run"),), tiny_model_dir, str(tmp_path / "v.tsv"), layer=9
                )
            )

    def test_window_validation(self, tiny_model_dir, tmp_path):
        with pytest.raises(ExtractionError, match="window"):
            extract(
                ExtractionJob(
                    ((1, "run"),), tiny_model_dir, str(tmp_path / "v.tsv"), window=0
                )
            )

    def test_empty_tokens(self, tiny_model_dir, tmp_path):
        with pytest.raises(ExtractionError, match="no tokens"):
            extract(ExtractionJob((), tiny_model_dir, str(tmp_path / "v.tsv")))

    def test_oversized_window_reports_limit(self, tiny_model_dir, tmp_path):
        tokens = tuple((i + 1, "abcd") for i in range(120))
        with pytest.raises(ExtractionError, match="smaller --window"):
            extract(
                ExtractionJob(tokens, tiny_model_dir, str(tmp_path / "v.tsv"), window=120)
            )


class TestCli:
    def test_extract_subcommand(self, tiny_model_dir, tmp_path, capsys):
        annotations = tmp_path / "annotations.tsv"
        annotations.write_text(
            _annotation_text(_fixture_surfaces(12)), encoding="utf-8"
        )
        out = tmp_path / "vectors.tsv"
        code = main(
            [
                "extract",
                "--annotations",
                str(annotations),
                "--model",
                tiny_model_dir,
                "--window",
                "50",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert "12 tokens" in capsys.readouterr().out
        assert len(out.read_text(encoding="utf-8").strip().splitlines()) == 12

    def test_missing_annotations(self, tiny_model_dir, tmp_path, capsys):
        code = main(
            [
                "extract",
                "--annotations",
                str(tmp_path / "none.tsv"),
                "--model",
                tiny_model_dir,
                "--out",
                str(tmp_path / "v.tsv"),
            ]
        )
        assert code == 2
        assert "error" in capsys.readouterr().err


def test_acceptance_8_extractor_contract(tiny_model_dir, tmp_path):
    """120 aligned lines; piece-mean pooling; byte-identical re-run; loadable."""
    surfaces = _fixture_surfaces(120)
    annotations = tmp_path / "annotations.tsv"
    annotations.write_text(_annotation_text(surfaces), encoding="utf-8")
    tokens = read_annotation_tokens(annotations.read_text(encoding="utf-8"))
    assert len(tokens) == 120

    out_a = tmp_path / "run_a.tsv"
    debug = tmp_path / "pieces.tsv"
    result = extract(
        ExtractionJob(
            tokens=tokens,
            model=tiny_model_dir,
            out_path=str(out_a),
            window=50,
            debug_pieces_path=str(debug),
        )
    )
    lines = out_a.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 120
    assert [line.split("\t")[0] for line in lines] == [
        str(tid) for tid, _ in tokens
    ]
    assert result.window_count == 3  # 50 + 50 + 20

    # every multi-piece word's vector equals the mean of its piece vectors
    vectors = {}
    for line in lines:
        token_id, comps = line.split("\t")
        vectors[token_id] = np.array([float(x) for x in comps.split(" ")])
    piece_vectors: dict[str, list[np.ndarray]] = {}
    for line in debug.read_text(encoding="utf-8").strip().splitlines():
        token_id, _surface, _piece, comps = line.split("\t")
        piece_vectors.setdefault(token_id, []).append(
            np.array([float(x) for x in comps.split(" ")])
        )
    multi = {tid: vecs for tid, vecs in piece_vectors.items() if len(vecs) > 1}
    assert multi, "fixture must contain multi-piece words"
    for token_id, vecs in multi.items():
        mean = np.mean(vecs, axis=0)
        assert np.max(np.abs(vectors[token_id] - mean)) <= 1e-6

    # re-run is byte-identical
    out_b = tmp_path / "run_b.tsv"
    extract(
        ExtractionJob(
            tokens=tokens, model=tiny_model_dir, out_path=str(out_b), window=50
        )
    )
    assert out_a.read_bytes() == out_b.read_bytes()

    # the file loads through the analysis toolkit's per-token interface
    from topicchain.embeddings import load_token_table

    source = load_token_table(out_a.read_text(encoding="utf-8"), "ctx")
    assert source.kind == "per_token"
    assert source.dim == result.dim
    assert source.coverage() == {tid for tid, _ in tokens}
    print(
        f"\nACCEPTANCE 8 PASS: 120 aligned lines over {result.window_count} windows, "
        f"{len(multi)} multi-piece words pooled within 1e-6, byte-identical re-run, "
        "loads with zero errors"
    )
