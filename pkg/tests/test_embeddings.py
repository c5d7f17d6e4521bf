import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topicchain.corpus import VerbEvent
from topicchain.embeddings import (
    VectorFormatError,
    ZeroVectorError,
    baseline_source,
    baseline_word_vector,
    cosine,
    load_lexicon,
    load_token_table,
    token_vector,
    vector_for,
    word_vector,
)

from oracles import cos_ref


class TestLexicon:
    def test_two_entries(self):
        src = load_lexicon("a 1 0\nb 0 1\n", "toy")
        assert src.kind == "lexicon"
        assert src.dim == 2
        assert len(src.words) == 2
        assert np.array_equal(src.words["a"], [1.0, 0.0])

    def test_header_consumed(self):
        src = load_lexicon("2 3\na 1 0 0\nb 0 1 0\n", "toy")
        assert src.dim == 3
        assert set(src.words) == {"a", "b"}

    def test_dimension_error_names_line(self):
        with pytest.raises(VectorFormatError, match="expected 3") as exc:
            load_lexicon("a 1 0 0\nb 1 0\n", "toy")
        assert exc.value.line == 2

    def test_duplicates_keep_first(self):
        src = load_lexicon("a 1 0\na 0 1\nb 0 1\n", "toy")
        assert np.array_equal(src.words["a"], [1.0, 0.0])
        assert src.duplicate_words == 1

    def test_empty_file(self):
        with pytest.raises(VectorFormatError, match="empty lexicon"):
            load_lexicon("", "toy")

    def test_non_numeric_component(self):
        with pytest.raises(VectorFormatError, match="non-numeric") as exc:
            load_lexicon("a 1 x\n", "toy")
        assert exc.value.line == 1

    def test_zero_vector_rejected(self):
        with pytest.raises(VectorFormatError, match="zero vector"):
            load_lexicon("a 0 0\n", "toy")

    def test_parsed_values_round_trip_exactly(self):
        src = load_lexicon("w 0.25 -1.5 0.1\n", "toy")
        assert src.words["w"][0] == 0.25
        assert src.words["w"][1] == -1.5
        assert src.words["w"][2] == float("0.1")


class TestTokenTable:
    def test_two_entries(self):
        src = load_token_table("64\t0.1 0.2\n67\t0.3 0.4\n", "ctx")
        assert src.kind == "per_token"
        assert src.dim == 2
        assert src.coverage() == {64, 67}
        assert np.array_equal(src.tokens[64], [0.1, 0.2])

    def test_duplicate_id(self):
        with pytest.raises(VectorFormatError, match="duplicate token_id 64") as exc:
            load_token_table("64\t0.1 0.2\n64\t0.3 0.4\n", "ctx")
        assert exc.value.line == 2

    def test_empty_stream(self):
        with pytest.raises(VectorFormatError, match="no dimension derivable"):
            load_token_table("", "ctx")

    def test_dimension_mismatch(self):
        with pytest.raises(VectorFormatError, match="expected 2"):
            load_token_table("1\t0.1 0.2\n2\t0.3\n", "ctx")


class TestBaseline:
    def test_deterministic(self):
        a = baseline_word_vector(42, 16, "跑")
        b = baseline_word_vector(42, 16, "跑")
        assert np.array_equal(a, b)
        src1 = baseline_source(42, 16)
        src2 = baseline_source(42, 16)
        assert np.array_equal(word_vector(src1, "跑"), word_vector(src2, "跑"))

    def test_golden_values(self):
        # Frozen output of the documented splitmix64/FNV-1a recipe; any change
        # to the generator breaks reproducibility of published runs.
        expected_run = [
            -0.9730884290736825,
            0.7464475100224492,
            0.09680331366314365,
            0.8701717441475809,
        ]
        expected_swallow = [
            0.42722535248109406,
            0.794489535427233,
            0.6884711530034917,
            0.3815293166884639,
        ]
        assert baseline_word_vector(7, 4, "跑").tolist() == expected_run
        assert baseline_word_vector(7, 4, "吞").tolist() == expected_swallow

    def test_distinct_words_differ(self):
        src = baseline_source(7, 4)
        assert not np.array_equal(word_vector(src, "跑"), word_vector(src, "吞"))

    def test_range_contract(self):
        src = baseline_source(123, 8)
        for i in range(10_000):
            vec = baseline_word_vector(123, 8, f"w{i}")
            assert np.all(vec >= -1.0) and np.all(vec <= 1.0)

    def test_dim_validation(self):
        with pytest.raises(ValueError, match="dim must be positive"):
            baseline_source(1, 0)


class TestVectorFor:
    def test_baseline_always_present(self):
        event = VerbEvent(5, 2, "任意词")
        assert vector_for(baseline_source(1, 4), event) is not None

    def test_lexicon_oov_absent(self):
        src = load_lexicon("走 1 0\n", "toy")
        assert vector_for(src, VerbEvent(5, 2, "跑")) is None

    def test_per_token_exact_vector(self):
        src = load_token_table("64\t0.1 0.2\n", "ctx")
        vec = vector_for(src, VerbEvent(64, 2, "咀嚼"))
        assert np.array_equal(vec, [0.1, 0.2])
        assert vector_for(src, VerbEvent(65, 2, "吞")) is None

    def test_wrong_lookup_kind(self):
        with pytest.raises(ValueError):
            token_vector(load_lexicon("a 1 0\n", "toy"), 1)
        with pytest.raises(ValueError):
            word_vector(load_token_table("1\t1 0\n", "ctx"), "a")


finite_components = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=2, max_size=8
)


class TestCosine:
    def test_identity(self):
        assert cosine(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antipodal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0

    def test_zero_norm_raises(self):
        with pytest.raises(ZeroVectorError):
            cosine(np.array([0.0, 0.0]), np.array([1.0, 0.0]))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            cosine(np.array([1.0]), np.array([1.0, 0.0]))

    @given(finite_components, finite_components)
    def test_symmetry(self, xs, ys):
        n = min(len(xs), len(ys))
        a, b = np.array(xs[:n]), np.array(ys[:n])
        if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
            return
        assert abs(cosine(a, b) - cosine(b, a)) <= 1e-12

    @given(
        finite_components,
        finite_components,
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_scale_invariance(self, xs, ys, lam):
        n = min(len(xs), len(ys))
        a, b = np.array(xs[:n]), np.array(ys[:n])
        if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
            return
        assert abs(cosine(lam * a, b) - cosine(a, b)) <= 1e-9

    @given(finite_components, finite_components)
    def test_bounds_and_reference(self, xs, ys):
        n = min(len(xs), len(ys))
        a, b = np.array(xs[:n]), np.array(ys[:n])
        if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
            return
        value = cosine(a, b)
        assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12
        assert value == pytest.approx(cos_ref(a.tolist(), b.tolist()), abs=1e-12)


def test_splitmix_outputs_are_uniform_halves():
    # sanity: mean of many components is near 0 and spread fills the interval
    vec = baseline_word_vector(9, 5000, "candidate")
    assert abs(float(np.mean(vec))) < 0.05
    assert float(np.min(vec)) < -0.99
    assert float(np.max(vec)) > 0.99
    assert math.isfinite(float(np.sum(vec)))
