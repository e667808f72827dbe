import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from randebias.embedding_io import (
    EmbeddingError,
    EmbeddingParseError,
    EmbeddingSet,
    Vocabulary,
    fingerprint,
    load_embedding,
    normalize_rows,
    save_embedding,
    unit_normalize,
)


def parse(text):
    return load_embedding(io.BytesIO(text.encode("utf-8")))


def test_parse_basic():
    emb = parse("cat 1 2 3\ndog 0.5 -1 2e-1\n")
    assert emb.vocab.words == ("cat", "dog")
    assert emb.dim == 3
    np.testing.assert_array_equal(emb["dog"], [0.5, -1.0, 0.2])
    assert emb.vectors.dtype == np.float64


def test_parse_crlf_trailing_space_and_blank_lines():
    emb = parse("a 1 2 \r\n\nb 3 4\r\n")
    assert emb.vocab.words == ("a", "b")


def test_parse_utf8_tokens():
    emb = parse("café 1 0\nnaïve 0 1\n")
    assert "café" in emb and "naïve" in emb


def test_ragged_line_reports_line_number():
    with pytest.raises(EmbeddingParseError) as exc:
        parse("a 1 2 3\nb 1 2\n")
    assert exc.value.line_no == 2


def test_unparsable_component():
    with pytest.raises(EmbeddingParseError) as exc:
        parse("a 1 2\nb 1 x\n")
    assert exc.value.line_no == 2


def test_nonfinite_component_rejected():
    with pytest.raises(EmbeddingParseError):
        parse("a 1 nan\n")


def test_expected_dim_enforced():
    with pytest.raises(EmbeddingParseError):
        load_embedding(io.BytesIO(b"a 1 2\n"), expected_dim=3)


def test_empty_input():
    with pytest.raises(EmbeddingError):
        parse("\n\n")


def test_duplicates_keep_first(caplog):
    emb = parse("a 1 0\nb 0 1\na 5 5\n")
    assert emb.vocab.words == ("a", "b")
    np.testing.assert_array_equal(emb["a"], [1, 0])
    assert emb.duplicates == 1
    assert "duplicate" in caplog.text


def test_vocabulary_validation():
    with pytest.raises(EmbeddingError):
        Vocabulary(["a", "a"])
    with pytest.raises(EmbeddingError):
        Vocabulary(["a b"])
    with pytest.raises(KeyError, match="zzz"):
        Vocabulary(["a"]).indices(["a", "zzz"])


def test_embedding_is_read_only():
    emb = parse("a 1 0\n")
    with pytest.raises(ValueError):
        emb.vectors[0, 0] = 3


def test_embedding_shape_mismatch():
    with pytest.raises(EmbeddingError):
        EmbeddingSet(Vocabulary(["a", "b"]), np.ones((1, 2)))


def test_save_empty_vocabulary_errors():
    with pytest.raises(EmbeddingError):
        save_embedding(EmbeddingSet(Vocabulary([]), np.empty((0, 3))), io.BytesIO())


def test_save_load_path(tmp_path):
    emb = parse("a 0.25 -1\nb 3 4\n")
    p = tmp_path / "e.txt"
    save_embedding(emb, str(p), precision=4)
    assert p.read_text().splitlines()[0] == "a 0.2500 -1.0000"
    back = load_embedding(str(p))
    assert back.vocab == emb.vocab
    np.testing.assert_array_equal(back.vectors, emb.vectors)


def test_unit_normalize_examples():
    emb = EmbeddingSet.from_dict({"a": [3, 4], "b": [0, 2]})
    un = unit_normalize(emb)
    np.testing.assert_allclose(un["a"], [0.6, 0.8], atol=1e-15)
    np.testing.assert_allclose(un["b"], [0, 1], atol=1e-15)


def test_unit_normalize_zero_row_names_token():
    emb = EmbeddingSet.from_dict({"a": [1, 0], "hole": [0, 0]})
    with pytest.raises(EmbeddingError, match="hole"):
        unit_normalize(emb)


def test_unit_normalize_random_300d():
    rng = np.random.default_rng(1)
    words = [f"w{i}" for i in range(40)]
    emb = EmbeddingSet(Vocabulary(words), rng.normal(size=(40, 300)) * 7)
    norms = np.sqrt(np.sum(unit_normalize(emb).vectors ** 2, axis=1))
    assert np.all(np.abs(norms - 1) < 1e-9)


def test_normalize_rows_leaves_zero_rows():
    out = normalize_rows(np.array([[0.0, 0.0], [0.0, 5.0]]))
    np.testing.assert_array_equal(out, [[0, 0], [0, 1]])


def test_fingerprint_changes_with_content():
    a = EmbeddingSet.from_dict({"a": [1, 0], "b": [0, 1]})
    b = EmbeddingSet.from_dict({"a": [1, 0], "b": [0, 1.0000001]})
    c = EmbeddingSet.from_dict({"a": [1, 0], "c": [0, 1]})
    assert fingerprint(a) == fingerprint(EmbeddingSet.from_dict({"a": [1, 0], "b": [0, 1]}))
    assert len({fingerprint(a), fingerprint(b), fingerprint(c)}) == 3


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 6)), elements=finite),
       st.integers(2, 8))
def test_round_trip_within_precision(mat, precision):
    emb = EmbeddingSet(Vocabulary([f"w{i}" for i in range(mat.shape[0])]), mat)
    buf = io.BytesIO()
    save_embedding(emb, buf, precision=precision)
    buf.seek(0)
    back = load_embedding(buf)
    assert back.vocab == emb.vocab
    assert np.max(np.abs(back.vectors - emb.vectors)) <= 0.5 * 10.0 ** -precision * (1 + 1e-9) + 1e-12


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(2, 6)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_unit_normalize_idempotent_and_cosine_preserving(mat):
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms < 1e-3):
        return
    emb = EmbeddingSet(Vocabulary([f"w{i}" for i in range(len(mat))]), mat)
    once = unit_normalize(emb)
    twice = unit_normalize(once)
    np.testing.assert_allclose(twice.vectors, once.vectors, atol=1e-12)
    cos_before = (mat @ mat.T) / np.outer(norms, norms)
    np.testing.assert_allclose(once.vectors @ once.vectors.T, cos_before, atol=1e-9)
