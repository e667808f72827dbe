import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randebias.embedding_io import EmbeddingSet
from randebias.evaluation import (
    AnalogyQuestion,
    SemBiasInstance,
    SimilarityPair,
    analogy_accuracy,
    load_analogies,
    load_sembias,
    load_similarity,
    sembias_eval,
    similarity_spearman,
    solve_analogy_3cosmul,
)

from conftest import random_embedding
from oracles import cosine, cosmul_argmax, spearman


def sembias_toy():
    return EmbeddingSet.from_dict({
        "he": [1, 0, 0, 1], "she": [-1, 0, 0, 1],
        "king": [1, 0, 1, 0], "queen": [-1, 0, 1, 0],
        "doctor": [0, 1, 0, 0], "nurse": [0, -1, 0, 0],
        "cat": [0, 0, 1, 1], "dog": [0, 0, -1, 1],
        "cup": [0, 0, 0, 2], "mug": [0, 0, 0, 1],
    })


def toy_instance():
    return SemBiasInstance((("king", "queen"), ("doctor", "nurse"), ("cat", "dog"), ("cup", "mug")))


def test_sembias_constructed_definition_wins():
    res = sembias_eval(sembias_toy(), [toy_instance()] * 3)
    assert (res["definition"], res["stereotype"], res["none"]) == (100.0, 0.0, 0.0)
    assert res["evaluated"] == 3 and res["skipped"] == 0


def test_sembias_tie_goes_to_first_pair():
    emb = sembias_toy()
    inst = SemBiasInstance((("cat", "dog"), ("king", "queen"), ("king", "queen"), ("cup", "mug")),
                           labels=("none", "stereotype", "definition", "none"))
    res = sembias_eval(emb, [inst])
    assert res["stereotype"] == 100.0


def test_sembias_skips_oov(caplog):
    inst = SemBiasInstance((("king", "queen"), ("doctor", "zzz"), ("cat", "dog"), ("cup", "mug")))
    res = sembias_eval(sembias_toy(), [toy_instance(), inst])
    assert res["evaluated"] == 1 and res["skipped"] == 1
    assert res["definition"] + res["stereotype"] + res["none"] == pytest.approx(100.0, abs=1e-9)
    with pytest.raises(ValueError):
        sembias_eval(sembias_toy(), [inst])


def test_sembias_instance_validation():
    with pytest.raises(ValueError):
        SemBiasInstance((("a", "b"),) * 3)
    with pytest.raises(ValueError):
        SemBiasInstance((("a", "b"),) * 4, labels=("definition",) * 4)


def test_load_sembias(tmp_path):
    p = tmp_path / "sb.txt"
    p.write_text("King:Queen\tdoctor:nurse\tcat:dog\tcup:mug\n\n")
    assert load_sembias(str(p)) == [toy_instance()]
    p.write_text("king:queen doctor:nurse cat:dog\n")
    with pytest.raises(ValueError, match=":1:"):
        load_sembias(str(p))


# -- analogies ---------------------------------------------------------------

def parallelogram():
    rng = np.random.default_rng(0)
    offset = np.zeros(8)
    offset[0] = 3.0
    rows = {}
    for i in range(6):
        base = rng.normal(size=8) * 2
        base[0] = 0
        rows[f"x{i}"] = base
        rows[f"y{i}"] = base + offset
    return EmbeddingSet.from_dict(rows)


def test_parallelogram_answers():
    emb = parallelogram()
    assert solve_analogy_3cosmul(emb, "x0", "y0", "x3") == "y3"
    qs = [AnalogyQuestion("x0", "y0", f"x{i}", f"y{i}") for i in range(1, 6)]
    rep = analogy_accuracy(emb, qs)
    assert rep.accuracy == 1.0 and rep.answered == 5


def test_query_words_excluded():
    # q is the best candidate for every score term but must not be returned
    emb = EmbeddingSet.from_dict({"p": [0, 1, 0], "q": [1, 0.01, 0], "r": [1, 0, 0], "s": [0.7, 0, 0.7]})
    assert solve_analogy_3cosmul(emb, "p", "q", "r") == "s"


def test_missing_query_token_errors():
    with pytest.raises(KeyError):
        solve_analogy_3cosmul(parallelogram(), "x0", "nope", "x1")


@pytest.mark.parametrize("seed", range(10))
def test_3cosmul_matches_exhaustive_oracle(seed):
    emb = random_embedding(20, 6, seed=seed)
    rows = emb.vectors.tolist()
    rng = np.random.default_rng(seed)
    for _ in range(10):
        p, q, r = (int(i) for i in rng.choice(20, size=3, replace=False))
        got = solve_analogy_3cosmul(emb, *(emb.vocab.words[i] for i in (p, q, r)))
        assert got == emb.vocab.words[cosmul_argmax(rows, p, q, r)]


def test_analogy_oov_skip_accounting():
    emb = parallelogram()
    qs = [AnalogyQuestion("x0", "y0", "x1", "y1", "a"), AnalogyQuestion("x0", "y0", "x2", "y2", "a"),
          AnalogyQuestion("X0", "Y0", "x3", "y3", "b"), AnalogyQuestion("x0", "y0", "oov", "y4", "b")]
    rep = analogy_accuracy(emb, qs)
    assert (rep.answered, rep.skipped, rep.correct) == (3, 1, 3)
    assert rep.sections == {"a": (2, 2), "b": (1, 1)}
    with pytest.raises(ValueError):
        analogy_accuracy(emb, qs[3:])


def test_load_analogies(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text(": capital-common\nAthens Greece Baghdad Iraq\n: family\nboy girl brother sister\n")
    qs = load_analogies(str(p))
    assert qs[0] == AnalogyQuestion("athens", "greece", "baghdad", "iraq", "capital-common")
    assert qs[1].section == "family"
    p.write_text("a b c\n")
    with pytest.raises(ValueError):
        load_analogies(str(p))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.lists(st.floats(0.1, 50), min_size=12, max_size=12))
def test_3cosmul_row_scale_invariance(seed, scales):
    emb = random_embedding(12, 5, seed=seed)
    scaled = emb.replace_vectors(emb.vectors * np.asarray(scales)[:, None])
    rows = emb.vectors.tolist()
    from randebias.evaluation import _AnalogySolver

    s = _AnalogySolver(emb).scores(0, 1, 2)
    top = np.sort(s[3:])[-2:]
    if top[1] - top[0] < 1e-9:
        return  # near-tie: rescaling may legitimately flip the order
    assert solve_analogy_3cosmul(emb, "t0", "t1", "t2") == solve_analogy_3cosmul(scaled, "t0", "t1", "t2")
    assert solve_analogy_3cosmul(emb, "t0", "t1", "t2") == emb.vocab.words[cosmul_argmax(rows, 0, 1, 2)]


# -- similarity --------------------------------------------------------------

def sim_embedding():
    rng = np.random.default_rng(1)
    return EmbeddingSet.from_dict({f"v{i}": rng.normal(size=5) for i in range(8)})


def test_spearman_with_ties_matches_manual_ranks():
    emb = sim_embedding()
    pairs = [("v0", "v1", 2.0), ("v2", "v3", 5.0), ("v0", "v1", 3.0), ("v4", "v5", 5.0),
             ("v6", "v7", 1.0), ("v1", "v2", 3.0), ("v3", "v4", 5.0)]
    rep = similarity_spearman(emb, [SimilarityPair(*p) for p in pairs])
    model = [cosine(list(emb[a]), list(emb[b])) for a, b, _ in pairs]
    assert abs(rep.rho - spearman(model, [p[2] for p in pairs])) < 1e-12
    assert rep.used == 7 and rep.skipped == 0


def test_spearman_perfect_and_reversed():
    emb = sim_embedding()
    pairs = [("v0", f"v{i}") for i in range(1, 8)]
    cos = [cosine(list(emb[a]), list(emb[b])) for a, b in pairs]
    up = [SimilarityPair(a, b, 10 * c) for (a, b), c in zip(pairs, cos)]
    down = [SimilarityPair(a, b, -c) for (a, b), c in zip(pairs, cos)]
    assert similarity_spearman(emb, up).rho == pytest.approx(1.0, abs=1e-12)
    assert similarity_spearman(emb, down).rho == pytest.approx(-1.0, abs=1e-12)


def test_spearman_oov_and_errors():
    emb = sim_embedding()
    pairs = [SimilarityPair("v0", "v1", 1), SimilarityPair("v0", "zz", 2), SimilarityPair("v2", "v3", 3)]
    rep = similarity_spearman(emb, pairs)
    assert rep.used == 2 and rep.skipped == 1
    with pytest.raises(ValueError):
        similarity_spearman(emb, pairs[:2])
    with pytest.raises(ValueError):
        similarity_spearman(emb, [SimilarityPair("v0", "v1", 1), SimilarityPair("v2", "v3", 1)])


def test_load_similarity(tmp_path):
    p = tmp_path / "ws.txt"
    p.write_text("Word 1\tWord 2\tHuman (mean)\nTiger\tcat\t7.35\n# note\nbook paper 7.46\n")
    assert load_similarity(str(p)) == [SimilarityPair("tiger", "cat", 7.35), SimilarityPair("book", "paper", 7.46)]
    p.write_text("a b 1\nc d x\n")
    with pytest.raises(ValueError):
        load_similarity(str(p))


def test_evaluators_are_pure():
    emb = parallelogram()
    before = emb.vectors.copy()
    qs = [AnalogyQuestion("x0", "y0", "x1", "y1")]
    assert analogy_accuracy(emb, qs) == analogy_accuracy(emb, qs)
    np.testing.assert_array_equal(emb.vectors, before)
