"""Intrinsic evaluation: SemBias gender analogy, 3CosMul analogies, word similarity."""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import spearmanr

from .embedding_io import EmbeddingSet, normalize_rows

log = logging.getLogger(__name__)

DEFINITION = "definition"
STEREOTYPE = "stereotype"
NONE = "none"
SEMBIAS_LABELS = (DEFINITION, STEREOTYPE, NONE, NONE)

COSMUL_EPS = 1e-3


@dataclass(frozen=True)
class SemBiasInstance:
    pairs: tuple[tuple[str, str], ...]
    labels: tuple[str, ...] = SEMBIAS_LABELS

    def __post_init__(self):
        if len(self.pairs) != 4 or sorted(self.labels) != sorted(SEMBIAS_LABELS):
            raise ValueError("a SemBias instance has one definition, one stereotype and two none pairs")


@dataclass(frozen=True)
class AnalogyQuestion:
    """``p`` is to ``q`` as ``r`` is to ``expected``."""

    p: str
    q: str
    r: str
    expected: str
    section: str = ""


@dataclass(frozen=True)
class SimilarityPair:
    a: str
    b: str
    human_score: float


# -- loaders ---------------------------------------------------------------

def load_sembias(path: str) -> list[SemBiasInstance]:
    """Four ``a:b`` pairs per line in the order definition, stereotype, none, none."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 4 or any(f.count(":") != 1 for f in fields):
                raise ValueError(f"{path}:{line_no}: expected four a:b pairs")
            out.append(SemBiasInstance(tuple(tuple(f.lower().split(":")) for f in fields)))
    return out


def load_analogies(path: str) -> list[AnalogyQuestion]:
    """Google-style (``: section`` headers) or plain 4-token-per-line analogy files."""
    out = []
    section = ""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.startswith(":"):
                section = line[1:].strip()
                continue
            toks = line.lower().split()
            if not toks:
                continue
            if len(toks) != 4:
                raise ValueError(f"{path}:{line_no}: expected 4 tokens")
            out.append(AnalogyQuestion(*toks, section=section))
    return out


def load_similarity(path: str) -> list[SimilarityPair]:
    """``a b score`` per line (tabs or spaces); a non-numeric header line is skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks or line.startswith("#"):
                continue
            if len(toks) < 3:
                raise ValueError(f"{path}:{line_no}: expected 'a b score'")
            try:
                score = float(toks[2])
            except ValueError:
                if line_no == 1:
                    continue
                raise ValueError(f"{path}:{line_no}: bad score {toks[2]!r}") from None
            out.append(SimilarityPair(toks[0].lower(), toks[1].lower(), score))
    return out


# -- SemBias ----------------------------------------------------------------

def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def sembias_eval(emb: EmbeddingSet, instances: Sequence[SemBiasInstance]) -> dict[str, float]:
    """Percentage of instances whose best pair (by cosine with he - she) has each label.

    Ties go to the first pair in file order. Instances with missing tokens
    are skipped and reported under ``skipped``.
    """
    for t in ("he", "she"):
        if t not in emb:
            raise KeyError(f"{t!r} missing from the embedding")
    gender = emb["he"] - emb["she"]
    counts = {DEFINITION: 0, STEREOTYPE: 0, NONE: 0}
    skipped = 0
    for inst in instances:
        if any(t not in emb for pair in inst.pairs for t in pair):
            skipped += 1
            continue
        best, best_label = -np.inf, None
        for (a, b), label in zip(inst.pairs, inst.labels):
            c = _cos(gender, emb[a] - emb[b])
            if c > best:
                best, best_label = c, label
        counts[best_label] += 1
    if skipped:
        log.warning("sembias: skipped %d instance(s) with out-of-vocabulary tokens", skipped)
    used = sum(counts.values())
    if not used:
        raise ValueError("no SemBias instance is fully in vocabulary")
    return {
        DEFINITION: 100.0 * counts[DEFINITION] / used,
        STEREOTYPE: 100.0 * counts[STEREOTYPE] / used,
        NONE: 100.0 * counts[NONE] / used,
        "evaluated": used,
        "skipped": skipped,
    }


# -- analogies ---------------------------------------------------------------

class _AnalogySolver:
    def __init__(self, emb: EmbeddingSet, eps: float = COSMUL_EPS):
        self.emb = emb
        self.unit = normalize_rows(emb.vectors)
        self.eps = eps

    def scores(self, p: int, q: int, r: int) -> np.ndarray:
        sims = (self.unit @ self.unit[[p, q, r]].T + 1.0) / 2.0
        return sims[:, 2] * sims[:, 1] / (sims[:, 0] + self.eps)

    def solve(self, p: int, q: int, r: int) -> int:
        s = self.scores(p, q, r)
        s[[p, q, r]] = -np.inf
        return int(np.argmax(s))


def solve_analogy_3cosmul(emb: EmbeddingSet, p: str, q: str, r: str, eps: float = COSMUL_EPS) -> str:
    """Answer "p is to q as r is to ?" by maximizing the multiplicative objective.

    Cosines are shifted to [0, 1]; the query words are excluded and ties go
    to the lowest vocabulary index.
    """
    idx = emb.vocab.indices([p, q, r])
    return emb.vocab.words[_AnalogySolver(emb, eps).solve(*idx)]


@dataclass
class AnalogyReport:
    correct: int
    answered: int
    skipped: int
    sections: "OrderedDict[str, tuple[int, int]]"

    @property
    def accuracy(self) -> float:
        return self.correct / self.answered


def analogy_accuracy(emb: EmbeddingSet, questions: Iterable[AnalogyQuestion], eps: float = COSMUL_EPS) -> AnalogyReport:
    solver = _AnalogySolver(emb, eps)
    lookup = {w.lower(): i for i, w in reversed(list(enumerate(emb.vocab.words)))}
    correct = answered = skipped = 0
    sections: OrderedDict[str, tuple[int, int]] = OrderedDict()
    for qn in questions:
        ids = [lookup.get(t.lower()) for t in (qn.p, qn.q, qn.r, qn.expected)]
        if any(i is None for i in ids):
            skipped += 1
            continue
        hit = emb.vocab.words[solver.solve(*ids[:3])].lower() == qn.expected.lower()
        c, a = sections.get(qn.section, (0, 0))
        sections[qn.section] = (c + hit, a + 1)
        correct += hit
        answered += 1
    if not answered:
        raise ValueError("no answerable analogy questions")
    return AnalogyReport(correct, answered, skipped, sections)


# -- similarity ---------------------------------------------------------------

@dataclass
class SimilarityReport:
    rho: float
    used: int
    skipped: int


def similarity_spearman(emb: EmbeddingSet, pairs: Iterable[SimilarityPair]) -> SimilarityReport:
    """Spearman correlation (average ranks for ties) of cosines against human scores."""
    model, human = [], []
    skipped = 0
    for p in pairs:
        if p.a not in emb or p.b not in emb:
            skipped += 1
            continue
        model.append(_cos(emb[p.a], emb[p.b]))
        human.append(p.human_score)
    if len(model) < 2:
        raise ValueError("need at least two in-vocabulary pairs")
    if len(set(model)) < 2 or len(set(human)) < 2:
        raise ValueError("Spearman correlation undefined (constant scores)")
    rho = spearmanr(model, human).statistic
    return SimilarityReport(float(rho), len(model), skipped)
