"""Synthetic embeddings with a planted gender direction, for tests and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bias_geometry import DEFAULT_GENDER_PAIRS
from .embedding_io import EmbeddingSet, Vocabulary
from .kbc import STAGE_DEBIAS, STAGE_NAME, Classification


@dataclass
class SyntheticEmbedding:
    emb: EmbeddingSet
    direction: np.ndarray
    classification: Classification
    loading: dict[str, float]


def make_biased_embedding(
    n_words: int = 500,
    dim: int = 50,
    n_clusters: int = 25,
    loading: tuple[float, float] = (0.15, 0.45),
    unbiased_fraction: float = 0.2,
    noise: float = 0.6,
    seed: int = 0,
) -> SyntheticEmbedding:
    """Build an embedding whose proximities are partly caused by a gender axis.

    The definitional gender pairs sit symmetrically about the planted axis.
    Every other word is a noisy member of a semantic cluster (orthogonal to
    the axis) plus a gender loading of random sign and magnitude drawn from
    ``loading``; a ``unbiased_fraction`` of words has no loading. Words
    sharing a loading sign end up closer than their semantics warrant,
    which is the gender-induced proximity the debiaser should undo.
    """
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=dim)
    axis /= np.linalg.norm(axis)

    def orth(v):
        v = v - np.outer(v @ axis, axis) if v.ndim == 2 else v - (v @ axis) * axis
        return v

    pair_words = [w for pair in DEFAULT_GENDER_PAIRS for w in pair]
    n_debias = n_words - len(pair_words)
    if n_debias < 1:
        raise ValueError("n_words too small")

    words, rows, load = [], [], {}
    for female, male in DEFAULT_GENDER_PAIRS:
        base = orth(rng.normal(size=dim))
        base /= np.linalg.norm(base)
        a = rng.uniform(0.5, 0.8)
        words += [female, male]
        rows += [base + a * axis, base - a * axis]
        load[female], load[male] = a, -a

    centers = orth(rng.normal(size=(n_clusters, dim)))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    for i in range(n_debias):
        c = centers[i % n_clusters]
        sem = orth(c + noise * rng.normal(size=dim) / np.sqrt(dim))
        sem /= np.linalg.norm(sem)
        if rng.random() < unbiased_fraction:
            b = 0.0
        else:
            b = rng.choice([-1.0, 1.0]) * rng.uniform(*loading)
        token = f"w{i:04d}"
        words.append(token)
        rows.append(sem + b * axis)
        load[token] = b

    emb = EmbeddingSet(Vocabulary(words), np.array(rows))
    preserve = set(pair_words)
    debias = set(words) - preserve
    provenance = {w: (STAGE_NAME if w in preserve else STAGE_DEBIAS) for w in words}
    return SyntheticEmbedding(emb, axis, Classification(preserve, debias, provenance), load)
