"""Gender direction, direct bias and indirect bias."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedding_io import EmbeddingSet, normalize_rows

# (female, male) definitional pairs used to estimate the gender direction.
DEFAULT_GENDER_PAIRS: tuple[tuple[str, str], ...] = (
    ("she", "he"),
    ("her", "his"),
    ("woman", "man"),
    ("mary", "john"),
    ("herself", "himself"),
    ("daughter", "son"),
    ("mother", "father"),
    ("gal", "guy"),
    ("girl", "boy"),
    ("female", "male"),
)

# Perpendicular parts shorter than this (for unit inputs) count as collinear with g.
COLLINEAR_TOL = 1e-12


class UndefinedBiasError(ArithmeticError):
    """Indirect bias is undefined for the given pair."""


@dataclass(frozen=True)
class GenderDirection:
    g: np.ndarray
    source_pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        norm = np.linalg.norm(g)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("gender direction must be a nonzero finite vector")
        g = g / norm
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def load_gender_pairs(path: str) -> list[tuple[str, str]]:
    """Read ``female_token male_token`` pairs, one per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected two tokens, got {len(parts)}")
            pairs.append((parts[0], parts[1]))
    return pairs


def compute_gender_direction(
    emb: EmbeddingSet,
    pairs: Sequence[tuple[str, str]] = DEFAULT_GENDER_PAIRS,
    normalize: bool = True,
) -> GenderDirection:
    """First principal component of the gender-pair differences.

    Each pair ``(a, b)`` is centred on its own midpoint, contributing the
    two points ``±(v_a - v_b)/2``. The principal axis of that symmetric
    cloud is the dominant right singular vector of the difference matrix.
    With ``normalize`` the word vectors are unit-normalized first.

    The sign is fixed so that ``g . (v_woman - v_man) >= 0`` when both
    tokens exist, otherwise so that ``g`` agrees with the summed
    (female - male) differences.
    """
    pairs = [tuple(p) for p in pairs]
    if len(pairs) < 2:
        raise ValueError("at least two gender pairs are required")
    for a, b in pairs:
        for t in (a, b):
            if t not in emb:
                raise KeyError(f"gender pair token not in vocabulary: {t!r}")

    vectors = normalize_rows(emb.vectors) if normalize else emb.vectors
    idx = emb.vocab.index
    diffs = np.array([vectors[idx[a]] - vectors[idx[b]] for a, b in pairs])
    if not np.any(diffs):
        raise ValueError("all gender pair differences are zero")

    _, _, vt = np.linalg.svd(diffs, full_matrices=False)
    g = vt[0]
    if "woman" in emb and "man" in emb:
        ref = vectors[idx["woman"]] - vectors[idx["man"]]
    else:
        ref = diffs.sum(axis=0)
    if g @ ref < 0:
        g = -g
    return GenderDirection(g, tuple(pairs))


def direct_bias(w: np.ndarray, g: GenderDirection, c: float = 1.0) -> float:
    """``|cos(w, g)| ** c``."""
    if c <= 0:
        raise ValueError("strictness c must be positive")
    w = np.asarray(w, dtype=np.float64)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValueError("direct bias of a zero vector is undefined")
    cos = min(abs(float(w @ g.g)) / norm, 1.0)
    return cos**c


def indirect_bias(w: np.ndarray, v: np.ndarray, g: GenderDirection) -> float:
    """Indirect bias: relative change of ``w.v`` once the gender component is removed.

    Both operands are unit-normalized before the formula is applied.
    Raises :class:`UndefinedBiasError` when ``w.v == 0`` or either vector is
    collinear with ``g``.
    """
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nw, nv = np.linalg.norm(w), np.linalg.norm(v)
    if nw == 0 or nv == 0:
        raise ValueError("indirect bias of a zero vector is undefined")
    w = w / nw
    v = v / nv
    dot = float(w @ v)
    if dot == 0.0:
        raise UndefinedBiasError("orthogonal pair: indirect bias is undefined")
    w_perp = w - (w @ g.g) * g.g
    v_perp = v - (v @ g.g) * g.g
    pw, pv = np.linalg.norm(w_perp), np.linalg.norm(v_perp)
    if pw <= COLLINEAR_TOL or pv <= COLLINEAR_TOL:
        raise UndefinedBiasError("vector collinear with the gender direction")
    cos_perp = float(w_perp @ v_perp) / (pw * pv)
    return (dot - cos_perp) / dot


class IndirectBiasTable:
    """Vectorized indirect bias over the rows of one embedding.

    Precomputes unit rows and their unit perpendicular parts so that
    ``pairs(i, j)`` costs two row-wise dot products. Undefined pairs come
    back as 0 (no proximity to attribute).
    """

    def __init__(self, vectors: np.ndarray, g: GenderDirection):
        if vectors.shape[1] != g.dim:
            raise ValueError("gender direction and embedding dimensions differ")
        unit = normalize_rows(vectors)
        perp = unit - np.outer(unit @ g.g, g.g)
        pnorm = np.linalg.norm(perp, axis=1)
        self._valid = (pnorm > COLLINEAR_TOL) & (np.linalg.norm(vectors, axis=1) > 0)
        self._unit = unit
        self._perp = np.divide(perp, pnorm[:, None], out=np.zeros_like(perp), where=self._valid[:, None])

    def pairs(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """beta(row i, row j) elementwise; ``i`` broadcasts against ``j``."""
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        dot = np.einsum("...k,...k->...", self._unit[i], self._unit[j])
        cos_perp = np.einsum("...k,...k->...", self._perp[i], self._perp[j])
        ok = (dot != 0.0) & self._valid[i] & self._valid[j]
        return np.divide(dot - cos_perp, dot, out=np.zeros(dot.shape), where=ok)


def mean_direct_bias(emb: EmbeddingSet, tokens: Iterable[str], g: GenderDirection, c: float = 1.0) -> float:
    idx = emb.vocab.indices(tokens)
    if idx.size == 0:
        raise ValueError("no tokens given")
    cos = np.abs(normalize_rows(emb.vectors[idx]) @ g.g)
    return float(np.mean(np.minimum(cos, 1.0) ** c))
