"""Bias Based Network and the Gender-based Illicit Proximity Estimate (GIPE).

The network is stored densely: query node ``i`` (a row of ``queries``) has
out-edges to ``targets[i, :]`` with weights ``weights[i, :]``. Targets may
be any vocabulary word, not only queries.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .bias_geometry import GenderDirection, IndirectBiasTable
from .embedding_io import EmbeddingSet
from .neighbourhood import DEFAULT_K, NeighbourTable, top_k_neighbours

DEFAULT_EPSILON = 1e-6
DEFAULT_THETA_S = (0.03, 0.05, 0.07)

_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class BiasNetwork:
    words: tuple[str, ...]
    queries: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "_row", {self.words[q]: r for r, q in enumerate(self.queries)})
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    @property
    def query_set(self) -> set[str]:
        return {self.words[q] for q in self.queries}

    @property
    def nodes(self) -> set[str]:
        idx = np.union1d(self.queries, self.targets.ravel())
        return {self.words[i] for i in idx}

    @property
    def edges(self) -> dict[tuple[str, str], float]:
        w = self.words
        return {
            (w[q], w[t]): float(b)
            for q, row_t, row_b in zip(self.queries, self.targets, self.weights)
            for t, b in zip(row_t, row_b)
        }

    def out_weights(self, word: str) -> np.ndarray:
        try:
            return self.weights[self._row[word]]
        except KeyError:
            raise KeyError(f"{word!r} is not a query node") from None

    def in_degrees(self, theta_s: float) -> tuple[np.ndarray, np.ndarray]:
        """(incoming edges, incoming edges with weight > theta_s) per vocabulary index."""
        size = len(self.words)
        flat = self.targets.ravel()
        total = np.bincount(flat, minlength=size)
        biased = np.bincount(flat[self.weights.ravel() > theta_s], minlength=size)
        return total, biased


def build_bbn(
    eval_set: EmbeddingSet,
    reference_set: EmbeddingSet,
    W: Iterable[str],
    n: int = DEFAULT_K,
    g: GenderDirection | None = None,
    neighbours: NeighbourTable | None = None,
    workers: int = 1,
) -> BiasNetwork:
    """Connect each word of ``W`` to its top-``n`` neighbours in ``eval_set``.

    Edge weights are indirect bias values computed from ``reference_set``
    (the non-debiased embedding) and ``g``. Pairs whose indirect bias is
    undefined get weight 0. A precomputed ``neighbours`` table over
    ``eval_set`` may be supplied to skip the search.
    """
    if g is None:
        raise ValueError("a gender direction is required")
    W = list(dict.fromkeys(W))
    for t in W:
        if t not in reference_set:
            raise KeyError(f"token not in reference embedding: {t!r}")
    if neighbours is None:
        neighbours = top_k_neighbours(eval_set, W, n, workers=workers)
    else:
        if neighbours.words != eval_set.vocab.words:
            raise ValueError("neighbour table was built for a different vocabulary")
        rows = [neighbours.row_of(t) for t in W]
        if any(r is None for r in rows):
            raise KeyError("neighbour table does not cover every query word")
        kk = min(n, len(eval_set) - 1)
        if neighbours.indices.shape[1] < kk:
            raise ValueError("neighbour table holds fewer than n neighbours")
        rows = np.asarray(rows, dtype=np.intp)
        neighbours = NeighbourTable(
            n, neighbours.words, neighbours.queries[rows],
            neighbours.indices[rows, :kk], neighbours.sims[rows, :kk],
        )

    # map eval-set vocabulary indices onto reference-set rows
    words = eval_set.vocab.words
    if reference_set.vocab == eval_set.vocab:
        ref_of = np.arange(len(words))
    else:
        needed = np.union1d(neighbours.queries, neighbours.indices.ravel())
        ref_of = np.full(len(words), -1, dtype=np.intp)
        for i in needed:
            try:
                ref_of[i] = reference_set.vocab.index[words[i]]
            except KeyError:
                raise KeyError(f"token not in reference embedding: {words[i]!r}") from None

    table = IndirectBiasTable(reference_set.vectors, g)
    src = ref_of[neighbours.queries][:, None]
    dst = ref_of[neighbours.indices]
    weights = np.empty(dst.shape)
    step = max(1, _CHUNK_CELLS // max(1, dst.shape[1] * reference_set.dim))
    for s in range(0, len(src), step):
        weights[s : s + step] = table.pairs(src[s : s + step], dst[s : s + step])
    return BiasNetwork(words, neighbours.queries, neighbours.indices, weights, n)


def proximity_bias(word: str, net: BiasNetwork, theta_s: float) -> float:
    """Fraction of ``word``'s out-edges whose weight exceeds ``theta_s``."""
    w = net.out_weights(word)
    return float(np.count_nonzero(w > theta_s) / w.size) if w.size else 0.0


def node_weight(word: str, net: BiasNetwork, theta_s: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """``1 + (biased incoming) / (epsilon + incoming)``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    try:
        i = net._index[word]
    except KeyError:
        raise KeyError(f"{word!r} is not a node") from None
    mask = net.targets == i
    total = int(np.count_nonzero(mask))
    biased = int(np.count_nonzero(net.weights[mask] > theta_s))
    return 1.0 + biased / (epsilon + total)


@dataclass(frozen=True)
class GipeReport:
    theta_s: float
    epsilon: float
    words: tuple[str, ...]
    eta: np.ndarray
    gamma: np.ndarray
    n_biased: np.ndarray
    incoming_biased: np.ndarray
    incoming_total: np.ndarray
    gipe: float

    @property
    def per_word(self) -> dict[str, tuple[float, float, int, int, int]]:
        return {
            w: (float(e), float(g), int(nb), int(ib), int(it))
            for w, e, g, nb, ib, it in zip(
                self.words, self.eta, self.gamma, self.n_biased, self.incoming_biased, self.incoming_total
            )
        }

    def write(self, fh: TextIO) -> None:
        fh.write("word\teta\tgamma\tn_biased\tincoming_biased\tincoming_total\n")
        for w, e, g, nb, ib, it in zip(
            self.words, self.eta, self.gamma, self.n_biased, self.incoming_biased, self.incoming_total
        ):
            fh.write(f"{w}\t{e:.6f}\t{g:.6f}\t{nb}\t{ib}\t{it}\n")
        fh.write(f"# theta_s={self.theta_s:g}\tepsilon={self.epsilon:g}\tgipe={self.gipe:.6f}\n")


def gipe(net: BiasNetwork, theta_s: float, epsilon: float = DEFAULT_EPSILON) -> GipeReport:
    """Weighted average of proximity bias over the query nodes, weighted by node weight."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(net.queries) == 0:
        raise ValueError("bias network has no query nodes")
    width = net.weights.shape[1]
    n_biased = np.count_nonzero(net.weights > theta_s, axis=1)
    eta = n_biased / width if width else np.zeros(len(net.queries))
    total, biased = net.in_degrees(theta_s)
    inc_t, inc_b = total[net.queries], biased[net.queries]
    gamma = 1.0 + inc_b / (epsilon + inc_t)
    value = float(np.sum(gamma * eta) / np.sum(gamma))
    return GipeReport(
        theta_s, epsilon, tuple(net.words[q] for q in net.queries),
        eta, gamma, n_biased, inc_b, inc_t, value,
    )
