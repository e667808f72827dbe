"""Exact top-k cosine neighbours.

Brute force over the full vocabulary: each query row is scored against
every unit-normalized row with one matrix product per block of queries.
Ties are broken by ascending vocabulary index so results are deterministic.
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embedding_io import EmbeddingSet, normalize_rows

DEFAULT_K = 100

# upper bound on the number of similarity entries held per block
_BLOCK_CELLS = 1 << 23


@dataclass(frozen=True)
class NeighbourTable:
    """Per-query neighbour lists.

    ``indices[i]`` and ``sims[i]`` hold the neighbours of ``queries[i]``
    (vocabulary row indices and cosines), best first.
    """

    k: int
    words: tuple[str, ...]
    queries: np.ndarray
    indices: np.ndarray
    sims: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_pos", {int(q): i for i, q in enumerate(self.queries)})
        object.__setattr__(self, "_by_token", {self.words[q]: i for i, q in enumerate(self.queries)})

    def __contains__(self, token: str) -> bool:
        return self.row_of(token) is not None

    def __len__(self) -> int:
        return len(self.queries)

    def row_of(self, token: str) -> int | None:
        return self._by_token.get(token)

    def row_for_index(self, vocab_index: int) -> int:
        return self._pos[int(vocab_index)]

    def neighbours(self, token: str) -> list[tuple[str, float]]:
        row = self.row_of(token)
        if row is None:
            raise KeyError(f"no neighbour list for {token!r}")
        return [(self.words[j], float(s)) for j, s in zip(self.indices[row], self.sims[row])]

    def truncate(self, k: int) -> "NeighbourTable":
        """The same table keeping only the best ``k`` neighbours per query."""
        if k >= self.indices.shape[1]:
            return self
        return NeighbourTable(k, self.words, self.queries, self.indices[:, :k], self.sims[:, :k])

    @property
    def entries(self) -> dict[str, list[tuple[str, float]]]:
        return {
            self.words[q]: [(self.words[j], float(s)) for j, s in zip(self.indices[r], self.sims[r])]
            for r, q in enumerate(self.queries)
        }


def _top_k_block(unit: np.ndarray, q_idx: np.ndarray, kk: int) -> tuple[np.ndarray, np.ndarray]:
    n = unit.shape[0]
    b = len(q_idx)
    sims = unit[q_idx] @ unit.T
    sims[np.arange(b), q_idx] = -np.inf
    thresholds = np.partition(sims, n - kk, axis=1)[:, n - kk]
    # everything tied with the k-th value is a candidate; lexsort settles ties by index
    rows, cols = np.nonzero(sims >= thresholds[:, None])
    counts = np.bincount(rows, minlength=b)
    if np.all(counts == kk):
        cand = cols.reshape(b, kk)
        vals = sims[rows, cols].reshape(b, kk)
        order = np.lexsort((cand, -vals), axis=-1)
        return np.take_along_axis(cand, order, axis=1), np.take_along_axis(vals, order, axis=1)
    out_idx = np.empty((b, kk), dtype=np.intp)
    out_sim = np.empty((b, kk))
    starts = np.concatenate(([0], np.cumsum(counts)))
    for r in range(b):
        cand = cols[starts[r] : starts[r + 1]]
        row_vals = sims[r, cand]
        order = np.lexsort((cand, -row_vals))[:kk]
        out_idx[r] = cand[order]
        out_sim[r] = row_vals[order]
    return out_idx, out_sim


def top_k_neighbours(
    emb: EmbeddingSet,
    query_words: Iterable[str] | None = None,
    k: int = DEFAULT_K,
    workers: int = 1,
) -> NeighbourTable:
    """Top-``k`` cosine neighbours (self excluded) for each query word.

    ``query_words`` defaults to the whole vocabulary; duplicates are
    dropped and the remaining queries keep their first-seen order. Each
    list has ``min(k, |V| - 1)`` entries.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if query_words is None:
        q_idx = np.arange(len(emb), dtype=np.intp)
    else:
        seen: dict[str, None] = dict.fromkeys(query_words)
        q_idx = emb.vocab.indices(seen)
    n = len(emb)
    kk = min(k, n - 1)
    if kk < 1 or q_idx.size == 0:
        empty = np.empty((q_idx.size, max(kk, 0)))
        return NeighbourTable(k, emb.vocab.words, q_idx, empty.astype(np.intp), empty)

    unit = normalize_rows(emb.vectors)
    block = max(1, _BLOCK_CELLS // n)
    chunks = [q_idx[s : s + block] for s in range(0, q_idx.size, block)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _top_k_block(unit, c, kk), chunks))
    else:
        parts = [_top_k_block(unit, c, kk) for c in chunks]
    indices = np.concatenate([p[0] for p in parts])
    sims = np.concatenate([p[1] for p in parts])
    return NeighbourTable(k, emb.vocab.words, q_idx, indices, sims)


_ITEM_RE = re.compile(r"(.+?):([-+0-9.eE]+|nan|-?inf)(?:,|$)")


def write_neighbour_cache(table: NeighbourTable, path: str, source: str = "") -> None:
    """One line per query: ``token<TAB>neighbour:sim,neighbour:sim,...``.

    ``source`` (e.g. an embedding fingerprint) is stored in the header so
    readers can reject a cache built from a different embedding.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#k={table.k}\tsource={source}\n")
        for r, q in enumerate(table.queries):
            items = ",".join(
                f"{table.words[j]}:{s!r}" for j, s in zip(table.indices[r], table.sims[r].tolist())
            )
            fh.write(f"{table.words[q]}\t{items}\n")


def read_neighbour_cache(path: str, emb: EmbeddingSet) -> NeighbourTable:
    """Load a cache written by :func:`write_neighbour_cache` against ``emb``'s vocabulary."""
    return read_neighbour_cache_with_source(path, emb)[0]


def read_neighbour_cache_with_source(path: str, emb: EmbeddingSet) -> tuple[NeighbourTable, str]:
    k = None
    source = ""
    queries, rows_idx, rows_sim = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#k="):
                head, _, src = line[3:].partition("\tsource=")
                k, source = int(head), src
                continue
            if not line:
                continue
            token, _, rest = line.partition("\t")
            items = _ITEM_RE.findall(rest)
            queries.append(emb.vocab.index[token])
            rows_idx.append([emb.vocab.index[t] for t, _ in items])
            rows_sim.append([float(s) for _, s in items])
    if k is None:
        raise ValueError(f"{path}: missing '#k=' header")
    widths = {len(r) for r in rows_idx}
    if len(widths) > 1:
        raise ValueError(f"{path}: ragged neighbour lists")
    width = widths.pop() if widths else 0
    table = NeighbourTable(
        k,
        emb.vocab.words,
        np.asarray(queries, dtype=np.intp),
        np.asarray(rows_idx, dtype=np.intp).reshape(len(queries), width),
        np.asarray(rows_sim, dtype=np.float64).reshape(len(queries), width),
    )
    return table, source
