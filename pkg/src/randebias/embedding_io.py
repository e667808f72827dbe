"""Reading, writing and normalizing word embeddings in the plain text format.

Each line of an embedding file is ``token c1 c2 ... ch``: a token followed by
``h`` space-separated decimal components.
"""
from __future__ import annotations

import hashlib
import io
import logging
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    """Invalid embedding content or operation on an invalid embedding."""


class EmbeddingParseError(EmbeddingError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class Vocabulary:
    """Ordered set of unique tokens with a token -> row index map."""

    def __init__(self, words: Iterable[str]):
        self.words: tuple[str, ...] = tuple(words)
        self.index: dict[str, int] = {}
        for i, w in enumerate(self.words):
            if not w or any(ch.isspace() for ch in w):
                raise EmbeddingError(f"invalid token {w!r}")
            if w in self.index:
                raise EmbeddingError(f"duplicate token {w!r}")
            self.index[w] = i

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: object) -> bool:
        return token in self.index

    def __iter__(self):
        return iter(self.words)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} words)"

    def indices(self, tokens: Iterable[str]) -> np.ndarray:
        """Row indices of ``tokens``; raises ``KeyError`` naming the first unknown token."""
        out = []
        for t in tokens:
            try:
                out.append(self.index[t])
            except KeyError:
                raise KeyError(f"token not in vocabulary: {t!r}") from None
        return np.asarray(out, dtype=np.intp)


@dataclass(frozen=True)
class EmbeddingSet:
    """A vocabulary plus one float64 row per word.

    The matrix is made read-only on construction so instances can be shared
    freely between threads.
    """

    vocab: Vocabulary
    vectors: np.ndarray
    duplicates: int = field(default=0, compare=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2:
            raise EmbeddingError("vectors must be a 2-d matrix")
        if vectors.shape[0] != len(self.vocab):
            raise EmbeddingError(
                f"{vectors.shape[0]} rows for a vocabulary of {len(self.vocab)} words"
            )
        if vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be positive")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingError("embedding contains non-finite components")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_dict(cls, mapping: dict[str, Sequence[float]]) -> "EmbeddingSet":
        return cls(Vocabulary(mapping), np.array(list(mapping.values()), dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: object) -> bool:
        return token in self.vocab

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.vocab.index[token]]

    def replace_vectors(self, vectors: np.ndarray) -> "EmbeddingSet":
        return EmbeddingSet(self.vocab, vectors)


def load_embedding(source: BinaryIO | str, expected_dim: int | None = None) -> EmbeddingSet:
    """Parse an embedding from a binary stream or a path.

    Duplicate tokens keep their first occurrence; the number dropped is
    logged and stored in ``EmbeddingSet.duplicates``.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            return load_embedding(fh, expected_dim)

    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    duplicates = 0
    dim = expected_dim
    for line_no, raw in enumerate(source, start=1):
        line = raw.decode("utf-8").rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.rstrip(" ").split(" ")
        token, fields = parts[0], parts[1:]
        if not token:
            raise EmbeddingParseError(line_no, "line starts with a separator")
        if dim is None:
            if not fields:
                raise EmbeddingParseError(line_no, "no vector components")
            dim = len(fields)
        if len(fields) != dim:
            raise EmbeddingParseError(line_no, f"expected {dim} components, found {len(fields)}")
        try:
            values = [float(x) for x in fields]
        except ValueError as exc:
            raise EmbeddingParseError(line_no, f"unparsable component ({exc})") from None
        if not all(np.isfinite(values)):
            raise EmbeddingParseError(line_no, "non-finite component")
        if token in seen:
            duplicates += 1
            continue
        seen.add(token)
        words.append(token)
        rows.append(values)

    if not words:
        raise EmbeddingError("empty embedding input")
    if duplicates:
        log.warning("dropped %d duplicate token(s); first occurrence kept", duplicates)
    return EmbeddingSet(Vocabulary(words), np.array(rows, dtype=np.float64), duplicates)


def save_embedding(emb: EmbeddingSet, sink: BinaryIO | str, precision: int = 6) -> None:
    """Write ``emb`` in the text format with ``precision`` decimal places."""
    if len(emb) == 0:
        raise EmbeddingError("nothing to write: empty vocabulary")
    if isinstance(sink, str) or hasattr(sink, "__fspath__"):
        with open(sink, "wb") as fh:
            save_embedding(emb, fh, precision)
        return
    fmt = f"%.{precision}f"
    buf = io.StringIO()
    for word, row in zip(emb.vocab.words, emb.vectors):
        buf.write(word)
        buf.write(" ")
        buf.write(" ".join(fmt % x for x in row))
        buf.write("\n")
    sink.write(buf.getvalue().encode("utf-8"))


def unit_normalize(emb: EmbeddingSet) -> EmbeddingSet:
    norms = np.linalg.norm(emb.vectors, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise EmbeddingError(f"zero-norm vector for token {emb.vocab.words[zero[0]]!r}")
    return emb.replace_vectors(emb.vectors / norms[:, None])


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-normalize a matrix, leaving zero rows at zero."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return np.divide(matrix, norms, out=np.zeros_like(matrix, dtype=np.float64), where=norms > 0)


def fingerprint(emb: EmbeddingSet) -> str:
    """Content hash of vocabulary and vectors (hex SHA-1)."""
    h = hashlib.sha1()
    h.update("\n".join(emb.vocab.words).encode("utf-8"))
    h.update(np.ascontiguousarray(emb.vectors).tobytes())
    return h.hexdigest()
