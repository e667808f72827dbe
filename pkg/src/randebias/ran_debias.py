"""Repulsion-attraction-neutralization debiasing.

Each word ``w`` of the debias set is replaced by the minimizer of

    F(x) = l_r * F_r(x) + l_a * F_a(x) + l_n * F_n(x)

where ``F_r`` is the mean absolute cosine between ``x`` and the word's
repulsion set (original neighbours with high indirect bias), ``F_a =
|cos(x, w) - 1| / 2`` keeps ``x`` close to ``w`` and ``F_n = |cos(x, g)|``
removes the gender component. ``F`` is minimized with Adam starting from
``x = w``; the best iterate seen is kept.
"""
from __future__ import annotations

import configparser
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import _backend
from .bias_geometry import GenderDirection, IndirectBiasTable
from .embedding_io import EmbeddingSet, normalize_rows
from .kbc import Classification
from .neighbourhood import DEFAULT_K, NeighbourTable, top_k_neighbours

log = logging.getLogger(__name__)

DEFAULT_THETA_R = 0.05


class DebiasError(RuntimeError):
    pass


class DivergenceError(DebiasError):
    def __init__(self, message: str, trace: "TraceEntry"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ObjectiveWeights:
    """``(repulsion, attraction, neutralization)`` weights; they must sum to 1."""

    lambda_r: float = 1 / 8
    lambda_a: float = 6 / 8
    lambda_n: float = 1 / 8

    def __post_init__(self):
        lam = self.as_tuple()
        if any(not (0.0 <= x <= 1.0) for x in lam):
            raise ValueError(f"weights must lie in [0, 1], got {lam}")
        if abs(sum(lam) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(lam)!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lambda_r, self.lambda_a, self.lambda_n)

    @classmethod
    def parse(cls, text: str) -> "ObjectiveWeights":
        """Parse ``"0.125,0.75,0.125"``; fractions like ``1/8`` are accepted."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated weights, got {text!r}")
        vals = []
        for p in parts:
            num, _, den = p.partition("/")
            vals.append(float(num) / float(den) if den else float(num))
        return cls(*vals)


DEFAULT_WEIGHTS = ObjectiveWeights(1 / 8, 6 / 8, 1 / 8)
# ablations: drop one term and rescale the rest to keep their ratio
NO_REPULSION = ObjectiveWeights(0.0, 6 / 7, 1 / 7)
NO_NEUTRALIZATION = ObjectiveWeights(1 / 7, 6 / 7, 0.0)


@dataclass(frozen=True)
class RepulsionSet:
    word: str
    tokens: tuple[str, ...]
    members: np.ndarray
    theta_r: float

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def empty(cls, word: str, dim: int, theta_r: float = DEFAULT_THETA_R) -> "RepulsionSet":
        return cls(word, (), np.empty((0, dim)), theta_r)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.01
    max_steps: int = 300
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tolerance: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("moment decay rates must lie in (0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")


@dataclass(frozen=True)
class TraceEntry:
    initial: float
    final: float
    steps: int


@dataclass
class DebiasResult:
    debiased: EmbeddingSet
    trace: dict[str, TraceEntry]
    weights: ObjectiveWeights
    failures: dict[str, str] = field(default_factory=dict)
    repulsion_sizes: dict[str, int] = field(default_factory=dict)

    def write_trace(self, fh) -> None:
        fh.write("word\tinitial\tfinal\tsteps\trepulsion\n")
        for word, t in self.trace.items():
            fh.write(f"{word}\t{t.initial:.8f}\t{t.final:.8f}\t{t.steps}\t{self.repulsion_sizes.get(word, 0)}\n")
        for word, msg in self.failures.items():
            fh.write(f"# failed\t{word}\t{msg}\n")


def _unit(v: np.ndarray, what: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError(f"zero {what}")
    return v / n


def repulsion_set(
    word: str,
    neighbours: NeighbourTable,
    reference_set: EmbeddingSet,
    g: GenderDirection,
    theta_r: float = DEFAULT_THETA_R,
    bias_table: IndirectBiasTable | None = None,
) -> RepulsionSet:
    """Neighbours of ``word`` whose indirect bias with it exceeds ``theta_r``.

    Indirect bias is computed on ``reference_set`` (the original vectors);
    pairs with undefined bias are left out.
    """
    row = neighbours.row_of(word)
    if row is None:
        raise KeyError(f"no neighbour list for {word!r}")
    if bias_table is None:
        bias_table = IndirectBiasTable(reference_set.vectors, g)
    ref = reference_set.vocab.index
    words = neighbours.words
    src = ref[word]
    nbr_tokens = list(dict.fromkeys(words[j] for j in neighbours.indices[row]))
    dst = np.asarray([ref[t] for t in nbr_tokens], dtype=np.intp)
    beta = bias_table.pairs(src, dst) if dst.size else np.empty(0)
    keep = beta > theta_r
    tokens = tuple(t for t, k in zip(nbr_tokens, keep) if k)
    members = reference_set.vectors[dst[keep]] if dst.size else np.empty((0, reference_set.dim))
    return RepulsionSet(word, tokens, members, theta_r)


def f_r(w_d: np.ndarray, s: RepulsionSet) -> float:
    """Mean absolute cosine with the repulsion set; 0 for an empty set."""
    x = _unit(w_d, "w_d")
    if len(s) == 0:
        return 0.0
    return float(np.mean(np.abs(normalize_rows(s.members) @ x)))


def f_a(w_d: np.ndarray, w: np.ndarray) -> float:
    return abs(float(_unit(w_d, "w_d") @ _unit(w, "w")) - 1.0) / 2.0


def f_n(w_d: np.ndarray, g: GenderDirection) -> float:
    return abs(float(_unit(w_d, "w_d") @ g.g))


def objective(w_d, w, s: RepulsionSet, g: GenderDirection, weights: ObjectiveWeights) -> float:
    l_r, l_a, l_n = weights.as_tuple()
    return l_r * f_r(w_d, s) + l_a * f_a(w_d, w) + l_n * f_n(w_d, g)


def objective_gradient(w_d, w, s: RepulsionSet, g: GenderDirection, weights: ObjectiveWeights) -> np.ndarray:
    """Analytic gradient of the objective with respect to ``w_d``.

    Uses ``d cos(x, a)/dx = a/(|x||a|) - cos(x, a) x/|x|^2`` and takes the
    subgradient of ``|u|`` at 0 to be 0.
    """
    x = np.asarray(w_d, dtype=np.float64)
    r = np.linalg.norm(x)
    if r == 0:
        raise ValueError("zero w_d")
    xn = x / r
    l_r, l_a, l_n = weights.as_tuple()
    grad = np.zeros_like(x)
    if len(s) and l_r:
        a = normalize_rows(s.members)
        c = a @ xn
        sg = np.sign(c)
        grad += l_r / len(s) * (sg @ a - (sg @ c) * xn) / r
    if l_a:
        wn = _unit(w, "w")
        cw = xn @ wn
        grad += l_a * np.sign(cw - 1.0) / 2.0 * (wn - cw * xn) / r
    if l_n:
        cg = xn @ g.g
        grad += l_n * np.sign(cg) * (g.g - cg * xn) / r
    return grad


def debias_word(
    w: np.ndarray,
    s: RepulsionSet,
    g: GenderDirection,
    weights: ObjectiveWeights = DEFAULT_WEIGHTS,
    cfg: OptimizerConfig = OptimizerConfig(),
    kernels=None,
) -> tuple[np.ndarray, TraceEntry]:
    """Optimize one word; the result is rescaled to ``|w|``.

    Raises :class:`DivergenceError` if the objective becomes non-finite.
    """
    kernels = kernels or _backend.kernels
    w = np.asarray(w, dtype=np.float64)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValueError("cannot debias a zero vector")
    wn = w / norm
    members = normalize_rows(s.members) if len(s) else np.empty((0, w.shape[0]))
    best, f0, fbest, steps, status = kernels.adam_minimize(
        wn, members, g.g, weights.as_tuple(),
        cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, cfg.max_steps, cfg.tolerance,
    )
    trace = TraceEntry(float(f0), float(fbest), int(steps))
    if status != kernels.OK:
        raise DivergenceError(f"objective diverged after {steps} steps", trace)
    return best * (norm / np.linalg.norm(best)), trace


def debias_all(
    emb: EmbeddingSet,
    classification: Classification,
    g: GenderDirection,
    weights: ObjectiveWeights = DEFAULT_WEIGHTS,
    theta_r: float = DEFAULT_THETA_R,
    cfg: OptimizerConfig = OptimizerConfig(),
    k: int = DEFAULT_K,
    workers: int = 1,
    neighbours: NeighbourTable | None = None,
) -> DebiasResult:
    """Debias every word of ``classification.debias`` against the original embedding.

    Neighbour lists and repulsion sets come from ``emb`` once, before any
    optimization. Words are processed in vocabulary order; preserve-set
    rows are copied unchanged. A word whose optimization fails keeps its
    original vector and is listed in ``DebiasResult.failures``.
    """
    targets = [w for w in emb.vocab.words if w in classification.debias]
    unknown = classification.debias.difference(emb.vocab.index)
    if unknown:
        raise KeyError(f"{len(unknown)} debias-set token(s) missing from the embedding, e.g. {sorted(unknown)[0]!r}")
    out = np.array(emb.vectors)
    if not targets:
        return DebiasResult(emb.replace_vectors(out), {}, weights)

    if neighbours is None:
        neighbours = top_k_neighbours(emb, targets, k, workers=workers)
    bias_table = IndirectBiasTable(emb.vectors, g)
    kernels = _backend.kernels

    def run(word: str):
        s = repulsion_set(word, neighbours, emb, g, theta_r, bias_table)
        try:
            vec, trace = debias_word(emb[word], s, g, weights, cfg, kernels)
        except (DebiasError, ValueError) as exc:
            return word, None, None, str(exc), len(s)
        return word, vec, trace, None, len(s)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, targets))
    else:
        results = [run(w) for w in targets]

    trace: dict[str, TraceEntry] = {}
    failures: dict[str, str] = {}
    sizes: dict[str, int] = {}
    index = emb.vocab.index
    for word, vec, t, err, size in results:
        sizes[word] = size
        if err is not None:
            failures[word] = err
            continue
        out[index[word]] = vec
        trace[word] = t
    if failures:
        log.warning("%d word(s) failed to optimize and were left unchanged", len(failures))
    return DebiasResult(emb.replace_vectors(out), trace, weights, failures, sizes)


def load_config(path: str) -> dict[str, str]:
    """Read a ``key = value`` file (no section header needed; ``#`` comments)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[randebias]\n" + fh.read(), source=path)
    return {k.replace("-", "_"): v for k, v in parser["randebias"].items()}


def optimizer_config_from(values: dict[str, str], base: OptimizerConfig = OptimizerConfig()) -> OptimizerConfig:
    kwargs = {}
    for f in fields(OptimizerConfig):
        if f.name in values and values[f.name] is not None:
            kwargs[f.name] = int(values[f.name]) if f.name == "max_steps" else float(values[f.name])
    return OptimizerConfig(**{**base.__dict__, **kwargs})

