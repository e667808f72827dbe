"""Knowledge-based classification of a vocabulary into preserve and debias sets.

Stages, applied in order with short-circuit:

1. stop words and tokens with any non-alphabetic character -> preserve
2. gendered names and seed words -> preserve
3. strict majority of dictionaries define the word using a seed word -> preserve

Everything else goes to the debias set.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

STAGE_STOP = "stop/nonalpha"
STAGE_NAME = "name_or_seed"
STAGE_DICT = "dictionary_vote"
STAGE_DEBIAS = "debias"
STAGES = (STAGE_STOP, STAGE_NAME, STAGE_DICT, STAGE_DEBIAS)

GENDER_SPECIFIC = "gender_specific"
NON_GENDER_SPECIFIC = "non_gender_specific"

DEFAULT_SEED = frozenset({"man", "woman", "boy", "girl", "male", "female", "he", "she"})

_WORD_RE = re.compile(r"[^\W\d_]+")


def _lower_set(tokens: Iterable[str]) -> frozenset[str]:
    return frozenset(t.strip().lower() for t in tokens if t.strip())


@dataclass(frozen=True)
class WordLists:
    stop_words: frozenset[str] = frozenset()
    seed: frozenset[str] = DEFAULT_SEED
    names: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("stop_words", "seed", "names"):
            object.__setattr__(self, name, _lower_set(getattr(self, name)))
        if not self.seed:
            raise ValueError("seed set must be non-empty")


class KnowledgeBase:
    """An ordered collection of dictionaries (headword -> definition text)."""

    def __init__(self, dictionaries: Sequence[Mapping[str, str]]):
        if not dictionaries:
            raise ValueError("at least one dictionary is required")
        self.dictionaries: list[dict[str, str]] = []
        for d in dictionaries:
            merged: dict[str, str] = {}
            for head, text in d.items():
                key = head.lower()
                merged[key] = f"{merged[key]} {text}" if key in merged else text
            self.dictionaries.append(merged)
        # tokenized definitions are cached lazily per dictionary
        self._tokens: list[dict[str, frozenset[str]]] = [{} for _ in self.dictionaries]

    def __len__(self) -> int:
        return len(self.dictionaries)

    def definition_tokens(self, i: int, word: str) -> frozenset[str] | None:
        word = word.lower()
        cache = self._tokens[i]
        if word not in cache:
            text = self.dictionaries[i].get(word)
            if text is None:
                return None
            cache[word] = frozenset(m.lower() for m in _WORD_RE.findall(text))
        return cache[word]


@dataclass
class Classification:
    preserve: set[str]
    debias: set[str]
    provenance: dict[str, str] = field(default_factory=dict)

    def stage_counts(self) -> dict[str, int]:
        counts = Counter(self.provenance.values())
        return {s: counts.get(s, 0) for s in STAGES}

    def ordered(self, vocab_words: Sequence[str], which: str) -> list[str]:
        target = self.preserve if which == "preserve" else self.debias
        return [w for w in vocab_words if w in target]


def load_word_list(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]


def load_dictionary(path: str) -> dict[str, str]:
    """Read a ``headword<TAB>definition`` file; repeated headwords are concatenated."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{line_no}: expected headword<TAB>definition")
            head, text = line.split("\t", 1)
            head = head.strip().lower()
            out[head] = f"{out[head]} {text}" if head in out else text
    return out


def is_nonalphabetic(token: str) -> bool:
    """True if the token has any character outside the alphabetic class."""
    if not token:
        raise ValueError("empty token")
    return not token.isalpha()


def dictionary_gender_vote(token: str, kb: KnowledgeBase, seed: Iterable[str]) -> bool:
    """Strict majority of dictionaries define ``token`` with a seed word.

    Dictionaries lacking the headword vote negative. Matching is whole-word
    on the lowercased definition, so "man" does not match "human".
    """
    seed = seed if isinstance(seed, frozenset) else _lower_set(seed)
    votes = 0
    for i in range(len(kb)):
        toks = kb.definition_tokens(i, token)
        if toks is not None and not toks.isdisjoint(seed):
            votes += 1
    return votes > len(kb) / 2


def classify_token(token: str, lists: WordLists, kb: KnowledgeBase) -> str:
    low = token.lower()
    if low in lists.stop_words or is_nonalphabetic(token):
        return STAGE_STOP
    if low in lists.names or low in lists.seed:
        return STAGE_NAME
    if dictionary_gender_vote(token, kb, lists.seed):
        return STAGE_DICT
    return STAGE_DEBIAS


def classify_vocabulary(vocab: Iterable[str], lists: WordLists, kb: KnowledgeBase) -> Classification:
    preserve: set[str] = set()
    debias: set[str] = set()
    provenance: dict[str, str] = {}
    for token in vocab:
        stage = classify_token(token, lists, kb)
        provenance[token] = stage
        (debias if stage == STAGE_DEBIAS else preserve).add(token)
    return Classification(preserve, debias, provenance)


@dataclass(frozen=True)
class ClassificationScores:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def accuracy(self) -> float:
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else 0.0


def score_classification(predicted: Classification, gold: Mapping[str, str]) -> ClassificationScores:
    """Confusion-matrix metrics with the preserve set as the positive prediction."""
    tp = fp = tn = fn = 0
    for token, label in gold.items():
        if label not in (GENDER_SPECIFIC, NON_GENDER_SPECIFIC):
            raise ValueError(f"unknown gold label {label!r} for {token!r}")
        if token in predicted.preserve:
            pred_pos = True
        elif token in predicted.debias:
            pred_pos = False
        else:
            raise KeyError(f"gold token not in classification: {token!r}")
        gold_pos = label == GENDER_SPECIFIC
        if pred_pos and gold_pos:
            tp += 1
        elif pred_pos:
            fp += 1
        elif gold_pos:
            fn += 1
        else:
            tn += 1
    return ClassificationScores(tp, fp, tn, fn)


def load_gold_labels(path: str) -> dict[str, str]:
    """Read ``token<TAB>label`` lines (label ``gender_specific`` or ``non_gender_specific``)."""
    gold = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            token, label = line.split()
            gold[token] = label
    return gold
