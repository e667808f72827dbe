"""Command line entry point: ``randebias {classify,neighbors,debias,audit,eval}``.

Every option can also be given in a ``key = value`` file passed with
``--config``; flags on the command line win over the file.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, fields

from . import __version__
from .bias_geometry import DEFAULT_GENDER_PAIRS, compute_gender_direction, load_gender_pairs
from .embedding_io import fingerprint, load_embedding, save_embedding
from .evaluation import (
    analogy_accuracy,
    load_analogies,
    load_sembias,
    load_similarity,
    sembias_eval,
    similarity_spearman,
)
from .gipe import DEFAULT_EPSILON, build_bbn, gipe
from .kbc import (
    DEFAULT_SEED,
    STAGE_DEBIAS,
    STAGE_NAME,
    Classification,
    KnowledgeBase,
    WordLists,
    classify_vocabulary,
    load_dictionary,
    load_gold_labels,
    load_word_list,
    score_classification,
)
from .neighbourhood import (
    DEFAULT_K,
    read_neighbour_cache_with_source,
    top_k_neighbours,
    write_neighbour_cache,
)
from .ran_debias import (
    DEFAULT_THETA_R,
    ObjectiveWeights,
    OptimizerConfig,
    debias_all,
    load_config,
    optimizer_config_from,
)

log = logging.getLogger("randebias")


class CliError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _paths(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [p.strip() for p in value.split(",") if p.strip()]
    return list(value)


@dataclass
class PipelineConfig:
    embedding: str | None = None
    reference_embedding: str | None = None
    out: str | None = None
    trace: str | None = None
    stop_words: str | None = None
    names: str | None = None
    seed: str | None = None
    dictionary: list[str] = field(default_factory=list)
    gold: str | None = None
    debias_set: str | None = None
    words: str | None = None
    gender_pairs: str | None = None
    neighbour_cache: str | None = None
    sembias: str | None = None
    analogy: list[str] = field(default_factory=list)
    similarity: list[str] = field(default_factory=list)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    theta_r: float = DEFAULT_THETA_R
    theta_s: list[float] = field(default_factory=lambda: [0.03, 0.05, 0.07])
    k: int = DEFAULT_K
    epsilon: float = DEFAULT_EPSILON
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    workers: int = 1
    precision: int = 6

    @classmethod
    def build(cls, args: argparse.Namespace) -> "PipelineConfig":
        values: dict = {}
        if getattr(args, "config", None):
            from_file = load_config(args.config)
            unknown = sorted(set(from_file) - _CONFIG_KEYS)
            if unknown:
                raise CliError(f"{args.config}: unknown key(s): {', '.join(unknown)}")
            values.update(from_file)
        for key, val in vars(args).items():
            if val is not None and key not in ("command", "func", "config", "verbose"):
                values[key] = val
        cfg = cls()
        for key in ("embedding", "reference_embedding", "out", "trace", "stop_words", "names", "seed",
                    "gold", "debias_set", "words", "gender_pairs", "neighbour_cache", "sembias"):
            if key in values:
                setattr(cfg, key, str(values[key]))
        for key in ("dictionary", "analogy", "similarity"):
            setattr(cfg, key, _paths(values.get(key)))
        if "lambda" in values:
            cfg.weights = ObjectiveWeights.parse(str(values["lambda"]))
        if "theta_r" in values:
            cfg.theta_r = float(values["theta_r"])
        if "theta_s" in values:
            cfg.theta_s = _floats(values["theta_s"])
        if "k" in values:
            cfg.k = int(values["k"])
        if "epsilon" in values:
            cfg.epsilon = float(values["epsilon"])
        if "workers" in values:
            cfg.workers = int(values["workers"])
        if "precision" in values:
            cfg.precision = int(values["precision"])
        opt = {k: values[k] for k in ("learning_rate", "max_steps", "beta1", "beta2", "tolerance") if k in values}
        if "adam_eps" in values:
            opt["eps"] = values["adam_eps"]
        cfg.optimizer = optimizer_config_from(opt)
        if cfg.k < 1 or cfg.workers < 1 or cfg.epsilon <= 0:
            raise CliError("k and workers must be positive, epsilon must be > 0")
        return cfg

    def require(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if not value:
                raise CliError(f"missing required option --{name.replace('_', '-')}")
            for p in value if isinstance(value, list) else [value]:
                if not os.path.isfile(p) and name not in ("out", "trace", "neighbour_cache"):
                    raise CliError(f"--{name.replace('_', '-')}: no such file: {p}")


_CONFIG_KEYS = {f.name for f in fields(PipelineConfig)} - {"weights", "optimizer"} | {
    "lambda", "learning_rate", "max_steps", "beta1", "beta2", "adam_eps", "tolerance",
}


def _gender_direction(emb, cfg: PipelineConfig):
    pairs = load_gender_pairs(cfg.gender_pairs) if cfg.gender_pairs else DEFAULT_GENDER_PAIRS
    return compute_gender_direction(emb, pairs)


def _classify(cfg: PipelineConfig, vocab_words):
    cfg.require("dictionary")
    for name in ("stop_words", "names", "seed"):
        if getattr(cfg, name):
            cfg.require(name)
    lists = WordLists(
        stop_words=load_word_list(cfg.stop_words) if cfg.stop_words else (),
        seed=load_word_list(cfg.seed) if cfg.seed else DEFAULT_SEED,
        names=load_word_list(cfg.names) if cfg.names else (),
    )
    kb = KnowledgeBase([load_dictionary(p) for p in cfg.dictionary])
    return classify_vocabulary(vocab_words, lists, kb)


def cmd_classify(cfg: PipelineConfig) -> int:
    cfg.require("embedding", "out")
    emb = load_embedding(cfg.embedding)
    result = _classify(cfg, emb.vocab.words)
    gold = load_gold_labels(cfg.gold) if cfg.gold else None
    os.makedirs(cfg.out, exist_ok=True)
    for which in ("preserve", "debias"):
        with open(os.path.join(cfg.out, f"{which}.txt"), "w", encoding="utf-8") as fh:
            for w in result.ordered(emb.vocab.words, which):
                fh.write(w + "\n")
    with open(os.path.join(cfg.out, "provenance.tsv"), "w", encoding="utf-8") as fh:
        for w in emb.vocab.words:
            fh.write(f"{w}\t{result.provenance[w]}\n")
    print(f"preserve\t{len(result.preserve)}")
    print(f"debias\t{len(result.debias)}")
    for stage, count in result.stage_counts().items():
        print(f"stage:{stage}\t{count}")
    if gold is not None:
        s = score_classification(result, gold)
        print(f"precision\t{s.precision:.4f}\nrecall\t{s.recall:.4f}\nf1\t{s.f1:.4f}\naccuracy\t{s.accuracy:.4f}")
    return 0


def cmd_neighbors(cfg: PipelineConfig) -> int:
    cfg.require("embedding", "out")
    emb = load_embedding(cfg.embedding)
    words = load_word_list(cfg.words) if cfg.words else None
    table = top_k_neighbours(emb, words, cfg.k, workers=cfg.workers)
    write_neighbour_cache(table, cfg.out, fingerprint(emb))
    print(f"queries\t{len(table)}\tk\t{cfg.k}")
    return 0


def _neighbours_for(emb, words, cfg: PipelineConfig):
    path = cfg.neighbour_cache
    stamp = fingerprint(emb) if path else ""
    if path and os.path.isfile(path):
        table, source = read_neighbour_cache_with_source(path, emb)
        if source == stamp and table.k >= cfg.k and all(w in table for w in words):
            log.info("reusing neighbour cache %s", path)
            return table.truncate(cfg.k)
        log.info("neighbour cache %s does not cover this run; recomputing", path)
    table = top_k_neighbours(emb, words, cfg.k, workers=cfg.workers)
    if path:
        write_neighbour_cache(table, path, stamp)
    return table


def cmd_debias(cfg: PipelineConfig) -> int:
    cfg.require("embedding", "out")
    emb = load_embedding(cfg.embedding)
    if cfg.debias_set:
        cfg.require("debias_set")
        debias = set(load_word_list(cfg.debias_set)) & set(emb.vocab.index)
        preserve = set(emb.vocab.words) - debias
        prov = {w: STAGE_DEBIAS if w in debias else STAGE_NAME for w in emb.vocab.words}
        classification = Classification(preserve, debias, prov)
    else:
        classification = _classify(cfg, emb.vocab.words)
    g = _gender_direction(emb, cfg)
    targets = [w for w in emb.vocab.words if w in classification.debias]
    neighbours = _neighbours_for(emb, targets, cfg) if targets else None
    result = debias_all(
        emb, classification, g, cfg.weights, cfg.theta_r, cfg.optimizer,
        k=cfg.k, workers=cfg.workers, neighbours=neighbours,
    )
    save_embedding(result.debiased, cfg.out, cfg.precision)
    if cfg.trace:
        with open(cfg.trace, "w", encoding="utf-8") as fh:
            result.write_trace(fh)
    print(f"debiased\t{len(result.trace)}")
    print(f"preserved\t{len(classification.preserve)}")
    print(f"failures\t{len(result.failures)}")
    return 1 if result.failures else 0


def cmd_audit(cfg: PipelineConfig) -> int:
    cfg.require("embedding", "words")
    emb = load_embedding(cfg.embedding)
    ref = load_embedding(cfg.reference_embedding) if cfg.reference_embedding else emb
    W = [w for w in load_word_list(cfg.words) if w in emb and w in ref]
    if not W:
        raise CliError("no audit word is present in both embeddings")
    g = _gender_direction(ref, cfg)
    neighbours = _neighbours_for(emb, W, cfg)
    net = build_bbn(emb, ref, W, cfg.k, g, neighbours=neighbours)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    print("theta_s\tgipe")
    for theta in cfg.theta_s:
        report = gipe(net, theta, cfg.epsilon)
        print(f"{theta:g}\t{report.gipe:.6f}")
        if cfg.out:
            with open(os.path.join(cfg.out, f"gipe_theta{theta:g}.tsv"), "w", encoding="utf-8") as fh:
                report.write(fh)
    return 0


def cmd_eval(cfg: PipelineConfig) -> int:
    cfg.require("embedding")
    if not (cfg.sembias or cfg.analogy or cfg.similarity):
        raise CliError("nothing to evaluate: give --sembias, --analogy or --similarity")
    for name in ("sembias", "analogy", "similarity"):
        if getattr(cfg, name):
            cfg.require(name)
    emb = load_embedding(cfg.embedding)
    lines = ["task\tdataset\tmetric\tvalue"]
    if cfg.sembias:
        r = sembias_eval(emb, load_sembias(cfg.sembias))
        name = os.path.basename(cfg.sembias)
        for key in ("definition", "stereotype", "none"):
            lines.append(f"sembias\t{name}\t{key}\t{r[key]:.2f}")
        lines.append(f"sembias\t{name}\tevaluated\t{r['evaluated']}")
        lines.append(f"sembias\t{name}\tskipped\t{r['skipped']}")
    for path in cfg.analogy:
        r = analogy_accuracy(emb, load_analogies(path))
        name = os.path.basename(path)
        lines.append(f"analogy\t{name}\taccuracy\t{100 * r.accuracy:.2f}")
        for section, (c, a) in r.sections.items():
            if section:
                lines.append(f"analogy\t{name}\taccuracy:{section}\t{100 * c / a:.2f}")
        lines.append(f"analogy\t{name}\tanswered\t{r.answered}")
        lines.append(f"analogy\t{name}\tskipped\t{r.skipped}")
    for path in cfg.similarity:
        r = similarity_spearman(emb, load_similarity(path))
        name = os.path.basename(path)
        lines.append(f"similarity\t{name}\tspearman\t{r.rho:.4f}")
        lines.append(f"similarity\t{name}\tused\t{r.used}")
        lines.append(f"similarity\t{name}\tskipped\t{r.skipped}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randebias", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, embedding=True):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("-v", "--verbose", action="store_true")
        if embedding:
            p.add_argument("--embedding", help="embedding text file")
        p.add_argument("--workers", type=int)

    def kbc_opts(p):
        p.add_argument("--stop-words", dest="stop_words")
        p.add_argument("--names")
        p.add_argument("--seed", help="seed word list (default: built-in gendered terms)")
        p.add_argument("--dictionary", action="append", help="headword<TAB>definition file; repeatable")

    p = sub.add_parser("classify", help="split the vocabulary into preserve and debias sets")
    common(p)
    kbc_opts(p)
    p.add_argument("--gold", help="token<TAB>label file to score the classification against")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("neighbors", help="compute and cache top-k neighbour lists")
    common(p)
    p.add_argument("--words", help="query words (default: whole vocabulary)")
    p.add_argument("--k", type=int)
    p.add_argument("--out", help="cache file")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("debias", help="run the debiasing optimizer")
    common(p)
    kbc_opts(p)
    p.add_argument("--debias-set", dest="debias_set", help="token file; skips classification")
    p.add_argument("--out", help="debiased embedding file")
    p.add_argument("--trace", help="per-word optimization trace (TSV)")
    p.add_argument("--lambda", dest="lambda", help="repulsion,attraction,neutralization weights")
    p.add_argument("--theta-r", dest="theta_r", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--adam-eps", dest="adam_eps", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--gender-pairs", dest="gender_pairs")
    p.add_argument("--neighbour-cache", dest="neighbour_cache")
    p.add_argument("--precision", type=int)
    p.set_defaults(func=cmd_debias)

    p = sub.add_parser("audit", help="GIPE report(s)")
    common(p)
    p.add_argument("--reference-embedding", dest="reference_embedding",
                   help="non-debiased embedding used for indirect bias")
    p.add_argument("--words", help="query word set W (e.g. the debias set)")
    p.add_argument("--theta-s", dest="theta_s")
    p.add_argument("--k", "--n", dest="k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gender-pairs", dest="gender_pairs")
    p.add_argument("--neighbour-cache", dest="neighbour_cache")
    p.add_argument("--out", help="directory for per-word reports")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("eval", help="SemBias, analogy and similarity benchmarks")
    common(p)
    p.add_argument("--sembias")
    p.add_argument("--analogy", action="append")
    p.add_argument("--similarity", action="append")
    p.add_argument("--out", help="write the report here as well")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = PipelineConfig.build(args)
        return args.func(cfg)
    except (CliError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"randebias {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
