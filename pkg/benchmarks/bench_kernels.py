"""Compare the compiled and numpy optimizer kernels.

Times ``adam_minimize`` on random problems shaped like real ones (a word,
its repulsion set, the gender direction), then a whole ``debias_all`` run
on a synthetic embedding with each backend swapped in.

    python benchmarks/bench_kernels.py --dim 300 --members 20 --words 200
"""
import argparse
import time

import numpy as np

from randebias import _backend
from randebias.bias_geometry import compute_gender_direction
from randebias.embedding_io import normalize_rows
from randebias.ran_debias import DEFAULT_WEIGHTS, OptimizerConfig, debias_all
from randebias.synthetic import make_biased_embedding


def problems(n, dim, members, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=dim)
    g /= np.linalg.norm(g)
    out = []
    for _ in range(n):
        w = rng.normal(size=dim)
        out.append((w / np.linalg.norm(w), normalize_rows(rng.normal(size=(members, dim))), g))
    return out


def bench_adam(kernels, probs, cfg):
    start = time.perf_counter()
    steps = 0
    for w, m, g in probs:
        res = kernels.adam_minimize(w, m, g, DEFAULT_WEIGHTS.as_tuple(), cfg.learning_rate, cfg.beta1,
                                    cfg.beta2, cfg.eps, cfg.max_steps, cfg.tolerance)
        steps += res[3]
    return time.perf_counter() - start, steps


def bench_debias_all(kernels, syn, k):
    saved = _backend.kernels
    _backend.kernels = kernels
    try:
        g = compute_gender_direction(syn.emb)
        start = time.perf_counter()
        res = debias_all(syn.emb, syn.classification, g, k=k)
        return time.perf_counter() - start, res
    finally:
        _backend.kernels = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=300)
    ap.add_argument("--members", type=int, default=20)
    ap.add_argument("--words", type=int, default=200, help="optimizer problems to time")
    ap.add_argument("--max-steps", type=int, default=300)
    ap.add_argument("--vocab", type=int, default=1000, help="synthetic vocabulary for the debias_all run")
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = _backend.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy kernels only")
    cfg = OptimizerConfig(max_steps=args.max_steps, tolerance=0.0)
    probs = problems(args.words, args.dim, args.members, args.seed)
    syn = make_biased_embedding(n_words=args.vocab, dim=min(args.dim, 100), seed=args.seed)

    print(f"adam_minimize: {args.words} problems, dim {args.dim}, {args.members} members, "
          f"{args.max_steps} steps each")
    results = {}
    for name, kernels in sorted(backends.items()):
        t, steps = bench_adam(kernels, probs, cfg)
        results[name] = t
        print(f"  {name:7s} {t:8.3f} s   {1e6 * t / steps:8.2f} us/step")
    if len(results) == 2:
        print(f"  speed-up {results['python'] / results['cython']:.1f}x")

    print(f"debias_all: {args.vocab} words, dim {syn.emb.dim}, k {args.k}")
    outs = {}
    for name, kernels in sorted(backends.items()):
        t, res = bench_debias_all(kernels, syn, args.k)
        outs[name] = res.debiased.vectors
        print(f"  {name:7s} {t:8.3f} s")
    if len(outs) == 2:
        print(f"  max |difference| between backends: {np.max(np.abs(outs['python'] - outs['cython'])):.1e}")


if __name__ == "__main__":
    main()
