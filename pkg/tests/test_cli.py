import os
import subprocess
import sys

import numpy as np
import pytest

from randebias.bias_geometry import compute_gender_direction
from randebias.cli import main
from randebias.embedding_io import load_embedding, save_embedding
from randebias.gipe import build_bbn, gipe
from randebias.synthetic import make_biased_embedding

from conftest import DATA

KBC = os.path.join(DATA, "kbc")


@pytest.fixture(scope="module")
def synth():
    return make_biased_embedding(n_words=100, dim=20, n_clusters=6, seed=11)


@pytest.fixture
def files(tmp_path, synth):
    emb_path = tmp_path / "emb.txt"
    save_embedding(synth.emb, str(emb_path), precision=10)
    debias_path = tmp_path / "vd.txt"
    debias_path.write_text("\n".join(sorted(synth.classification.debias)) + "\n")
    return tmp_path, str(emb_path), str(debias_path)


def kbc_embedding(tmp_path):
    words = [line.split("\t")[0] for line in open(os.path.join(KBC, "vocab_labels.tsv"), encoding="utf-8")
             if not line.startswith("#")]
    rng = np.random.default_rng(0)
    p = tmp_path / "kbc_emb.txt"
    p.write_text("".join(f"{w} " + " ".join(f"{x:.4f}" for x in rng.normal(size=3)) + "\n" for w in words))
    return str(p), words


def classify_args(emb, out):
    return ["classify", "--embedding", emb, "--out", out,
            "--stop-words", os.path.join(KBC, "stop_words.txt"), "--names", os.path.join(KBC, "names.txt"),
            "--dictionary", os.path.join(KBC, "dict_a.tsv"), "--dictionary", os.path.join(KBC, "dict_b.tsv")]


def test_classify_writes_partition(tmp_path, capsys):
    emb, words = kbc_embedding(tmp_path)
    out = tmp_path / "cls"
    gold = tmp_path / "gold.tsv"
    gold.write_text("".join(f"{r[0]}\t{r[1]}\n" for r in
                            (line.rstrip("\n").split("\t") for line in open(os.path.join(KBC, "vocab_labels.tsv")))
                            if not r[0].startswith("#")))
    assert main(classify_args(emb, str(out)) + ["--gold", str(gold)]) == 0
    pres = (out / "preserve.txt").read_text().split()
    deb = (out / "debias.txt").read_text().split()
    assert set(pres) | set(deb) == set(words) and not set(pres) & set(deb)
    assert len(pres) == 31 and len(deb) == 19
    assert (out / "provenance.tsv").read_text().splitlines()[0] == "the\tstop/nonalpha"
    stdout = capsys.readouterr().out
    assert "preserve\t31" in stdout and "stage:dictionary_vote\t10" in stdout
    assert "precision\t0.6774" in stdout


def test_classify_missing_dictionary_fails_fast(tmp_path, capsys):
    emb, _ = kbc_embedding(tmp_path)
    out = tmp_path / "cls"
    args = classify_args(emb, str(out))
    args[args.index(os.path.join(KBC, "dict_b.tsv"))] = str(tmp_path / "missing.tsv")
    assert main(args) == 1
    assert not out.exists()
    assert "no such file" in capsys.readouterr().err


def test_debias_attraction_only_is_identity(files):
    tmp, emb, vd = files
    out = tmp / "out.txt"
    assert main(["debias", "--embedding", emb, "--debias-set", vd, "--out", str(out),
                 "--lambda", "0,1,0", "--k", "20", "--precision", "10"]) == 0
    a, b = load_embedding(emb), load_embedding(str(out))
    assert np.max(np.abs(a.vectors - b.vectors)) < 1e-6


def test_bad_lambda_rejected_before_work(files, capsys):
    tmp, emb, vd = files
    out = tmp / "out.txt"
    assert main(["debias", "--embedding", emb, "--debias-set", vd, "--out", str(out), "--lambda", "0.3,0.3,0.3"]) == 1
    assert not out.exists()
    assert "sum to 1" in capsys.readouterr().err


def test_config_file_with_flag_override(files, capsys):
    tmp, emb, vd = files
    cfg = tmp / "run.cfg"
    cfg.write_text(f"embedding = {emb}\ndebias-set = {vd}\nlambda = 0.3,0.3,0.3\nk = 20\n")
    out = tmp / "out.txt"
    assert main(["debias", "--config", str(cfg), "--out", str(out), "--lambda", "1/8,6/8,1/8", "--max-steps", "5"]) == 0
    cfg.write_text("embeding = x\n")
    assert main(["debias", "--config", str(cfg), "--out", str(out)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_debias_then_audit_pipeline(files, synth, capsys):
    tmp, emb, vd = files
    out, trace, cache = tmp / "out.txt", tmp / "trace.tsv", tmp / "nb.tsv"
    assert main(["debias", "--embedding", emb, "--debias-set", vd, "--out", str(out), "--trace", str(trace),
                 "--k", "30", "--neighbour-cache", str(cache), "--precision", "10"]) == 0
    assert cache.read_text().startswith("#k=30\tsource=")
    assert trace.read_text().startswith("word\tinitial\tfinal\tsteps\trepulsion\n")
    capsys.readouterr()

    def audit(embedding, extra=()):
        assert main(["audit", "--embedding", embedding, "--reference-embedding", emb, "--words", vd,
                     "--k", "30", "--theta-s", "0.03,0.05,0.07", *extra]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "theta_s\tgipe"
        return [float(l.split("\t")[1]) for l in lines[1:]]

    before = audit(emb, ["--neighbour-cache", str(cache), "--out", str(tmp / "rep")])
    after = audit(str(out))
    assert after[1] < before[1]
    assert before == sorted(before, reverse=True)
    assert (tmp / "rep" / "gipe_theta0.05.tsv").read_text().splitlines()[-1].startswith("# theta_s=0.05")

    # pass-through: audit of the original equals a direct module call
    e = load_embedding(emb)
    g = compute_gender_direction(e)
    W = sorted(synth.classification.debias)
    direct = gipe(build_bbn(e, e, W, 30, g), 0.05).gipe
    assert before[1] == pytest.approx(round(direct, 6), abs=1e-12)


def test_audit_reports_are_deterministic(files, capsys):
    tmp, emb, vd = files
    outs = []
    for d in ("r1", "r2"):
        assert main(["audit", "--embedding", emb, "--words", vd, "--k", "15", "--out", str(tmp / d)]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    for name in os.listdir(tmp / "r1"):
        assert (tmp / "r1" / name).read_bytes() == (tmp / "r2" / name).read_bytes()


def test_neighbors_command(files, capsys):
    tmp, emb, vd = files
    cache = tmp / "nb.tsv"
    assert main(["neighbors", "--embedding", emb, "--words", vd, "--k", "5", "--out", str(cache)]) == 0
    lines = cache.read_text().splitlines()
    assert lines[0].startswith("#k=5\tsource=")
    assert len(lines) == 1 + len(open(vd).read().split())


def test_eval_sembias_toy(tmp_path, capsys):
    emb = tmp_path / "e.txt"
    emb.write_text("he 1 0 0 1\nshe -1 0 0 1\nking 1 0 1 0\nqueen -1 0 1 0\ndoctor 0 1 0 0\n"
                   "nurse 0 -1 0 0\ncat 0 0 1 1\ndog 0 0 -1 1\ncup 0 0 0 2\nmug 0 0 0 1\n")
    sb = tmp_path / "sembias.txt"
    sb.write_text("king:queen\tdoctor:nurse\tcat:dog\tcup:mug\n")
    ws = tmp_path / "ws.txt"
    ws.write_text("king queen 9\ncat dog 5\ncup mug 1\n")
    report = tmp_path / "report.tsv"
    assert main(["eval", "--embedding", str(emb), "--sembias", str(sb), "--similarity", str(ws),
                 "--out", str(report)]) == 0
    out = capsys.readouterr().out
    assert "sembias\tsembias.txt\tdefinition\t100.00" in out
    assert "sembias\tsembias.txt\tstereotype\t0.00" in out
    assert report.read_text() == out


def test_eval_requires_a_dataset(files, capsys):
    _, emb, _ = files
    assert main(["eval", "--embedding", emb]) == 1
    assert "nothing to evaluate" in capsys.readouterr().err


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "randebias.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("classify", "neighbors", "debias", "audit", "eval"):
        assert cmd in out.stdout
