"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints one PASS/FAIL line (visible with ``pytest -s`` or on
failure); run the whole file with ``pytest tests/test_acceptance.py -s``.
"""

import dataclasses
import functools
import math
import time
from pathlib import Path

import numpy as np
from click.testing import CliRunner

from apiminer.cli import main as cli_main
from apiminer.config import PipelineConfig
from apiminer.evaluation import compare_models
from apiminer.hmm import TrainSet, UsageHmm, sample, select_k, sequence_loglik, train
from apiminer.ngram import ngram_prob, ngram_seq_prob, train_ngram
from apiminer.recommend import next_api_call
from apiminer.sequences import Corpus, ObjectKey, extract_method
from apiminer.cfg import build_cfg
from apiminer.ir import parse_method
from apiminer.usage import build_usage_graphs

from conftest import LOOP_METHOD, READER_METHOD, diamond_method
from helpers import brute_force_seq_prob, min_permutation_row_tv

DEMO = str(Path(__file__).resolve().parent.parent / "data" / "demo.ir")


def criterion(label):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {label}", flush=True)
                raise
            print(f"[PASS] {label}", flush=True)
        return wrapper
    return decorate


def _random_models(rng, count, k_max=4, m_max=5, t_max=8):
    for _ in range(count):
        k = int(rng.integers(1, k_max + 1))
        m = int(rng.integers(1, m_max + 1))
        t = int(rng.integers(1, t_max + 1))
        pi = rng.random(k) + 1e-3
        pi /= pi.sum()
        trans = rng.random((k, k)) + 1e-3
        trans /= trans.sum(axis=1, keepdims=True)
        emit = rng.random((k, m)) + 1e-3
        emit /= emit.sum(axis=1, keepdims=True)
        vocab = [f"c{i}" for i in range(m)]
        model = UsageHmm(key=None, vocab=vocab, pi=pi, trans=trans, emit=emit)
        obs = [int(x) for x in rng.integers(0, m, t)]
        yield model, obs


@criterion("criterion 1: forward/backward equals brute-force path sum "
           "(200 models, rel err <= 1e-10, < 10 s)")
def test_c1_forward_backward_oracle():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for model, obs in _random_models(rng, 200):
        ll = sequence_loglik(model, [model.vocab[i] for i in obs])
        expected = brute_force_seq_prob(model.pi, model.trans, model.emit, obs)
        assert math.isclose(math.exp(ll), expected, rel_tol=1e-10)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.1f}s"


def _random_trainset(rng):
    m = int(rng.integers(2, 6))
    vocab = [f"c{i}" for i in range(m)]
    pairs = {}
    for _ in range(int(rng.integers(3, 10))):
        length = int(rng.integers(2, 8))
        seq = tuple(vocab[i] for i in rng.integers(0, m, length))
        pairs[seq] = pairs.get(seq, 0) + int(rng.integers(1, 5))
    return TrainSet.from_sequences(sorted(pairs.items()), vocab)


@criterion("criterion 2: EM monotone within 1e-9 on 50 triples; "
           "count-weighting equals duplicated copies to 1e-12")
def test_c2_em_monotonicity_and_count_weighting():
    rng = np.random.default_rng(202)
    for trial in range(50):
        ts = _random_trainset(rng)
        k = int(rng.integers(1, 5))
        model = train(ts, k, seed=trial, max_iter=30)
        history = model.meta.history
        assert all(later - earlier >= -1e-9
                   for earlier, later in zip(history, history[1:]))
    for trial in range(5):
        ts = _random_trainset(rng)
        duplicated = [(seq, 1) for seq, c in ts.items for _ in range(c)]
        dup_ts = TrainSet(vocab=ts.vocab, items=duplicated)
        k = int(rng.integers(1, 4))
        m1 = train(ts, k, seed=trial, max_iter=10, tol=0)
        m2 = train(dup_ts, k, seed=trial, max_iter=10, tol=0)
        np.testing.assert_allclose(m1.pi, m2.pi, atol=1e-12)
        np.testing.assert_allclose(m1.trans, m2.trans, atol=1e-12)
        np.testing.assert_allclose(m1.emit, m2.emit, atol=1e-12)


@criterion("criterion 3: K=1 emissions equal empirical unigram frequencies "
           "within 1e-9")
def test_c3_k1_closed_form():
    rng = np.random.default_rng(303)
    for trial in range(20):
        ts = _random_trainset(rng)
        model = train(ts, k=1, seed=trial)
        counts = np.zeros(len(ts.vocab))
        for seq, c in ts.items:
            for sym in seq:
                counts[sym] += c
        np.testing.assert_allclose(model.emit[0], counts / counts.sum(),
                                   atol=1e-9)


@criterion("criterion 4: hole-filling ranking equals ranking by filled "
           "sequence likelihood (100 random models/queries)")
def test_c4_recommender_consistency():
    rng = np.random.default_rng(404)
    checked = 0
    for model, obs in _random_models(rng, 100, k_max=3, m_max=5, t_max=6):
        partial = [model.vocab[i] for i in obs]
        hole = int(rng.integers(1, len(partial) + 2))
        ranking = next_api_call(model, partial, hole).methods()
        scored = []
        for v in model.vocab:
            completed = partial[:hole - 1] + [v] + partial[hole - 1:]
            scored.append((v, sequence_loglik(model, completed)))
        oracle = [v for v, _ in sorted(scored, key=lambda kv: (-kv[1], kv[0]))]
        assert ranking == oracle
        checked += 1
    assert checked == 100


@criterion("criterion 5: path enumeration (8 graphs for 3 diamonds, 2 for a "
           "loop) and the worked reader sequences")
def test_c5_path_enumeration_and_reader_sequences():
    diamonds = parse_method(diamond_method(3))
    assert len(build_usage_graphs(diamonds, build_cfg(diamonds))) == 8
    loop = parse_method(LOOP_METHOD)
    assert len(build_usage_graphs(loop, build_cfg(loop))) == 2

    reader = parse_method(READER_METHOD)
    pairs = dict(extract_method(reader).pairs)
    br = "java.io.BufferedReader"
    fr = "java.io.FileReader"
    assert pairs[ObjectKey.of([br])] == (
        f"{br}.init", f"{br}.readLine", f"{br}.close")
    assert pairs[ObjectKey.of([fr, br])] == (
        f"{fr}.init", f"{br}.init", f"{br}.readLine", f"{br}.close")


@criterion("criterion 6: 2-state recovery (TV < 0.1, >= 9/10 seeds) and "
           "K*=6 selection in [4, 8] (>= 8/10 seeds) under 2 minutes")
def test_c6_synthetic_recovery_and_state_count_selection():
    start = time.perf_counter()

    truth2 = UsageHmm(key=None, vocab=[f"m{i}" for i in range(4)],
                      pi=[0.5, 0.5], trans=[[0.9, 0.1], [0.1, 0.9]],
                      emit=[[0.48, 0.48, 0.02, 0.02],
                            [0.02, 0.02, 0.48, 0.48]])
    recovered = 0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        pairs = {}
        for _ in range(500):
            seq = tuple(sample(truth2, 10, rng))
            pairs[seq] = pairs.get(seq, 0) + 1
        ts = TrainSet.from_sequences(sorted(pairs.items()), truth2.vocab)
        model = train(ts, k=2, seed=seed, max_iter=150, restarts=4)
        tv = min_permutation_row_tv(model.emit, np.asarray(truth2.emit))
        recovered += tv < 0.1
    assert recovered >= 9, f"recovered {recovered}/10"

    m = 12
    emit6 = np.full((6, m), 0.004)
    for i in range(6):
        emit6[i, 2 * i] = emit6[i, 2 * i + 1] = 0.492
    emit6 /= emit6.sum(axis=1, keepdims=True)
    trans6 = np.zeros((6, 6))
    for i in range(6):
        trans6[i, i] = 0.15
        trans6[i, (i + 1) % 6] = 0.85
    truth6 = UsageHmm(key=None, vocab=[f"m{i}" for i in range(m)],
                      pi=[1 / 6] * 6, trans=trans6, emit=emit6)
    good = 0
    picks = []
    for seed in range(10):
        rng = np.random.default_rng(2000 + seed)

        def draw(n, rng=rng):
            pairs = {}
            for _ in range(n):
                seq = tuple(sample(truth6, 8, rng))
                pairs[seq] = pairs.get(seq, 0) + 1
            return TrainSet.from_sequences(sorted(pairs.items()), truth6.vocab)

        ts, val = draw(300), draw(100)
        k, _ = select_k(ts, val, k_range=range(1, 17), seed=seed,
                        max_iter=80, restarts=2)
        picks.append(k)
        good += 4 <= k <= 8
    assert good >= 8, f"picked {picks}"

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"took {elapsed:.1f}s"


@criterion("criterion 7: hidden-state model top-1 >= 3-gram top-1 on "
           "interleaved patterns; accuracy monotone in k")
def test_c7_directional_baseline_comparison():
    vocab = ["s.T.a", "s.T.b", "s.T.u", "s.T.w", "s.T.x", "s.T.y"]
    index = {v: i for i, v in enumerate(vocab)}
    pi = np.zeros(8)
    pi[0] = pi[4] = 0.5
    trans = np.zeros((8, 8))
    for chain in ([0, 1, 2, 3], [4, 5, 6, 7]):
        for i, j in zip(chain, chain[1:]):
            trans[i, j] = 1.0
    trans[3, 0] = trans[7, 4] = 1.0
    emit = np.zeros((8, len(vocab)))
    for state, sym in [(0, "s.T.a"), (1, "s.T.x"), (2, "s.T.y"), (3, "s.T.u"),
                       (4, "s.T.b"), (5, "s.T.x"), (6, "s.T.y"), (7, "s.T.w")]:
        emit[state, index[sym]] = 1.0
    truth = UsageHmm(key=None, vocab=vocab, pi=pi, trans=trans, emit=emit)

    key = ObjectKey.of(["s.T"])
    rng = np.random.default_rng(77)
    corpus = Corpus()
    for _ in range(300):
        corpus.add(key, tuple(sample(truth, 4, rng)))

    config = dataclasses.replace(PipelineConfig(), k_min=1, k_max=10,
                                 em_max_iter=100, em_restarts=6, seed=1)
    results, skipped = compare_models(corpus, config)
    assert skipped == [] and len(results) == 1
    reports = results[0].reports
    hapi_top1 = reports[("hapi", "next_call")].accuracy(1)
    ngram_top1 = reports[("ngram", "next_call")].accuracy(1)
    assert hapi_top1 >= ngram_top1, (hapi_top1, ngram_top1)
    for report in reports.values():
        accuracies = [report.accuracy(k) for k in report.k_values]
        assert accuracies == sorted(accuracies)


@criterion("criterion 8: n-gram sequence probabilities sum to 1 (1e-9) and "
           "P(c|a,b) = 1.1/1.3 exactly")
def test_c8_ngram_correctness():
    import itertools

    rng = np.random.default_rng(808)
    for m, t_max in ((2, 4), (3, 4), (4, 4)):
        vocab = [f"c{i}" for i in range(m)]
        pairs = {}
        for _ in range(6):
            length = int(rng.integers(2, 5))
            seq = tuple(vocab[i] for i in rng.integers(0, m, length))
            pairs[seq] = pairs.get(seq, 0) + 1
        model = train_ngram(sorted(pairs.items()), n=3, delta=0.1)
        for t in range(1, t_max + 1):
            total = sum(math.exp(ngram_seq_prob(model, list(seq)))
                        for seq in itertools.product(model.vocab, repeat=t))
            assert math.isclose(total, 1.0, rel_tol=1e-9)

    worked = train_ngram([(("a", "b", "c"), 1)], n=3, delta=0.1)
    assert ngram_prob(worked, ("a", "b"), "c") == 1.1 / 1.3


@criterion("criterion 9: extract -> train -> eval is byte-identical across "
           "two runs with the same seed")
def test_c9_pipeline_determinism(tmp_path):
    runner = CliRunner()
    cfg = tmp_path / "fast.cfg"
    cfg.write_text("k_min = 1\nk_max = 3\nem_max_iter = 40\nseed = 7\n")

    outputs = []
    for run in ("one", "two"):
        root = tmp_path / run
        root.mkdir()
        corpus = root / "corpus.jsonl"
        store = root / "store"
        csv_out = root / "report.csv"
        for args in (["--config", str(cfg), "extract", DEMO, "--out",
                      str(corpus)],
                     ["--config", str(cfg), "train", "--corpus", str(corpus),
                      "--model-store", str(store)],
                     ["--config", str(cfg), "eval", "--corpus", str(corpus),
                      "--out", str(csv_out)]):
            result = runner.invoke(cli_main, args)
            assert result.exit_code == 0, result.output
        outputs.append(root)

    first, second = outputs
    assert ((first / "corpus.jsonl").read_bytes()
            == (second / "corpus.jsonl").read_bytes())
    assert ((first / "report.csv").read_bytes()
            == (second / "report.csv").read_bytes())
    names1 = sorted(p.name for p in (first / "store").iterdir())
    names2 = sorted(p.name for p in (second / "store").iterdir())
    assert names1 == names2 and len(names1) == 11  # 5 keys x 2 models + index
    for name in names1:
        assert ((first / "store" / name).read_bytes()
                == (second / "store" / name).read_bytes())
