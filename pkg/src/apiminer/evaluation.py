"""Evaluation harness: occurrence-level splits, the two recommendation tasks,
top-k accuracy reports, state-count sensitivity, and the model comparison.

Splits operate on occurrences (a sequence with count c contributes c items),
so training counts stay meaningful and test frequency reflects usage
frequency. Keys with fewer occurrences than the cut-off are skipped.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .errors import InsufficientDataError, OutOfVocabularyError
from .hmm import TrainSet, UsageHmm, select_k, total_loglik, train
from .ngram import train_ngram
from .recommend import next_api_call, next_api_call_ngram
from .seeding import derive_seed
from .sequences import Corpus, ObjectKey, Sequence

TASK_NEXT_CALL = "next_call"
TASK_FILL_HOLE = "fill_hole"


@dataclass
class Split:
    train: TrainSet
    validation: TrainSet
    test: list[tuple[Sequence, int]]
    seed: int

    @property
    def total(self) -> int:
        return (self.train.total + self.validation.total
                + sum(c for _, c in self.test))


def split_corpus(corpus: Corpus, key: ObjectKey, train_frac: float = 0.8,
                 val_frac: float = 0.125, seed: int = 0,
                 min_sequences: int = 25) -> Split:
    """Shuffle the key's occurrences and cut train/validation/test portions.

    ``train_frac`` of the occurrences form the training pool and the rest is
    the test set; ``val_frac`` of the pool is held out as validation. The
    same seed always reproduces the same split.
    """
    total = corpus.total(key)
    if total < min_sequences:
        raise InsufficientDataError(
            f"{key.display}: {total} occurrences, need {min_sequences}")
    occurrences: list[Sequence] = []
    for seq, count in corpus.sorted_items(key):
        occurrences.extend([seq] * count)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(occurrences))
    n_pool = int(round(train_frac * len(occurrences)))
    n_val = int(round(val_frac * n_pool))
    pool = [occurrences[i] for i in order[:n_pool]]
    test = [occurrences[i] for i in order[n_pool:]]
    validation = pool[:n_val]
    training = pool[n_val:]
    vocab = corpus.vocabulary(key)
    return Split(
        train=TrainSet.from_sequences(sorted(Counter(training).items()), vocab),
        validation=TrainSet.from_sequences(sorted(Counter(validation).items()),
                                           vocab),
        test=sorted(Counter(test).items()),
        seed=seed,
    )


@dataclass
class EvalReport:
    task: str
    model_kind: str  # "hapi" | "ngram"
    k_values: tuple[int, ...]
    hits: dict[int, int] = field(default_factory=dict)
    total: int = 0
    skipped: int = 0

    def accuracy(self, k: int) -> float:
        return self.hits.get(k, 0) / self.total if self.total else 0.0


def _model_kind(model) -> str:
    return "hapi" if isinstance(model, UsageHmm) else "ngram"


def _vocab_set(model) -> set[str]:
    return set(model.vocab)


def _rank_methods(model, partial, hole=None) -> list[str]:
    if isinstance(model, UsageHmm):
        return next_api_call(model, partial, hole).methods()
    return next_api_call_ngram(model, partial, hole).methods()


def _record_hit(report: EvalReport, ranking: list[str], truth: str,
                weight: int) -> None:
    position = ranking.index(truth)
    report.total += weight
    for k in report.k_values:
        if position < k:
            report.hits[k] = report.hits.get(k, 0) + weight


def eval_task1(model, test, k_values=(1, 3, 5, 10)) -> EvalReport:
    """Predict-next evaluation over every call position i >= 2 of every test
    occurrence; calls outside the model vocabulary are counted as skipped."""
    report = EvalReport(task=TASK_NEXT_CALL, model_kind=_model_kind(model),
                        k_values=tuple(k_values))
    vocab = _vocab_set(model)
    for seq, count in test:
        for i in range(2, len(seq) + 1):
            prefix, truth = list(seq[:i - 1]), seq[i - 1]
            if truth not in vocab:
                report.skipped += count
                continue
            try:
                ranking = _rank_methods(model, prefix)
            except OutOfVocabularyError:
                report.skipped += count
                continue
            _record_hit(report, ranking, truth, count)
    return report


def eval_task2(model, test, k_values=(1, 3, 5, 10), seed: int = 0) -> EvalReport:
    """Fill-the-hole evaluation: one seeded uniform-random hole per test
    occurrence, scored per sequence."""
    report = EvalReport(task=TASK_FILL_HOLE, model_kind=_model_kind(model),
                        k_values=tuple(k_values))
    vocab = _vocab_set(model)
    rng = np.random.default_rng(seed)
    for seq, count in test:
        for _ in range(count):
            hole = int(rng.integers(1, len(seq) + 1))
            truth = seq[hole - 1]
            partial = list(seq[:hole - 1]) + list(seq[hole:])
            if truth not in vocab:
                report.skipped += 1
                continue
            try:
                ranking = _rank_methods(model, partial, hole)
            except OutOfVocabularyError:
                report.skipped += 1
                continue
            _record_hit(report, ranking, truth, 1)
    return report


def sensitivity_curve(trainset: TrainSet, validation: TrainSet,
                      k_range=range(1, 17), seed: int = 0,
                      tol: float = 1e-6, max_iter: int = 200
                      ) -> list[tuple[int, float | None]]:
    """Validation log-likelihood per hidden-state count; training failures
    leave gaps (None)."""
    curve: list[tuple[int, float | None]] = []
    for k in sorted(k_range):
        try:
            model = train(trainset, k, derive_seed(seed, "init", str(k)),
                          tol=tol, max_iter=max_iter)
            curve.append((k, total_loglik(model, validation)))
        except Exception:
            curve.append((k, None))
    return curve


def _merged_pairs(split: Split) -> list[tuple[tuple[str, ...], int]]:
    """Train + validation occurrences as string sequences (the n-gram model
    has no hyper-parameter to validate, so it trains on the whole pool)."""
    merged: Counter = Counter()
    for dataset in (split.train, split.validation):
        for seq, count in dataset.items:
            merged[tuple(dataset.vocab[i] for i in seq)] += count
    return sorted(merged.items())


@dataclass
class KeyComparison:
    key: ObjectKey
    chosen_k: int
    reports: dict[tuple[str, str], EvalReport]  # (model_kind, task) -> report


def compare_models(corpus: Corpus, config: PipelineConfig
                   ) -> tuple[list[KeyComparison], list[ObjectKey]]:
    """Train both model families per qualifying key on one shared split and
    evaluate both tasks on the shared test set.

    Returns the per-key comparisons and the list of keys skipped for having
    too few occurrences.
    """
    results: list[KeyComparison] = []
    skipped_keys: list[ObjectKey] = []
    ks = config.eval_ks
    for key in corpus.keys():
        try:
            split = split_corpus(corpus, key, config.train_frac,
                                 config.val_frac,
                                 derive_seed(config.seed, "split", key.display),
                                 config.min_sequences)
        except InsufficientDataError:
            skipped_keys.append(key)
            continue
        chosen_k, hmm_model = select_k(split.train, split.validation,
                                       config.k_range,
                                       derive_seed(config.seed, "select",
                                                   key.display),
                                       tol=config.em_tol,
                                       max_iter=config.em_max_iter,
                                       restarts=config.em_restarts)
        hmm_model.key = key
        ngram_model = train_ngram(_merged_pairs(split), n=config.ngram_order,
                                  delta=config.ngram_delta,
                                  vocab=split.train.vocab, key=key)
        hole_seed = derive_seed(config.seed, "holes", key.display)
        reports = {}
        for model in (hmm_model, ngram_model):
            kind = _model_kind(model)
            reports[(kind, TASK_NEXT_CALL)] = eval_task1(model, split.test, ks)
            reports[(kind, TASK_FILL_HOLE)] = eval_task2(model, split.test, ks,
                                                         seed=hole_seed)
        results.append(KeyComparison(key=key, chosen_k=chosen_k,
                                     reports=reports))
    return results, skipped_keys


def comparison_rows(results: list[KeyComparison],
                    macro: bool = False) -> list[dict]:
    """Flatten comparisons into CSV-ready rows plus an aggregate per
    (model, task, k): pooled hits by default, per-key mean with ``macro``."""
    rows: list[dict] = []
    for comp in results:
        for (kind, task), report in sorted(comp.reports.items()):
            for k in report.k_values:
                rows.append({
                    "key": comp.key.display, "model": kind, "task": task,
                    "k": k, "hits": report.hits.get(k, 0),
                    "total": report.total,
                    "accuracy": report.accuracy(k),
                    "skipped": report.skipped,
                })
    aggregates: dict[tuple[str, str, int], list[dict]] = {}
    for row in rows:
        aggregates.setdefault((row["model"], row["task"], row["k"]),
                              []).append(row)
    for (kind, task, k), group in sorted(aggregates.items()):
        hits = sum(r["hits"] for r in group)
        total = sum(r["total"] for r in group)
        skipped = sum(r["skipped"] for r in group)
        if macro:
            accuracy = (sum(r["accuracy"] for r in group) / len(group)
                        if group else 0.0)
        else:
            accuracy = hits / total if total else 0.0
        rows.append({"key": "ALL", "model": kind, "task": task, "k": k,
                     "hits": hits, "total": total, "accuracy": accuracy,
                     "skipped": skipped})
    return rows
