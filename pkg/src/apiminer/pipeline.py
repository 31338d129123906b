"""High-level pipeline stages shared by the CLI and the HTTP service:
extract listings into a corpus, train the model store, evaluate."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .config import PipelineConfig
from .errors import InsufficientDataError
from .evaluation import (KeyComparison, _merged_pairs, compare_models,
                         comparison_rows, split_corpus)
from .hmm import model_to_dot, select_k
from .ir import Method, parse_corpus_file
from .ngram import train_ngram
from .seeding import derive_seed
from .sequences import Corpus, MethodExtraction, ObjectKey, extract_method
from .store import FORMAT_HMM, ModelStore

CSV_FIELDS = ["key", "model", "task", "k", "hits", "total", "accuracy",
              "skipped"]


@dataclass
class ExtractStats:
    files: int = 0
    methods_parsed: int = 0
    methods_analyzed: int = 0
    skipped_too_short: int = 0
    skipped_branch_limit: int = 0
    single_keys: int = 0
    multi_keys: int = 0
    single_sequences: int = 0
    multi_sequences: int = 0
    single_avg_len: float = 0.0
    multi_avg_len: float = 0.0

    def summary_lines(self) -> list[str]:
        return [
            f"files read:                 {self.files}",
            f"methods parsed:             {self.methods_parsed}",
            f"methods analyzed:           {self.methods_analyzed}",
            f"skipped (too short):        {self.skipped_too_short}",
            f"skipped (branch limit):     {self.skipped_branch_limit}",
            f"single-object keys:         {self.single_keys}",
            f"multi-object keys:          {self.multi_keys}",
            f"single-object occurrences:  {self.single_sequences}",
            f"multi-object occurrences:   {self.multi_sequences}",
            f"avg length (single/multi):  {self.single_avg_len:.1f} / "
            f"{self.multi_avg_len:.1f}",
        ]


def extract_files(paths, config: PipelineConfig
                  ) -> tuple[Corpus, ExtractStats, list[tuple[Method, MethodExtraction]]]:
    """Parse listings and build the counted corpus. A method dictionary keyed
    by qualified name ensures each method is analyzed once across all files."""
    stats = ExtractStats()
    corpus = Corpus()
    analyzed: list[tuple[Method, MethodExtraction]] = []
    seen: set[str] = set()
    for path in paths:
        stats.files += 1
        for method in parse_corpus_file(path):
            if method.qualified_name in seen:
                continue
            seen.add(method.qualified_name)
            stats.methods_parsed += 1
            extraction = extract_method(
                method, config.api_prefixes, config.max_branch_nodes,
                config.min_method_instructions, config.max_set_size)
            if extraction.skip_reason == "too_short":
                stats.skipped_too_short += 1
                continue
            if extraction.skip_reason == "branch_limit":
                stats.skipped_branch_limit += 1
                continue
            stats.methods_analyzed += 1
            analyzed.append((method, extraction))
            for key, seq in extraction.pairs:
                corpus.add(key, seq)
    single_calls = multi_calls = 0
    for key in corpus.keys():
        total = corpus.total(key)
        calls = sum(len(seq) * c for seq, c in corpus.entries[key].items())
        if len(key) == 1:
            stats.single_keys += 1
            stats.single_sequences += total
            single_calls += calls
        else:
            stats.multi_keys += 1
            stats.multi_sequences += total
            multi_calls += calls
    if stats.single_sequences:
        stats.single_avg_len = single_calls / stats.single_sequences
    if stats.multi_sequences:
        stats.multi_avg_len = multi_calls / stats.multi_sequences
    return corpus, stats, analyzed


@dataclass
class TrainStats:
    trained: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def summary_lines(self) -> list[str]:
        lines = []
        for rec in self.trained:
            lines.append(f"{rec['key']}: K={rec['k']} "
                         f"loglik={rec['loglik']:.4f} iters={rec['iters']}")
        for rec in self.skipped:
            lines.append(f"{rec['key']}: skipped ({rec['reason']})")
        return lines


def train_corpus(corpus: Corpus, store: ModelStore,
                 config: PipelineConfig) -> TrainStats:
    """Train one hidden-state model (with state-count selection) and one
    n-gram baseline per key with enough occurrences, then persist both."""
    stats = TrainStats()
    for key in corpus.keys():
        try:
            split = split_corpus(corpus, key, config.train_frac,
                                 config.val_frac,
                                 derive_seed(config.seed, "split", key.display),
                                 config.min_sequences)
        except InsufficientDataError as exc:
            stats.skipped.append({"key": key.display, "reason": str(exc)})
            continue
        chosen_k, model = select_k(split.train, split.validation,
                                   config.k_range,
                                   derive_seed(config.seed, "select",
                                               key.display),
                                   tol=config.em_tol,
                                   max_iter=config.em_max_iter,
                                   restarts=config.em_restarts)
        model.key = key
        store.save_hmm(model)
        ngram_model = train_ngram(_merged_pairs(split), n=config.ngram_order,
                                  delta=config.ngram_delta,
                                  vocab=split.train.vocab, key=key)
        store.save_ngram(ngram_model)
        stats.trained.append({"key": key.display, "k": chosen_k,
                              "loglik": model.meta.loglik,
                              "iters": model.meta.iters})
    return stats


def evaluate_corpus(corpus: Corpus, config: PipelineConfig,
                    macro: bool = False
                    ) -> tuple[list[dict], list[KeyComparison]]:
    """Run the full two-task comparison and return CSV-ready rows."""
    results, _ = compare_models(corpus, config)
    return comparison_rows(results, macro=macro), results


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["accuracy"] = f"{row['accuracy']:.6f}"
        writer.writerow(out)
    return buf.getvalue()


def rows_to_table(rows: list[dict]) -> str:
    header = f"{'key':<40} {'model':<6} {'task':<10} {'k':>3} {'acc':>8} {'hits':>6} {'total':>6} {'skip':>5}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['key']:<40} {row['model']:<6} {row['task']:<10} "
            f"{row['k']:>3} {row['accuracy']:>8.4f} {row['hits']:>6} "
            f"{row['total']:>6} {row['skipped']:>5}")
    return "\n".join(lines)


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text)


def render_model(store: ModelStore, key: ObjectKey, kind: str) -> str:
    """Human-readable rendering of a stored model: a DOT state graph for the
    hidden-state format, a text summary for the baseline."""
    if kind == FORMAT_HMM:
        model = store.load_hmm(key)
        return model_to_dot(model, title=key.display)
    model = store.load_ngram(key)
    lines = [f"n-gram model for {key.display}",
             f"order={model.n} delta={model.delta} vocab={len(model.vocab)}",
             f"contexts={len(model.context_counts)}"]
    return "\n".join(lines) + "\n"
