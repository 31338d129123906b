"""Mine API usage models from register-based method listings, train
hidden-state and n-gram models per object (set), and recommend API calls."""

__version__ = "0.1.0"

from .cfg import Cfg, build_cfg, count_branch_nodes
from .evaluation import (EvalReport, Split, compare_models, eval_task1,
                         eval_task2, sensitivity_curve, split_corpus)
from .hmm import (FbTables, PosteriorStats, TrainSet, UsageHmm, backward,
                  forward, forward_backward, posterior_stats, sample,
                  select_k, sequence_loglik, total_loglik, train)
from .ir import Method, MethodRef, parse_corpus_file, parse_method
from .ngram import NgramModel, ngram_prob, ngram_seq_prob, train_ngram
from .recommend import Recommendation, next_api_call, next_api_call_ngram, top_k
from .sequences import (Corpus, ObjectKey, aggregate_corpus, extract_method,
                        extract_multi, extract_single, usage_dependent_sets)
from .store import ModelStore
from .usage import UsageGraph, build_usage_graphs

__all__ = [
    "Cfg", "Corpus", "EvalReport", "FbTables", "Method", "MethodRef",
    "ModelStore", "NgramModel", "ObjectKey", "PosteriorStats",
    "Recommendation", "Split", "TrainSet", "UsageGraph", "UsageHmm",
    "aggregate_corpus", "backward", "build_cfg", "build_usage_graphs",
    "compare_models", "count_branch_nodes", "eval_task1", "eval_task2",
    "extract_method", "extract_multi", "extract_single", "forward",
    "forward_backward", "next_api_call", "next_api_call_ngram", "ngram_prob",
    "ngram_seq_prob", "parse_corpus_file", "parse_method", "posterior_stats",
    "sample", "select_k", "sensitivity_curve", "sequence_loglik",
    "split_corpus", "top_k", "total_loglik", "train", "train_ngram",
    "usage_dependent_sets",
]
