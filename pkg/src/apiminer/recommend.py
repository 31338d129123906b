"""Rank candidate API calls for a hole in a partial call sequence.

The hole position T is 1-based over the completed sequence: given observed
calls ``partial`` of length N, the completed sequence is ``partial`` with the
candidate inserted before position T, so T = N+1 means "predict the next
call". Candidate scores are proportional to the probability of the completed
sequence; shared prefix/suffix tables are computed once and combined per
candidate, so the ranking matches scoring every filled sequence separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hmm import UsageHmm, _forward_scaled
from .ngram import NgramModel, ngram_seq_prob
from .sequences import ObjectKey


@dataclass
class Recommendation:
    ranked: list[tuple[str, float]]  # (call, score), best first
    query_key: ObjectKey | None
    hole_position: int

    def methods(self) -> list[str]:
        return [m for m, _ in self.ranked]


def _ranked(scores: dict[str, float], key, hole) -> Recommendation:
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return Recommendation(ranked=ordered, query_key=key, hole_position=hole)


def _check_hole(partial, hole: int) -> None:
    if not 1 <= hole <= len(partial) + 1:
        raise ValueError(
            f"hole position {hole} outside 1..{len(partial) + 1}")


def next_api_call(model: UsageHmm, partial, hole: int | None = None
                  ) -> Recommendation:
    """Rank every vocabulary call as the filler for the hole.

    Per candidate v the score is sum_i alpha[i, T] * beta[i, T] of the
    completed sequence, i.e. proportional to its full generation probability;
    with an empty suffix the backward factor is one and the score reduces to
    the one-step-ahead predictive mass.
    """
    partial = list(partial)
    if hole is None:
        hole = len(partial) + 1
    _check_hole(partial, hole)
    if model.n_symbols == 0:
        raise ValueError("model has an empty vocabulary")

    prefix = partial[:hole - 1]
    suffix = partial[hole - 1:]

    if prefix:
        alpha, _ = _forward_scaled(model.pi, model.trans, model.emit,
                                   model.encode(prefix))
        incoming = alpha[-1] @ model.trans
    else:
        incoming = model.pi
    if suffix:
        obs = model.encode(suffix)
        # Row-normalized backward over the suffix: the normalizers are shared
        # by all candidates, so only the ranking-relevant part remains.
        k = model.n_states
        beta = np.ones(k)
        for t in range(len(obs) - 1, 0, -1):
            beta = model.trans @ (model.emit[:, obs[t]] * beta)
            norm = beta.sum()
            if norm > 0:
                beta /= norm
        outgoing = model.trans @ (model.emit[:, obs[0]] * beta)
    else:
        outgoing = np.ones(model.n_states)

    weights = incoming * outgoing
    scores = weights @ model.emit
    return _ranked({v: float(s) for v, s in zip(model.vocab, scores)},
                   model.key, hole)


def next_api_call_ngram(model: NgramModel, partial, hole: int | None = None
                        ) -> Recommendation:
    """Baseline ranking: substitute each call and score the full sequence."""
    partial = list(partial)
    if hole is None:
        hole = len(partial) + 1
    _check_hole(partial, hole)
    for symbol in partial:
        model._check_symbol(symbol)
    scores = {}
    for v in model.vocab:
        completed = partial[:hole - 1] + [v] + partial[hole - 1:]
        scores[v] = ngram_seq_prob(model, completed)
    return _ranked(scores, model.key, hole)


def top_k(rec: Recommendation, k: int) -> list[str]:
    """The first min(k, vocabulary size) ranked calls."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return rec.methods()[:k]
