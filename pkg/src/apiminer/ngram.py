"""N-gram baseline over the same per-key corpora.

Contexts are the previous n-1 calls, left-padded with a start marker;
additive smoothing spreads ``delta`` pseudo-counts over the vocabulary so
unseen continuations keep positive probability. An unseen context therefore
degrades to the uniform distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import OutOfVocabularyError, TrainingError
from .sequences import ObjectKey

START_MARKER = "<s>"
DEFAULT_DELTA = 0.1

Context = tuple[str, ...]


@dataclass
class NgramModel:
    key: ObjectKey | None
    vocab: list[str]
    n: int = 3
    delta: float = DEFAULT_DELTA
    context_counts: dict[Context, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("order must be >= 2")
        if self.delta <= 0:
            raise ValueError("smoothing delta must be positive")
        if START_MARKER in self.vocab:
            raise ValueError(f"vocabulary may not contain {START_MARKER!r}")
        self._vocab_set = set(self.vocab)

    def _check_symbol(self, symbol: str) -> None:
        if symbol not in self._vocab_set:
            raise OutOfVocabularyError(symbol)

    def normalize_context(self, context) -> Context:
        """Left-pad (or trim) to exactly n-1 symbols."""
        context = tuple(context)
        width = self.n - 1
        if len(context) >= width:
            return context[len(context) - width:]
        return (START_MARKER,) * (width - len(context)) + context

    def to_json_dict(self) -> dict:
        contexts = [{"context": list(ctx), "counts": dict(sorted(c.items()))}
                    for ctx, c in sorted(self.context_counts.items())]
        return {"format": "ngram",
                "types": list(self.key.types) if self.key else [],
                "n": self.n, "delta": self.delta, "vocab": list(self.vocab),
                "contexts": contexts}

    @classmethod
    def from_json_dict(cls, data: dict) -> "NgramModel":
        key = ObjectKey.of(data["types"]) if data.get("types") else None
        model = cls(key=key, vocab=list(data["vocab"]), n=int(data["n"]),
                    delta=float(data["delta"]))
        for entry in data["contexts"]:
            model.context_counts[tuple(entry["context"])] = {
                s: int(c) for s, c in entry["counts"].items()}
        return model


def train_ngram(pairs, n: int = 3, delta: float = DEFAULT_DELTA,
                vocab=None, key: ObjectKey | None = None) -> NgramModel:
    """Count all padded contexts of the counted sequences.

    ``pairs`` yields (sequence, count); a sequence with count c contributes
    exactly as c literal copies would.
    """
    pairs = list(pairs)
    if not pairs:
        raise TrainingError("empty n-gram training data")
    if vocab is None:
        vocab = sorted({c for seq, _ in pairs for c in seq})
    model = NgramModel(key=key, vocab=list(vocab), n=n, delta=delta)
    for seq, count in pairs:
        padded = (START_MARKER,) * (n - 1) + tuple(seq)
        for t, symbol in enumerate(seq):
            model._check_symbol(symbol)
            context = padded[t:t + n - 1]
            counts = model.context_counts.setdefault(context, {})
            counts[symbol] = counts.get(symbol, 0) + count
    return model


def ngram_prob(model: NgramModel, context, symbol: str) -> float:
    """Smoothed conditional probability of ``symbol`` after ``context``."""
    model._check_symbol(symbol)
    ctx = model.normalize_context(context)
    counts = model.context_counts.get(ctx, {})
    total = sum(counts.values())
    m = len(model.vocab)
    return (counts.get(symbol, 0) + model.delta) / (total + model.delta * m)


def ngram_seq_prob(model: NgramModel, seq) -> float:
    """Chain-rule log probability of a sequence with start padding."""
    seq = tuple(seq)
    if not seq:
        raise ValueError("sequence must be non-empty")
    padded = (START_MARKER,) * (model.n - 1) + seq
    total = 0.0
    for t, symbol in enumerate(seq):
        total += math.log(ngram_prob(model, padded[t:t + model.n - 1], symbol))
    return total


def save_ngram_json(model: NgramModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json_dict(), fh, indent=1)
        fh.write("\n")


def load_ngram_json(path) -> NgramModel:
    with open(path) as fh:
        return NgramModel.from_json_dict(json.load(fh))
