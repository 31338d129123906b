"""Hidden-state models of API usage: scaled forward/backward, count-weighted
EM training, likelihood scoring, sampling, and state-count selection.

A model over a call vocabulary of size M with K hidden states has an initial
state distribution ``pi`` (K), a state transition matrix ``trans`` (K x K),
and per-state calling distributions ``emit`` (K x M). Sequences are generated
by sampling a start state from ``pi``, emitting a call from the state's row
of ``emit``, and moving to the next state via ``trans``.

All recurrences use per-step scaling so long sequences do not underflow:
``alpha[t]`` rows are normalized to sum to one and the normalizers are kept
in ``scale``; the log-likelihood is the sum of their logs. The scaled
``beta[t]`` rows divide by ``scale[t+1]`` each step, which keeps
``sum_i alpha[t, i] * beta[t, i] == 1`` for every t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfVocabularyError, TrainingError
from .seeding import derive_seed
from .sequences import ObjectKey

PROB_FLOOR = 1e-12
DEFAULT_K_RANGE = range(1, 17)


@dataclass
class TrainMeta:
    seed: int
    iters: int
    loglik: float
    history: list[float] = field(default_factory=list, repr=False)


@dataclass
class UsageHmm:
    key: ObjectKey | None
    vocab: list[str]
    pi: np.ndarray  # (K,)
    trans: np.ndarray  # (K, K)
    emit: np.ndarray  # (K, M)
    meta: TrainMeta | None = None

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.trans = np.asarray(self.trans, dtype=float)
        self.emit = np.asarray(self.emit, dtype=float)
        self._index = {v: i for i, v in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("vocabulary contains duplicates")

    @property
    def n_states(self) -> int:
        return len(self.pi)

    @property
    def n_symbols(self) -> int:
        return len(self.vocab)

    def validate(self, tol: float = 1e-9) -> None:
        if self.n_states < 1 or self.n_symbols < 1:
            raise ValueError("model needs at least one state and one symbol")
        for name, arr in (("pi", self.pi[None, :]), ("trans", self.trans),
                          ("emit", self.emit)):
            if (arr < 0).any():
                raise ValueError(f"{name} has negative entries")
            if np.abs(arr.sum(axis=1) - 1.0).max() > tol:
                raise ValueError(f"{name} rows do not sum to 1")

    def encode(self, seq) -> np.ndarray:
        try:
            return np.array([self._index[s] for s in seq], dtype=np.intp)
        except KeyError as exc:
            raise OutOfVocabularyError(str(exc.args[0])) from exc

    def to_json_dict(self) -> dict:
        meta = self.meta or TrainMeta(seed=0, iters=0, loglik=float("nan"))
        return {
            "types": list(self.key.types) if self.key else [],
            "k": self.n_states,
            "vocab": list(self.vocab),
            "pi": self.pi.tolist(),
            "a": self.trans.tolist(),
            "b": self.emit.tolist(),
            "train_meta": {"seed": meta.seed, "iters": meta.iters,
                           "loglik": meta.loglik},
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "UsageHmm":
        meta = data.get("train_meta", {})
        key = ObjectKey.of(data["types"]) if data.get("types") else None
        model = cls(key=key, vocab=list(data["vocab"]),
                    pi=np.array(data["pi"]), trans=np.array(data["a"]),
                    emit=np.array(data["b"]),
                    meta=TrainMeta(seed=meta.get("seed", 0),
                                   iters=meta.get("iters", 0),
                                   loglik=meta.get("loglik", float("nan"))))
        model.validate()
        return model


@dataclass
class TrainSet:
    """Counted training sequences encoded over a shared vocabulary."""

    vocab: list[str]
    items: list[tuple[tuple[int, ...], int]]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.items)

    @classmethod
    def from_sequences(cls, pairs, vocab=None) -> "TrainSet":
        """Build from (sequence of call strings, count) pairs."""
        pairs = list(pairs)
        if vocab is None:
            vocab = sorted({c for seq, _ in pairs for c in seq})
        index = {v: i for i, v in enumerate(vocab)}
        items = []
        for seq, count in pairs:
            try:
                items.append((tuple(index[c] for c in seq), int(count)))
            except KeyError as exc:
                raise OutOfVocabularyError(str(exc.args[0])) from exc
        return cls(vocab=list(vocab), items=items)


@dataclass
class FbTables:
    alpha: np.ndarray  # (T, K), rows sum to 1
    beta: np.ndarray  # (T, K), scaled
    scale: np.ndarray  # (T,)
    loglik: float


@dataclass
class PosteriorStats:
    gamma: np.ndarray  # (T, K)
    xi: np.ndarray  # (T-1, K, K)


def _forward_scaled(pi, trans, emit, obs):
    T, K = len(obs), len(pi)
    alpha = np.zeros((T, K))
    scale = np.zeros(T)
    vec = pi * emit[:, obs[0]]
    for t in range(T):
        if t > 0:
            vec = emit[:, obs[t]] * (alpha[t - 1] @ trans)
        s = vec.sum()
        scale[t] = s
        if s == 0.0:  # impossible sequence under hard-zero parameters
            return alpha, scale
        alpha[t] = vec / s
    return alpha, scale


def _backward_scaled(trans, emit, obs, scale):
    T, K = len(obs), trans.shape[0]
    beta = np.zeros((T, K))
    beta[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        if scale[t + 1] == 0.0:
            return beta
        beta[t] = (trans @ (emit[:, obs[t + 1]] * beta[t + 1])) / scale[t + 1]
    return beta


def forward(model: UsageHmm, seq, upto: int | None = None):
    """Scaled forward pass over the first ``upto`` positions (default: all).

    Returns ``(alpha, scale)``; the unscaled probability of the prefix is the
    product of the scale factors.
    """
    obs = model.encode(seq)
    if upto is None:
        upto = len(obs)
    if not 1 <= upto <= len(obs):
        raise ValueError(f"upto={upto} outside 1..{len(obs)}")
    return _forward_scaled(model.pi, model.trans, model.emit, obs[:upto])


def backward(model: UsageHmm, seq, from_pos: int = 1,
             scale: np.ndarray | None = None) -> np.ndarray:
    """Backward values for positions ``from_pos``..T (1-based).

    Unscaled by default (the final row is all ones); pass the forward
    ``scale`` array for the jointly scaled convention.
    """
    obs = model.encode(seq)
    T = len(obs)
    if not 1 <= from_pos <= T:
        raise ValueError(f"from_pos={from_pos} outside 1..{T}")
    if scale is None:
        scale = np.ones(T)
    beta = _backward_scaled(model.trans, model.emit, obs, scale)
    return beta[from_pos - 1:]


def forward_backward(model: UsageHmm, seq) -> FbTables:
    obs = model.encode(seq)
    alpha, scale = _forward_scaled(model.pi, model.trans, model.emit, obs)
    beta = _backward_scaled(model.trans, model.emit, obs, scale)
    loglik = float(np.sum(np.log(scale))) if scale.min() > 0 else float("-inf")
    return FbTables(alpha=alpha, beta=beta, scale=scale, loglik=loglik)


def sequence_loglik(model: UsageHmm, seq) -> float:
    """Log probability of generating ``seq``; raises for unknown calls."""
    if len(seq) == 0:
        raise ValueError("sequence must be non-empty")
    obs = model.encode(seq)
    _, scale = _forward_scaled(model.pi, model.trans, model.emit, obs)
    if scale.min() <= 0.0:
        return float("-inf")
    return float(np.sum(np.log(scale)))


def posterior_stats(model: UsageHmm, seq) -> PosteriorStats:
    """Per-position state and transition posteriors from one joint pass."""
    obs = model.encode(seq)
    tables = forward_backward(model, seq)
    gamma = tables.alpha * tables.beta
    T, K = gamma.shape
    xi = np.zeros((T - 1, K, K))
    for t in range(T - 1):
        if tables.scale[t + 1] == 0.0:
            continue
        weighted = model.emit[:, obs[t + 1]] * tables.beta[t + 1]
        xi[t] = (tables.alpha[t][:, None] * model.trans * weighted[None, :]
                 / tables.scale[t + 1])
    return PosteriorStats(gamma=gamma, xi=xi)


def _floor_rows(mat: np.ndarray) -> np.ndarray:
    mat = np.maximum(mat, PROB_FLOOR)
    return mat / mat.sum(axis=1, keepdims=True)


def _random_stochastic(rng, rows: int, cols: int) -> np.ndarray:
    mat = rng.random((rows, cols))
    return _floor_rows(mat)


def _group_by_length(trainset: TrainSet):
    """Stack equal-length sequences so the E-step runs one batched pass per
    length: (observation matrix (N, T), weights (N,)) per group."""
    buckets: dict[int, list[tuple[tuple[int, ...], int]]] = {}
    for seq, count in trainset.items:
        buckets.setdefault(len(seq), []).append((seq, count))
    groups = []
    for length in sorted(buckets):
        obs = np.array([seq for seq, _ in buckets[length]], dtype=np.intp)
        weights = np.array([c for _, c in buckets[length]], dtype=float)
        groups.append((obs, weights))
    return groups


def _batched_estep(pi, trans, emit, obs, weights):
    """Forward/backward statistics for one equal-length batch.

    Returns (pi_num, a_num_raw, a_den, b_num, b_den, loglik); a_num_raw still
    needs the elementwise multiply by the current transition matrix.
    """
    n, t = obs.shape
    k = len(pi)
    alpha = np.empty((n, t, k))
    scale = np.empty((n, t))
    vec = pi[None, :] * emit[:, obs[:, 0]].T
    for step in range(t):
        if step > 0:
            vec = emit[:, obs[:, step]].T * (alpha[:, step - 1] @ trans)
        s = np.maximum(vec.sum(axis=1), 1e-300)
        scale[:, step] = s
        alpha[:, step] = vec / s[:, None]
    beta = np.empty((n, t, k))
    beta[:, t - 1] = 1.0
    for step in range(t - 2, -1, -1):
        weighted = emit[:, obs[:, step + 1]].T * beta[:, step + 1]
        beta[:, step] = (weighted @ trans.T) / scale[:, step + 1][:, None]
    gamma = alpha * beta
    wgamma = gamma * weights[:, None, None]
    ll = float(np.log(scale).sum(axis=1) @ weights)
    pi_num = wgamma[:, 0].sum(axis=0)
    if t > 1:
        a_den = wgamma[:, :-1].sum(axis=(0, 1))
        forward_part = (alpha[:, :-1] * weights[:, None, None]).reshape(-1, k)
        backward_part = ((emit[:, obs[:, 1:]].transpose(1, 2, 0)
                          * beta[:, 1:]) / scale[:, 1:, None]).reshape(-1, k)
        a_num_raw = forward_part.T @ backward_part
    else:
        a_den = np.zeros(k)
        a_num_raw = np.zeros((k, k))
    m = emit.shape[1]
    b_num = np.zeros((k, m))
    np.add.at(b_num.T, obs.reshape(-1), wgamma.reshape(-1, k))
    b_den = wgamma.sum(axis=(0, 1))
    return pi_num, a_num_raw, a_den, b_num, b_den, ll


def _train_once(trainset: TrainSet, k: int, seed: int, tol: float,
                max_iter: int, init_params) -> UsageHmm:
    m = len(trainset.vocab)
    if init_params is not None:
        pi = np.array(init_params[0], dtype=float)
        trans = np.array(init_params[1], dtype=float)
        emit = np.array(init_params[2], dtype=float)
    else:
        rng = np.random.default_rng(seed)
        pi = _random_stochastic(rng, 1, k)[0]
        trans = _random_stochastic(rng, k, k)
        emit = _random_stochastic(rng, k, m)

    groups = _group_by_length(trainset)
    total_count = float(trainset.total)
    history: list[float] = []
    iters = 0
    prev_ll = None
    for _ in range(max_iter):
        pi_num = np.zeros(k)
        a_num_raw = np.zeros((k, k))
        a_den = np.zeros(k)
        b_num = np.zeros((k, m))
        b_den = np.zeros(k)
        ll = 0.0
        for obs, weights in groups:
            stats = _batched_estep(pi, trans, emit, obs, weights)
            pi_num += stats[0]
            a_num_raw += stats[1]
            a_den += stats[2]
            b_num += stats[3]
            b_den += stats[4]
            ll += stats[5]
        history.append(ll)
        iters += 1
        if prev_ll is not None:
            denom = abs(prev_ll) if prev_ll != 0.0 else 1.0
            if (ll - prev_ll) / denom < tol:
                break
        prev_ll = ll

        pi = _floor_rows((pi_num / total_count)[None, :])[0]
        a_num = trans * a_num_raw
        a_rows = a_den > PROB_FLOOR
        new_trans = trans.copy()
        new_trans[a_rows] = a_num[a_rows] / a_den[a_rows, None]
        trans = _floor_rows(new_trans)
        b_rows = b_den > PROB_FLOOR
        new_emit = emit.copy()
        new_emit[b_rows] = b_num[b_rows] / b_den[b_rows, None]
        emit = _floor_rows(new_emit)

    model = UsageHmm(key=None, vocab=list(trainset.vocab), pi=pi, trans=trans,
                     emit=emit,
                     meta=TrainMeta(seed=seed, iters=iters,
                                    loglik=history[-1], history=history))
    model.validate()
    return model


def train(trainset: TrainSet, k: int, seed: int, tol: float = 1e-6,
          max_iter: int = 200,
          init_params: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
          restarts: int = 1) -> UsageHmm:
    """Count-weighted EM estimation of a K-state model.

    Each distinct sequence contributes its statistics multiplied by its
    occurrence count, which is equivalent to training on that many literal
    copies. Iteration stops when the relative improvement of the total
    weighted log-likelihood drops below ``tol`` or after ``max_iter`` rounds.

    ``init_params`` overrides the seeded random initialization (used for
    reproducibility experiments). With ``restarts`` > 1, EM runs from that
    many seeded initializations and the fit with the best final training
    log-likelihood wins; this guards against the symmetric local optimum
    where states collapse onto the marginal call distribution.
    """
    if k < 1:
        raise TrainingError("number of hidden states must be >= 1")
    if not trainset.items:
        raise TrainingError("empty training set")
    if len(trainset.vocab) < 1:
        raise TrainingError("empty vocabulary")
    if all(len(seq) <= 1 for seq, _ in trainset.items):
        raise TrainingError(
            "all sequences have length 1; transitions cannot be estimated")
    if init_params is not None or restarts <= 1:
        return _train_once(trainset, k, seed, tol, max_iter, init_params)
    best: UsageHmm | None = None
    for attempt in range(restarts):
        sub_seed = seed if attempt == 0 else derive_seed(seed, "restart",
                                                         str(attempt))
        model = _train_once(trainset, k, sub_seed, tol, max_iter, None)
        if best is None or model.meta.loglik > best.meta.loglik:
            best = model
    return best


def total_loglik(model: UsageHmm, dataset: TrainSet) -> float:
    """Count-weighted log-likelihood of a dataset under the model."""
    total = 0.0
    for seq, count in dataset.items:
        total += count * sequence_loglik(model, [dataset.vocab[i] for i in seq])
    return total


def select_k(trainset: TrainSet, validation: TrainSet,
             k_range=DEFAULT_K_RANGE, seed: int = 0,
             tol: float = 1e-6, max_iter: int = 200,
             restarts: int = 1) -> tuple[int, UsageHmm]:
    """Train one model per candidate state count and keep the one with the
    highest validation log-likelihood; ties go to the smaller count."""
    if not validation.items:
        raise TrainingError("empty validation set")
    if validation.vocab != trainset.vocab:
        raise TrainingError("train and validation vocabularies differ")
    best: tuple[int, UsageHmm, float] | None = None
    errors: list[str] = []
    for k in sorted(k_range):
        try:
            model = train(trainset, k, derive_seed(seed, "init", str(k)),
                          tol=tol, max_iter=max_iter, restarts=restarts)
        except TrainingError as exc:
            errors.append(f"K={k}: {exc}")
            continue
        val_ll = total_loglik(model, validation)
        if best is None or val_ll > best[2]:
            best = (k, model, val_ll)
    if best is None:
        raise TrainingError("training failed for every K: " + "; ".join(errors))
    return best[0], best[1]


def sample(model: UsageHmm, length: int, rng: np.random.Generator) -> list[str]:
    """Draw one sequence of the given length from the generative process."""
    if length < 1:
        raise ValueError("length must be >= 1")
    out = []
    state = rng.choice(model.n_states, p=model.pi)
    for t in range(length):
        symbol = rng.choice(model.n_symbols, p=model.emit[state])
        out.append(model.vocab[symbol])
        if t < length - 1:
            state = rng.choice(model.n_states, p=model.trans[state])
    return out


def model_to_dot(model: UsageHmm, threshold: float = 0.01,
                 title: str = "model") -> str:
    """DOT rendering of the state graph; probabilities below ``threshold``
    are hidden and the rest rounded for display."""
    lines = [f'digraph "{title}" {{', "  rankdir=LR;",
             '  start [shape=point, label=""];']
    for i in range(model.n_states):
        calls = [f"{model.vocab[mi]}: {model.emit[i, mi]:.2f}"
                 for mi in np.argsort(-model.emit[i])
                 if model.emit[i, mi] >= threshold]
        label = f"q{i + 1}\\n" + "\\n".join(calls)
        lines.append(f'  s{i} [shape=ellipse, label="{label}"];')
    for i in range(model.n_states):
        if model.pi[i] >= threshold:
            lines.append(f'  start -> s{i} [label="{model.pi[i]:.2f}"];')
        for j in range(model.n_states):
            if model.trans[i, j] >= threshold:
                lines.append(
                    f'  s{i} -> s{j} [label="{model.trans[i, j]:.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
