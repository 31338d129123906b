"""Independent oracles used by the tests: brute-force enumeration over hidden
state paths, simple-path counting on CFGs, and small utilities."""

import itertools

import numpy as np

from apiminer.cfg import Cfg
from apiminer.ir import Return


def brute_force_seq_prob(pi, trans, emit, obs) -> float:
    """P(sequence) by summing over every K^T hidden state path."""
    pi = np.asarray(pi, dtype=float)
    trans = np.asarray(trans, dtype=float)
    emit = np.asarray(emit, dtype=float)
    k, t = len(pi), len(obs)
    paths = np.array(list(itertools.product(range(k), repeat=t)), dtype=np.intp)
    probs = pi[paths[:, 0]] * emit[paths[:, 0], obs[0]]
    for step in range(1, t):
        probs = probs * trans[paths[:, step - 1], paths[:, step]]
        probs = probs * emit[paths[:, step], obs[step]]
    return float(probs.sum())


def brute_force_suffix_prob(trans, emit, obs, state: int) -> float:
    """P(suffix obs | starting state) by explicit recursion."""
    if not len(obs):
        return 1.0
    trans = np.asarray(trans, dtype=float)
    emit = np.asarray(emit, dtype=float)
    total = 0.0
    for j in range(trans.shape[0]):
        total += (trans[state, j] * emit[j, obs[0]]
                  * brute_force_suffix_prob(trans, emit, obs[1:], j))
    return total


def count_simple_paths(cfg: Cfg) -> int:
    """Entry-to-return paths that never repeat a node (loop-free CFGs only)."""

    def walk(node, visited):
        if node in visited:
            return 0
        if isinstance(cfg.instruction(node), Return):
            return 1
        visited = visited | {node}
        return sum(walk(s, visited) for s in cfg.successors[node])

    return walk(cfg.entry, frozenset())


def random_model_params(rng, k: int, m: int):
    def rows(r, c):
        mat = rng.random((r, c)) + 1e-3
        return mat / mat.sum(axis=1, keepdims=True)

    return rows(1, k)[0], rows(k, k), rows(k, m)


def min_permutation_row_tv(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Best-case (over state relabelings) worst-row total variation distance
    between estimated and true emission matrices."""
    k = truth.shape[0]
    best = float("inf")
    for perm in itertools.permutations(range(k)):
        worst = max(0.5 * np.abs(estimated[list(perm)][i] - truth[i]).sum()
                    for i in range(k))
        best = min(best, worst)
    return best
