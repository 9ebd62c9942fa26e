"""Standard LDA with a collapsed Gibbs sampler (comparison baseline)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .corpus import Corpus
from .mglda import _dirichlet_mult


@dataclass(frozen=True)
class LdaParams:
    k: int = 40
    alpha: float = 0.1
    beta: float = 0.01

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


class LdaState:
    def __init__(self, corpus: Corpus, params: LdaParams, z, seed=None, iteration=0):
        self.corpus = corpus
        self.params = params
        arr = corpus.arrays()
        self.z = np.array(z, dtype=np.int64).reshape(len(arr.words))
        if len(self.z) and (self.z.min() < 0 or self.z.max() >= params.k):
            raise ValueError("topic index out of range")
        W = corpus.vocab.size
        self.n_zw = np.zeros((params.k, W), np.int64)
        self.n_z = np.zeros(params.k, np.int64)
        self.n_dz = np.zeros((corpus.n_docs, params.k), np.int64)
        self.n_d = np.zeros(corpus.n_docs, np.int64)
        np.add.at(self.n_zw, (self.z, arr.words), 1)
        np.add.at(self.n_z, self.z, 1)
        np.add.at(self.n_dz, (arr.doc, self.z), 1)
        np.add.at(self.n_d, arr.doc, 1)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.iteration = iteration
        self._buf = np.empty(params.k, dtype=np.float64)

    @property
    def n_tokens(self) -> int:
        return len(self.z)

    @property
    def tables(self) -> dict[str, np.ndarray]:
        return {"n_zw": self.n_zw, "n_z": self.n_z, "n_dz": self.n_dz, "n_d": self.n_d}

    def token_index(self, d: int, i: int) -> int:
        arr = self.corpus.arrays()
        lo, hi = arr.doc_token_start[d], arr.doc_token_start[d + 1]
        if not 0 <= i < hi - lo:
            raise IndexError(f"token {i} out of range for document {d}")
        return int(lo + i)

    def count_args(self):
        return self.n_zw, self.n_z, self.n_dz, self.n_d

    def check_consistency(self) -> bool:
        fresh = LdaState(self.corpus, self.params, self.z)
        return all(np.array_equal(a, b) for a, b in zip(fresh.count_args(), self.count_args()))

    def copy(self) -> LdaState:
        new = LdaState.__new__(LdaState)
        new.__dict__.update(self.__dict__)
        new.z = self.z.copy()
        new.n_zw, new.n_z, new.n_dz, new.n_d = (a.copy() for a in self.count_args())
        new.rng = np.random.default_rng()
        new.rng.bit_generator.state = self.rng.bit_generator.state
        new._buf = self._buf.copy()
        return new


def lda_init(corpus: Corpus, params: LdaParams, seed: int | None = 0) -> LdaState:
    if corpus.n_docs == 0:
        raise ValueError("cannot initialize a sampler on an empty corpus")
    rng = np.random.default_rng(seed)
    state = LdaState(corpus, params, rng.integers(0, params.k, corpus.n_tokens), seed=seed)
    state.rng = rng
    return state


def lda_conditional(state: LdaState, d: int, i: int) -> np.ndarray:
    """p(z_i = k | rest) for token ``i`` of document ``d``, normalized."""
    g = state.token_index(d, i)
    w = state.corpus.arrays().words[g]
    z = state.z[g]
    n_zw, n_z, n_dz, n_d = state.count_args()
    n_zw[z, w] -= 1
    n_z[z] -= 1
    n_dz[d, z] -= 1
    n_d[d] -= 1
    try:
        out = np.empty(state.params.k)
        total = K.lda_weights(out, w, d, n_zw, n_z, n_dz, n_d, state.params.alpha, state.params.beta)
    finally:
        n_zw[z, w] += 1
        n_z[z] += 1
        n_dz[d, z] += 1
        n_d[d] += 1
    return out / total


def lda_sweep(state: LdaState) -> LdaState:
    arr = state.corpus.arrays()
    u = state.rng.random(state.n_tokens)
    K.lda_sweep(
        0, state.n_tokens, u, arr.words, arr.doc, state.z, *state.count_args(),
        state.params.alpha, state.params.beta, state._buf,
    )
    state.iteration += 1
    return state


def lda_run(state: LdaState, iterations: int, callback=None) -> LdaState:
    for _ in range(iterations):
        lda_sweep(state)
        if callback is not None:
            callback(state)
    return state


def lda_log_joint(state: LdaState) -> float:
    """log P(w, z) with topic-word and document-topic distributions integrated out."""
    p = state.params
    return _dirichlet_mult(state.n_zw, p.beta) + _dirichlet_mult(state.n_dz, p.alpha)


def lda_estimate(state: LdaState) -> tuple[np.ndarray, np.ndarray]:
    """(phi, theta): K x W topic-word and D x K document-topic tables."""
    p = state.params
    phi = state.n_zw + p.beta
    theta = state.n_dz + p.alpha
    return phi / phi.sum(axis=1, keepdims=True), theta / theta.sum(axis=1, keepdims=True)
