"""Multi-grain LDA with a collapsed Gibbs sampler.

Every document is covered by sliding windows of ``T`` adjacent sentences.
A document with ``S`` sentences has ``S + T - 1`` windows and sentence
``s`` is covered by windows ``s .. s + T - 1``; a token stores its window
as the offset ``o = v - s``.  Each token also carries a granularity
(global or local) and a topic within that granularity.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from . import _kernels as K
from .corpus import Corpus

GL = K.GL
LOC = K.LOC

TABLE_NAMES = (
    "n_gl_zw",
    "n_gl_z",
    "n_loc_zw",
    "n_loc_z",
    "n_sv",
    "n_s",
    "n_dv",
    "n_dv_gl",
    "n_dv_loc",
    "n_d_gl_z",
    "n_d_gl",
    "n_dv_loc_z",
)


@dataclass(frozen=True)
class Hyperparams:
    """Structural constants and Dirichlet/Beta priors.

    Local topic quality was reported to be insensitive to ``k_global`` as
    long as it is at least twice ``k_local``.
    """

    k_global: int = 30
    k_local: int = 10
    window: int = 3
    alpha_gl: float = 0.1
    alpha_loc: float = 0.1
    alpha_mix_gl: float = 1.0
    alpha_mix_loc: float = 1.0
    beta_gl: float = 0.01
    beta_loc: float = 0.01
    gamma: float = 0.1

    def __post_init__(self):
        for name in ("k_global", "k_local", "window"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("alpha_gl", "alpha_loc", "alpha_mix_gl", "alpha_mix_loc", "beta_gl", "beta_loc", "gamma"):
            if not float(getattr(self, name)) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.alpha_gl,
                self.alpha_loc,
                self.alpha_mix_gl,
                self.alpha_mix_loc,
                self.beta_gl,
                self.beta_loc,
                self.gamma,
            ],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        return asdict(self)


class MgldaState:
    """Token assignments plus the count tables derived from them.

    Build with :func:`init_state` or :meth:`from_assignments`.
    """

    def __init__(self, corpus: Corpus, hyper: Hyperparams, o, r, z, seed=None, iteration=0):
        self.corpus = corpus
        self.hyper = hyper
        arr = corpus.arrays()
        n = len(arr.words)
        T = hyper.window
        self.o = np.array(o, dtype=np.int64).reshape(n)
        self.r = np.array(r, dtype=np.int64).reshape(n)
        self.z = np.array(z, dtype=np.int64).reshape(n)
        if n:
            if self.o.min() < 0 or self.o.max() >= T:
                raise ValueError("window offset out of range")
            if not np.isin(self.r, (GL, LOC)).all():
                raise ValueError("granularity must be 0 (global) or 1 (local)")
            limit = np.where(self.r == GL, hyper.k_global, hyper.k_local)
            if (self.z < 0).any() or (self.z >= limit).any():
                raise ValueError("topic index out of range for its granularity")

        n_sent_doc = np.diff(arr.doc_sent_start)
        n_win_doc = n_sent_doc + T - 1
        self.doc_window_start = np.concatenate([[0], np.cumsum(n_win_doc)]).astype(np.int64)
        # window index for offset 0: document base plus sentence-in-doc
        self.tok_win0 = self.doc_window_start[arr.doc] + arr.sent_in_doc
        self.n_windows = int(self.doc_window_start[-1])

        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.iteration = iteration
        self.counts = self._zero_tables()
        K.mg_add_all(arr.words, arr.doc, arr.sent, self.tok_win0, self.o, self.r, self.z, self.counts)
        self._hyper_arr = hyper.as_array()
        self._buf = np.empty((T, hyper.k_global + hyper.k_local), dtype=np.float64)

    @classmethod
    def from_assignments(cls, corpus, hyper, o, r, z, seed=None, iteration=0) -> MgldaState:
        return cls(corpus, hyper, o, r, z, seed=seed, iteration=iteration)

    def _zero_tables(self):
        h = self.hyper
        W = self.corpus.vocab.size
        n_sent = self.corpus.n_sentences
        D = self.corpus.n_docs
        Nv = self.n_windows
        i64 = np.int64
        return (
            np.zeros((h.k_global, W), i64),
            np.zeros(h.k_global, i64),
            np.zeros((h.k_local, W), i64),
            np.zeros(h.k_local, i64),
            np.zeros((n_sent, h.window), i64),
            np.zeros(n_sent, i64),
            np.zeros(Nv, i64),
            np.zeros(Nv, i64),
            np.zeros(Nv, i64),
            np.zeros((D, h.k_global), i64),
            np.zeros(D, i64),
            np.zeros((Nv, h.k_local), i64),
        )

    @property
    def tables(self) -> dict[str, np.ndarray]:
        return dict(zip(TABLE_NAMES, self.counts))

    @property
    def n_tokens(self) -> int:
        return len(self.z)

    def token_index(self, d: int, i: int) -> int:
        arr = self.corpus.arrays()
        lo, hi = arr.doc_token_start[d], arr.doc_token_start[d + 1]
        if not 0 <= i < hi - lo:
            raise IndexError(f"token {i} out of range for document {d}")
        return int(lo + i)

    def kernel_args(self):
        arr = self.corpus.arrays()
        return arr.words, arr.doc, arr.sent, self.tok_win0, self.o, self.r, self.z, self.counts

    def recount(self) -> dict[str, np.ndarray]:
        return recount_tables(self)

    def check_consistency(self) -> bool:
        """True when every incremental table equals a brute recount."""
        fresh = self.recount()
        return all(np.array_equal(fresh[k], v) for k, v in self.tables.items())

    def copy(self) -> MgldaState:
        new = MgldaState.__new__(MgldaState)
        new.__dict__.update(self.__dict__)
        new.o, new.r, new.z = self.o.copy(), self.r.copy(), self.z.copy()
        new.counts = tuple(c.copy() for c in self.counts)
        new.rng = np.random.default_rng()
        new.rng.bit_generator.state = self.rng.bit_generator.state
        new._buf = self._buf.copy()
        return new


def recount_tables(state: MgldaState) -> dict[str, np.ndarray]:
    """Rebuild all count tables from the assignment arrays with numpy."""
    h = state.hyper
    arr = state.corpus.arrays()
    W = state.corpus.vocab.size
    n_sent = state.corpus.n_sentences
    D = state.corpus.n_docs
    Nv = state.n_windows
    gl = state.r == GL
    loc = ~gl
    v = state.tok_win0 + state.o

    def bincount2(rows, cols, shape, mask):
        out = np.zeros(shape, dtype=np.int64)
        np.add.at(out, (rows[mask], cols[mask]), 1)
        return out

    def bincount1(idx, size, mask):
        return np.bincount(idx[mask], minlength=size).astype(np.int64)

    everything = np.ones(len(v), dtype=bool)
    return {
        "n_gl_zw": bincount2(state.z, arr.words, (h.k_global, W), gl),
        "n_gl_z": bincount1(state.z, h.k_global, gl),
        "n_loc_zw": bincount2(state.z, arr.words, (h.k_local, W), loc),
        "n_loc_z": bincount1(state.z, h.k_local, loc),
        "n_sv": bincount2(arr.sent, state.o, (n_sent, h.window), everything),
        "n_s": bincount1(arr.sent, n_sent, everything),
        "n_dv": bincount1(v, Nv, everything),
        "n_dv_gl": bincount1(v, Nv, gl),
        "n_dv_loc": bincount1(v, Nv, loc),
        "n_d_gl_z": bincount2(arr.doc, state.z, (D, h.k_global), gl),
        "n_d_gl": bincount1(arr.doc, D, gl),
        "n_dv_loc_z": bincount2(v, state.z, (Nv, h.k_local), loc),
    }


def init_state(corpus: Corpus, hyper: Hyperparams, seed: int | None = 0) -> MgldaState:
    """Random initial assignment: uniform window offset, granularity and topic."""
    if corpus.n_docs == 0:
        raise ValueError("cannot initialize a sampler on an empty corpus")
    rng = np.random.default_rng(seed)
    n = corpus.n_tokens
    o = rng.integers(0, hyper.window, n)
    r = rng.integers(0, 2, n)
    z = np.where(
        r == GL,
        rng.integers(0, hyper.k_global, n),
        rng.integers(0, hyper.k_local, n),
    )
    state = MgldaState(corpus, hyper, o, r, z, seed=seed)
    state.rng = rng
    return state


def conditional(state: MgldaState, d: int, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized conditional for token ``i`` of document ``d``.

    Returns ``(glob, loc)`` with shapes ``(T, K_gl)`` and ``(T, K_loc)``;
    row ``o`` is window ``s + o``.  Together they sum to one.  The token's
    own assignment is excluded from the counts while evaluating and the
    state is left unchanged.
    """
    g = state.token_index(d, i)
    args = state.kernel_args()
    words, tok_doc, tok_sent, tok_win0 = args[:4]
    buf = np.empty_like(state._buf)
    K.mg_update(g, -1, *args)
    try:
        total = K.mg_weights(
            buf, words[g], tok_doc[g], tok_sent[g], tok_win0[g], state.counts, state._hyper_arr,
            state.corpus.vocab.size,
        )
    finally:
        K.mg_update(g, 1, *args)
    buf /= total
    kg = state.hyper.k_global
    return buf[:, :kg].copy(), buf[:, kg:].copy()


def gibbs_sweep(state: MgldaState) -> MgldaState:
    """Resample every token once, in corpus order."""
    u = state.rng.random(state.n_tokens)
    K.mg_sweep(
        0, state.n_tokens, u, *state.kernel_args(), state._hyper_arr, state.corpus.vocab.size, state._buf
    )
    state.iteration += 1
    return state


def run(state: MgldaState, iterations: int, callback=None) -> MgldaState:
    for _ in range(iterations):
        gibbs_sweep(state)
        if callback is not None:
            callback(state)
    return state


def _dirichlet_mult(counts: np.ndarray, prior: float, axis=-1) -> float:
    """log of the collapsed Dirichlet-multinomial term, summed over groups.

    ``counts`` has the category axis last; every other index is a group.
    """
    counts = np.asarray(counts, dtype=np.float64)
    k = counts.shape[axis]
    n_groups = counts.size // k if k else 0
    norm = n_groups * (gammaln(k * prior) - k * gammaln(prior))
    return float(
        norm + gammaln(counts + prior).sum() - gammaln(counts.sum(axis=axis) + k * prior).sum()
    )


def _beta_mult(counts_a, counts_b, a: float, b: float) -> float:
    ca = np.asarray(counts_a, dtype=np.float64)
    cb = np.asarray(counts_b, dtype=np.float64)
    norm = ca.size * (gammaln(a + b) - gammaln(a) - gammaln(b))
    return float(norm + (gammaln(ca + a) + gammaln(cb + b) - gammaln(ca + cb + a + b)).sum())


def log_joint(state: MgldaState) -> float:
    """log P(w, v, r, z) with all multinomial parameters integrated out."""
    h = state.hyper
    t = state.tables
    words = _dirichlet_mult(t["n_gl_zw"], h.beta_gl) + _dirichlet_mult(t["n_loc_zw"], h.beta_loc)
    windows = _dirichlet_mult(t["n_sv"], h.gamma)
    granularity = _beta_mult(t["n_dv_gl"], t["n_dv_loc"], h.alpha_mix_gl, h.alpha_mix_loc)
    topics = _dirichlet_mult(t["n_d_gl_z"], h.alpha_gl) + _dirichlet_mult(t["n_dv_loc_z"], h.alpha_loc)
    return words + windows + granularity + topics


class TopicModel(NamedTuple):
    phi_gl: np.ndarray
    phi_loc: np.ndarray
    tables: dict


def estimate_phi(state: MgldaState) -> TopicModel:
    h = state.hyper
    t = state.tables
    gl = t["n_gl_zw"] + h.beta_gl
    loc = t["n_loc_zw"] + h.beta_loc
    return TopicModel(
        gl / gl.sum(axis=1, keepdims=True),
        loc / loc.sum(axis=1, keepdims=True),
        {k: v.copy() for k, v in t.items()},
    )


class SentenceTopics(NamedTuple):
    glob: np.ndarray
    loc: np.ndarray
    mix: np.ndarray  # [global mass, local mass]


def estimate_theta_sentence(state: MgldaState, d: int, s: int) -> SentenceTopics:
    """Window-marginalized topic distribution of sentence ``s`` in document ``d``.

    The global and local parts are each normalized within their
    granularity; ``mix`` holds the mass of each granularity.
    """
    if not 0 <= d < state.corpus.n_docs:
        raise IndexError(f"document {d} out of range")
    arr = state.corpus.arrays()
    n_sent = arr.doc_sent_start[d + 1] - arr.doc_sent_start[d]
    if not 0 <= s < n_sent:
        raise IndexError(f"sentence {s} out of range for document {d}")
    h = state.hyper
    t = state.tables
    sg = arr.doc_sent_start[d] + s
    T = h.window
    v = state.doc_window_start[d] + s + np.arange(T)

    f_win = (t["n_sv"][sg] + h.gamma) / (t["n_s"][sg] + T * h.gamma)
    mix_den = t["n_dv"][v] + h.alpha_mix_gl + h.alpha_mix_loc
    f_gl = (t["n_dv_gl"][v] + h.alpha_mix_gl) / mix_den
    f_loc = (t["n_dv_loc"][v] + h.alpha_mix_loc) / mix_den
    topic_gl = (t["n_d_gl_z"][d] + h.alpha_gl) / (t["n_d_gl"][d] + h.k_global * h.alpha_gl)
    topic_loc = (t["n_dv_loc_z"][v] + h.alpha_loc) / (
        t["n_dv_loc"][v] + h.k_local * h.alpha_loc
    )[:, None]

    theta_gl = (f_win * f_gl).sum() * topic_gl
    theta_loc = ((f_win * f_loc)[:, None] * topic_loc).sum(axis=0)
    mix = np.array([theta_gl.sum(), theta_loc.sum()])
    return SentenceTopics(theta_gl / mix[0], theta_loc / mix[1], mix)
