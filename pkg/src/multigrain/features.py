"""Sentence topic profiles, probability buckets and sparse ranker features."""

from __future__ import annotations

import bisect
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels as K
from .lda import LdaState
from .mglda import MgldaState


def _doc_bounds(state, d):
    arr = state.corpus.arrays()
    if not 0 <= d < state.corpus.n_docs:
        raise IndexError(f"document {d} out of range (corpus has {state.corpus.n_docs})")
    lo, hi = int(arr.doc_token_start[d]), int(arr.doc_token_start[d + 1])
    s0, s1 = int(arr.doc_sent_start[d]), int(arr.doc_sent_start[d + 1])
    lengths = np.diff(arr.sent_token_start[s0 : s1 + 1])
    return lo, hi, s0, lengths


def n_profile_topics(state) -> int:
    if isinstance(state, MgldaState):
        return state.hyper.k_local
    return state.params.k


def resample_doc(state: MgldaState | LdaState, d: int, samples: int = 100, seed: int = 0,
                 return_samples: bool = False):
    """Average per-sentence topic proportions of document ``d``.

    Only the tokens of ``d`` are resampled; every other assignment stays
    fixed.  After each of ``samples`` sweeps over the document, the share of
    each sentence's words assigned to each topic is recorded; the result is
    the mean over sweeps, shape ``(n_sentences, n_topics)``.  For MG-LDA
    only local topics are reported.  The state is restored afterwards.

    With ``return_samples=True`` the per-sweep proportions are returned as
    well, shape ``(samples, n_sentences, n_topics)``.
    """
    lo, hi, s0, lengths = _doc_bounds(state, d)
    n_topics = n_profile_topics(state)
    rng = np.random.default_rng([seed, d])
    u = rng.random((samples, hi - lo))
    arr = state.corpus.arrays()
    per_sample = []

    if isinstance(state, MgldaState):
        saved = state.o[lo:hi].copy(), state.r[lo:hi].copy(), state.z[lo:hi].copy()
        args = state.kernel_args()

        def sweep(u_block, acc):
            K.mg_resample(lo, hi, u_block, s0, *args, state._hyper_arr, state.corpus.vocab.size,
                          state._buf, acc)

        def restore():
            K.mg_reassign(lo, hi, *saved, *args)
    else:
        saved = state.z[lo:hi].copy()
        counts = state.count_args()

        def sweep(u_block, acc):
            K.lda_resample(lo, hi, u_block, s0, arr.words, arr.doc, arr.sent, state.z, *counts,
                           state.params.alpha, state.params.beta, state._buf, acc)

        def restore():
            K.lda_reassign(lo, hi, saved, arr.words, arr.doc, state.z, *counts)

    acc = np.zeros((len(lengths), n_topics))
    try:
        if return_samples:
            for t in range(samples):
                one = np.zeros_like(acc)
                sweep(u[t : t + 1], one)
                per_sample.append(one)
                acc += one
        elif hi > lo:
            sweep(u, acc)
    finally:
        restore()

    denom = np.where(lengths > 0, lengths, 1)[:, None]
    profile = acc / max(samples, 1) / denom
    if return_samples:
        return profile, np.array(per_sample).reshape(samples, *acc.shape) / denom
    return profile


def corpus_profiles(state, samples: int = 100, seed: int = 0) -> list[np.ndarray]:
    return [resample_doc(state, d, samples, seed) for d in range(state.corpus.n_docs)]


@dataclass(frozen=True)
class Bucketizer:
    """Maps a probability to one of ``len(thresholds) + 1`` buckets.

    Bucket ``j`` holds ``thresholds[j-1] < p <= thresholds[j]``; a value
    equal to a threshold goes to the lower bucket.
    """

    thresholds: tuple[float, ...]

    def __call__(self, p: float) -> int:
        return bisect.bisect_left(self.thresholds, p)

    @property
    def n_buckets(self) -> int:
        return len(self.thresholds) + 1


def bucketize(profiles: Iterable[np.ndarray], buckets: int = 5) -> Bucketizer:
    """Equal-frequency thresholds over the nonzero probabilities in ``profiles``."""
    values = np.concatenate([np.asarray(p, dtype=float).ravel() for p in profiles] or [np.empty(0)])
    values = values[values > 0]
    if values.size == 0:
        raise ValueError("no nonzero topic probabilities to bucket")
    qs = np.arange(1, buckets) / buckets
    return Bucketizer(tuple(float(t) for t in np.quantile(values, qs)))


@dataclass(frozen=True)
class NgramVocab:
    """Which n-grams become base features.

    Unigrams always; bigrams when ``order >= 2``; trigrams when
    ``order >= 3`` and listed in ``trigrams``.
    """

    order: int = 1
    trigrams: frozenset = frozenset()


def _ngrams(tokens: Sequence[str], n: int):
    return (" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def build_ngram_vocab(documents: Iterable[Sequence[Sequence[str]]], order: int = 3,
                      min_df: int = 5) -> NgramVocab:
    """Trigrams kept are those occurring in at least ``min_df`` documents."""
    if order < 3:
        return NgramVocab(order)
    df: Counter = Counter()
    for doc in documents:
        df.update({g for sent in doc for g in _ngrams(sent, 3)})
    return NgramVocab(order, frozenset(g for g, c in df.items() if c >= min_df))


def ngram_features(document: Sequence[Sequence[str]], vocab: NgramVocab) -> dict[str, int]:
    feats: dict[str, int] = {}
    for sent in document:
        for t in sent:
            feats[t] = 1
        if vocab.order >= 2:
            for g in _ngrams(sent, 2):
                feats[g] = 1
        if vocab.order >= 3:
            for g in _ngrams(sent, 3):
                if g in vocab.trigrams:
                    feats[g] = 1
    return feats


def make_features(
    document: Sequence[Sequence[str]],
    profiles: np.ndarray | None,
    bucket: Bucketizer | None,
    top_k: int = 3,
    ngrams: NgramVocab = NgramVocab(),
    model: str = "mg",
) -> dict[str, int]:
    """Binary features for one document given as token lists per sentence.

    For each sentence the ``top_k`` topics with nonzero probability are
    conjoined with every token of the sentence, e.g. ``great&mg&t3&b2``.
    """
    feats = ngram_features(document, ngrams)
    if profiles is None:
        return feats
    for sent, probs in zip(document, profiles):
        if not sent:
            continue
        order = np.argsort(-probs, kind="stable")[:top_k]
        for z in order:
            p = probs[z]
            if p <= 0:
                break
            tag = f"&{model}&t{z}&b{bucket(p)}"
            for tok in sent:
                feats[tok + tag] = 1
    return feats


def decoded_document(corpus, d: int) -> list[list[str]]:
    return [corpus.vocab.decode(s.tokens) for s in corpus.documents[d].sentences]


# -- export formats ---------------------------------------------------------


def write_profiles(path: str | Path, corpus, profiles: Sequence[np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc, prof in zip(corpus.documents, profiles):
            for s, row in enumerate(prof):
                rec = {"doc": doc.doc_id, "sentence": s, "probs": [float(x) for x in row]}
                fh.write(json.dumps(rec) + "\n")


def read_profiles(path: str | Path) -> dict[str, dict[int, list[float]]]:
    out: dict[str, dict[int, list[float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            out.setdefault(rec["doc"], {})[rec["sentence"]] = rec["probs"]
    return out


class FeatureIndex:
    """Stable string-key to 1-based column mapping for sparse text output."""

    def __init__(self):
        self.index: dict[str, int] = {}

    def __len__(self):
        return len(self.index)

    def get(self, key: str) -> int:
        if key not in self.index:
            self.index[key] = len(self.index) + 1
        return self.index[key]

    def format_row(self, label: str, feats: Mapping[str, float]) -> str:
        cols = sorted(self.get(k) for k in sorted(feats))
        return " ".join([label] + [f"{c}:1" for c in cols])


def write_sparse(path: str | Path, rows: Iterable[tuple[str, Mapping[str, float]]],
                 index: FeatureIndex | None = None) -> FeatureIndex:
    index = index or FeatureIndex()
    with open(path, "w", encoding="utf-8") as fh:
        for label, feats in rows:
            fh.write(index.format_row(label, feats) + "\n")
    return index
