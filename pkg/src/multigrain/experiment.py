"""Multi-aspect rating experiments: PRank with and without topic features."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataError
from .features import bucketize, build_ngram_vocab, decoded_document, make_features
from .ranker import RankerModel, RatedInstance, evaluate, evaluate_baseline, train


@dataclass(frozen=True)
class RankConfig:
    epochs: int = 10
    repeats: int = 5
    train_frac: float = 0.8
    top_k: int = 3
    buckets: int = 5
    ngram_order: int = 1
    trigram_min_df: int = 5
    baseline_rating: int = 5
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RankingReport:
    aspects: tuple[str, ...]
    # model name -> one loss dict per repetition
    runs: dict[str, list[dict[str, float]]] = field(default_factory=dict)
    models: dict[str, RankerModel] = field(default_factory=dict)

    def mean(self, name: str) -> dict[str, float]:
        runs = self.runs[name]
        return {key: math.fsum(r[key] for r in runs) / len(runs) for key in runs[0]}

    def overall(self, name: str) -> list[float]:
        return [r["overall"] for r in self.runs[name]]

    def to_tsv(self) -> str:
        header = ["Model", "Overall", *self.aspects]
        lines = ["\t".join(header)]
        for name in self.runs:
            m = self.mean(name)
            lines.append("\t".join([name, f"{m['overall']:.3f}", *(f"{m[a]:.3f}" for a in self.aspects)]))
        return "\n".join(lines) + "\n"


def rating_setup(corpus: Corpus) -> tuple[tuple[str, ...], int]:
    """Aspect names and rating scale; every document must rate every aspect."""
    aspects = tuple(corpus.aspects)
    if not aspects:
        raise DataError("corpus has no aspect ratings")
    for doc in corpus.documents:
        missing = [a for a in aspects if not doc.ratings or a not in doc.ratings]
        if missing:
            raise DataError(f"document {doc.doc_id!r} lacks ratings for {', '.join(missing)}")
    return aspects, corpus.rating_scale or 5


def run_ranking(
    corpus: Corpus,
    cfg: RankConfig = RankConfig(),
    profiles: Sequence[np.ndarray] | None = None,
    model_tag: str = "mg",
    topic_label: str = "PRank+MG-LDA",
) -> RankingReport:
    """Baseline, PRank, and (with ``profiles``) PRank plus topic features.

    Each repetition draws a fresh seeded train/test split.  Trigram
    frequencies and bucket thresholds come from the training part only.
    """
    aspects, k = rating_setup(corpus)
    docs = [decoded_document(corpus, d) for d in range(corpus.n_docs)]
    n = len(docs)
    n_train = int(round(cfg.train_frac * n))
    if not 0 < n_train < n:
        raise DataError(f"cannot split {n} documents with train fraction {cfg.train_frac}")
    report = RankingReport(aspects)
    names = ["Baseline", "PRank"] + ([topic_label] if profiles is not None else [])
    for name in names:
        report.runs[name] = []

    for rep in range(cfg.repeats):
        rng = np.random.default_rng([cfg.seed, rep])
        perm = rng.permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        ngrams = build_ngram_vocab((docs[i] for i in tr), cfg.ngram_order, cfg.trigram_min_df)

        def instances(idx, prof=None, bucket=None):
            return [
                RatedInstance(
                    make_features(docs[i], None if prof is None else prof[i], bucket, cfg.top_k, ngrams, model_tag),
                    corpus.documents[i].ratings,
                )
                for i in idx
            ]

        test_plain = instances(te)
        report.runs["Baseline"].append(evaluate_baseline(test_plain, aspects, cfg.baseline_rating))

        model = train(instances(tr), aspects, k, cfg.epochs, seed=cfg.seed + rep)
        report.runs["PRank"].append(evaluate(model, test_plain))
        if rep == 0:
            report.models["PRank"] = model

        if profiles is not None:
            bucket = bucketize([profiles[i] for i in tr], cfg.buckets)
            model = train(instances(tr, profiles, bucket), aspects, k, cfg.epochs, seed=cfg.seed + rep)
            report.runs[topic_label].append(evaluate(model, instances(te, profiles, bucket)))
            if rep == 0:
                model.extra["bucket_thresholds"] = list(bucket.thresholds)
                model.extra["top_k"] = cfg.top_k
                model.extra["topic_model"] = model_tag
                report.models[topic_label] = model
    return report
