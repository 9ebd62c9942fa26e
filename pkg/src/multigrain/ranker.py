"""PRanking ordinal perceptron for multi-aspect ratings, and ranking loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DataError

RANKER_FORMAT = "multigrain-ranker"
RANKER_VERSION = 1


@dataclass
class RatedInstance:
    features: Mapping[str, float]
    ratings: Mapping[str, int]


@dataclass
class RankerModel:
    """One weight vector and ``k - 1`` ordered boundaries per aspect."""

    aspects: tuple[str, ...]
    k: int
    weights: dict[str, dict[str, float]] = field(default_factory=dict)
    boundaries: dict[str, list[float]] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("PRanking needs at least two rating levels")
        self.aspects = tuple(self.aspects)
        for a in self.aspects:
            self.weights.setdefault(a, {})
            self.boundaries.setdefault(a, [0.0] * (self.k - 1))

    def score(self, aspect: str, x: Mapping[str, float]) -> float:
        w = self.weights[aspect]
        return sum(w.get(f, 0.0) * v for f, v in x.items())

    def to_dict(self) -> dict:
        return {
            "format": RANKER_FORMAT,
            "version": RANKER_VERSION,
            "k": self.k,
            "aspects": list(self.aspects),
            "weights": {a: dict(sorted((f, v) for f, v in self.weights[a].items() if v != 0))
                        for a in self.aspects},
            "boundaries": {a: list(self.boundaries[a]) for a in self.aspects},
            **self.extra,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RankerModel:
        if data.get("format") != RANKER_FORMAT or data.get("version") != RANKER_VERSION:
            raise DataError("not a supported ranker model file")
        known = {"format", "version", "k", "aspects", "weights", "boundaries"}
        return cls(
            tuple(data["aspects"]),
            data["k"],
            {a: dict(w) for a, w in data["weights"].items()},
            {a: list(b) for a, b in data["boundaries"].items()},
            {k: v for k, v in data.items() if k not in known},
        )


def _rank(score: float, bounds: Sequence[float], k: int) -> int:
    for j, b in enumerate(bounds, 1):
        if score < b:
            return j
    return k


def predict(model: RankerModel, aspect: str, x: Mapping[str, float]) -> int:
    """Smallest rating ``j`` with ``score < b_j``; ``k`` if there is none."""
    return _rank(model.score(aspect, x), model.boundaries[aspect], model.k)


def prank_update(model: RankerModel, aspect: str, x: Mapping[str, float], y: int) -> RankerModel:
    """One mistake-driven PRanking step (Crammer & Singer) on a single example."""
    k = model.k
    if not 1 <= y <= k:
        raise ValueError(f"rating {y} outside 1..{k}")
    bounds = model.boundaries[aspect]
    score = model.score(aspect, x)
    if _rank(score, bounds, k) == y:
        return model
    total = 0
    for r in range(1, k):
        side = 1 if y > r else -1
        if (score - bounds[r - 1]) * side <= 0:
            bounds[r - 1] -= side
            total += side
    if total:
        w = model.weights[aspect]
        for f, v in x.items():
            w[f] = w.get(f, 0.0) + total * v
    return model


def boundaries_ordered(model: RankerModel) -> bool:
    return all(
        all(b[i] <= b[i + 1] for i in range(len(b) - 1)) for b in model.boundaries.values()
    )


def train(
    instances: Sequence[RatedInstance],
    aspects: Sequence[str],
    k: int = 5,
    epochs: int = 10,
    seed: int = 0,
    callback: Callable[[RankerModel, str], None] | None = None,
    init: RankerModel | None = None,
) -> RankerModel:
    """Online PRanking over ``epochs`` passes in seeded shuffled order.

    Aspects are trained independently; ``callback(model, aspect)`` runs after
    every update.  Training continues from ``init`` (modified in place) when
    given.
    """
    if not instances:
        raise ValueError("empty training set")
    model = init if init is not None else RankerModel(tuple(aspects), k)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(len(instances))
        for a in model.aspects:
            for i in order:
                inst = instances[i]
                prank_update(model, a, inst.features, inst.ratings[a])
                if callback is not None:
                    callback(model, a)
    return model


def ranking_loss(actual: Sequence[int], predicted: Sequence[int]) -> float:
    """Mean absolute difference between true and predicted ratings."""
    if len(actual) != len(predicted):
        raise ValueError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    if not actual:
        raise ValueError("ranking loss of an empty set")
    return sum(abs(int(a) - int(p)) for a, p in zip(actual, predicted)) / len(actual)


def baseline_rate(x=None, rating: int = 5) -> int:
    """Majority baseline: every aspect gets the most common rating."""
    return rating


def evaluate(model: RankerModel, instances: Sequence[RatedInstance]) -> dict[str, float]:
    """Per-aspect ranking loss plus ``"overall"``, the mean over aspects."""
    out = {}
    for a in model.aspects:
        actual = [inst.ratings[a] for inst in instances]
        predicted = [predict(model, a, inst.features) for inst in instances]
        out[a] = ranking_loss(actual, predicted)
    out["overall"] = math.fsum(out[a] for a in model.aspects) / len(model.aspects)
    return out


def evaluate_baseline(instances: Sequence[RatedInstance], aspects: Sequence[str],
                      rating: int = 5) -> dict[str, float]:
    out = {}
    for a in aspects:
        out[a] = ranking_loss([inst.ratings[a] for inst in instances],
                              [baseline_rate(inst.features, rating) for inst in instances])
    out["overall"] = math.fsum(out[a] for a in aspects) / len(aspects)
    return out
