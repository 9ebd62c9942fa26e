"""Synthetic corpora for recovery and ranking experiments.

:func:`generate_mglda` samples documents forward from the MG-LDA
generative process.  :func:`generate_reviews` builds labeled hotel-style
reviews whose aspect ratings are reflected only by sentiment words placed
in sentences about that aspect.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

ASPECTS = ("check-in", "service", "value", "location", "rooms", "cleanliness")


@dataclass(frozen=True)
class SynthConfig:
    n_docs: int = 500
    k_global: int = 4
    k_local: int = 3
    vocab_size: int = 40
    window: int = 3
    min_sentences: int = 8
    max_sentences: int = 14
    min_words: int = 4
    max_words: int = 10
    alpha_gl: float = 0.1
    alpha_loc: float = 0.1
    alpha_mix_gl: float = 2.0
    alpha_mix_loc: float = 2.0
    gamma: float = 1.0
    # Fraction of each topic's mass on its own block of words; the rest is
    # spread uniformly.  None draws topics from a flat Dirichlet instead.
    peak_mass: float | None = 0.9

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthCorpus:
    config: SynthConfig
    terms: list[str]
    phi_gl: np.ndarray
    phi_loc: np.ndarray
    documents: list[list[list[int]]]
    # per-token (window offset, granularity, topic), aligned with documents
    assignments: list[list[list[tuple[int, int, int]]]] = field(repr=False)

    def texts(self) -> list[str]:
        return [
            " ".join(" ".join(self.terms[w] for w in sent) + "." for sent in doc)
            for doc in self.documents
        ]

    def records(self) -> list[dict]:
        return [{"id": f"doc{d:05d}", "text": t} for d, t in enumerate(self.texts())]

    def truth(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "vocabulary": self.terms,
            "phi_gl": self.phi_gl.tolist(),
            "phi_loc": self.phi_loc.tolist(),
        }


def _topics(rng, n_topics, first_block, cfg) -> np.ndarray:
    W = cfg.vocab_size
    if cfg.peak_mass is None:
        return rng.dirichlet(np.ones(W), size=n_topics)
    n_blocks = cfg.k_global + cfg.k_local
    block = max(1, W // n_blocks)
    phi = np.full((n_topics, W), (1.0 - cfg.peak_mass) / W)
    for t in range(n_topics):
        b = (first_block + t) % n_blocks
        cols = np.arange(b * block, min(W, (b + 1) * block))
        phi[t, cols] += cfg.peak_mass * rng.dirichlet(np.ones(len(cols)))
    return phi / phi.sum(axis=1, keepdims=True)


def generate_mglda(cfg: SynthConfig = SynthConfig(), seed: int = 0) -> SynthCorpus:
    rng = np.random.default_rng(seed)
    T = cfg.window
    width = len(str(cfg.vocab_size - 1))
    terms = [f"w{i:0{width}d}" for i in range(cfg.vocab_size)]
    phi_gl = _topics(rng, cfg.k_global, 0, cfg)
    phi_loc = _topics(rng, cfg.k_local, cfg.k_global, cfg)

    docs, assigns = [], []
    for _ in range(cfg.n_docs):
        S = int(rng.integers(cfg.min_sentences, cfg.max_sentences + 1))
        theta_gl = rng.dirichlet(np.full(cfg.k_global, cfg.alpha_gl))
        n_win = S + T - 1
        theta_loc = rng.dirichlet(np.full(cfg.k_local, cfg.alpha_loc), size=n_win)
        pi_gl = rng.beta(cfg.alpha_mix_gl, cfg.alpha_mix_loc, size=n_win)
        doc, doc_assign = [], []
        for s in range(S):
            psi = rng.dirichlet(np.full(T, cfg.gamma))
            n = int(rng.integers(cfg.min_words, cfg.max_words + 1))
            sent, sent_assign = [], []
            for _ in range(n):
                o = int(rng.choice(T, p=psi))
                v = s + o
                if rng.random() < pi_gl[v]:
                    r, z = 0, int(rng.choice(cfg.k_global, p=theta_gl))
                    w = int(rng.choice(cfg.vocab_size, p=phi_gl[z]))
                else:
                    r, z = 1, int(rng.choice(cfg.k_local, p=theta_loc[v]))
                    w = int(rng.choice(cfg.vocab_size, p=phi_loc[z]))
                sent.append(w)
                sent_assign.append((o, r, z))
            doc.append(sent)
            doc_assign.append(sent_assign)
        docs.append(doc)
        assigns.append(doc_assign)
    return SynthCorpus(cfg, terms, phi_gl, phi_loc, docs, assigns)


# -- labeled reviews --------------------------------------------------------

_ASPECT_WORDS = {
    "check-in": ["reception", "desk", "checkin", "arrival", "key", "queue", "booking", "lobby"],
    "service": ["staff", "waiter", "concierge", "helpful", "housekeeping", "manager", "request", "attitude"],
    "value": ["price", "money", "rate", "cost", "deal", "paid", "expensive", "worth"],
    "location": ["metro", "walk", "station", "downtown", "distance", "shops", "bus", "area"],
    "rooms": ["bed", "room", "view", "bathroom", "shower", "pillow", "tv", "balcony"],
    "cleanliness": ["clean", "dust", "sheets", "towels", "smell", "stains", "carpet", "spotless"],
}
_POSITIVE = ["great", "excellent", "lovely", "perfect", "wonderful", "good"]
_NEGATIVE = ["terrible", "awful", "poor", "horrible", "disappointing", "bad"]
_CITIES = {
    "paris": ["paris", "louvre", "seine", "eiffel", "montmartre", "french"],
    "london": ["london", "tube", "thames", "soho", "pounds", "british"],
    "rome": ["rome", "colosseum", "vatican", "trastevere", "italian", "piazza"],
    "newyork": ["york", "manhattan", "broadway", "subway", "brooklyn", "times"],
}
_FILLER = ["the", "was", "a", "and", "very", "we", "it", "our", "is", "this"]
REVIEW_STOPWORDS = frozenset(_FILLER)


@dataclass(frozen=True)
class ReviewConfig:
    n_docs: int = 600
    min_sentences: int = 6
    max_sentences: int = 12
    rating_scale: int = 5
    # probability that a sentiment word contradicts the aspect rating
    noise: float = 0.15
    # share of an aspect rating that follows the review's overall mood
    mood_weight: float = 0.3

    def to_dict(self) -> dict:
        return asdict(self)


def generate_reviews(cfg: ReviewConfig = ReviewConfig(), seed: int = 0) -> list[dict]:
    """Labeled reviews as ``{"id", "text", "ratings"}`` records.

    Every sentence talks about one aspect, or about the hotel's city.
    Aspect sentences carry one or two sentiment words whose polarity follows
    that aspect's rating, so unigram counts alone mix the signals of all
    aspects.
    """
    rng = np.random.default_rng(seed)
    k = cfg.rating_scale
    cities = list(_CITIES)
    out = []
    for d in range(cfg.n_docs):
        mood = rng.uniform(1, k)
        ratings = {}
        for a in ASPECTS:
            own = rng.uniform(1, k)
            val = cfg.mood_weight * mood + (1 - cfg.mood_weight) * own
            ratings[a] = int(np.clip(np.rint(val), 1, k))
        city = _CITIES[cities[int(rng.integers(len(cities)))]]

        S = int(rng.integers(cfg.min_sentences, cfg.max_sentences + 1))
        sentences = []
        aspect = None
        for s in range(S):
            # aspects come in short runs so neighbouring sentences share them
            if aspect is None or rng.random() < 0.5:
                aspect = ASPECTS[int(rng.integers(len(ASPECTS)))] if rng.random() < 0.85 else None
            words = []
            if aspect is None:
                words += list(rng.choice(city, size=int(rng.integers(3, 6))))
            else:
                words += list(rng.choice(_ASPECT_WORDS[aspect], size=int(rng.integers(2, 5))))
                p_pos = (ratings[aspect] - 1) / (k - 1)
                for _ in range(int(rng.integers(1, 3))):
                    positive = rng.random() < p_pos
                    if rng.random() < cfg.noise:
                        positive = not positive
                    words.append(str(rng.choice(_POSITIVE if positive else _NEGATIVE)))
                if rng.random() < 0.4:
                    words.append(str(rng.choice(city)))
            words += list(rng.choice(_FILLER, size=int(rng.integers(1, 4))))
            order = rng.permutation(len(words))
            text = " ".join(str(words[i]) for i in order)
            sentences.append(text[0].upper() + text[1:] + ".")
        out.append({"id": f"review{d:05d}", "text": " ".join(sentences), "ratings": ratings})
    return out
