"""Review-text ingestion: sentence splitting, tokenization and integer encoding."""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

CORPUS_FORMAT = "multigrain-corpus"
CORPUS_VERSION = 1

# Sentence-final punctuation followed by whitespace.  A single capital
# letter right before the period ("J. Smith") is treated as an initial.
_BOUNDARY = re.compile(r"[.!?]+(?=\s)")
_INITIAL = re.compile(r"(?:^|\W)[A-Z]$")
_TOKEN = re.compile(r"[^\W_]+")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans ``[start, end)`` of the sentences in ``text``.

    Spans exclude surrounding whitespace; whitespace-only stretches are not
    sentences.
    """
    spans = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        if m.group() == "." and _INITIAL.search(text[start:m.start()]):
            continue
        spans.append((start, m.end()))
        start = m.end()
    spans.append((start, len(text)))

    out = []
    for a, b in spans:
        chunk = text[a:b]
        stripped = chunk.strip()
        if not stripped:
            continue
        a += len(chunk) - len(chunk.lstrip())
        out.append((a, a + len(stripped)))
    return out


def sentence_split(text: str) -> list[str]:
    return [text[a:b] for a, b in sentence_spans(text)]


def tokenize(sentence: str, stopwords: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Lowercased alphanumeric tokens with stopwords removed.

    Punctuation is dropped and numbers are kept.
    """
    return [t for t in _TOKEN.findall(sentence.lower()) if t not in stopwords]


def load_stopwords(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {t: i for i, t in enumerate(self.terms)}
        if len(index) != len(self.terms):
            raise DataError("vocabulary terms must be unique")
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    @property
    def size(self) -> int:
        return len(self.terms)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index[t] for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.terms[i] for i in ids]

    def digest(self) -> str:
        h = hashlib.sha256("\n".join(self.terms).encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[int, ...]
    span: tuple[int, int] = (0, 0)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]
    ratings: Mapping[str, int] | None = None

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class CorpusArrays:
    """Flat token layout shared by the samplers.

    Tokens are stored in corpus order (document, sentence, position).
    ``sent`` is a corpus-wide sentence index and ``sent_in_doc`` the index
    within its document.
    """

    words: np.ndarray
    doc: np.ndarray
    sent: np.ndarray
    sent_in_doc: np.ndarray
    doc_token_start: np.ndarray  # length D + 1
    doc_sent_start: np.ndarray  # length D + 1
    sent_token_start: np.ndarray  # length N_s + 1


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    vocab: Vocabulary
    dropped: tuple[str, ...] = ()
    rating_scale: int | None = None

    def __post_init__(self):
        w = self.vocab.size
        for doc in self.documents:
            for s in doc.sentences:
                if any(t < 0 or t >= w for t in s.tokens):
                    raise DataError(f"document {doc.doc_id!r} has a token id outside the vocabulary")

    def __len__(self):
        return len(self.documents)

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def n_sentences(self) -> int:
        return sum(len(d.sentences) for d in self.documents)

    @property
    def n_tokens(self) -> int:
        return sum(d.n_tokens for d in self.documents)

    @property
    def aspects(self) -> list[str]:
        names: dict[str, None] = {}
        for d in self.documents:
            for a in d.ratings or ():
                names.setdefault(a, None)
        return list(names)

    def stats(self) -> dict:
        return {
            "documents": self.n_docs,
            "sentences": self.n_sentences,
            "tokens": self.n_tokens,
            "vocabulary": self.vocab.size,
            "dropped": len(self.dropped),
        }

    def arrays(self) -> CorpusArrays:
        try:
            return self.__dict__["_arrays"]
        except KeyError:
            pass
        words, doc, sent, sent_in_doc = [], [], [], []
        doc_tok, doc_sent, sent_tok = [0], [0], [0]
        g = 0
        for d, document in enumerate(self.documents):
            for s, sentence in enumerate(document.sentences):
                n = len(sentence.tokens)
                words.extend(sentence.tokens)
                doc.extend([d] * n)
                sent.extend([g] * n)
                sent_in_doc.extend([s] * n)
                sent_tok.append(sent_tok[-1] + n)
                g += 1
            doc_tok.append(len(words))
            doc_sent.append(g)
        arr = CorpusArrays(
            words=np.asarray(words, dtype=np.int64),
            doc=np.asarray(doc, dtype=np.int64),
            sent=np.asarray(sent, dtype=np.int64),
            sent_in_doc=np.asarray(sent_in_doc, dtype=np.int64),
            doc_token_start=np.asarray(doc_tok, dtype=np.int64),
            doc_sent_start=np.asarray(doc_sent, dtype=np.int64),
            sent_token_start=np.asarray(sent_tok, dtype=np.int64),
        )
        for a in vars(arr).values():
            a.setflags(write=False)
        object.__setattr__(self, "_arrays", arr)
        return arr

    def decode_sentence(self, d: int, s: int) -> list[str]:
        return self.vocab.decode(self.documents[d].sentences[s].tokens)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": CORPUS_FORMAT,
            "version": CORPUS_VERSION,
            "rating_scale": self.rating_scale,
            "vocabulary": list(self.vocab.terms),
            "dropped": list(self.dropped),
            "documents": [
                {
                    "id": d.doc_id,
                    "ratings": dict(d.ratings) if d.ratings is not None else None,
                    "sentences": [
                        {"span": list(s.span), "tokens": list(s.tokens)} for s in d.sentences
                    ],
                }
                for d in self.documents
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Corpus:
        if data.get("format") != CORPUS_FORMAT:
            raise DataError("not a corpus file")
        if data.get("version") != CORPUS_VERSION:
            raise DataError(
                f"corpus format version {data.get('version')} unsupported (expected {CORPUS_VERSION})"
            )
        docs = tuple(
            Document(
                doc_id=d["id"],
                sentences=tuple(
                    Sentence(tuple(s["tokens"]), tuple(s["span"])) for s in d["sentences"]
                ),
                ratings=d.get("ratings"),
            )
            for d in data["documents"]
        )
        return cls(
            documents=docs,
            vocab=Vocabulary(tuple(data["vocabulary"])),
            dropped=tuple(data.get("dropped", ())),
            rating_scale=data.get("rating_scale"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Corpus:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(data)


RawDocument = tuple  # (doc_id, text) or (doc_id, text, ratings)


def build_corpus(
    documents: Iterable[RawDocument],
    stopwords: frozenset[str] | set[str] = frozenset(),
    rating_scale: int = 5,
) -> Corpus:
    """Split, tokenize and integer-encode raw documents.

    The vocabulary lists terms in order of first appearance.  Documents
    without a single non-empty sentence are dropped (and logged); empty
    sentences inside kept documents stay in place.
    """
    stopwords = frozenset(w.lower() for w in stopwords)
    index: dict[str, int] = {}
    terms: list[str] = []
    seen: set[str] = set()
    kept: list[Document] = []
    dropped: list[str] = []

    for item in documents:
        doc_id, text = item[0], item[1]
        ratings = item[2] if len(item) > 2 else None
        if doc_id in seen:
            raise DataError(f"duplicate document id {doc_id!r}")
        seen.add(doc_id)
        if ratings is not None:
            ratings = dict(ratings)
            for aspect, value in ratings.items():
                if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= rating_scale:
                    raise DataError(
                        f"document {doc_id!r}: rating {aspect}={value!r} outside 1..{rating_scale}"
                    )

        sentences = []
        for a, b in sentence_spans(text):
            toks = tokenize(text[a:b], stopwords)
            ids = []
            for t in toks:
                if t not in index:
                    index[t] = len(terms)
                    terms.append(t)
                ids.append(index[t])
            sentences.append(Sentence(tuple(ids), (a, b)))

        if not any(s.tokens for s in sentences):
            dropped.append(doc_id)
            continue
        kept.append(Document(doc_id, tuple(sentences), ratings))

    if dropped:
        log.warning("dropped %d document(s) with no content words", len(dropped))
    return Corpus(tuple(kept), Vocabulary(tuple(terms)), tuple(dropped), rating_scale)


def read_jsonl(path: str | Path) -> list[RawDocument]:
    """Read ``{"id", "text", "ratings"?}`` records, one per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise DataError(f"{path}:{lineno}: record needs 'id' and 'text'")
            if not isinstance(rec["text"], str):
                raise DataError(f"{path}:{lineno}: 'text' must be a string")
            out.append((str(rec["id"]), rec["text"], rec.get("ratings")))
    return out
