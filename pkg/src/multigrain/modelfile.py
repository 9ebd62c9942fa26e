"""Versioned JSON model files and TSV topic reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import DataError
from .lda import LdaParams, LdaState, lda_estimate, lda_log_joint
from .mglda import Hyperparams, MgldaState, estimate_phi, log_joint

MODEL_FORMAT = "multigrain-model"
MODEL_VERSION = 1


def model_to_dict(state: MgldaState | LdaState) -> dict:
    corpus = state.corpus
    base = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "corpus_digest": corpus.digest(),
        "vocab_digest": corpus.vocab.digest(),
        "vocab_size": corpus.vocab.size,
        "seed": state.seed,
        "iterations": state.iteration,
    }
    if isinstance(state, MgldaState):
        tm = estimate_phi(state)
        base.update(
            kind="mglda",
            hyperparams=state.hyper.to_dict(),
            log_joint=log_joint(state),
            phi={"gl": tm.phi_gl.tolist(), "loc": tm.phi_loc.tolist()},
            assignments={"o": state.o.tolist(), "r": state.r.tolist(), "z": state.z.tolist()},
            counts={k: v.tolist() for k, v in state.tables.items()},
        )
    else:
        phi, theta = lda_estimate(state)
        base.update(
            kind="lda",
            hyperparams=state.params.to_dict(),
            log_joint=lda_log_joint(state),
            phi={"topics": phi.tolist()},
            theta=theta.tolist(),
            assignments={"z": state.z.tolist()},
            counts={k: v.tolist() for k, v in state.tables.items()},
        )
    return base


def save_model(path: str | Path, state) -> None:
    Path(path).write_text(json.dumps(model_to_dict(state), separators=(",", ":")) + "\n", encoding="utf-8")


def read_model(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid JSON ({e})") from None
    if data.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a model file")
    if data.get("version") != MODEL_VERSION:
        raise DataError(f"{path}: model format version {data.get('version')} unsupported (expected {MODEL_VERSION})")
    return data


def state_from_model(data: dict, corpus: Corpus):
    """Rebuild a sampler state over ``corpus`` from a model file's assignments."""
    if data["corpus_digest"] != corpus.digest():
        raise DataError("model was trained on a different corpus")
    a = data["assignments"]
    if data["kind"] == "mglda":
        state = MgldaState(corpus, Hyperparams(**data["hyperparams"]), a["o"], a["r"], a["z"],
                           seed=data["seed"], iteration=data["iterations"])
    elif data["kind"] == "lda":
        state = LdaState(corpus, LdaParams(**data["hyperparams"]), a["z"], seed=data["seed"],
                         iteration=data["iterations"])
    else:
        raise DataError(f"unknown model kind {data['kind']!r}")
    stored = {k: np.asarray(v) for k, v in data["counts"].items()}
    for k, v in state.tables.items():
        if not np.array_equal(stored[k].reshape(v.shape), v):
            raise DataError(f"model count table {k} disagrees with its assignments")
    return state


def topic_rows(data: dict, terms, n: int = 12) -> list[tuple[str, int, list[tuple[str, float]]]]:
    if data["kind"] == "mglda":
        groups = [("gl", data["phi"]["gl"]), ("loc", data["phi"]["loc"])]
    else:
        groups = [("lda", data["phi"]["topics"])]
    rows = []
    for tag, phi in groups:
        for z, row in enumerate(np.asarray(phi)):
            top = np.argsort(-row, kind="stable")[:n]
            rows.append((tag, z, [(terms[w], float(row[w])) for w in top]))
    return rows


def format_topics(rows) -> str:
    lines = ["granularity\ttopic\twords"]
    for tag, z, words in rows:
        lines.append("\t".join([tag, str(z), *(f"{w}:{p:.6f}" for w, p in words)]))
    return "\n".join(lines) + "\n"
