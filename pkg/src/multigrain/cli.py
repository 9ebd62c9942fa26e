"""Command-line driver: ingest, train, topics, rank, synth.

Exit status is 0 on success, 2 on usage errors and 3 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .corpus import Corpus, build_corpus, load_stopwords, read_jsonl
from .errors import DataError
from .experiment import RankConfig, rating_setup, run_ranking
from .features import (
    Bucketizer,
    FeatureIndex,
    build_ngram_vocab,
    corpus_profiles,
    decoded_document,
    make_features,
    write_profiles,
)
from .lda import LdaParams, lda_init, lda_log_joint, lda_sweep
from .mglda import Hyperparams, gibbs_sweep, init_state, log_joint
from .modelfile import format_topics, read_model, save_model, state_from_model, topic_rows
from .synth import ReviewConfig, SynthConfig, generate_mglda, generate_reviews

log = logging.getLogger("multigrain")

EXIT_USAGE = 2
EXIT_DATA = 3


# -- subcommands ------------------------------------------------------------


def cmd_ingest(args) -> int:
    records = read_jsonl(args.input)
    if not records:
        raise DataError("empty corpus")
    stopwords = load_stopwords(args.stopwords) if args.stopwords else frozenset()
    corpus = build_corpus(records, stopwords, rating_scale=args.rating_scale)
    if corpus.n_docs == 0:
        raise DataError("empty corpus: every document was dropped")
    corpus.save(args.output)
    s = corpus.stats()
    print(
        f"documents kept: {s['documents']}\ndocuments dropped: {s['dropped']}\n"
        f"sentences: {s['sentences']}\ntokens: {s['tokens']}\nvocabulary: {s['vocabulary']}"
    )
    return 0


def _new_state(args, corpus, seed):
    if args.model == "mglda":
        hyper = Hyperparams(
            k_global=args.k_global,
            k_local=args.k_local,
            window=args.window,
            alpha_gl=args.alpha_gl,
            alpha_loc=args.alpha_loc,
            alpha_mix_gl=args.alpha_mix_gl,
            alpha_mix_loc=args.alpha_mix_loc,
            beta_gl=args.beta_gl,
            beta_loc=args.beta_loc,
            gamma=args.gamma,
        )
        return init_state(corpus, hyper, seed), gibbs_sweep, log_joint
    params = LdaParams(k=args.k, alpha=args.alpha, beta=args.beta)
    return lda_init(corpus, params, seed), lda_sweep, lda_log_joint


def _run_chain(args, corpus, seed):
    state, sweep, joint = _new_state(args, corpus, seed)
    trace = []
    for _ in range(args.iterations):
        sweep(state)
        trace.append((state.iteration, joint(state)))
    return state, trace, joint(state)


def cmd_train(args) -> int:
    corpus = Corpus.load(args.corpus)
    if corpus.n_docs == 0:
        raise DataError("empty corpus")
    seeds = [args.seed + i for i in range(args.chains)]
    if args.chains == 1:
        results = [_run_chain(args, corpus, seeds[0])]
    else:
        with ThreadPoolExecutor(max_workers=args.chains) as pool:
            results = list(pool.map(lambda s: _run_chain(args, corpus, s), seeds))
    best = max(range(len(results)), key=lambda i: (results[i][2], -i))
    state, trace, final = results[best]
    if args.chains > 1:
        log.info("kept chain %d (seed %d), final log joint %.6f", best, seeds[best], final)

    save_model(args.output, state)
    trace_path = args.trace or str(args.output) + ".trace.csv"
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("iteration,log_joint\n")
        for it, lj in trace:
            fh.write(f"{it},{lj!r}\n")
    if args.topics_out:
        data = read_model(args.output)
        Path(args.topics_out).write_text(format_topics(topic_rows(data, corpus.vocab.terms, args.top_words)))
    return 0


def cmd_topics(args) -> int:
    data = read_model(args.model_file)
    corpus = Corpus.load(args.corpus)
    if data["vocab_digest"] != corpus.vocab.digest():
        raise DataError("model vocabulary does not match the corpus")
    text = format_topics(topic_rows(data, corpus.vocab.terms, args.n))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_rank(args) -> int:
    corpus = Corpus.load(args.corpus)
    cfg = RankConfig(
        epochs=args.epochs,
        repeats=args.repeats,
        train_frac=args.train_frac,
        top_k=args.top_k,
        buckets=args.buckets,
        ngram_order=args.ngram_order,
        trigram_min_df=args.trigram_min_df,
        seed=args.seed,
    )
    # fail on missing ratings before any expensive resampling
    rating_setup(corpus)

    profiles = None
    tag, label = "mg", "PRank+MG-LDA"
    if args.topic_features:
        if not args.topic_model:
            raise DataError("--topic-features needs --topic-model")
        data = read_model(args.topic_model)
        state = state_from_model(data, corpus)
        if data["kind"] == "lda":
            tag, label = "lda", "PRank+LDA"
        profiles = corpus_profiles(state, args.samples, args.seed)
        if args.profiles_out:
            write_profiles(args.profiles_out, corpus, profiles)

    report = run_ranking(corpus, cfg, profiles, tag, label)
    text = report.to_tsv()
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)

    if args.output:
        name = label if profiles is not None else "PRank"
        ranker = report.models[name].to_dict()
        Path(args.output).write_text(json.dumps(ranker, sort_keys=True) + "\n")
    if args.features_out:
        index = FeatureIndex()
        docs = [decoded_document(corpus, d) for d in range(corpus.n_docs)]
        ngrams = build_ngram_vocab(docs, cfg.ngram_order, cfg.trigram_min_df)
        bucket = None
        if profiles is not None:
            bucket = Bucketizer(tuple(report.models[label].extra["bucket_thresholds"]))
        with open(args.features_out, "w", encoding="utf-8") as fh:
            for d, doc in enumerate(corpus.documents):
                feats = make_features(docs[d], None if profiles is None else profiles[d],
                                      bucket, args.top_k, ngrams, tag)
                labels = ",".join(str(doc.ratings[a]) for a in report.aspects)
                fh.write(index.format_row(labels, feats) + "\n")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.output)
    if args.kind == "reviews":
        records = generate_reviews(ReviewConfig(n_docs=args.n_docs), args.seed)
        truth = None
    else:
        cfg = SynthConfig(
            n_docs=args.n_docs,
            k_global=args.k_global,
            k_local=args.k_local,
            vocab_size=args.vocab_size,
            window=args.window,
            alpha_gl=args.alpha_gl,
            alpha_loc=args.alpha_loc,
            alpha_mix_gl=args.alpha_mix_gl,
            alpha_mix_loc=args.alpha_mix_loc,
            gamma=args.gamma,
            peak_mass=None if args.flat_topics else args.peak_mass,
        )
        sc = generate_mglda(cfg, args.seed)
        records = sc.records()
        truth = sc.truth()
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    if truth is not None:
        truth_path = args.truth or str(out) + ".truth.json"
        Path(truth_path).write_text(json.dumps(truth) + "\n")
    return 0


# -- argument parsing -------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _add_priors(p):
    p.add_argument("--k-global", type=_positive_int, default=30)
    p.add_argument("--k-local", type=_positive_int, default=10)
    p.add_argument("--window", type=_positive_int, default=3, help="sentences per sliding window")
    p.add_argument("--alpha-gl", type=_positive_float, default=0.1)
    p.add_argument("--alpha-loc", type=_positive_float, default=0.1)
    p.add_argument("--alpha-mix-gl", type=_positive_float, default=1.0)
    p.add_argument("--alpha-mix-loc", type=_positive_float, default=1.0)
    p.add_argument("--gamma", type=_positive_float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multigrain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="TOML file with option defaults; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tokenize a JSON-lines review file into a corpus")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stopwords", help="one stopword per line")
    p.add_argument("--rating-scale", type=_positive_int, default=5)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="run a Gibbs chain and save the final sample")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--model", choices=["mglda", "lda"], default="mglda")
    _add_priors(p)
    p.add_argument("--beta-gl", type=_positive_float, default=0.01)
    p.add_argument("--beta-loc", type=_positive_float, default=0.01)
    p.add_argument("--k", type=_positive_int, default=40, help="LDA topic count")
    p.add_argument("--alpha", type=_positive_float, default=0.1, help="LDA document prior")
    p.add_argument("--beta", type=_positive_float, default=0.01, help="LDA word prior")
    p.add_argument("--iterations", type=_nonneg_int, default=800)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=_positive_int, default=1,
                   help="run N chains (seeds seed..seed+N-1) and keep the best final log joint")
    p.add_argument("--trace", help="log-joint trace CSV (default: OUTPUT.trace.csv)")
    p.add_argument("--topics-out", help="also write a topic report")
    p.add_argument("--top-words", type=_positive_int, default=12)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("topics", help="top words per topic as TSV")
    p.add_argument("model_file")
    p.add_argument("--corpus", required=True, help="corpus the model was trained on")
    p.add_argument("-n", type=_positive_int, default=12)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("rank", help="train and evaluate PRank aspect raters")
    p.add_argument("corpus")
    p.add_argument("--topic-model", help="model file trained on the same corpus")
    p.add_argument("--topic-features", action="store_true")
    p.add_argument("-o", "--output", help="ranker model JSON")
    p.add_argument("--report", help="loss report TSV")
    p.add_argument("--profiles-out")
    p.add_argument("--features-out")
    p.add_argument("--samples", type=_positive_int, default=100)
    p.add_argument("--buckets", type=_positive_int, default=5)
    p.add_argument("--top-k", type=_positive_int, default=3)
    p.add_argument("--epochs", type=_nonneg_int, default=10)
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--ngram-order", type=int, choices=[1, 2, 3], default=1)
    p.add_argument("--trigram-min-df", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kind", choices=["mglda", "reviews"], default="mglda")
    p.add_argument("--truth", help="ground-truth topics JSON (default: OUTPUT.truth.json)")
    p.add_argument("--n-docs", type=_positive_int, default=500)
    p.add_argument("--vocab-size", type=_positive_int, default=40)
    p.add_argument("--peak-mass", type=float, default=0.9)
    p.add_argument("--flat-topics", action="store_true", help="draw topics from a flat Dirichlet")
    p.add_argument("--seed", type=int, default=0)
    _add_priors(p)
    p.set_defaults(func=cmd_synth, k_global=4, k_local=3, gamma=1.0, alpha_mix_gl=2.0, alpha_mix_loc=2.0)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, "rb") as fh:
            cfg = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        parser.error(f"cannot read config {known.config}: {e}")
    defaults = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
    sections = {k: v for k, v in cfg.items() if isinstance(v, dict)}
    for action in parser._subparsers._group_actions:
        for name, sp in action.choices.items():
            sp.set_defaults(**defaults)
            sp.set_defaults(**{k.replace("-", "_"): v for k, v in sections.get(name, {}).items()})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
