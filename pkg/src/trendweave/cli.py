"""Command-line pipeline driver.

One subcommand per pipeline stage, reading and writing only the documented
files inside the working directory:

    ingest     raw JSON -> records.json (+ ingest-errors.json)
    corpus     records -> corpus.vocab / corpus.ldac / corpus.slices.json
    fit-lda    corpus -> lda/ (topic-word, doc-topic, frequency, model)
    fit-dtm    corpus -> dtm/ (model.dtm, exports, fit-report.json)
    update     model + batch file -> extended model and corpus
    sentiment  records + model -> sentiment-*.json
    embed      model -> embedding.json
    coherence  model + corpus -> coherence.json
    index      everything above -> index/ (segments + manifest)
    serve      index/ -> HTTP API (+ /ui when assets are given)

Exit codes: 0 success, 1 usage error, 2 data error. Flags win over the
config file; the workdir defaults to $TRENDWEAVE_WORKDIR, then ".".
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analytics, fit, incremental, index, lda
from . import corpus as corpus_mod
from . import sentiment as sentiment_mod
from ._binio import FormatError
from .corpus import CorpusError, NormalizationConfig
from .model import (DtmHyper, DtmModel, dump_json, export_doc_topic_json,
                    export_topic_word_json)

WORKDIR_ENV = "TRENDWEAVE_WORKDIR"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# config keys that need a non-string type when they come from the file
_CONFIG_TYPES = {
    "topics": int, "seed": int, "min_frequency": int, "min_length": int,
    "max_iter": int, "top_n": int,
    "alpha": float, "sigma2": float, "tol": float,
    "lowercase": bool, "strip_accents": bool,
}


def load_config(path) -> dict:
    """Minimal key = value file: strings, numbers, booleans, # comments."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(
            encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip().strip("\"'")
        caster = _CONFIG_TYPES.get(key)
        if caster is bool:
            values[key] = value.lower() in ("1", "true", "yes", "on")
        elif caster is not None:
            values[key] = caster(value)
        else:
            values[key] = value
    return values


def build_parser() -> Parser:
    parser = Parser(prog="trendweave",
                    description="Trend tracking over opinion corpora.")
    parser.add_argument("--config", help="key = value config file; "
                                         "flags override it")
    subparsers: list[Parser] = []
    parser.tw_subparsers = subparsers
    root_add = parser.add_subparsers(dest="command", metavar="command")

    class _Sub:
        @staticmethod
        def add_parser(*a, **kw):
            p = root_add.add_parser(*a, **kw)
            subparsers.append(p)
            return p

    sub = _Sub()

    def common(p):
        p.add_argument("--workdir",
                       default=os.environ.get(WORKDIR_ENV, "."),
                       help=f"working directory (default ${WORKDIR_ENV} "
                            f"or '.')")
        p.add_argument("--seed", type=int, default=0,
                       help="random seed for deterministic runs")

    def norm_flags(p):
        p.add_argument("--language", choices=["english", "spanish"],
                       default="english", help="stopword language")
        p.add_argument("--stopwords", help="file with one stopword per line")
        p.add_argument("--min-frequency", type=int, default=2,
                       dest="min_frequency",
                       help="drop terms occurring fewer times than this")
        p.add_argument("--min-length", type=int, default=3,
                       dest="min_length",
                       help="drop terms shorter than this many characters")
        p.add_argument("--keep-accents", action="store_true",
                       help="do not fold accented characters")

    p = sub.add_parser("ingest", help="read raw opinion records")
    common(p)
    p.add_argument("--input", required=True, help="JSON array of records")

    p = sub.add_parser("corpus", help="normalize, slice, and export")
    common(p)
    norm_flags(p)
    p.add_argument("--input", help="records file (default "
                                   "workdir/records.json)")
    p.add_argument("--granularity", default="monthly",
                   choices=list(corpus_mod.GRANULARITIES),
                   help="calendar slicing period")

    p = sub.add_parser("fit-lda", help="fit the static topic model")
    common(p)
    p.add_argument("--topics", type=int, default=5, help="topic count")
    p.add_argument("--alpha", type=float, help="symmetric Dirichlet "
                                               "parameter (default 1/K)")
    p.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("fit-dtm", help="fit the dynamic topic model")
    common(p)
    p.add_argument("--topics", type=int, default=5, help="topic count")
    p.add_argument("--alpha", type=float, help="symmetric Dirichlet "
                                               "parameter (default 1/K)")
    p.add_argument("--sigma2", type=float, default=0.005,
                   help="topic-chain process variance")
    p.add_argument("--max-iter", type=int, default=50, dest="max_iter")
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("update", help="absorb a new batch as one more slice")
    common(p)
    norm_flags(p)
    p.add_argument("--batch", required=True, help="JSON array of new records")
    p.add_argument("--tail-natural", type=float, dest="tail_natural",
                   help="explicit long-tail natural parameter (required "
                        "when the vocabulary is too small to estimate it)")
    p.add_argument("--tail-obs", type=float, dest="tail_obs",
                   help="explicit long-tail observation value")

    p = sub.add_parser("sentiment", help="score and aggregate sentiment")
    common(p)
    norm_flags(p)
    p.add_argument("--lexicon", help="JSON lexicon {positive:[], negative:[]}")
    p.add_argument("--scores-file", dest="scores_file",
                   help="precomputed sentence scores (replaces the scorer)")

    p = sub.add_parser("embed", help="2D topic embedding per slice")
    common(p)

    p = sub.add_parser("coherence", help="topic coherence report")
    common(p)
    p.add_argument("--top-n", type=int, default=10, dest="top_n")

    p = sub.add_parser("index", help="build the query index store")
    common(p)

    p = sub.add_parser("serve", help="serve the index over HTTP")
    common(p)
    p.add_argument("--bind", default="127.0.0.1:8080",
                   help="host:port to listen on")
    p.add_argument("--ui", help="directory with browser UI assets "
                                "(served at /ui)")
    return parser


def _norm_config(args) -> NormalizationConfig:
    stopwords = None
    if getattr(args, "stopwords", None):
        stopwords = frozenset(
            line.strip() for line in
            Path(args.stopwords).read_text(encoding="utf-8").splitlines()
            if line.strip())
    return NormalizationConfig(
        language=args.language,
        stopwords=stopwords,
        min_term_frequency=args.min_frequency,
        min_term_length=args.min_length,
        strip_accents=not args.keep_accents,
    )


def _read_records(path) -> list[corpus_mod.RawRecord]:
    records, errors = corpus_mod.ingest(path)
    if errors:
        raise CorpusError(f"{len(errors)} malformed records in {path}; "
                          f"run ingest first to triage them")
    return records


def _records_path(workdir: Path, args) -> Path:
    if getattr(args, "input", None):
        return Path(args.input)
    return workdir / "records.json"


def _load_model(workdir: Path) -> DtmModel:
    path = workdir / "dtm" / "model.dtm"
    if not path.exists():
        raise CorpusError(f"no fitted model at {path}; run fit-dtm first")
    return DtmModel.load(path)


def _write_records(records, errors, workdir: Path) -> None:
    dump_json([{
        "id": r.id, "created_at": r.created_at.isoformat(),
        "title": r.title, "body": r.body, "url": r.url,
    } for r in records], workdir / "records.json")
    dump_json([{"index": e.index, "record_id": e.record_id,
                "message": e.message} for e in errors],
              workdir / "ingest-errors.json")


def _write_frequencies(vocab: corpus_mod.Vocabulary, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for i, term in enumerate(vocab.terms):
            fh.write(f"{term}\t{int(vocab.frequencies[i])}\n")


def cmd_ingest(args) -> int:
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    records, errors = corpus_mod.ingest(args.input)
    _write_records(records, errors, workdir)
    print(f"ingested {len(records)} records, {len(errors)} errors "
          f"-> {workdir / 'records.json'}")
    return 0


def cmd_corpus(args) -> int:
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    records = _read_records(_records_path(workdir, args))
    cfg = _norm_config(args)
    vocab, docs = corpus_mod.normalize(records, cfg)
    sliced = corpus_mod.build_slices(docs, args.granularity, len(vocab))
    corpus_mod.export(sliced, vocab, workdir)
    print(f"corpus: {sliced.n_docs} docs, {len(vocab)} terms, "
          f"{sliced.n_slices} {args.granularity} slices")
    return 0


def cmd_fit_lda(args) -> int:
    workdir = Path(args.workdir)
    sliced, vocab = corpus_mod.import_corpus(workdir)
    model = lda.fit_lda(sliced.pooled_docs(), len(vocab), args.topics,
                        args.alpha, seed=args.seed, tol=args.tol,
                        max_iter=args.max_iter)
    out = workdir / "lda"
    out.mkdir(exist_ok=True)
    lda.save_lda(model, out / "lda.model")
    states, _ = lda.infer_corpus(model, sliced.pooled_docs())
    top = []
    for k in range(model.n_topics):
        dist = model.topic_word()[k]
        order = dist.argsort()[::-1][:30]
        top.append({"id": k, "words": [
            {"term": vocab.term(int(w)), "probability": float(dist[w])}
            for w in order]})
    dump_json({"topics": top}, out / "topic-word.json")
    dump_json({"documents": [
        {"id": sliced.doc_ids[i],
         "proportions": [float(x) for x in s.gamma / s.gamma.sum()]}
        for i, s in enumerate(states)]}, out / "doc-topic.json")
    _write_frequencies(vocab, out / "frequency.txt")
    flag = "" if model.converged else " (not converged)"
    print(f"lda: {args.topics} topics fitted{flag} -> {out}")
    return 0


def cmd_fit_dtm(args) -> int:
    workdir = Path(args.workdir)
    sliced, vocab = corpus_mod.import_corpus(workdir)
    hyper = DtmHyper(n_topics=args.topics, sigma2=args.sigma2,
                     alpha=args.alpha)
    model, report = fit.fit(sliced, hyper, seed=args.seed, tol=args.tol,
                            max_iter=args.max_iter, terms=vocab.terms)
    out = workdir / "dtm"
    out.mkdir(exist_ok=True)
    model.save(out / "model.dtm")
    export_topic_word_json(model, out / "topic-word.json")
    export_doc_topic_json(model, out / "doc-topic.json")
    _write_frequencies(vocab, out / "frequency.txt")
    dump_json(report.as_dict(), out / "fit-report.json")
    flag = "" if report.converged else " (not converged)"
    print(f"dtm: {args.topics} topics x {model.n_slices} slices fitted"
          f"{flag} in {report.phase_seconds['total']:.1f}s -> {out}")
    return 0


def cmd_update(args) -> int:
    workdir = Path(args.workdir)
    model = _load_model(workdir)
    sliced, vocab = corpus_mod.import_corpus(workdir)
    report_path = workdir / "dtm" / "fit-report.json"
    if report_path.exists():
        previous = json.loads(report_path.read_text(encoding="utf-8"))
        model.fit_seconds = float(
            previous.get("phase_seconds", {}).get("total", 0.0))
    records, errors = corpus_mod.ingest(args.batch)
    if errors:
        raise CorpusError(f"{len(errors)} malformed records in batch")
    batch = incremental.prepare_batch(records, model, _norm_config(args))
    tail = None
    if args.tail_natural is not None or args.tail_obs is not None:
        if args.tail_natural is None or args.tail_obs is None:
            raise UsageError("trendweave update: --tail-natural and "
                             "--tail-obs must be given together")
        tail = incremental.LongTailValues(args.tail_natural, args.tail_obs)
    updated, report = incremental.sequential_update(model, batch,
                                                    seed=args.seed,
                                                    tail=tail)
    sliced2, vocab2 = incremental.extend_corpus(sliced, vocab, batch)
    corpus_mod.export(sliced2, vocab2, workdir)
    out = workdir / "dtm"
    updated.save(out / "model.dtm")
    export_topic_word_json(updated, out / "topic-word.json")
    export_doc_topic_json(updated, out / "doc-topic.json")
    _write_frequencies(vocab2, out / "frequency.txt")
    dump_json(report.as_dict(), out / "update-report.json")
    batch_records_path = workdir / "records.json"
    if batch_records_path.exists():
        old_records = _read_records(batch_records_path)
        _write_records(old_records + records, [], workdir)
    split = report.phase_seconds
    print(f"update: slice {updated.n_slices} added "
          f"({batch.n_docs} docs, {batch.n_new_terms} new terms); "
          f"fit + update = {_hms(split['fit'])} + {_hms(split['update'])}")
    return 0


def _hms(seconds: float) -> str:
    whole = int(round(seconds))
    return f"{whole // 3600}:{whole % 3600 // 60:02d}:{whole % 60:02d}"


def cmd_sentiment(args) -> int:
    workdir = Path(args.workdir)
    model = _load_model(workdir)
    lexicon = None
    if args.lexicon:
        lexicon = sentiment_mod.Lexicon.from_file(args.lexicon)
    records = None
    if not args.scores_file:
        records = _read_records(_records_path(workdir, args))
    analysis = sentiment_mod.run_pipeline(
        model, records=records, scores_file=args.scores_file,
        lexicon=lexicon, cfg=_norm_config(args))
    paths = analysis.as_files(workdir)
    print(f"sentiment: {len(analysis.sentence_scores)} sentences, "
          f"{len(analysis.doc_triples)} documents -> "
          f"{', '.join(p.name for p in paths.values())}")
    return 0


def cmd_embed(args) -> int:
    workdir = Path(args.workdir)
    model = _load_model(workdir)
    analytics.export_embedding_json(model, workdir / "embedding.json")
    print(f"embedding: {model.n_slices} slices x {model.n_topics} topics "
          f"-> embedding.json")
    return 0


def cmd_coherence(args) -> int:
    workdir = Path(args.workdir)
    model = _load_model(workdir)
    sliced, _ = corpus_mod.import_corpus(workdir)
    analytics.export_coherence_json(model, sliced, workdir / "coherence.json",
                                    top_n=args.top_n)
    payload = json.loads((workdir / "coherence.json").read_text())
    print(f"coherence: mean {payload['mean']:.4f}, "
          f"variance {payload['variance']:.4f} -> coherence.json")
    return 0


def cmd_index(args) -> int:
    workdir = Path(args.workdir)
    model = _load_model(workdir)
    sliced, _ = corpus_mod.import_corpus(workdir)
    records = _read_records(workdir / "records.json")
    scores_path = workdir / "sentiment-sentence.json"
    if not scores_path.exists():
        raise CorpusError(f"no sentence scores at {scores_path}; "
                          f"run sentiment first")
    scores = sentiment_mod.load_scores_file(scores_path)
    analysis = sentiment_mod.analyze(model, scores)
    store = index.build(model, sliced, records, analysis)
    index.persist(store, workdir / "index")
    print(f"index: {len(store.opinions)} opinions, version "
          f"{store.version[:12]} -> {workdir / 'index'}")
    return 0


def cmd_serve(args) -> int:
    from . import server
    workdir = Path(args.workdir)
    server.serve(workdir / "index", bind=args.bind, ui_dir=args.ui)
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "corpus": cmd_corpus,
    "fit-lda": cmd_fit_lda,
    "fit-dtm": cmd_fit_dtm,
    "update": cmd_update,
    "sentiment": cmd_sentiment,
    "embed": cmd_embed,
    "coherence": cmd_coherence,
    "index": cmd_index,
    "serve": cmd_serve,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        if "--config" in argv:
            at = argv.index("--config")
            if at + 1 >= len(argv):
                raise UsageError("trendweave: --config needs a path")
            values = load_config(argv[at + 1])
            # subcommands parse into their own namespace, so config-derived
            # defaults must reach every subparser, not just the root
            for target in [parser, *parser.tw_subparsers]:
                target.set_defaults(**values)
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (CorpusError, FormatError, index.IndexError_, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
