"""Opinion corpus construction.

Raw records come in as JSON (or any iterable a fetch hook produces), get
normalized into a vocabulary of integer term ids, sliced by calendar period,
and written to three exchange files that every downstream stage consumes:

* ``<stem>.vocab``      one ``id<TAB>term<TAB>frequency`` line per term
* ``<stem>.ldac``       one document per row: ``N id:count id:count ...``
* ``<stem>.slices.json``  document ids, timestamps, slice boundaries

A corpus import must reproduce the exported corpus exactly; the doc-term
file round trip is byte-stable.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import _stopwords

GRANULARITIES = ("daily", "weekly", "monthly", "yearly")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_SPLIT_RE = re.compile(r"[.!?\n]+")


class CorpusError(ValueError):
    """Raised when corpus inputs or exchange files are unusable."""


@dataclass
class RawRecord:
    """One opinion as scraped/collected: identity, timestamp, content."""

    id: str
    created_at: datetime
    title: str = ""
    body: str = ""
    url: str | None = None

    @property
    def text(self) -> str:
        return f"{self.title}\n{self.body}" if self.title else self.body


@dataclass
class IngestError:
    index: int
    record_id: str | None
    message: str


@dataclass
class NormalizationConfig:
    """Text cleanup rules. Defaults remove singleton terms and words under
    three characters."""

    language: str = "english"
    stopwords: frozenset[str] | None = None
    min_term_frequency: int = 2
    min_term_length: int = 3
    lowercase: bool = True
    strip_punctuation: bool = True
    strip_accents: bool = False

    def __post_init__(self) -> None:
        if self.language not in _stopwords.BY_LANGUAGE:
            raise CorpusError(f"unsupported language: {self.language!r}")
        if self.min_term_frequency < 1:
            raise CorpusError("min_term_frequency must be >= 1")
        if self.min_term_length < 1:
            raise CorpusError("min_term_length must be >= 1")
        if self.stopwords is None:
            self.stopwords = _stopwords.BY_LANGUAGE[self.language]
        else:
            self.stopwords = frozenset(self.stopwords)


@dataclass
class Vocabulary:
    """Dense term <-> id bijection with corpus frequencies."""

    terms: list[str]
    frequencies: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.frequencies = np.asarray(self.frequencies, dtype=np.int64)
        if len(self.terms) != len(self.frequencies):
            raise CorpusError("terms and frequencies differ in length")
        self._index = {t: i for i, t in enumerate(self.terms)}
        if len(self._index) != len(self.terms):
            raise CorpusError("duplicate terms in vocabulary")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def id_of(self, term: str) -> int:
        return self._index[term]

    def term(self, term_id: int) -> str:
        return self.terms[term_id]


@dataclass
class TokenizedDocument:
    id: str
    token_ids: list[int]
    timestamp: datetime


@dataclass
class SliceSpan:
    """Contiguous document range for one calendar window. ``empty`` flags
    windows between the first and last document that received no documents."""

    start: int
    stop: int
    window: str
    empty: bool


SparseDoc = tuple[np.ndarray, np.ndarray]


@dataclass
class SlicedCorpus:
    doc_ids: list[str]
    docs: list[SparseDoc]
    timestamps: list[datetime]
    slices: list[SliceSpan]
    granularity: str
    n_terms: int

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    def slice_doc_range(self, t: int) -> range:
        span = self.slices[t]
        return range(span.start, span.stop)

    def slice_docs(self, t: int) -> list[SparseDoc]:
        span = self.slices[t]
        return self.docs[span.start:span.stop]

    def slice_term_counts(self, t: int) -> np.ndarray:
        """Word counts n_tw for slice t, by summation over its documents."""
        counts = np.zeros(self.n_terms)
        for ids, cnt in self.slice_docs(t):
            np.add.at(counts, ids, cnt)
        return counts

    def pooled_docs(self) -> list[SparseDoc]:
        return list(self.docs)


def parse_timestamp(value) -> datetime:
    """Accept ISO-8601 strings (``Z`` suffix included) or epoch seconds."""
    if isinstance(value, datetime):
        ts = value
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        ts = datetime.fromtimestamp(float(value), tz=timezone.utc)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            ts = datetime.fromisoformat(text)
        except ValueError as exc:
            raise CorpusError(f"unparseable timestamp {value!r}") from exc
    else:
        raise CorpusError(f"unparseable timestamp {value!r}")
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def ingest(source) -> tuple[list[RawRecord], list[IngestError]]:
    """Read raw records from a JSON file, an iterable of dicts, or a fetch
    hook (a zero-argument callable producing either).

    Malformed records become error entries; well-formed records are returned
    in input order.
    """
    if isinstance(source, Callable) and not isinstance(source, (str, Path)):
        source = source()
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise CorpusError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path} is not valid JSON: {exc}") from exc
    elif hasattr(source, "read"):
        raw = json.load(source)
    else:
        raw = list(source)
    if not isinstance(raw, list):
        raise CorpusError("record source must be an array of records")

    records: list[RawRecord] = []
    errors: list[IngestError] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            errors.append(IngestError(i, None, "record is not an object"))
            continue
        rec_id = str(entry.get("id", f"rec-{i}"))
        if "created_at" not in entry:
            errors.append(IngestError(i, rec_id, "missing created_at"))
            continue
        if "body" not in entry and "title" not in entry:
            errors.append(IngestError(i, rec_id, "missing body"))
            continue
        try:
            ts = parse_timestamp(entry["created_at"])
        except CorpusError as exc:
            errors.append(IngestError(i, rec_id, str(exc)))
            continue
        if rec_id in seen_ids:
            errors.append(IngestError(i, rec_id, f"duplicate id {rec_id!r}"))
            continue
        seen_ids.add(rec_id)
        records.append(RawRecord(
            id=rec_id,
            created_at=ts,
            title=str(entry.get("title", "")),
            body=str(entry.get("body", "")),
            url=entry.get("url"),
        ))
    return records, errors


def fold_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def tokenize(text: str, cfg: NormalizationConfig) -> list[str]:
    """Split into candidate tokens; frequency filtering happens corpus-wide."""
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_accents:
        text = fold_accents(text)
    if cfg.strip_punctuation:
        tokens = _TOKEN_RE.findall(text)
    else:
        tokens = text.split()
    return [t for t in tokens
            if len(t) >= cfg.min_term_length and t not in cfg.stopwords]


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def normalize(records: list[RawRecord],
              cfg: NormalizationConfig | None = None,
              ) -> tuple[Vocabulary, list[TokenizedDocument]]:
    """Tokenize all records and build the vocabulary.

    Terms whose corpus-wide frequency falls below the threshold are dropped
    from both the vocabulary and the documents, so vocabulary frequencies
    equal the total number of surviving occurrences.
    """
    if cfg is None:
        cfg = NormalizationConfig()
    token_lists = [tokenize(rec.text, cfg) for rec in records]
    freqs = Counter()
    for tokens in token_lists:
        freqs.update(tokens)
    kept = sorted(t for t, c in freqs.items() if c >= cfg.min_term_frequency)
    vocab = Vocabulary(kept, np.array([freqs[t] for t in kept], dtype=np.int64))

    docs = []
    for rec, tokens in zip(records, token_lists):
        ids = [vocab.id_of(t) for t in tokens if t in vocab]
        docs.append(TokenizedDocument(rec.id, ids, rec.created_at))
    if docs and all(not d.token_ids for d in docs):
        raise CorpusError("every document is empty after normalization; "
                          "relax the frequency/length thresholds")
    return vocab, docs


def window_key(ts: datetime, granularity: str):
    if granularity == "daily":
        return ts.date()
    if granularity == "weekly":
        iso = ts.isocalendar()
        return (iso[0], iso[1])
    if granularity == "monthly":
        return (ts.year, ts.month)
    if granularity == "yearly":
        return ts.year
    raise CorpusError(f"unknown granularity {granularity!r}")


def window_label(key, granularity: str) -> str:
    if granularity == "daily":
        return key.isoformat()
    if granularity == "weekly":
        return f"{key[0]}-W{key[1]:02d}"
    if granularity == "monthly":
        return f"{key[0]}-{key[1]:02d}"
    return str(key)


def window_key_from_label(label: str, granularity: str):
    if granularity == "daily":
        return datetime.fromisoformat(label).date()
    if granularity == "weekly":
        year, week = label.split("-W")
        return (int(year), int(week))
    if granularity == "monthly":
        year, month = label.split("-")
        return (int(year), int(month))
    if granularity == "yearly":
        return int(label)
    raise CorpusError(f"unknown granularity {granularity!r}")


def next_window_label(label: str, granularity: str) -> str:
    key = window_key_from_label(label, granularity)
    return window_label(_next_window(key, granularity), granularity)


def _next_window(key, granularity: str):
    if granularity == "daily":
        return key + timedelta(days=1)
    if granularity == "weekly":
        monday = datetime.fromisocalendar(key[0], key[1], 1) + timedelta(days=7)
        iso = monday.isocalendar()
        return (iso[0], iso[1])
    if granularity == "monthly":
        year, month = key
        return (year + 1, 1) if month == 12 else (year, month + 1)
    return key + 1


def build_slices(docs: list[TokenizedDocument], granularity: str,
                 n_terms: int) -> SlicedCorpus:
    """Partition documents into calendar-aligned slices.

    Documents are ordered chronologically; calendar windows with no
    documents between the first and last are kept as empty, flagged slices
    so chain indices stay aligned with calendar time.
    """
    if granularity not in GRANULARITIES:
        raise CorpusError(f"granularity must be one of {GRANULARITIES}")
    if not docs:
        raise CorpusError("cannot slice an empty corpus")
    ordered = sorted(docs, key=lambda d: (d.timestamp, d.id))

    sparse = []
    for doc in ordered:
        ids, counts = np.unique(np.asarray(doc.token_ids, dtype=np.int64),
                                return_counts=True)
        sparse.append((ids, counts.astype(np.float64)))

    spans = []
    key = window_key(ordered[0].timestamp, granularity)
    last_key = window_key(ordered[-1].timestamp, granularity)
    pos = 0
    while True:
        start = pos
        while pos < len(ordered) and window_key(ordered[pos].timestamp,
                                                granularity) == key:
            pos += 1
        spans.append(SliceSpan(start, pos, window_label(key, granularity),
                               empty=(pos == start)))
        if key == last_key:
            break
        key = _next_window(key, granularity)

    return SlicedCorpus(
        doc_ids=[d.id for d in ordered],
        docs=sparse,
        timestamps=[d.timestamp for d in ordered],
        slices=spans,
        granularity=granularity,
        n_terms=n_terms,
    )


# ---------------------------------------------------------------------------
# exchange files

def _ldac_line(doc: SparseDoc) -> str:
    ids, counts = doc
    cells = " ".join(f"{int(i)}:{int(c)}" for i, c in zip(ids, counts))
    return f"{len(ids)} {cells}".rstrip()


def export(corpus: SlicedCorpus, vocab: Vocabulary, directory,
           stem: str = "corpus") -> dict[str, Path]:
    """Write the three exchange files; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "vocab": directory / f"{stem}.vocab",
        "ldac": directory / f"{stem}.ldac",
        "slices": directory / f"{stem}.slices.json",
    }
    with paths["vocab"].open("w", encoding="utf-8") as fh:
        for i, term in enumerate(vocab.terms):
            fh.write(f"{i}\t{term}\t{int(vocab.frequencies[i])}\n")
    with paths["ldac"].open("w", encoding="utf-8") as fh:
        for doc in corpus.docs:
            fh.write(_ldac_line(doc) + "\n")
    payload = {
        "granularity": corpus.granularity,
        "documents": [
            {"id": doc_id, "timestamp": ts.isoformat()}
            for doc_id, ts in zip(corpus.doc_ids, corpus.timestamps)
        ],
        "slices": [
            {"window": s.window, "start": s.start, "stop": s.stop,
             "empty": s.empty}
            for s in corpus.slices
        ],
    }
    with paths["slices"].open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return paths


def import_corpus(directory, stem: str = "corpus",
                  ) -> tuple[SlicedCorpus, Vocabulary]:
    """Inverse of :func:`export`, with cross-file consistency checks."""
    directory = Path(directory)
    paths = {name: directory / f"{stem}{suffix}" for name, suffix in
             (("vocab", ".vocab"), ("ldac", ".ldac"),
              ("slices", ".slices.json"))}
    for name, path in paths.items():
        if not path.exists():
            raise CorpusError(f"missing {name} file: {path}")

    terms: list[str] = []
    freqs: list[int] = []
    for line_no, line in enumerate(paths["vocab"].read_text(
            encoding="utf-8").splitlines()):
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"{paths['vocab']}:{line_no + 1}: malformed line")
        term_id, term, freq = parts
        if int(term_id) != line_no:
            raise CorpusError(f"{paths['vocab']}: ids not dense at line "
                              f"{line_no + 1}")
        terms.append(term)
        freqs.append(int(freq))
    vocab = Vocabulary(terms, np.array(freqs, dtype=np.int64))

    docs: list[SparseDoc] = []
    for line_no, line in enumerate(paths["ldac"].read_text(
            encoding="utf-8").splitlines()):
        fields = line.split()
        n = int(fields[0])
        if len(fields) != n + 1:
            raise CorpusError(f"{paths['ldac']}:{line_no + 1}: expected {n} "
                              f"entries, found {len(fields) - 1}")
        ids = np.empty(n, dtype=np.int64)
        counts = np.empty(n, dtype=np.float64)
        for j, cell in enumerate(fields[1:]):
            term_id, _, count = cell.partition(":")
            ids[j] = int(term_id)
            counts[j] = float(count)
            if ids[j] >= len(vocab):
                raise CorpusError(f"unknown term id {ids[j]} in document "
                                  f"line {line_no + 1}")
        docs.append((ids, counts))

    payload = json.loads(paths["slices"].read_text(encoding="utf-8"))
    documents = payload["documents"]
    if len(documents) != len(docs):
        raise CorpusError("slice file and doc-term file disagree on "
                          "document count")
    corpus = SlicedCorpus(
        doc_ids=[d["id"] for d in documents],
        docs=docs,
        timestamps=[parse_timestamp(d["timestamp"]) for d in documents],
        slices=[SliceSpan(s["start"], s["stop"], s["window"], s["empty"])
                for s in payload["slices"]],
        granularity=payload["granularity"],
        n_terms=len(vocab),
    )
    if corpus.slices and corpus.slices[-1].stop != corpus.n_docs:
        raise CorpusError("slice boundaries do not cover all documents")
    return corpus, vocab


def build(records: list[RawRecord], cfg: NormalizationConfig | None = None,
          granularity: str = "monthly") -> tuple[SlicedCorpus, Vocabulary]:
    """normalize + slice in one call."""
    vocab, docs = normalize(records, cfg)
    return build_slices(docs, granularity, len(vocab)), vocab
