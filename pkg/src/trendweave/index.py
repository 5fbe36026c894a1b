"""Persisted query indexes over a fitted model and its derived views.

One directory holds a handful of JSON segments (opinions, topics,
words/frequencies, sentiment, embedding, slices) plus a manifest carrying a
content-addressed version stamp. Referential integrity is checked when the
store is built and again when it is loaded.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytics
from .corpus import RawRecord, SlicedCorpus
from .model import DtmModel
from .sentiment import SentimentAnalysis

API_VERSION = 1
TOP_DOCS = 20
TOP_WORDS = 50

SEGMENT_NAMES = ("slices", "opinions", "topics", "words", "sentiment",
                 "embedding")


class IndexError_(ValueError):
    """Raised on cross-reference or version failures (named with a trailing
    underscore to avoid shadowing the builtin)."""


@dataclass
class IndexStore:
    api_version: int
    version: str
    slices: dict
    opinions: dict
    topics: list
    words: dict
    sentiment: dict
    embedding: list

    @property
    def n_topics(self) -> int:
        return len(self.topics)

    def segments(self) -> dict:
        return {"slices": self.slices, "opinions": self.opinions,
                "topics": self.topics, "words": self.words,
                "sentiment": self.sentiment, "embedding": self.embedding}


def _canonical(payload) -> bytes:
    return json.dumps(payload, indent=1, sort_keys=True,
                      ensure_ascii=False).encode("utf-8") + b"\n"


def _stamp(segments: dict) -> str:
    digest = hashlib.sha256()
    for name in SEGMENT_NAMES:
        digest.update(name.encode())
        digest.update(_canonical(segments[name]))
    return digest.hexdigest()


def build(model: DtmModel, sliced: SlicedCorpus,
          records: list[RawRecord], analysis: SentimentAnalysis,
          embeddings: list[analytics.TopicEmbedding] | None = None,
          ) -> IndexStore:
    """Assemble every query view from one corpus build.

    All inputs must describe the same documents; a document id appearing in
    the model but missing from the raw records is a build error.
    """
    if embeddings is None:
        embeddings = analytics.embed_topics(model)
    by_id = {rec.id: rec for rec in records}
    k = model.n_topics

    slices_seg = {
        "granularity": model.granularity,
        "slices": [{"index": t, "window": meta.window, "empty": meta.empty,
                    "n_docs": len(model.doc_states[t])}
                   for t, meta in enumerate(model.slice_meta)],
    }

    doc_memberships: dict[str, np.ndarray] = {}
    opinions = {}
    for t in range(model.n_slices):
        membership = model.doc_topic_matrix(t)
        for d, state in enumerate(model.doc_states[t]):
            rec = by_id.get(state.doc_id)
            if rec is None:
                raise IndexError_(f"document {state.doc_id!r} has no raw "
                                  f"record")
            doc_memberships[state.doc_id] = membership[d]
            opinions[state.doc_id] = {
                "title": rec.title,
                "content": rec.body,
                "date": rec.created_at.isoformat(),
                "url": rec.url,
                "slice": t,
                "n_tokens": int(state.counts.sum()),
                "topics": [{"topic": kk, "membership": float(membership[d, kk])}
                           for kk in range(k)],
            }

    all_membership = (np.stack(list(doc_memberships.values()))
                      if doc_memberships else np.zeros((0, k)))
    overall_props = (all_membership.mean(axis=0) if len(all_membership)
                     else np.zeros(k))

    mean_dists = []
    topics_seg = []
    for kk in range(k):
        slice_words = []
        slice_docs = []
        slice_props = []
        for t in range(model.n_slices):
            dist = model.topic_word_dist(t, kk)
            order = np.argsort(-dist, kind="stable")[:TOP_WORDS]
            slice_words.append([
                {"term": model.terms[w], "weight": float(dist[w])}
                for w in order])
            states = model.doc_states[t]
            membership = model.doc_topic_matrix(t)
            doc_order = np.argsort(-membership[:, kk], kind="stable")[:TOP_DOCS]
            slice_docs.append([
                {"id": states[d].doc_id,
                 "membership": float(membership[d, kk])}
                for d in doc_order])
            slice_props.append(float(membership[:, kk].mean())
                               if len(states) else 0.0)
        mean_dist = np.mean([model.topic_word_dist(t, kk)
                             for t in range(model.n_slices)], axis=0)
        mean_dists.append(mean_dist)
        overall_order = np.argsort(-mean_dist, kind="stable")[:TOP_WORDS]
        ranked = sorted(doc_memberships.items(), key=lambda kv: -kv[1][kk])
        topics_seg.append({
            "id": kk,
            "overall_proportion": float(overall_props[kk]),
            "slice_proportions": slice_props,
            "words_overall": [{"term": model.terms[w],
                               "weight": float(mean_dist[w])}
                              for w in overall_order],
            "words_by_slice": slice_words,
            "docs_overall": [{"id": doc_id, "membership": float(mem[kk])}
                             for doc_id, mem in ranked[:TOP_DOCS]],
            "docs_by_slice": slice_docs,
        })

    frequencies = np.zeros(model.n_terms, dtype=np.int64)
    for ids, counts in sliced.docs:
        np.add.at(frequencies, ids, counts.astype(np.int64))
    mean_matrix = np.stack(mean_dists)  # (K, M)
    ranks = np.empty_like(mean_matrix, dtype=np.int64)
    for kk in range(k):
        order = np.argsort(-mean_matrix[kk], kind="stable")
        ranks[kk, order] = np.arange(model.n_terms)
    words_seg = {}
    for w, term in enumerate(model.terms):
        words_seg[term] = {
            "id": w,
            "frequency": int(frequencies[w]),
            "topics": [{"topic": kk,
                        "weight": float(mean_matrix[kk, w]),
                        "rank": int(ranks[kk, w])}
                       for kk in range(k)],
        }

    term_triples = [
        {term: [t.pos, t.neg, t.neu] for term, t in row.items()}
        for row in analysis.term_by_slice]
    weights = np.array([len(model.doc_states[t])
                        for t in range(model.n_slices)], dtype=np.float64)
    terms_overall = {}
    for term in model.terms:
        rows = [(analysis.term_by_slice[t][term], weights[t])
                for t in range(model.n_slices)
                if term in analysis.term_by_slice[t]]
        if not rows:
            continue
        total = sum(wt for _, wt in rows)
        if total == 0:
            continue
        mean = sum(np.array(tr, dtype=float) * wt for tr, wt in rows) / total
        terms_overall[term] = [float(x) for x in mean]
    sentiment_seg = {
        "documents": {doc_id: [t.pos, t.neg, t.neu]
                      for doc_id, t in analysis.doc_triples.items()},
        "topics_overall": {str(kk): list(analysis.topic_overall[kk])
                           for kk in range(k)},
        "topics_by_slice": [{str(kk): list(row[kk]) for kk in range(k)}
                            for row in analysis.topic_by_slice],
        "terms_by_slice": term_triples,
        "terms_overall": terms_overall,
        "sentences": [{"sentence_id": s.sentence_id, "doc_id": s.doc_id,
                       "pos": s.triple.pos, "neg": s.triple.neg,
                       "neu": s.triple.neu}
                      for s in analysis.sentence_scores],
    }

    embedding_seg = [{
        "window": model.slice_meta[t].window,
        "topics": [{"topic_id": kk,
                    "x": float(embeddings[t].coordinates[kk, 0]),
                    "y": float(embeddings[t].coordinates[kk, 1])}
                   for kk in range(k)],
    } for t in range(model.n_slices)]

    segments = {"slices": slices_seg, "opinions": opinions,
                "topics": topics_seg, "words": words_seg,
                "sentiment": sentiment_seg, "embedding": embedding_seg}
    store = IndexStore(API_VERSION, _stamp(segments), slices_seg, opinions,
                       topics_seg, words_seg, sentiment_seg, embedding_seg)
    validate(store)
    return store


def validate(store: IndexStore) -> None:
    """Cross-reference checks; raises naming the first dangling id."""
    for topic in store.topics:
        for entry in topic["docs_overall"]:
            if entry["id"] not in store.opinions:
                raise IndexError_(f"topic {topic['id']} references unknown "
                                  f"document {entry['id']!r}")
        for slice_docs in topic["docs_by_slice"]:
            for entry in slice_docs:
                if entry["id"] not in store.opinions:
                    raise IndexError_(f"topic {topic['id']} references "
                                      f"unknown document {entry['id']!r}")
        for source in [topic["words_overall"], *topic["words_by_slice"]]:
            for entry in source:
                if entry["term"] not in store.words:
                    raise IndexError_(f"topic {topic['id']} references "
                                      f"unknown term {entry['term']!r}")
        docs = topic["docs_overall"]
        for a, b in zip(docs, docs[1:]):
            if a["membership"] < b["membership"]:
                raise IndexError_(f"topic {topic['id']} document list is "
                                  f"not sorted by membership")
    for doc_id in store.sentiment["documents"]:
        if doc_id not in store.opinions:
            raise IndexError_(f"sentiment references unknown document "
                              f"{doc_id!r}")


def persist(store: IndexStore, directory) -> Path:
    """Write segments plus manifest. The manifest is written last so a
    concurrent reader never sees a manifest pointing at missing segments."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    segments = store.segments()
    files = {}
    for name in SEGMENT_NAMES:
        filename = f"{name}.json"
        (directory / filename).write_bytes(_canonical(segments[name]))
        files[name] = filename
    manifest = {"api_version": store.api_version, "store_version":
                store.version, "segments": files}
    (directory / "manifest.json").write_bytes(_canonical(manifest))
    return directory


def load(directory) -> IndexStore:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise IndexError_(f"no manifest in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest["api_version"] != API_VERSION:
        raise IndexError_(
            f"store api version {manifest['api_version']} does not match "
            f"server api version {API_VERSION}")
    segments = {}
    for name in SEGMENT_NAMES:
        path = directory / manifest["segments"][name]
        if not path.exists():
            raise IndexError_(f"missing segment file {path}")
        segments[name] = json.loads(path.read_text(encoding="utf-8"))
    stamp = _stamp(segments)
    if stamp != manifest["store_version"]:
        raise IndexError_("store content does not match its version stamp")
    store = IndexStore(manifest["api_version"], stamp, segments["slices"],
                       segments["opinions"], segments["topics"],
                       segments["words"], segments["sentiment"],
                       segments["embedding"])
    validate(store)
    return store
