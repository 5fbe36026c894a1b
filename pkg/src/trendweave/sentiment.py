"""Sentence-level sentiment and its aggregation lattice.

Sentences carry normalized (positive, negative, neutral) triples, either
from the bundled lexicon scorer or from a precomputed scores file. Triples
then roll up: documents average their sentences, topics weight documents by
membership, terms marginalize topics by Bayes inversion, and both document
and term views can be conditioned on a topic (those conditioned triples sum
to the conditioning mass, not to one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _lexicon
from .corpus import NormalizationConfig, RawRecord, split_sentences, tokenize
from .model import DtmModel, dump_json


class SentimentTriple(NamedTuple):
    pos: float
    neg: float
    neu: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


def _triple(arr) -> SentimentTriple:
    return SentimentTriple(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass
class Lexicon:
    positive: frozenset[str]
    negative: frozenset[str]

    def __post_init__(self) -> None:
        both = self.positive & self.negative
        if both:
            raise ValueError(f"terms tagged both positive and negative: "
                             f"{sorted(both)[:5]}")

    @classmethod
    def bundled(cls) -> "Lexicon":
        return cls(_lexicon.POSITIVE, _lexicon.NEGATIVE)

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        """JSON object {"positive": [...], "negative": [...]}."""
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(frozenset(payload["positive"]),
                   frozenset(payload["negative"]))


def score_sentence(tokens: list[str], lexicon: Lexicon) -> SentimentTriple:
    """Fraction of positive / negative tokens; the rest is neutral."""
    if not tokens:
        raise ValueError("cannot score an empty sentence")
    n = len(tokens)
    pos = sum(1 for t in tokens if t in lexicon.positive) / n
    neg = sum(1 for t in tokens if t in lexicon.negative) / n
    return SentimentTriple(pos, neg, 1.0 - pos - neg)


def doc_score(sentences: list[SentimentTriple]) -> SentimentTriple:
    """Component-wise mean over the document's sentence triples."""
    if not sentences:
        raise ValueError("document has no sentences")
    return _triple(np.mean([s.as_array() for s in sentences], axis=0))


def topic_score(doc_triples: list[SentimentTriple],
                doc_weights: np.ndarray) -> SentimentTriple:
    """Membership-weighted document triples, renormalized to the simplex.

    ``doc_weights`` are P(d|z); the normalizer divides by the summed mass,
    which for unit-sum doc triples equals 1 / sum of the weights.
    """
    weights = np.asarray(doc_weights, dtype=np.float64)
    if len(doc_triples) != weights.size:
        raise ValueError("one weight per document required")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(weights > 0):
        raise ValueError("at least one document weight must be positive")
    stacked = np.stack([t.as_array() for t in doc_triples])
    raw = weights @ stacked
    return _triple(raw / raw.sum())


def term_score(topic_triples: list[SentimentTriple],
               p_w_given_z: np.ndarray,
               p_z: np.ndarray) -> SentimentTriple:
    """Bayes inversion over topics: sum_z sc_z * P(w|z) P(z) / P(w)."""
    p_w_given_z = np.asarray(p_w_given_z, dtype=np.float64)
    p_z = np.asarray(p_z, dtype=np.float64)
    p_w = float(p_w_given_z @ p_z)
    if p_w <= 0:
        raise ValueError("word has zero probability under every topic")
    p_z_given_w = p_w_given_z * p_z / p_w
    stacked = np.stack([t.as_array() for t in topic_triples])
    return _triple(p_z_given_w @ stacked)


def doc_score_given_topic(term_triples: list[SentimentTriple],
                          p_w_given_z: np.ndarray, p_z_given_d: float,
                          normalize: bool = False) -> SentimentTriple:
    """(sum_w sc_w * P(w|z)) * P(z|d); sums to P(z|d) unless normalized."""
    weights = np.asarray(p_w_given_z, dtype=np.float64)
    stacked = np.stack([t.as_array() for t in term_triples])
    mass = (weights @ stacked) * p_z_given_d
    if normalize:
        total = mass.sum()
        if total > 0:
            mass = mass / total
    return _triple(mass)


def term_score_given_topic(doc_triples: list[SentimentTriple],
                           p_d_given_z: np.ndarray, p_z_given_w: float,
                           normalize: bool = False) -> SentimentTriple:
    """(sum_d sc_d * P(d|z)) * P(z|w); sums to P(z|w) * sum_d P(d|z)."""
    weights = np.asarray(p_d_given_z, dtype=np.float64)
    stacked = np.stack([t.as_array() for t in doc_triples])
    mass = (weights @ stacked) * p_z_given_w
    if normalize:
        total = mass.sum()
        if total > 0:
            mass = mass / total
    return _triple(mass)


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class SentenceScore:
    sentence_id: str
    doc_id: str
    triple: SentimentTriple


def score_records(records: list[RawRecord], lexicon: Lexicon | None = None,
                  cfg: NormalizationConfig | None = None,
                  ) -> list[SentenceScore]:
    """Split each record's text into sentences and score them with the
    lexicon. Token filtering mirrors corpus normalization except that
    frequency thresholds do not apply at sentence level."""
    if lexicon is None:
        lexicon = Lexicon.bundled()
    if cfg is None:
        cfg = NormalizationConfig()
    out = []
    for rec in records:
        for j, sentence in enumerate(split_sentences(rec.text)):
            tokens = tokenize(sentence, cfg)
            if not tokens:
                continue
            out.append(SentenceScore(f"{rec.id}#{j}", rec.id,
                                     score_sentence(tokens, lexicon)))
    return out


def load_scores_file(path) -> list[SentenceScore]:
    """Precomputed scorer output: a JSON array of
    {sentence_id, doc_id, pos, neg, neu} objects."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for entry in payload:
        out.append(SentenceScore(
            str(entry["sentence_id"]), str(entry["doc_id"]),
            SentimentTriple(float(entry["pos"]), float(entry["neg"]),
                            float(entry["neu"]))))
    return out


def doc_scores(sentence_scores: list[SentenceScore]) -> dict[str,
                                                             SentimentTriple]:
    by_doc: dict[str, list[SentimentTriple]] = {}
    for score in sentence_scores:
        by_doc.setdefault(score.doc_id, []).append(score.triple)
    return {doc_id: doc_score(triples)
            for doc_id, triples in by_doc.items()}


@dataclass
class SentimentAnalysis:
    """All aggregation levels for one model + scored corpus."""

    sentence_scores: list[SentenceScore]
    doc_triples: dict[str, SentimentTriple]
    topic_by_slice: list[list[SentimentTriple]]   # [t][k]
    topic_overall: list[SentimentTriple]          # [k]
    term_by_slice: list[dict[str, SentimentTriple]]

    def as_files(self, directory) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "sentence": directory / "sentiment-sentence.json",
            "doc": directory / "sentiment-doc.json",
            "topic": directory / "sentiment-topic.json",
            "term": directory / "sentiment-term.json",
        }
        dump_json([{"sentence_id": s.sentence_id, "doc_id": s.doc_id,
                    "pos": s.triple.pos, "neg": s.triple.neg,
                    "neu": s.triple.neu} for s in self.sentence_scores],
                  paths["sentence"])
        dump_json({doc_id: list(t) for doc_id, t in self.doc_triples.items()},
                  paths["doc"])
        dump_json({
            "overall": {str(k): list(t)
                        for k, t in enumerate(self.topic_overall)},
            "slices": [{str(k): list(t) for k, t in enumerate(row)}
                       for row in self.topic_by_slice],
        }, paths["topic"])
        dump_json([{term: list(t) for term, t in row.items()}
                   for row in self.term_by_slice], paths["term"])
        return paths


def analyze(model: DtmModel, sentence_scores: list[SentenceScore],
            neutral_default: SentimentTriple = SentimentTriple(0.0, 0.0, 1.0),
            ) -> SentimentAnalysis:
    """Aggregate sentence scores against a fitted model, slice by slice.

    Documents without scored sentences fall back to fully neutral. Topic
    and term aggregation use each slice's own topic-word distributions and
    document memberships; an overall topic view weighs every document in
    the corpus.
    """
    docs = doc_scores(sentence_scores)
    k = model.n_topics

    topic_by_slice: list[list[SentimentTriple]] = []
    term_by_slice: list[dict[str, SentimentTriple]] = []
    all_doc_triples: list[SentimentTriple] = []
    all_memberships: list[np.ndarray] = []

    for t in range(model.n_slices):
        states = model.doc_states[t]
        doc_triples = [docs.get(s.doc_id, neutral_default) for s in states]
        membership = model.doc_topic_matrix(t)  # (D_t, K) = P(z|d)
        all_doc_triples.extend(doc_triples)
        all_memberships.append(membership)

        if not states:
            flat = [SentimentTriple(0.0, 0.0, 1.0)] * k
            topic_by_slice.append(flat)
            term_by_slice.append({})
            continue

        p_z = membership.mean(axis=0)
        topics_t = []
        for kk in range(k):
            weights = membership[:, kk] / (len(states) * p_z[kk])  # P(d|z)
            topics_t.append(topic_score(doc_triples, weights))
        topic_by_slice.append(topics_t)

        p_w_given_z = np.stack([model.topic_word_dist(t, kk)
                                for kk in range(k)])  # (K, M)
        terms_t = {}
        for w, term in enumerate(model.terms):
            p_w = float(p_w_given_z[:, w] @ p_z)
            if p_w <= 0:
                continue
            terms_t[term] = term_score(topics_t, p_w_given_z[:, w], p_z)
        term_by_slice.append(terms_t)

    membership_all = (np.concatenate(all_memberships, axis=0)
                      if all_memberships else np.zeros((0, k)))
    if membership_all.shape[0]:
        p_z_all = membership_all.mean(axis=0)
        overall = []
        for kk in range(k):
            weights = membership_all[:, kk] / (membership_all.shape[0]
                                               * p_z_all[kk])
            overall.append(topic_score(all_doc_triples, weights))
    else:
        overall = [SentimentTriple(0.0, 0.0, 1.0)] * k

    return SentimentAnalysis(sentence_scores, docs, topic_by_slice, overall,
                             term_by_slice)


def run_pipeline(model: DtmModel, records: list[RawRecord] | None = None,
                 scores_file=None, lexicon: Lexicon | None = None,
                 cfg: NormalizationConfig | None = None) -> SentimentAnalysis:
    """Score (or load precomputed scores) and aggregate. The two sources
    are interchangeable: same triples in, same aggregates out."""
    if scores_file is not None:
        scores = load_scores_file(scores_file)
    elif records is not None:
        scores = score_records(records, lexicon=lexicon, cfg=cfg)
    else:
        raise ValueError("need records or a scores file")
    return analyze(model, scores)
