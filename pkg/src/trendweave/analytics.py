"""Topic-space analytics: divergence, 2D embedding, coherence.

The embedding reduces each slice's topics to the plane by classical scaling
(PCoA) of their pairwise Jensen-Shannon divergences; coherence scores
topics by top-word document co-occurrence against a reference corpus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SlicedCorpus
from .model import DtmModel, dump_json

LN2 = float(np.log(2.0))


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0.0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def jensen_shannon(p, q) -> float:
    """JS divergence with natural logarithms: 0 <= JS <= ln 2, symmetric."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal lengths")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("distributions must be nonnegative")
    mid = 0.5 * (p + q)
    return 0.5 * _kl(p, mid) + 0.5 * _kl(q, mid)


@dataclass
class TopicEmbedding:
    """2D coordinates per point plus the full PCoA eigenvalue spectrum."""

    coordinates: np.ndarray  # (n, dims)
    eigenvalues: np.ndarray


def pcoa_embed(distances: np.ndarray, dims: int = 2) -> TopicEmbedding:
    """Classical scaling: double-center -D^2/2, eigendecompose, scale the top
    nonnegative eigenvectors. Axes flip deterministically so each one's
    first nonzero loading is positive."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(d, d.T, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.abs(np.diag(d)) > 1e-12):
        raise ValueError("distance matrix must have a zero diagonal")
    n = d.shape[0]
    center = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * center @ (d * d) @ center
    eigvals, eigvecs = np.linalg.eigh(b)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    coords = np.zeros((n, dims))
    for axis in range(min(dims, n)):
        lam = eigvals[axis]
        if lam <= 1e-12:
            continue
        vec = eigvecs[:, axis]
        nonzero = np.nonzero(np.abs(vec) > 1e-12)[0]
        if nonzero.size and vec[nonzero[0]] < 0:
            vec = -vec
        coords[:, axis] = vec * np.sqrt(lam)
    return TopicEmbedding(coords, eigvals)


def embed_topics(model: DtmModel) -> list[TopicEmbedding]:
    """Per-slice PCoA over sqrt(JS) distances between that slice's topics."""
    out = []
    for t in range(model.n_slices):
        dists = topic_distance_matrix(model, t)
        out.append(pcoa_embed(dists))
    return out


def topic_distance_matrix(model: DtmModel, t: int) -> np.ndarray:
    k = model.n_topics
    topics = [model.topic_word_dist(t, kk) for kk in range(k)]
    d = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            d[i, j] = d[j, i] = np.sqrt(jensen_shannon(topics[i], topics[j]))
    return d


def export_embedding_json(model: DtmModel, path) -> None:
    payload = {"slices": []}
    for t, emb in enumerate(embed_topics(model)):
        payload["slices"].append({
            "window": model.slice_meta[t].window,
            "topics": [{"topic_id": k,
                        "x": float(emb.coordinates[k, 0]),
                        "y": float(emb.coordinates[k, 1])}
                       for k in range(model.n_topics)],
        })
    dump_json(payload, path)


# ---------------------------------------------------------------------------
# coherence

def document_occurrence(sliced: SlicedCorpus) -> list[set[int]]:
    """For each document, the set of term ids present."""
    return [set(int(i) for i in ids) for ids, _ in sliced.docs]


def umass_coherence(model: DtmModel, t: int, k: int, sliced: SlicedCorpus,
                    top_n: int = 10,
                    doc_sets: list[set[int]] | None = None,
                    ) -> tuple[float, int]:
    """Co-occurrence coherence of a topic's top words at slice t.

    Pairs are ordered by descending in-topic probability; each (i, j) with
    i ranked above j contributes log((D(w_i, w_j) + 1) / D(w_j)) where D
    counts documents in the reference corpus. Pairs whose conditioning word
    never occurs are skipped and counted.
    """
    if top_n < 2:
        raise ValueError("top_n must be >= 2")
    if doc_sets is None:
        doc_sets = document_occurrence(sliced)
    dist = model.topic_word_dist(t, k)
    top = np.argsort(-dist, kind="stable")[:top_n]

    occur = {int(w): sum(1 for s in doc_sets if int(w) in s) for w in top}
    score = 0.0
    skipped = 0
    for a in range(len(top)):
        for b in range(a + 1, len(top)):
            wi, wj = int(top[a]), int(top[b])
            if occur[wj] == 0:
                skipped += 1
                continue
            both = sum(1 for s in doc_sets if wi in s and wj in s)
            score += np.log((both + 1.0) / occur[wj])
    return float(score), skipped


def model_coherence(model: DtmModel, sliced: SlicedCorpus, top_n: int = 10,
                    ) -> tuple[float, float, list[dict]]:
    """Mean and population variance of coherence over all (slice, topic)
    pairs, plus the per-pair detail."""
    doc_sets = document_occurrence(sliced)
    detail = []
    values = []
    for t in range(model.n_slices):
        for k in range(model.n_topics):
            value, skipped = umass_coherence(model, t, k, sliced,
                                             top_n=top_n, doc_sets=doc_sets)
            values.append(value)
            detail.append({"slice": t, "topic": k, "coherence": value,
                           "skipped_pairs": skipped})
    arr = np.array(values)
    return float(arr.mean()), float(arr.var()), detail


def export_coherence_json(model: DtmModel, sliced: SlicedCorpus, path,
                          top_n: int = 10) -> None:
    mean, variance, detail = model_coherence(model, sliced, top_n=top_n)
    dump_json({"mean": mean, "variance": variance, "topics": detail}, path)
