"""Static latent topic model fitted by variational EM.

Implements the classic mixed-membership model: per-document topic
proportions drawn from a symmetric Dirichlet, per-token topic assignments,
and point-estimated topic-word distributions. Inference alternates a
per-document variational step (free Dirichlet parameter ``gamma``, per-token
multinomial parameters ``phi``) with a topic re-estimation step, driving an
evidence lower bound that must not decrease.

Besides standing on its own, this module supplies the chain initialization
and the per-document inference reused by the dynamic model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln

# Fixed symmetric pseudocount added to topic-word sufficient statistics.
TOPIC_SMOOTHING = 0.01

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 100
DOC_TOL = 1e-6
DOC_MAX_ITER = 100

SparseDoc = tuple[np.ndarray, np.ndarray]


@dataclass
class LdaModel:
    """Fitted topic model: ``n_topics`` distributions over ``n_terms`` words."""

    n_topics: int
    log_topic_word: np.ndarray  # (K, M), rows sum to 1 after exp
    alpha: float
    converged: bool = True
    bound_trace: list[float] = field(default_factory=list)

    @property
    def n_terms(self) -> int:
        return self.log_topic_word.shape[1]

    def topic_word(self) -> np.ndarray:
        return np.exp(self.log_topic_word)


@dataclass
class DocVariational:
    """Per-document free parameters: Dirichlet gamma, per-term multinomials."""

    gamma: np.ndarray  # (K,)
    phi: np.ndarray    # (n_distinct_terms, K), rows sum to 1


def _as_doc(doc: SparseDoc) -> tuple[np.ndarray, np.ndarray]:
    ids, counts = doc
    return (np.asarray(ids, dtype=np.int64),
            np.asarray(counts, dtype=np.float64))


def doc_bound(log_topics: np.ndarray, alpha: float, doc: SparseDoc,
              state: DocVariational) -> float:
    """Variational lower bound on one document's log evidence."""
    ids, counts = _as_doc(doc)
    k = log_topics.shape[0]
    gamma = state.gamma
    phi = state.phi
    if ids.size == 0:
        # No evidence: gamma = prior makes every theta term cancel exactly.
        elt = digamma(gamma) - digamma(gamma.sum())
        prior = gammaln(k * alpha) - k * gammaln(alpha) + (alpha - 1.0) * elt.sum()
        q_theta = (gammaln(gamma.sum()) - gammaln(gamma).sum()
                   + ((gamma - 1.0) * elt).sum())
        return float(prior - q_theta)

    elt = digamma(gamma) - digamma(gamma.sum())
    bound = gammaln(k * alpha) - k * gammaln(alpha) + (alpha - 1.0) * elt.sum()
    bound += counts @ (phi @ elt)
    bound += counts @ np.sum(phi * log_topics[:, ids].T, axis=1)
    bound -= (gammaln(gamma.sum()) - gammaln(gamma).sum()
              + ((gamma - 1.0) * elt).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(phi > 0.0, phi * np.log(phi), 0.0)
    bound -= counts @ plogp.sum(axis=1)
    return float(bound)


def e_step_doc(log_topics: np.ndarray, alpha: float, doc: SparseDoc,
               tol: float = DOC_TOL,
               max_iter: int = DOC_MAX_ITER) -> tuple[DocVariational, float]:
    """Optimize one document's variational parameters for fixed topics.

    Returns the state and its bound. The bound is non-decreasing over inner
    iterations; the loop stops when its relative change drops below ``tol``.
    """
    k = log_topics.shape[0]
    ids, counts = _as_doc(doc)
    if ids.size and ids.max() >= log_topics.shape[1]:
        raise ValueError(f"term id {int(ids.max())} outside vocabulary "
                         f"of size {log_topics.shape[1]}")
    if ids.size == 0:
        state = DocVariational(np.full(k, alpha), np.zeros((0, k)))
        return state, doc_bound(log_topics, alpha, doc, state)

    total = counts.sum()
    gamma = np.full(k, alpha + total / k)
    phi = np.full((ids.size, k), 1.0 / k)
    log_beta_doc = log_topics[:, ids].T  # (n, K)

    state = DocVariational(gamma, phi)
    bound = doc_bound(log_topics, alpha, doc, state)
    for _ in range(max_iter):
        log_phi = log_beta_doc + (digamma(gamma) - digamma(gamma.sum()))
        log_phi -= log_phi.max(axis=1, keepdims=True)
        phi = np.exp(log_phi)
        phi /= phi.sum(axis=1, keepdims=True)
        gamma = alpha + counts @ phi
        state = DocVariational(gamma, phi)
        new_bound = doc_bound(log_topics, alpha, doc, state)
        if abs(new_bound - bound) <= tol * abs(bound):
            bound = new_bound
            break
        bound = new_bound
    return state, bound


def corpus_term_frequencies(docs: list[SparseDoc], n_terms: int) -> np.ndarray:
    freqs = np.zeros(n_terms)
    for doc in docs:
        ids, counts = _as_doc(doc)
        np.add.at(freqs, ids, counts)
    return freqs


def _init_topics(docs: list[SparseDoc], n_terms: int, n_topics: int,
                 rng: np.random.Generator) -> np.ndarray:
    # Seeded perturbation of the corpus unigram frequencies; strictly
    # positive so log probabilities stay finite.
    freqs = corpus_term_frequencies(docs, n_terms)
    base = freqs / max(freqs.sum(), 1.0) + 1.0 / n_terms
    unnorm = base[None, :] * rng.uniform(0.5, 1.5, size=(n_topics, n_terms))
    return np.log(unnorm / unnorm.sum(axis=1, keepdims=True))


def fit_lda(docs: list[SparseDoc], n_terms: int, n_topics: int,
            alpha: float | None = None, seed: int = 0,
            tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
            doc_tol: float = DOC_TOL,
            doc_max_iter: int = DOC_MAX_ITER) -> LdaModel:
    """Fit topics by variational EM. Deterministic for a fixed seed."""
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if not docs:
        raise ValueError("corpus is empty")
    if n_topics > n_terms:
        raise ValueError(f"n_topics={n_topics} exceeds the number of "
                         f"distinct terms ({n_terms})")
    if alpha is None:
        alpha = 1.0 / n_topics

    rng = np.random.default_rng(seed)
    log_topics = _init_topics(docs, n_terms, n_topics, rng)

    trace: list[float] = []
    converged = False
    for _ in range(max_iter):
        sstats = np.zeros((n_topics, n_terms))
        bound = 0.0
        for doc in docs:
            ids, counts = _as_doc(doc)
            state, b = e_step_doc(log_topics, alpha, (ids, counts),
                                  tol=doc_tol, max_iter=doc_max_iter)
            bound += b
            if ids.size:
                np.add.at(sstats.T, ids, counts[:, None] * state.phi)
        trace.append(bound)
        smoothed = sstats + TOPIC_SMOOTHING
        log_topics = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * abs(trace[-2]):
            converged = True
            break
    return LdaModel(n_topics, log_topics, alpha, converged, trace)


def infer_corpus(model: LdaModel, docs: list[SparseDoc],
                 tol: float = DOC_TOL,
                 max_iter: int = DOC_MAX_ITER) -> tuple[list[DocVariational], float]:
    """E-step over a corpus against fixed topics; returns states and bound sum."""
    states = []
    total = 0.0
    for doc in docs:
        state, b = e_step_doc(model.log_topic_word, model.alpha, doc,
                              tol=tol, max_iter=max_iter)
        states.append(state)
        total += b
    return states, total


def lda_bound(model: LdaModel, docs: list[SparseDoc],
              states: list[DocVariational]) -> float:
    """Corpus-level bound at a given variational state (no re-optimization)."""
    if len(docs) != len(states):
        raise ValueError("one variational state per document required")
    return sum(doc_bound(model.log_topic_word, model.alpha, doc, state)
               for doc, state in zip(docs, states))


# ---------------------------------------------------------------------------
# persistence

LDA_MAGIC = b"TWLDA\x00"
LDA_VERSION = 1


def save_lda(model: LdaModel, path) -> None:
    from pathlib import Path

    from ._binio import Writer

    w = Writer()
    w.bytes_(LDA_MAGIC)
    w.u32(LDA_VERSION)
    w.u32(model.n_topics)
    w.u32(model.n_terms)
    w.f64(model.alpha)
    w.u8(1 if model.converged else 0)
    w.array(model.log_topic_word)
    w.u32(len(model.bound_trace))
    for value in model.bound_trace:
        w.f64(value)
    Path(path).write_bytes(w.finish())


def load_lda(path) -> LdaModel:
    from pathlib import Path

    from ._binio import FormatError, Reader

    r = Reader(Path(path).read_bytes())
    if r.bytes_(len(LDA_MAGIC)) != LDA_MAGIC:
        raise FormatError("not a static model file (bad magic)")
    version = r.u32()
    if version != LDA_VERSION:
        raise FormatError(f"static model file version {version} unsupported "
                          f"(this build reads version {LDA_VERSION})")
    k, m = r.u32(), r.u32()
    alpha = r.f64()
    converged = bool(r.u8())
    log_topic_word = r.array((k, m))
    trace = [r.f64() for _ in range(r.u32())]
    r.expect_end()
    return LdaModel(k, log_topic_word, alpha, converged, trace)
