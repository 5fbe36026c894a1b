"""Dynamic topic model state.

Topics live in natural-parameter space: per (slice, topic, word) chains of
log-odds whose posterior is tracked by per-chain Gaussian moments. Word
distributions are the softmax of the smoothed means; document mixtures are
normalized free Dirichlet parameters. The whole state round-trips through a
versioned binary file bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kalman
from ._binio import FormatError, Reader, Writer

MODEL_MAGIC = b"TWDTM\x00"
MODEL_VERSION = 1

# nu-hat starting point, relative to the chain process variance.
OBS_VARIANCE_SCALE = 10.0


@dataclass
class DtmHyper:
    """Model hyperparameters. ``delta2`` (the proportion-chain variance) is
    carried but unused unless proportion drift is explicitly enabled."""

    n_topics: int
    sigma2: float = 0.005
    delta2: float = 0.005
    alpha: float | None = None
    drift_alpha: bool = False
    # tie the observation variance across words (one value per slice and
    # topic) instead of the default per-(slice, word) family
    tie_obs_variance: bool = False

    def __post_init__(self) -> None:
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if self.alpha is None:
            self.alpha = 1.0 / self.n_topics
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

    @property
    def init_variance(self) -> float:
        return kalman.default_init_variance(self.sigma2)

    @property
    def obs_variance_init(self) -> float:
        return self.sigma2 * OBS_VARIANCE_SCALE


@dataclass
class TopicChains:
    """Per-(slice, topic, word) chain state, all arrays shaped (T, K, M)."""

    natural: np.ndarray        # beta: current natural-parameter estimate
    obs: np.ndarray            # beta-hat: variational observations
    obs_variance: np.ndarray   # nu-hat
    fwd_mean: np.ndarray       # m
    fwd_variance: np.ndarray   # V
    mean: np.ndarray           # m-tilde
    variance: np.ndarray       # V-tilde
    zeta: np.ndarray           # (T, K)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.obs.shape

    def smooth(self, sigma2: float) -> None:
        """Recompute all chain moments from (obs, obs_variance)."""
        m, v = kalman.forward(self.obs, self.obs_variance, sigma2)
        self.fwd_mean, self.fwd_variance = m, v
        self.mean, self.variance = kalman.backward(m, v, sigma2)

    def refresh_zeta(self) -> None:
        self.zeta = np.exp(kalman.log_zeta(self.mean, self.variance, axis=-1))

    def zeta_consistent(self, rtol: float = 1e-9) -> bool:
        fresh = np.exp(kalman.log_zeta(self.mean, self.variance, axis=-1))
        return bool(np.allclose(self.zeta, fresh, rtol=rtol, atol=0.0))

    @classmethod
    def from_observations(cls, obs: np.ndarray, obs_variance: np.ndarray,
                          sigma2: float) -> "TopicChains":
        chains = cls(
            natural=np.zeros_like(obs), obs=obs, obs_variance=obs_variance,
            fwd_mean=np.zeros_like(obs), fwd_variance=np.ones_like(obs),
            mean=np.zeros_like(obs), variance=np.ones_like(obs),
            zeta=np.ones(obs.shape[:2]),
        )
        chains.smooth(sigma2)
        chains.refresh_zeta()
        chains.natural = chains.mean.copy()
        return chains


@dataclass
class DocState:
    """One document's data and variational parameters within its slice."""

    doc_id: str
    term_ids: np.ndarray
    counts: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray


@dataclass
class SliceMeta:
    window: str
    doc_ids: list[str]
    empty: bool = False


@dataclass
class LedgerEntry:
    """Stored per-slice likelihood pieces, retrieved (not recomputed) when a
    later batch update needs the global criterion."""

    window: str
    doc_bound: float
    topic_bound: float
    n_docs: int


@dataclass
class DtmModel:
    hyper: DtmHyper
    terms: list[str]
    chains: TopicChains
    doc_states: list[list[DocState]]
    slice_meta: list[SliceMeta]
    sstats: np.ndarray                      # (T, K, M) expected counts
    ledger: list[LedgerEntry] = field(default_factory=list)
    granularity: str = "monthly"
    fit_seconds: float = 0.0
    converged: bool = True

    @property
    def n_topics(self) -> int:
        return self.hyper.n_topics

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def n_slices(self) -> int:
        return self.chains.shape[0]

    def _check_slice(self, t: int) -> None:
        if not 0 <= t < self.n_slices:
            raise IndexError(f"slice {t} out of range [0, {self.n_slices})")

    def log_topic_word(self, t: int) -> np.ndarray:
        """(K, M) log word probabilities for slice t: log softmax of the
        smoothed means."""
        self._check_slice(t)
        means = self.chains.mean[t]
        shifted = means - means.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        return shifted - log_norm

    def topic_word_dist(self, t: int, k: int) -> np.ndarray:
        self._check_slice(t)
        if not 0 <= k < self.n_topics:
            raise IndexError(f"topic {k} out of range [0, {self.n_topics})")
        return np.exp(self.log_topic_word(t)[k])

    def doc_topic_dist(self, t: int, d: int) -> np.ndarray:
        self._check_slice(t)
        if not self.doc_states[t] or not 0 <= d < len(self.doc_states[t]):
            raise IndexError(f"document {d} of slice {t} is not fitted")
        gamma = self.doc_states[t][d].gamma
        return gamma / gamma.sum()

    def doc_topic_matrix(self, t: int) -> np.ndarray:
        """(D_t, K) normalized mixtures for every fitted document of slice t."""
        self._check_slice(t)
        states = self.doc_states[t]
        if not states:
            return np.zeros((0, self.n_topics))
        gammas = np.stack([s.gamma for s in states])
        return gammas / gammas.sum(axis=1, keepdims=True)

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        Path(path).write_bytes(serialize(self))

    @classmethod
    def load(cls, path) -> "DtmModel":
        return deserialize(Path(path).read_bytes())


def serialize(model: DtmModel) -> bytes:
    t, k, m = model.chains.shape
    w = Writer()
    w.bytes_(MODEL_MAGIC)
    w.u32(MODEL_VERSION)
    w.u32(k)
    w.u32(m)
    w.u32(t)
    w.f64(model.hyper.sigma2)
    w.f64(model.hyper.delta2)
    w.f64(model.hyper.alpha)
    w.u8(1 if model.hyper.drift_alpha else 0)
    w.u8(1 if model.hyper.tie_obs_variance else 0)
    w.str_(model.granularity)
    # timings are runtime diagnostics; a fixed zero keeps the file
    # byte-identical across reruns with equal inputs and seed
    w.f64(0.0)
    w.u8(1 if model.converged else 0)
    for arr in (model.chains.natural, model.chains.obs,
                model.chains.obs_variance, model.chains.fwd_mean,
                model.chains.fwd_variance, model.chains.mean,
                model.chains.variance):
        w.array(arr)
    w.array(model.chains.zeta)
    w.array(model.sstats)
    w.u32(len(model.terms))
    for term in model.terms:
        w.str_(term)
    w.u32(len(model.slice_meta))
    for meta, states in zip(model.slice_meta, model.doc_states):
        w.str_(meta.window)
        w.u8(1 if meta.empty else 0)
        w.u32(len(states))
        for state in states:
            w.str_(state.doc_id)
            w.u32(len(state.term_ids))
            w.array(state.term_ids, "<i8")
            w.array(state.counts)
            w.array(state.gamma)
            w.array(state.phi)
    w.u32(len(model.ledger))
    for entry in model.ledger:
        w.str_(entry.window)
        w.f64(entry.doc_bound)
        w.f64(entry.topic_bound)
        w.u32(entry.n_docs)
    return w.finish()


def deserialize(data: bytes) -> DtmModel:
    r = Reader(data)
    magic = r.bytes_(len(MODEL_MAGIC))
    if magic != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    version = r.u32()
    if version != MODEL_VERSION:
        raise FormatError(f"model file version {version} unsupported "
                          f"(this build reads version {MODEL_VERSION})")
    k, m, t = r.u32(), r.u32(), r.u32()
    hyper = DtmHyper(n_topics=k, sigma2=r.f64(), delta2=r.f64(),
                     alpha=r.f64(), drift_alpha=bool(r.u8()),
                     tie_obs_variance=bool(r.u8()))
    granularity = r.str_()
    fit_seconds = r.f64()
    converged = bool(r.u8())
    shape = (t, k, m)
    arrays = [r.array(shape) for _ in range(7)]
    zeta = r.array((t, k))
    sstats = r.array(shape)
    chains = TopicChains(arrays[0], arrays[1], arrays[2], arrays[3],
                         arrays[4], arrays[5], arrays[6], zeta)
    terms = [r.str_() for _ in range(r.u32())]
    if len(terms) != m:
        raise FormatError("term count does not match header")

    slice_meta: list[SliceMeta] = []
    doc_states: list[list[DocState]] = []
    for _ in range(r.u32()):
        window = r.str_()
        empty = bool(r.u8())
        states = []
        for _ in range(r.u32()):
            doc_id = r.str_()
            n = r.u32()
            ids = r.array((n,), "<i8")
            counts = r.array((n,))
            gamma = r.array((k,))
            phi = r.array((n, k))
            states.append(DocState(doc_id, ids, counts, gamma, phi))
        slice_meta.append(SliceMeta(window, [s.doc_id for s in states], empty))
        doc_states.append(states)
    ledger = [LedgerEntry(r.str_(), r.f64(), r.f64(), r.u32())
              for _ in range(r.u32())]
    r.expect_end()
    return DtmModel(hyper, terms, chains, doc_states, slice_meta, sstats,
                    ledger, granularity, fit_seconds, converged)


# -- JSON exports -----------------------------------------------------------

def dump_json(payload, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def export_topic_word_json(model: DtmModel, path, top_n: int = 30) -> None:
    """Top words per topic per slice, probability-sorted."""
    slices = []
    for t in range(model.n_slices):
        topics = []
        for k in range(model.n_topics):
            dist = model.topic_word_dist(t, k)
            order = np.argsort(-dist, kind="stable")[:top_n]
            topics.append({
                "id": k,
                "words": [{"term": model.terms[w],
                           "probability": float(dist[w])} for w in order],
            })
        slices.append({"window": model.slice_meta[t].window, "topics": topics})
    dump_json({"slices": slices}, path)


def export_doc_topic_json(model: DtmModel, path) -> None:
    documents = []
    for t in range(model.n_slices):
        for d, state in enumerate(model.doc_states[t]):
            documents.append({
                "id": state.doc_id,
                "slice": t,
                "proportions": [float(x) for x in model.doc_topic_dist(t, d)],
            })
    dump_json({"documents": documents}, path)
