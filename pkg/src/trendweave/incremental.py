"""Sequential model updating.

A fitted model absorbs a new document batch as one additional time slice
without recomputing anything that depends on earlier slices: unseen words
are injected into the past at the model's long-tail value, the new slice's
observations are initialized from a static fit over the batch (topics
aligned to the existing ones first), the chain moments extend by a single
forward step plus one backward re-smoothing step, and EM runs restricted to
the new slice while the global criterion reuses the stored per-slice
likelihood ledger.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import analytics, corpus as corpus_mod, fit, kalman, lda
from .corpus import NormalizationConfig, RawRecord, SparseDoc
from .model import DocState, DtmModel, LedgerEntry, SliceMeta, TopicChains

MIN_TAIL_VOCABULARY = 100
TAIL_DECILE = 10


@dataclass
class LongTailValues:
    """Natural-parameter and observation values assigned to vanishingly
    rare words; injected into the past for newly appearing vocabulary."""

    natural: float
    obs: float


@dataclass
class UpdateBatch:
    doc_ids: list[str]
    docs: list[SparseDoc]          # term ids over the extended vocabulary
    timestamps: list[datetime]
    new_terms: list[str]           # ids n_terms .. n_terms+Q-1, in order
    window: str

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def n_new_terms(self) -> int:
        return len(self.new_terms)


def long_tail(model: DtmModel) -> LongTailValues:
    """Median chain values over the bottom probability decile of every
    topic at the last slice. Requires a vocabulary big enough to have a
    tail; pass explicit LongTailValues to the callers otherwise."""
    m = model.n_terms
    if m < MIN_TAIL_VOCABULARY:
        raise ValueError(
            f"vocabulary of {m} terms is too small to estimate long-tail "
            f"values (need >= {MIN_TAIL_VOCABULARY}); pass explicit "
            f"LongTailValues instead")
    t = model.n_slices - 1
    decile = max(m // TAIL_DECILE, 1)
    naturals = []
    observations = []
    for k in range(model.n_topics):
        order = np.argsort(model.topic_word_dist(t, k), kind="stable")
        tail = order[:decile]
        naturals.append(model.chains.natural[t, k, tail])
        observations.append(model.chains.obs[t, k, tail])
    return LongTailValues(
        natural=float(np.median(np.concatenate(naturals))),
        obs=float(np.median(np.concatenate(observations))),
    )


def _smooth_constant_chain(value: float, t: int, obs_variance: float,
                           sigma2: float):
    """Moments of a chain that observed ``value`` at every slice."""
    obs = np.full((t,), value)
    var = np.full((t,), obs_variance)
    fm, fv = kalman.forward(obs, var, sigma2)
    mean, variance = kalman.backward(fm, fv, sigma2)
    return fm, fv, mean, variance


def extend_vocabulary(model: DtmModel, new_terms: list[str],
                      tail: LongTailValues | None = None) -> DtmModel:
    """Grow the vocabulary by Q words whose past is the long-tail constant.

    Existing parameters are carried over bit-identically; the per-slice
    normalizers are refreshed because the vocabulary they sum over grew.
    """
    for term in new_terms:
        if term in model.terms:
            raise ValueError(f"duplicate word {term!r}")
    if len(set(new_terms)) != len(new_terms):
        raise ValueError("duplicate word inside the new-term list")

    t, k, m = model.chains.shape
    q = len(new_terms)
    if q == 0:
        tail_values = None
    else:
        tail_values = tail if tail is not None else long_tail(model)

    def widen(arr: np.ndarray, fill) -> np.ndarray:
        pad = np.empty((t, k, q))
        pad[...] = fill
        return np.concatenate([arr, pad], axis=2)

    c = model.chains
    if q:
        fm, fv, mean, variance = _smooth_constant_chain(
            tail_values.obs, t, model.hyper.obs_variance_init,
            model.hyper.sigma2)
        shape = (t, 1, 1)
        chains = TopicChains(
            natural=widen(c.natural, tail_values.natural),
            obs=widen(c.obs, tail_values.obs),
            obs_variance=widen(c.obs_variance,
                               model.hyper.obs_variance_init),
            fwd_mean=widen(c.fwd_mean, 0.0),
            fwd_variance=widen(c.fwd_variance, 1.0),
            mean=widen(c.mean, 0.0),
            variance=widen(c.variance, 1.0),
            zeta=c.zeta.copy(),
        )
        chains.fwd_mean[:, :, m:] = fm.reshape(shape)
        chains.fwd_variance[:, :, m:] = fv.reshape(shape)
        chains.mean[:, :, m:] = mean.reshape(shape)
        chains.variance[:, :, m:] = variance.reshape(shape)
        chains.refresh_zeta()
    else:
        chains = TopicChains(c.natural.copy(), c.obs.copy(),
                             c.obs_variance.copy(), c.fwd_mean.copy(),
                             c.fwd_variance.copy(), c.mean.copy(),
                             c.variance.copy(), c.zeta.copy())

    sstats = np.concatenate([model.sstats, np.zeros((t, k, q))], axis=2)
    return DtmModel(
        hyper=model.hyper, terms=model.terms + list(new_terms),
        chains=chains, doc_states=[list(s) for s in model.doc_states],
        slice_meta=list(model.slice_meta), sstats=sstats,
        ledger=list(model.ledger), granularity=model.granularity,
        fit_seconds=model.fit_seconds, converged=model.converged,
    )


def prepare_batch(records: list[RawRecord], model: DtmModel,
                  cfg: NormalizationConfig | None = None) -> UpdateBatch:
    """Tokenize a raw batch against the model's vocabulary.

    Known terms always survive; unseen terms become new vocabulary when
    they clear the config's frequency threshold within the batch. The batch
    must land entirely in the calendar window right after the last slice.
    """
    if cfg is None:
        cfg = NormalizationConfig()
    if not records:
        raise ValueError("batch is empty")
    known_ids = {doc_id for meta in model.slice_meta
                 for doc_id in meta.doc_ids}
    clashes = [rec.id for rec in records if rec.id in known_ids]
    if clashes:
        raise ValueError(f"batch reuses existing document ids: "
                         f"{clashes[:3]}")
    token_lists = [corpus_mod.tokenize(rec.text, cfg) for rec in records]

    known = {term: i for i, term in enumerate(model.terms)}
    unseen = {}
    for tokens in token_lists:
        for tok in tokens:
            if tok not in known:
                unseen[tok] = unseen.get(tok, 0) + 1
    new_terms = sorted(t for t, c in unseen.items()
                       if c >= cfg.min_term_frequency)
    ids = dict(known)
    for j, term in enumerate(new_terms):
        ids[term] = len(known) + j

    granularity = model.granularity
    last_window = model.slice_meta[-1].window
    expected = corpus_mod.next_window_label(last_window, granularity)
    windows = {corpus_mod.window_label(
        corpus_mod.window_key(rec.created_at, granularity), granularity)
        for rec in records}
    if len(windows) > 1:
        raise ValueError(f"batch spans multiple {granularity} windows: "
                         f"{sorted(windows)}; split it upstream")
    window = windows.pop()
    key = corpus_mod.window_key_from_label(window, granularity)
    last_key = corpus_mod.window_key_from_label(last_window, granularity)
    if not key > last_key:
        raise ValueError(f"batch window {window} is not after the model's "
                         f"last slice {last_window}")
    if window != expected:
        raise ValueError(f"batch window {window} skips ahead; the model's "
                         f"next {granularity} window is {expected}")

    ordered = sorted(zip(records, token_lists),
                     key=lambda rt: (rt[0].created_at, rt[0].id))
    docs = []
    doc_ids = []
    timestamps = []
    for rec, tokens in ordered:
        present = [ids[t] for t in tokens if t in ids]
        uniq, counts = np.unique(np.asarray(present, dtype=np.int64),
                                 return_counts=True)
        docs.append((uniq, counts.astype(np.float64)))
        doc_ids.append(rec.id)
        timestamps.append(rec.created_at)
    return UpdateBatch(doc_ids, docs, timestamps, new_terms, window)


def extend_corpus(sliced: corpus_mod.SlicedCorpus,
                  vocab: corpus_mod.Vocabulary,
                  batch: UpdateBatch,
                  ) -> tuple[corpus_mod.SlicedCorpus, corpus_mod.Vocabulary]:
    """Append a batch as one more slice so the exported corpus keeps
    matching the updated model (same term ids, one more window)."""
    new_freqs = np.zeros(len(vocab) + batch.n_new_terms, dtype=np.int64)
    new_freqs[:len(vocab)] = vocab.frequencies
    for ids, counts in batch.docs:
        np.add.at(new_freqs, ids, counts.astype(np.int64))
    new_vocab = corpus_mod.Vocabulary(vocab.terms + batch.new_terms,
                                      new_freqs)
    start = sliced.n_docs
    spans = list(sliced.slices) + [corpus_mod.SliceSpan(
        start, start + batch.n_docs, batch.window, empty=False)]
    return corpus_mod.SlicedCorpus(
        doc_ids=sliced.doc_ids + list(batch.doc_ids),
        docs=sliced.docs + list(batch.docs),
        timestamps=sliced.timestamps + list(batch.timestamps),
        slices=spans,
        granularity=sliced.granularity,
        n_terms=len(new_vocab),
    ), new_vocab


def align_topics(batch_topics: np.ndarray, model: DtmModel) -> np.ndarray:
    """Match batch topics to model topics at the last slice by minimum-cost
    bipartite matching on Jensen-Shannon distance. Returns ``perm`` with
    ``perm[k]`` the batch topic assigned to model topic k."""
    t = model.n_slices - 1
    k = model.n_topics
    cost = np.zeros((k, k))
    for i in range(k):
        reference = model.topic_word_dist(t, i)
        for j in range(k):
            cost[i, j] = analytics.jensen_shannon(reference, batch_topics[j])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=np.int64)
    perm[rows] = cols
    return perm


class LastSliceOptimizer:
    """Chain re-estimation restricted to the newest slice of one topic.

    The slice T+1 moments (and the re-smoothed slice T moments) are closed
    forms of the new observations given the frozen filtered state at T, so
    the bound is optimized directly in those coordinates; the zeta
    normalizer freezes per cycle exactly like the batch optimizer.
    """

    def __init__(self, obs: np.ndarray, obs_var: np.ndarray,
                 m_t: np.ndarray, v_t: np.ndarray, n_w: np.ndarray,
                 sigma2: float, tie_obs_variance: bool = False):
        self.obs = obs.copy()
        self.log_obs_var = np.log(obs_var)
        self.m_t = m_t
        self.v_t = v_t
        self.n_w = n_w
        self.n_total = float(n_w.sum())
        self.sigma2 = sigma2
        self.tie_obs_variance = tie_obs_variance
        self._refresh()
        self.log_zeta = float(kalman.log_zeta(self.mean_new, self.var_new))

    def _moments(self, obs, log_obs_var):
        p = self.v_t + self.sigma2
        gain = p / (p + np.exp(log_obs_var))
        mean_new = self.m_t + gain * (obs - self.m_t)
        var_new = (1.0 - gain) * p
        j = self.v_t / p
        mean_prev = self.m_t + j * (mean_new - self.m_t)
        var_prev = self.v_t + j * j * (var_new - p)
        return mean_new, var_new, mean_prev, var_prev

    def _refresh(self) -> None:
        (self.mean_new, self.var_new,
         self.mean_prev, self.var_prev) = self._moments(self.obs,
                                                        self.log_obs_var)

    def _per_word_surrogate(self, mean_new, var_new, mean_prev, var_prev):
        diff = mean_new - mean_prev
        return (-(diff * diff) / (2.0 * self.sigma2)
                - var_new / self.sigma2
                + (var_prev - var_new) / (2.0 * self.sigma2)
                + 0.5 * np.log(var_new)
                + self.n_w * mean_new
                - self.n_total * np.exp(mean_new + 0.5 * var_new
                                        - self.log_zeta))

    def closed_bound(self) -> float:
        self.log_zeta = float(kalman.log_zeta(self.mean_new, self.var_new))
        return fit.chain_bound_cancelled(
            self.n_w, self.mean_new, self.var_new, self.mean_prev,
            self.var_prev, self.log_zeta, self.sigma2)

    def _obs_gradient(self) -> np.ndarray:
        p = self.v_t + self.sigma2
        gain = p / (p + np.exp(self.log_obs_var))
        j = self.v_t / p
        diff = self.mean_new - self.mean_prev
        d_mean = (-diff / self.sigma2 * (1.0 - j)
                  + self.n_w
                  - self.n_total * np.exp(self.mean_new + 0.5 * self.var_new
                                          - self.log_zeta))
        return d_mean * gain

    def _obs_var_gradient(self) -> np.ndarray:
        eps = fit.FD_EPS
        hi = self._per_word_surrogate(*self._moments(
            self.obs, self.log_obs_var + eps))
        lo = self._per_word_surrogate(*self._moments(
            self.obs, self.log_obs_var - eps))
        return (hi - lo) / (2.0 * eps)

    def _line_search(self, direction, target: str,
                     max_halvings: int = 10) -> None:
        base = self._per_word_surrogate(self.mean_new, self.var_new,
                                        self.mean_prev, self.var_prev)
        norms = np.abs(direction)
        steps = np.where(norms > 0,
                         np.minimum(fit.MAX_OBS_STEP
                                    / np.maximum(norms, 1e-12), 1.0), 0.0)
        accepted = np.zeros(self.obs.shape, dtype=bool)
        best_obs = self.obs.copy()
        best_lov = self.log_obs_var.copy()
        for _ in range(max_halvings):
            if np.all(accepted) or not np.any(steps > 1e-12):
                break
            if target == "obs":
                cand_obs = np.where(accepted, best_obs,
                                    self.obs + steps * direction)
                cand_lov = best_lov
            else:
                cand_obs = best_obs
                cand_lov = np.where(accepted, best_lov,
                                    self.log_obs_var + steps * direction)
                cand_lov = np.clip(cand_lov, *fit.LOG_OBS_VAR_BOUNDS)
            score = self._per_word_surrogate(*self._moments(cand_obs,
                                                            cand_lov))
            better = (score > base) & ~accepted
            if np.any(better):
                if target == "obs":
                    best_obs[better] = cand_obs[better]
                else:
                    best_lov[better] = cand_lov[better]
                accepted |= better
            steps = np.where(accepted, steps, steps * 0.5)
        self.obs = best_obs
        self.log_obs_var = best_lov
        self._refresh()

    def _tied_var_line_search(self, direction: np.ndarray,
                              max_halvings: int = 10) -> None:
        tied = np.full_like(direction, direction.mean())
        base = self._per_word_surrogate(self.mean_new, self.var_new,
                                        self.mean_prev, self.var_prev).sum()
        norm = np.abs(tied).max()
        if norm <= 0:
            return
        step = min(fit.MAX_OBS_STEP / norm, 1.0)
        for _ in range(max_halvings):
            cand = np.clip(self.log_obs_var + step * tied,
                           *fit.LOG_OBS_VAR_BOUNDS)
            score = self._per_word_surrogate(*self._moments(self.obs, cand))
            if score.sum() > base:
                self.log_obs_var = cand
                self._refresh()
                return
            step *= 0.5

    def run(self, tol: float = fit.TOPIC_TOL,
            max_cycles: int = fit.TOPIC_MAX_CYCLES) -> float:
        bound = self.closed_bound()
        for _ in range(max_cycles):
            self._line_search(self._obs_gradient(), "obs")
            if self.tie_obs_variance:
                self._tied_var_line_search(self._obs_var_gradient())
            else:
                self._line_search(self._obs_var_gradient(), "obs_var")
            new_bound = self.closed_bound()
            if abs(new_bound - bound) <= tol * max(abs(bound), 1.0):
                bound = new_bound
                break
            bound = new_bound
        return bound


def sequential_update(model: DtmModel, batch: UpdateBatch, seed: int = 0,
                      tol: float = 1e-4, max_iter: int = 30,
                      tail: LongTailValues | None = None,
                      doc_tol: float = lda.DOC_TOL,
                      ) -> tuple[DtmModel, fit.FitReport]:
    """Absorb one batch as slice T+1. Slices before T keep bit-identical
    parameters; the returned model is a fresh object, so publication is a
    single reference swap."""
    started = time.perf_counter()
    if batch.n_docs < 1:
        raise ValueError("batch is empty")
    expected = corpus_mod.next_window_label(model.slice_meta[-1].window,
                                            model.granularity)
    if batch.window != expected:
        last = model.slice_meta[-1].window
        key = corpus_mod.window_key_from_label(batch.window,
                                               model.granularity)
        last_key = corpus_mod.window_key_from_label(last, model.granularity)
        if not key > last_key:
            raise ValueError(f"batch window {batch.window} is not after the "
                             f"model's last slice {last}")
        raise ValueError(f"batch window {batch.window} is not the next "
                         f"{model.granularity} window ({expected})")

    tail_values = tail if tail is not None else long_tail(model)
    extended = extend_vocabulary(model, batch.new_terms, tail=tail_values)
    t_old, k, m = extended.chains.shape
    hyper = extended.hyper

    # static fit over the batch provides the new slice's starting topics
    static = lda.fit_lda(batch.docs, m, k, hyper.alpha, seed=seed)
    perm = align_topics(static.topic_word(), extended)
    obs_new = fit.log_odds(static.topic_word()[perm])
    batch_counts = lda.corpus_term_frequencies(batch.docs, m)
    obs_new[:, batch_counts == 0] = tail_values.obs

    c = extended.chains
    obs = np.concatenate([c.obs, obs_new[None]], axis=0)
    obs_variance = np.concatenate(
        [c.obs_variance, np.full((1, k, m), hyper.obs_variance_init)], axis=0)
    m_new, v_new, mean_new, var_new, mean_prev, var_prev = \
        kalman.one_step_extend(c.fwd_mean[-1], c.fwd_variance[-1],
                               obs_new, obs_variance[-1], hyper.sigma2)
    chains = TopicChains(
        natural=np.concatenate([c.natural, mean_new[None]], axis=0),
        obs=obs, obs_variance=obs_variance,
        fwd_mean=np.concatenate([c.fwd_mean, m_new[None]], axis=0),
        fwd_variance=np.concatenate([c.fwd_variance, v_new[None]], axis=0),
        mean=np.concatenate([c.mean, mean_new[None]], axis=0),
        variance=np.concatenate([c.variance, var_new[None]], axis=0),
        zeta=np.concatenate([c.zeta, np.ones((1, k))], axis=0),
    )
    chains.mean[t_old - 1] = mean_prev
    chains.variance[t_old - 1] = var_prev
    chains.natural[t_old - 1] = mean_prev
    chains.refresh_zeta()

    updated = DtmModel(
        hyper=hyper, terms=extended.terms, chains=chains,
        doc_states=extended.doc_states + [[]],
        slice_meta=extended.slice_meta + [
            SliceMeta(batch.window, list(batch.doc_ids))],
        sstats=np.concatenate([extended.sstats, np.zeros((1, k, m))], axis=0),
        ledger=extended.ledger, granularity=extended.granularity,
        fit_seconds=model.fit_seconds, converged=False,
    )

    # EM restricted to the new slice; earlier slices enter the global
    # criterion through their stored ledger values
    t_new = t_old
    ledger_total = sum(e.doc_bound + e.topic_bound for e in updated.ledger)
    report = fit.FitReport()
    prev_criterion = None
    doc_total = 0.0
    for iteration in range(max_iter):
        log_topics = updated.log_topic_word(t_new)
        sstats_new = np.zeros((k, m))
        states = []
        doc_total = 0.0
        for doc_id, doc, _ in zip(batch.doc_ids, batch.docs,
                                  batch.timestamps):
            ids, counts = doc
            var_state, b = lda.e_step_doc(log_topics, hyper.alpha,
                                          (ids, counts), tol=doc_tol)
            doc_total += b
            if ids.size:
                np.add.at(sstats_new.T, ids, counts[:, None] * var_state.phi)
            states.append(DocState(doc_id, ids, counts, var_state.gamma,
                                   var_state.phi))
        updated.doc_states[t_new] = states
        updated.sstats[t_new] = sstats_new

        topic_total = 0.0
        for kk in range(k):
            opt = LastSliceOptimizer(
                chains.obs[t_new, kk], chains.obs_variance[t_new, kk],
                chains.fwd_mean[t_new - 1, kk],
                chains.fwd_variance[t_new - 1, kk],
                sstats_new[kk], hyper.sigma2,
                tie_obs_variance=hyper.tie_obs_variance)
            topic_total += opt.run()
            chains.obs[t_new, kk] = opt.obs
            chains.obs_variance[t_new, kk] = np.exp(opt.log_obs_var)
            chains.fwd_mean[t_new, kk] = opt.mean_new
            chains.fwd_variance[t_new, kk] = opt.var_new
            chains.mean[t_new, kk] = opt.mean_new
            chains.variance[t_new, kk] = opt.var_new
            chains.mean[t_new - 1, kk] = opt.mean_prev
            chains.variance[t_new - 1, kk] = opt.var_prev
        chains.refresh_zeta()

        criterion = ledger_total + doc_total + topic_total
        report.bounds.append(criterion)
        report.new_slice_topic_bounds.append(topic_total)
        report.iterations = iteration + 1
        if prev_criterion is not None and \
                abs(criterion - prev_criterion) <= tol * abs(prev_criterion):
            report.converged = True
            break
        prev_criterion = criterion

    chains.natural[t_new] = chains.mean[t_new]
    chains.natural[t_new - 1] = chains.mean[t_new - 1]
    updated.converged = report.converged
    new_slice_bound = sum(
        fit.chain_bound_cancelled(
            updated.sstats[t_new, kk], chains.mean[t_new, kk],
            chains.variance[t_new, kk], chains.mean[t_new - 1, kk],
            chains.variance[t_new - 1, kk],
            float(np.log(chains.zeta[t_new, kk])), hyper.sigma2)
        for kk in range(k))
    updated.ledger = updated.ledger + [LedgerEntry(
        window=batch.window, doc_bound=doc_total,
        topic_bound=new_slice_bound, n_docs=batch.n_docs)]

    elapsed = time.perf_counter() - started
    report.doc_bounds_per_slice = [doc_total]
    report.phase_seconds = {"fit": model.fit_seconds, "update": elapsed,
                            "total": model.fit_seconds + elapsed}
    return updated, report
