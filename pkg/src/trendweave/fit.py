"""Batch fitting of the dynamic topic model.

Initialization pools the corpus, fits the static model, and seeds every
slice's chain observations from the topic log-odds. The EM loop then
alternates a per-document variational step (chronological, against each
slice's topic distributions) with a per-topic chain re-estimation step.

The chain objective is the per-slice likelihood lower bound in its two
algebraically equal forms: the explicit three-term sum (chain transition
expectation, data term with the zeta normalizer, Gaussian entropy) and the
cancelled closed form that drops the mutually annihilating pieces. The
optimizer maximizes it by coordinate ascent over per-word chains: with the
zeta normalizers frozen the bound separates across words, each accepted line
search step raises the separable surrogate, and re-closing zeta can only
raise the bound further, so the sequence is monotone by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kalman, lda
from .corpus import SlicedCorpus
from .model import (DocState, DtmHyper, DtmModel, LedgerEntry, SliceMeta,
                    TopicChains)

LOG_2PI = float(np.log(2.0 * np.pi))

TOPIC_TOL = 1e-5
TOPIC_MAX_CYCLES = 25
MAX_OBS_STEP = 10.0          # bounded line search: largest single move
LOG_OBS_VAR_BOUNDS = (np.log(1e-10), np.log(1e10))
FD_EPS = 1e-5


def log_odds(probabilities: np.ndarray, axis: int = -1) -> np.ndarray:
    """Natural parameterization: log of each probability against the mean
    probability of a randomly chosen word (1/M), so a flat topic maps to 0."""
    p = np.asarray(probabilities, dtype=np.float64)
    m = p.shape[axis]
    return np.log(p) + np.log(m)


# ---------------------------------------------------------------------------
# per-(slice, topic) likelihood bound

def chain_bound_terms(n_w: np.ndarray, mean_t: np.ndarray, var_t: np.ndarray,
                      prev_mean: np.ndarray, prev_var: np.ndarray,
                      log_zeta_t: float, sigma2: float,
                      ) -> tuple[float, float, float]:
    """The three uncancelled bound terms for one slice of one topic.

    Term 1 is the expected chain transition log-density, term 2 the data
    term bounded through the zeta normalizer, term 3 the Gaussian entropy.
    """
    n_w = np.asarray(n_w, dtype=np.float64)
    v = mean_t.size
    n_total = float(n_w.sum())
    diff = mean_t - prev_mean
    term1 = (-(v / 2.0) * (np.log(sigma2) + LOG_2PI)
             - diff @ diff / (2.0 * sigma2)
             - var_t.sum() / sigma2
             + (prev_var.sum() - var_t.sum()) / (2.0 * sigma2))
    log_sum = kalman.log_zeta(mean_t, var_t)
    term2 = (float(n_w @ mean_t)
             - n_total * float(np.exp(log_sum - log_zeta_t))
             - n_total * log_zeta_t
             + n_total)
    term3 = 0.5 * float(np.log(var_t).sum()) + (v / 2.0) * LOG_2PI
    return float(term1), float(term2), float(term3)


def chain_bound_cancelled(n_w: np.ndarray, mean_t: np.ndarray,
                          var_t: np.ndarray, prev_mean: np.ndarray,
                          prev_var: np.ndarray, log_zeta_t: float,
                          sigma2: float) -> float:
    """Closed form after the cancellations: the two (V/2) log 2 pi pieces
    drop between term 1 and the entropy, and with a consistent zeta the data
    term's n * zeta^{-1} * sum exp(mean + var/2) collapses against -n."""
    n_w = np.asarray(n_w, dtype=np.float64)
    v = mean_t.size
    n_total = float(n_w.sum())
    diff = mean_t - prev_mean
    return float(-(v / 2.0) * np.log(sigma2)
                 - diff @ diff / (2.0 * sigma2)
                 - var_t.sum() / sigma2
                 + (prev_var.sum() - var_t.sum()) / (2.0 * sigma2)
                 + n_w @ mean_t
                 - n_total * log_zeta_t
                 + 0.5 * np.log(var_t).sum())


def _prev_moments(mean: np.ndarray, var: np.ndarray, sigma2: float,
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Previous-slice smoothed moments for every slice; slice 0 gets the
    smoothed initial state (one extra backward step onto the prior)."""
    m0, v0 = kalman.smooth_initial_state(mean[0], var[0], sigma2)
    prev_mean = np.concatenate([m0[None], mean[:-1]], axis=0)
    prev_var = np.concatenate([v0[None], var[:-1]], axis=0)
    return prev_mean, prev_var


def slice_bound(model: DtmModel, sliced: SlicedCorpus, t: int) -> float:
    """Topic-side bound for slice t, summed over topics, with the expected
    per-topic word counts from the latest E step."""
    if not 0 <= t < model.n_slices:
        raise IndexError(f"slice {t} out of range")
    if sliced.n_slices != model.n_slices:
        raise ValueError("corpus and model disagree on the slice count")
    sigma2 = model.hyper.sigma2
    prev_mean, prev_var = _prev_moments(model.chains.mean,
                                        model.chains.variance, sigma2)
    total = 0.0
    for k in range(model.n_topics):
        total += chain_bound_cancelled(
            model.sstats[t, k], model.chains.mean[t, k],
            model.chains.variance[t, k], prev_mean[t, k], prev_var[t, k],
            float(np.log(model.chains.zeta[t, k])), sigma2)
    return total


def topic_bound_terms(model: DtmModel, t: int, k: int,
                      ) -> tuple[float, float, float]:
    sigma2 = model.hyper.sigma2
    prev_mean, prev_var = _prev_moments(model.chains.mean,
                                        model.chains.variance, sigma2)
    return chain_bound_terms(
        model.sstats[t, k], model.chains.mean[t, k],
        model.chains.variance[t, k], prev_mean[t, k], prev_var[t, k],
        float(np.log(model.chains.zeta[t, k])), sigma2)


def doc_bounds(model: DtmModel) -> list[float]:
    """Per-slice sums of the per-document bounds at the stored state."""
    sums = []
    for t in range(model.n_slices):
        log_topics = model.log_topic_word(t)
        total = 0.0
        for state in model.doc_states[t]:
            total += lda.doc_bound(log_topics, model.hyper.alpha,
                                   (state.term_ids, state.counts),
                                   lda.DocVariational(state.gamma, state.phi))
        sums.append(total)
    return sums


def total_bound(model: DtmModel, sliced: SlicedCorpus) -> float:
    """EM convergence functional: topic-side slice bounds plus document
    bounds."""
    topic_part = sum(slice_bound(model, sliced, t)
                     for t in range(model.n_slices))
    return topic_part + sum(doc_bounds(model))


# ---------------------------------------------------------------------------
# chain optimizer (M step)

class ChainOptimizer:
    """Coordinate ascent on one topic's per-word chains.

    Works on (T, M) views of the observation and observation-variance
    arrays. All candidate evaluations run vectorized across words; the line
    search tracks a per-word step size and accepts per word.
    """

    def __init__(self, obs: np.ndarray, obs_var: np.ndarray,
                 n_tw: np.ndarray, sigma2: float,
                 tie_obs_variance: bool = False):
        self.obs = obs.copy()
        self.log_obs_var = np.log(obs_var)
        self.n_tw = n_tw
        self.n_totals = n_tw.sum(axis=1)
        self.sigma2 = sigma2
        self.tie_obs_variance = tie_obs_variance
        self.t = obs.shape[0]
        self.m = obs.shape[1]
        self._smooth()
        self.log_zeta = kalman.log_zeta(self.mean, self.var, axis=1)

    def _smooth(self) -> None:
        obs_var = np.exp(self.log_obs_var)
        fm, fv = kalman.forward(self.obs, obs_var, self.sigma2)
        self.fwd_mean, self.fwd_var = fm, fv
        self.mean, self.var = kalman.backward(fm, fv, self.sigma2)

    def _smooth_candidate(self, obs, log_obs_var):
        fm, fv = kalman.forward(obs, np.exp(log_obs_var), self.sigma2)
        return kalman.backward(fm, fv, self.sigma2)

    def _per_word_surrogate(self, mean, var) -> np.ndarray:
        """Per-word objective with the zeta normalizers frozen. Summed over
        words (plus parameter-free constants) this lower-bounds the closed
        topic bound, with equality when zeta is re-closed."""
        prev_mean, prev_var = _prev_moments(mean, var, self.sigma2)
        diff = mean - prev_mean
        chain = (-(diff * diff).sum(axis=0) / (2.0 * self.sigma2)
                 - var.sum(axis=0) / self.sigma2
                 + (prev_var - var).sum(axis=0) / (2.0 * self.sigma2)
                 + 0.5 * np.log(var).sum(axis=0))
        data = (self.n_tw * mean).sum(axis=0)
        penalty = (self.n_totals[:, None]
                   * np.exp(mean + 0.5 * var - self.log_zeta[:, None]))
        return chain + data - penalty.sum(axis=0)

    def closed_bound(self) -> float:
        self.log_zeta = kalman.log_zeta(self.mean, self.var, axis=1)
        prev_mean, prev_var = _prev_moments(self.mean, self.var, self.sigma2)
        total = 0.0
        for t in range(self.t):
            total += chain_bound_cancelled(
                self.n_tw[t], self.mean[t], self.var[t], prev_mean[t],
                prev_var[t], float(self.log_zeta[t]), self.sigma2)
        return total

    def _mean_gradient(self) -> np.ndarray:
        """d(surrogate)/d(mean), shape (T, M)."""
        prev_mean, prev_var = _prev_moments(self.mean, self.var, self.sigma2)
        grad = np.zeros_like(self.mean)
        diff = self.mean - prev_mean
        # slice 0's "previous" is the smoothed initial state, itself a
        # deterministic shrinkage of mean[0]; fold its derivative in.
        j0 = (kalman.default_init_variance(self.sigma2)
              / (kalman.default_init_variance(self.sigma2) + self.sigma2))
        grad[0] -= diff[0] * (1.0 - j0) / self.sigma2
        if self.t > 1:
            grad[1:] -= diff[1:] / self.sigma2
            grad[:-1] += diff[1:] / self.sigma2
        grad += self.n_tw
        grad -= (self.n_totals[:, None]
                 * np.exp(self.mean + 0.5 * self.var - self.log_zeta[:, None]))
        return grad

    def _obs_gradient(self) -> np.ndarray:
        """Chain rule through the smoother: the map obs -> mean is linear
        (zero prior mean), so columns of its Jacobian are impulse responses."""
        g_mean = self._mean_gradient()
        obs_var = np.exp(self.log_obs_var)
        grad = np.zeros_like(self.obs)
        for s in range(self.t):
            impulse = np.zeros_like(self.obs)
            impulse[s] = 1.0
            fm, fv = kalman.forward(impulse, obs_var, self.sigma2)
            resp, _ = kalman.backward(fm, fv, self.sigma2)
            grad[s] = (resp * g_mean).sum(axis=0)
        return grad

    def _line_search(self, direction: np.ndarray, target: str,
                     max_halvings: int = 10) -> None:
        """Per-word backtracking along ``direction``; accepts words whose
        frozen-zeta surrogate improves, halving the rest."""
        base = self._per_word_surrogate(self.mean, self.var)
        norms = np.max(np.abs(direction), axis=0)
        steps = np.where(norms > 0, MAX_OBS_STEP / np.maximum(norms, 1e-12), 0.0)
        steps = np.minimum(steps, 1.0)
        accepted = np.zeros(self.m, dtype=bool)
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
                cand_lov = np.clip(cand_lov, *LOG_OBS_VAR_BOUNDS)
            mean, var = self._smooth_candidate(cand_obs, cand_lov)
            score = self._per_word_surrogate(mean, var)
            better = (score > base) & ~accepted
            if np.any(better):
                if target == "obs":
                    best_obs[:, better] = cand_obs[:, better]
                else:
                    best_lov[:, better] = cand_lov[:, better]
                accepted |= better
            steps = np.where(accepted, steps, steps * 0.5)
        self.obs = best_obs
        self.log_obs_var = best_lov
        self._smooth()

    def _obs_var_gradient(self) -> np.ndarray:
        """Central finite differences on log obs-variance, one slice index
        at a time (vectorized across words)."""
        grad = np.zeros_like(self.log_obs_var)
        for s in range(self.t):
            bumped = self.log_obs_var.copy()
            bumped[s] += FD_EPS
            mean, var = self._smooth_candidate(self.obs, bumped)
            hi = self._per_word_surrogate(mean, var)
            bumped[s] -= 2.0 * FD_EPS
            mean, var = self._smooth_candidate(self.obs, bumped)
            lo = self._per_word_surrogate(mean, var)
            grad[s] = (hi - lo) / (2.0 * FD_EPS)
        return grad

    def _tied_var_line_search(self, direction: np.ndarray,
                              max_halvings: int = 10) -> None:
        """Shared-step search keeping one observation variance per slice:
        every word moves along the word-averaged direction together and the
        step is accepted on the summed surrogate."""
        tied = np.broadcast_to(direction.mean(axis=1, keepdims=True),
                               direction.shape)
        base = self._per_word_surrogate(self.mean, self.var).sum()
        norm = np.abs(tied).max()
        if norm <= 0:
            return
        step = min(MAX_OBS_STEP / norm, 1.0)
        for _ in range(max_halvings):
            cand = np.clip(self.log_obs_var + step * tied,
                           *LOG_OBS_VAR_BOUNDS)
            mean, var = self._smooth_candidate(self.obs, cand)
            if self._per_word_surrogate(mean, var).sum() > base:
                self.log_obs_var = cand
                self._smooth()
                return
            step *= 0.5

    def run(self, tol: float = TOPIC_TOL,
            max_cycles: int = TOPIC_MAX_CYCLES) -> float:
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


# ---------------------------------------------------------------------------
# EM driver

@dataclass
class FitReport:
    bounds: list[float] = field(default_factory=list)
    doc_bounds_per_slice: list[float] = field(default_factory=list)
    topic_terms: list[dict] = field(default_factory=list)
    phase_seconds: dict = field(default_factory=dict)
    converged: bool = False
    iterations: int = 0
    # populated by sequential updates only: per-iteration bound of the slice
    # being fitted
    new_slice_topic_bounds: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "bounds": self.bounds,
            "doc_bounds_per_slice": self.doc_bounds_per_slice,
            "topic_terms": self.topic_terms,
            "phase_seconds": self.phase_seconds,
            "converged": self.converged,
            "iterations": self.iterations,
            "new_slice_topic_bounds": self.new_slice_topic_bounds,
        }


def init_dtm(sliced: SlicedCorpus, hyper: DtmHyper, seed: int = 0,
             terms: list[str] | None = None,
             lda_max_iter: int = lda.DEFAULT_MAX_ITER) -> DtmModel:
    """Chain initialization from the pooled static fit, timestamps ignored.

    Every slice's observations start at the pooled topic log-odds; chains
    are smoothed and the zeta normalizers computed so the bound is ready to
    evaluate before the first EM iteration.
    """
    if sliced.n_slices < 1:
        raise ValueError("corpus has no slices")
    static = lda.fit_lda(sliced.pooled_docs(), sliced.n_terms,
                         hyper.n_topics, hyper.alpha, seed=seed,
                         max_iter=lda_max_iter)
    odds = log_odds(np.exp(static.log_topic_word))
    t = sliced.n_slices
    obs = np.tile(odds[None, :, :], (t, 1, 1))
    obs_var = np.full_like(obs, hyper.obs_variance_init)
    chains = TopicChains.from_observations(obs, obs_var, hyper.sigma2)
    if terms is None:
        terms = [f"w{i:05d}" for i in range(sliced.n_terms)]
    meta = [SliceMeta(window=s.window,
                      doc_ids=[sliced.doc_ids[i]
                               for i in sliced.slice_doc_range(ti)],
                      empty=s.empty)
            for ti, s in enumerate(sliced.slices)]
    return DtmModel(
        hyper=hyper, terms=list(terms), chains=chains,
        doc_states=[[] for _ in range(t)], slice_meta=meta,
        sstats=np.zeros_like(obs), ledger=[],
        granularity=sliced.granularity,
    )


def e_step(model: DtmModel, sliced: SlicedCorpus,
           doc_tol: float = lda.DOC_TOL,
           doc_max_iter: int = lda.DOC_MAX_ITER,
           ) -> tuple[list[list[DocState]], np.ndarray, list[float]]:
    """Per-document inference in chronological order, slice by slice."""
    t_total = model.n_slices
    sstats = np.zeros_like(model.sstats)
    doc_states: list[list[DocState]] = []
    per_slice: list[float] = []
    alpha = model.hyper.alpha
    for t in range(t_total):
        log_topics = model.log_topic_word(t)
        states: list[DocState] = []
        bound_t = 0.0
        for i in sliced.slice_doc_range(t):
            ids, counts = sliced.docs[i]
            var_state, b = lda.e_step_doc(log_topics, alpha, (ids, counts),
                                          tol=doc_tol, max_iter=doc_max_iter)
            bound_t += b
            if ids.size:
                np.add.at(sstats[t].T, ids,
                          counts[:, None] * var_state.phi)
            states.append(DocState(sliced.doc_ids[i], ids, counts,
                                   var_state.gamma, var_state.phi))
        doc_states.append(states)
        per_slice.append(bound_t)
    return doc_states, sstats, per_slice


def m_step(model: DtmModel, topic_tol: float = TOPIC_TOL,
           max_cycles: int = TOPIC_MAX_CYCLES) -> float:
    """Re-estimate every topic's chain parameters against the current
    expected counts; returns the summed topic bounds."""
    total = 0.0
    for k in range(model.n_topics):
        opt = ChainOptimizer(model.chains.obs[:, k, :],
                             model.chains.obs_variance[:, k, :],
                             model.sstats[:, k, :], model.hyper.sigma2,
                             tie_obs_variance=model.hyper.tie_obs_variance)
        total += opt.run(tol=topic_tol, max_cycles=max_cycles)
        model.chains.obs[:, k, :] = opt.obs
        model.chains.obs_variance[:, k, :] = np.exp(opt.log_obs_var)
        model.chains.fwd_mean[:, k, :] = opt.fwd_mean
        model.chains.fwd_variance[:, k, :] = opt.fwd_var
        model.chains.mean[:, k, :] = opt.mean
        model.chains.variance[:, k, :] = opt.var
    model.chains.refresh_zeta()
    model.chains.natural = model.chains.mean.copy()
    return total


def write_ledger(model: DtmModel, sliced: SlicedCorpus,
                 per_slice_doc_bounds: list[float]) -> None:
    model.ledger = [
        LedgerEntry(window=model.slice_meta[t].window,
                    doc_bound=per_slice_doc_bounds[t],
                    topic_bound=slice_bound(model, sliced, t),
                    n_docs=len(model.doc_states[t]))
        for t in range(model.n_slices)
    ]


def fit(sliced: SlicedCorpus, hyper: DtmHyper, seed: int = 0,
        tol: float = 1e-4, max_iter: int = 50,
        terms: list[str] | None = None,
        doc_tol: float = lda.DOC_TOL,
        topic_tol: float = TOPIC_TOL) -> tuple[DtmModel, FitReport]:
    """Full EM until the combined document + topic bound stabilizes."""
    started = time.perf_counter()
    report = FitReport()
    init_start = time.perf_counter()
    model = init_dtm(sliced, hyper, seed=seed, terms=terms)
    report.phase_seconds["init"] = time.perf_counter() - init_start

    e_seconds = m_seconds = 0.0
    prev_total = None
    doc_sums: list[float] = []
    for iteration in range(max_iter):
        tick = time.perf_counter()
        doc_states, sstats, doc_sums = e_step(model, sliced, doc_tol=doc_tol)
        model.doc_states = doc_states
        model.sstats = sstats
        e_seconds += time.perf_counter() - tick

        tick = time.perf_counter()
        topic_total = m_step(model, topic_tol=topic_tol)
        m_seconds += time.perf_counter() - tick

        total = sum(doc_sums) + topic_total
        report.bounds.append(total)
        report.iterations = iteration + 1
        if prev_total is not None and \
                abs(total - prev_total) <= tol * abs(prev_total):
            report.converged = True
            break
        prev_total = total

    # refresh the document state against the final topics so downstream
    # consumers (and the ledger) see a coherent snapshot
    doc_states, sstats, doc_sums = e_step(model, sliced, doc_tol=doc_tol)
    model.doc_states = doc_states
    model.sstats = sstats
    write_ledger(model, sliced, doc_sums)
    model.converged = report.converged

    report.doc_bounds_per_slice = doc_sums
    report.topic_terms = [
        {"topic": k,
         "terms": [list(topic_bound_terms(model, t, k))
                   for t in range(model.n_slices)]}
        for k in range(model.n_topics)
    ]
    report.phase_seconds["e_step"] = e_seconds
    report.phase_seconds["m_step"] = m_seconds
    report.phase_seconds["total"] = time.perf_counter() - started
    model.fit_seconds = report.phase_seconds["total"]
    return model, report
