"""Acceptance criteria, one test per criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v`` for the per-criterion
pass/fail lines (add ``-s`` to see the measured numbers).
"""

import json
import time

import numpy as np
from scipy.stats import spearmanr

from trendweave import analytics, fit, kalman
from trendweave import sentiment as se
from trendweave.cli import dispatch

from conftest import ACCEPT_DRIFT, ACCEPT_SLICES, make_records
from test_kalman import dense_marginals
from test_fit import random_bound_state


def report(name, detail):
    print(f"ACCEPTANCE PASS: {name} ({detail})")


def test_kalman_oracle_equivalence():
    """forward+backward equals dense joint-Gaussian inference, 200 chains,
    T in 1..6, 1e-8 absolute; under 5 s."""
    tick = time.perf_counter()
    rng = np.random.default_rng(515)
    worst = 0.0
    for i in range(200):
        t = int(rng.integers(1, 7))
        obs = rng.normal(0.0, 2.5, size=t)
        obs_var = rng.uniform(0.02, 4.0, size=t)
        sigma2 = float(rng.uniform(0.001, 1.5))
        m, v = kalman.forward(obs, obs_var, sigma2)
        mean, var = kalman.backward(m, v, sigma2)
        oracle_mean, oracle_var = dense_marginals(obs, obs_var, sigma2)
        worst = max(worst, np.abs(mean - oracle_mean).max(),
                    np.abs(var - oracle_var).max())
        assert np.allclose(mean, oracle_mean, atol=1e-8)
        assert np.allclose(var, oracle_var, atol=1e-8)
    elapsed = time.perf_counter() - tick
    assert elapsed < 5.0
    report("kalman-oracle-equivalence",
           f"200 chains, worst |err|={worst:.2e}, {elapsed:.2f}s")


def test_appendix_bound_equivalence():
    """Cancelled closed form equals the three uncancelled terms on 100
    random states, 1e-9 relative; under 5 s."""
    tick = time.perf_counter()
    rng = np.random.default_rng(616)
    worst = 0.0
    for _ in range(100):
        state = random_bound_state(rng, int(rng.integers(1, 60)))
        cancelled = fit.chain_bound_cancelled(*state)
        uncancelled = sum(fit.chain_bound_terms(*state))
        rel = abs(cancelled - uncancelled) / max(abs(uncancelled), 1e-300)
        worst = max(worst, rel)
        assert rel <= 1e-9
    elapsed = time.perf_counter() - tick
    assert elapsed < 5.0
    report("appendix-bound-equivalence",
           f"100 states, worst rel={worst:.2e}, {elapsed:.2f}s")


def test_elbo_monotonicity(acceptance_corpus, acceptance_fit):
    """Static and dynamic fits produce non-decreasing bound sequences
    (1e-6 relative slack) on the 400-doc/500-term/4-slice corpus; the
    dynamic fit stays under 2 minutes."""
    from trendweave import lda

    sliced = acceptance_corpus["sliced"]
    tick = time.perf_counter()
    static = lda.fit_lda(sliced.pooled_docs(), sliced.n_terms, 3, seed=99)
    lda_seconds = time.perf_counter() - tick
    trace = np.array(static.bound_trace)
    assert np.all(np.diff(trace) >= -1e-6 * np.abs(trace[:-1]))

    bounds = np.array(acceptance_fit["report"].bounds)
    assert len(bounds) >= 2
    assert np.all(np.diff(bounds) >= -1e-6 * np.abs(bounds[:-1]))
    assert acceptance_fit["seconds"] < 120.0
    report("elbo-monotonicity",
           f"lda {len(trace)} iters ({lda_seconds:.1f}s), "
           f"dtm {len(bounds)} iters ({acceptance_fit['seconds']:.1f}s)")


def test_batch_vs_incremental_parity(acceptance_corpus, acceptance_fit,
                                     acceptance_incremental):
    """Incremental coherence within 5% relative of the batch fit, and the
    update costs less than 40% of the batch fit's wall-clock."""
    sliced = acceptance_corpus["sliced"]
    batch_mean, _, _ = analytics.model_coherence(
        acceptance_fit["model"], sliced, top_n=10)
    inc_mean, _, _ = analytics.model_coherence(
        acceptance_incremental["updated"], sliced, top_n=10)
    gap = abs(inc_mean - batch_mean) / abs(batch_mean)
    assert gap <= 0.05, (batch_mean, inc_mean)

    update_seconds = acceptance_incremental["update_seconds"]
    batch_seconds = acceptance_fit["seconds"]
    assert update_seconds < 0.40 * batch_seconds, \
        f"update {update_seconds:.1f}s vs batch {batch_seconds:.1f}s"
    report("batch-vs-incremental-parity",
           f"coherence {batch_mean:.4f} vs {inc_mean:.4f} "
           f"(gap {100 * gap:.2f}%), update {update_seconds:.1f}s vs "
           f"batch {batch_seconds:.1f}s "
           f"({100 * update_seconds / batch_seconds:.0f}%)")


def test_non_interference(acceptance_incremental):
    """All slice 1..T-1 parameters bit-identical after the update."""
    tick = time.perf_counter()
    prefix = acceptance_incremental["prefix_model"]
    updated = acceptance_incremental["updated"]
    t_last = prefix.n_slices - 1
    for name in ("natural", "obs", "obs_variance", "fwd_mean",
                 "fwd_variance", "mean", "variance"):
        old = getattr(prefix.chains, name)
        new = getattr(updated.chains, name)
        np.testing.assert_array_equal(new[:t_last], old[:t_last],
                                      err_msg=name)
    np.testing.assert_array_equal(updated.chains.obs[t_last],
                                  prefix.chains.obs[t_last])
    elapsed = time.perf_counter() - tick
    assert elapsed < 60.0
    report("non-interference",
           f"slices 1..{t_last} exactly equal, {elapsed:.2f}s")


def test_drift_recovery(acceptance_corpus, acceptance_fit):
    """Spearman correlation between true and fitted per-slice probabilities
    of the drifting word exceeds 0.9."""
    model = acceptance_fit["model"]
    drift_word = acceptance_corpus["drift_word"]
    block0 = acceptance_corpus["blocks"][0]
    # identify the fitted topic carrying true topic 0's block
    block_mass = [model.topic_word_dist(0, k)[block0].sum()
                  for k in range(model.n_topics)]
    k0 = int(np.argmax(block_mass))
    fitted = [model.topic_word_dist(t, k0)[drift_word]
              for t in range(ACCEPT_SLICES)]
    rho, _ = spearmanr(list(ACCEPT_DRIFT), fitted)
    assert rho > 0.9, (fitted, rho)
    assert acceptance_fit["seconds"] < 120.0
    report("drift-recovery",
           f"true {list(ACCEPT_DRIFT)} -> fitted "
           f"{[round(p, 4) for p in fitted]}, spearman={rho:.3f}")


def test_sentiment_algebra():
    """Simplex closure for the document/topic/term aggregates and both
    conditioned-mass identities, 1e-9 over 1000 random fixtures; under 5 s."""
    tick = time.perf_counter()
    rng = np.random.default_rng(717)
    for _ in range(1000):
        n_docs = int(rng.integers(1, 7))
        k = int(rng.integers(1, 5))
        m = int(rng.integers(2, 8))
        doc_triples = [se.SentimentTriple(*row)
                       for row in rng.dirichlet(np.ones(3), size=n_docs)]
        membership = rng.dirichlet(np.ones(k), size=n_docs)
        p_z = membership.mean(axis=0)
        topics = []
        for kk in range(k):
            weights = membership[:, kk] / (n_docs * p_z[kk])
            triple = se.topic_score(doc_triples, weights)
            assert abs(sum(triple) - 1.0) <= 1e-9
            assert min(triple) >= -1e-12
            topics.append(triple)
        doc = se.doc_score(doc_triples)
        assert abs(sum(doc) - 1.0) <= 1e-9

        p_w_given_z = rng.dirichlet(np.ones(m), size=k)
        w = int(rng.integers(0, m))
        term = se.term_score(topics, p_w_given_z[:, w], p_z)
        assert abs(sum(term) - 1.0) <= 1e-9

        term_triples = [se.SentimentTriple(*row)
                        for row in rng.dirichlet(np.ones(3), size=m)]
        p_z_given_d = float(membership[0, 0])
        conditioned = se.doc_score_given_topic(term_triples,
                                               p_w_given_z[0], p_z_given_d)
        assert abs(sum(conditioned) - p_z_given_d) <= 1e-9

        p_d_given_z = membership[:, 0] / (n_docs * p_z[0])
        p_z_given_w = float(rng.uniform(0, 1))
        conditioned = se.term_score_given_topic(doc_triples, p_d_given_z,
                                                p_z_given_w)
        assert abs(sum(conditioned)
                   - p_z_given_w * p_d_given_z.sum()) <= 1e-9
    elapsed = time.perf_counter() - tick
    assert elapsed < 5.0
    report("sentiment-algebra", f"1000 fixtures, {elapsed:.2f}s")


def test_embedding_fidelity():
    """JS identity/disjoint values at 1e-12 and PCoA isometry on the
    equilateral 3-topic configuration at 1e-6; under 1 s."""
    tick = time.perf_counter()
    p = np.array([0.3, 0.4, 0.3])
    assert analytics.jensen_shannon(p, p) == 0.0
    disjoint = analytics.jensen_shannon([1.0, 0.0], [0.0, 1.0])
    assert abs(disjoint - np.log(2)) <= 1e-12

    emb = analytics.pcoa_embed(np.ones((3, 3)) - np.eye(3))
    for i in range(3):
        for j in range(i + 1, 3):
            d = np.linalg.norm(emb.coordinates[i] - emb.coordinates[j])
            assert abs(d - 1.0) <= 1e-6
    elapsed = time.perf_counter() - tick
    assert elapsed < 1.0
    report("embedding-fidelity", f"{elapsed:.3f}s")


def test_pipeline_determinism(tmp_path):
    """Two identical CLI runs (corpus -> fit-dtm -> sentiment -> embed ->
    index) produce byte-identical index stores; under 15 minutes."""
    tick = time.perf_counter()
    raw = tmp_path / "raw.json"
    raw.write_text(json.dumps(make_records(n_per_month=15)))

    def run_pipeline(workdir):
        workdir.mkdir()
        flags = ["--workdir", str(workdir), "--seed", "42"]
        for cmd in (("ingest", "--input", str(raw)),
                    ("corpus", "--granularity", "monthly"),
                    ("fit-dtm", "--topics", "2", "--sigma2", "0.05"),
                    ("sentiment",), ("embed",), ("index",)):
            assert dispatch(list(cmd) + flags) == 0

    run_pipeline(tmp_path / "run_a")
    run_pipeline(tmp_path / "run_b")

    store_a = sorted((tmp_path / "run_a" / "index").iterdir())
    store_b = sorted((tmp_path / "run_b" / "index").iterdir())
    assert [p.name for p in store_a] == [p.name for p in store_b]
    for pa, pb in zip(store_a, store_b):
        assert pa.read_bytes() == pb.read_bytes(), pa.name
    elapsed = time.perf_counter() - tick
    assert elapsed < 900.0
    versions = {json.loads((tmp_path / run / "index" / "manifest.json")
                           .read_text())["store_version"]
                for run in ("run_a", "run_b")}
    assert len(versions) == 1
    report("pipeline-determinism",
           f"store version {versions.pop()[:12]}, {elapsed:.1f}s")
