"""Shared fixtures: a small but complete pipeline over real text records."""

import numpy as np
import pytest

from trendweave import analytics, corpus as cp, fit, index
from trendweave import sentiment as se
from trendweave.model import DtmHyper

TOPIC_WORDS = [
    ["banking", "account", "branch", "teller", "deposit", "loan", "credit",
     "charge", "card", "statement", "balance", "transfer"],
    ["shipping", "package", "delivery", "courier", "tracking", "warehouse",
     "parcel", "freight", "carrier", "address", "label", "customs"],
]
FLAVOR = {"positive": ["excellent", "great", "helpful"],
          "negative": ["terrible", "awful", "broken"]}


def make_records(n_per_month=20, months=("2015-01", "2015-02", "2015-03"),
                 seed=1234, id_prefix="doc"):
    rng = np.random.default_rng(seed)
    records = []
    i = 0
    for month in months:
        for _ in range(n_per_month):
            topic = int(rng.integers(0, 2))
            words = list(rng.choice(TOPIC_WORDS[topic], size=14))
            words += list(rng.choice(TOPIC_WORDS[1 - topic], size=4))
            mood = "positive" if rng.random() < 0.5 else "negative"
            words += list(rng.choice(FLAVOR[mood], size=2))
            rng.shuffle(words)
            mid = len(words) // 2
            body = " ".join(words[:mid]) + ". " + " ".join(words[mid:]) + "."
            records.append({
                "id": f"{id_prefix}{i:04d}",
                "created_at": f"{month}-{int(rng.integers(1, 28)):02d}"
                              f"T12:00:00Z",
                "title": f"Opinion {i}",
                "body": body,
                "url": f"http://forum.example/{i}",
            })
            i += 1
    return records


ACCEPT_SLICES = 4
ACCEPT_DOCS_PER_SLICE = 100
ACCEPT_TERMS = 500
ACCEPT_TOKENS = 60
ACCEPT_TOPICS = 3
ACCEPT_DRIFT = (0.02, 0.10, 0.20, 0.32)
ACCEPT_SIGMA2 = 0.05
ACCEPT_SEED = 2024


def acceptance_truth():
    """Per-slice true topics for the acceptance corpus: three topics on
    disjoint blocks, one word drifting upward inside topic 0."""
    drift_word = ACCEPT_TERMS - 1
    blocks = np.array_split(np.arange(ACCEPT_TERMS - 1), ACCEPT_TOPICS)
    slice_topics = []
    for p in ACCEPT_DRIFT:
        topics = np.zeros((ACCEPT_TOPICS, ACCEPT_TERMS))
        topics[0, blocks[0]] = (1.0 - p) / len(blocks[0])
        topics[0, drift_word] = p
        for k in range(1, ACCEPT_TOPICS):
            topics[k, blocks[k]] = 1.0 / len(blocks[k])
        slice_topics.append(topics)
    return slice_topics, drift_word, blocks


def build_acceptance_corpus():
    from synth import sample_corpus, sliced_corpus_from_slices

    rng = np.random.default_rng(ACCEPT_SEED)
    slice_topics, drift_word, blocks = acceptance_truth()
    slice_docs = []
    for topics in slice_topics:
        thetas = rng.dirichlet(np.full(ACCEPT_TOPICS, 0.35),
                               size=ACCEPT_DOCS_PER_SLICE)
        slice_docs.append(sample_corpus(topics, thetas, ACCEPT_TOKENS, rng))
    sliced = sliced_corpus_from_slices(slice_docs, ACCEPT_TERMS)
    return sliced, slice_topics, drift_word, blocks


@pytest.fixture(scope="session")
def acceptance_corpus():
    sliced, slice_topics, drift_word, blocks = build_acceptance_corpus()
    return {"sliced": sliced, "truth": slice_topics,
            "drift_word": drift_word, "blocks": blocks}


@pytest.fixture(scope="session")
def acceptance_fit(acceptance_corpus):
    """Full 4-slice batch fit, wall-clock measured."""
    import time

    from trendweave import fit
    from trendweave.model import DtmHyper

    sliced = acceptance_corpus["sliced"]
    hyper = DtmHyper(n_topics=ACCEPT_TOPICS, sigma2=ACCEPT_SIGMA2)
    tick = time.perf_counter()
    model, report = fit.fit(sliced, hyper, seed=ACCEPT_SEED)
    seconds = time.perf_counter() - tick
    return {"model": model, "report": report, "seconds": seconds,
            "hyper": hyper}


@pytest.fixture(scope="session")
def acceptance_incremental(acceptance_corpus):
    """Fit slices 1..3, then absorb slice 4 as a sequential update."""
    import time

    from synth import sliced_corpus_from_slices
    from trendweave import fit, incremental
    from trendweave.model import DtmHyper

    sliced = acceptance_corpus["sliced"]
    prefix_docs = [sliced.slice_docs(t) for t in range(ACCEPT_SLICES - 1)]
    prefix = sliced_corpus_from_slices(prefix_docs, ACCEPT_TERMS)
    hyper = DtmHyper(n_topics=ACCEPT_TOPICS, sigma2=ACCEPT_SIGMA2)
    tick = time.perf_counter()
    prefix_model, _ = fit.fit(prefix, hyper, seed=ACCEPT_SEED)
    prefix_seconds = time.perf_counter() - tick

    last = ACCEPT_SLICES - 1
    span = sliced.slices[last]
    batch = incremental.UpdateBatch(
        doc_ids=[sliced.doc_ids[i] for i in sliced.slice_doc_range(last)],
        docs=sliced.slice_docs(last),
        timestamps=[sliced.timestamps[i]
                    for i in sliced.slice_doc_range(last)],
        new_terms=[],
        window=span.window,
    )
    tick = time.perf_counter()
    updated, report = incremental.sequential_update(prefix_model, batch,
                                                    seed=ACCEPT_SEED)
    update_seconds = time.perf_counter() - tick
    return {"prefix_model": prefix_model, "prefix_seconds": prefix_seconds,
            "updated": updated, "report": report,
            "update_seconds": update_seconds, "batch": batch}


@pytest.fixture(scope="session")
def mini_pipeline():
    """records -> corpus -> model -> sentiment -> embedding -> store."""
    raw = make_records()
    records, errors = cp.ingest(raw)
    assert not errors
    cfg = cp.NormalizationConfig(min_term_frequency=2)
    vocab, docs = cp.normalize(records, cfg)
    sliced = cp.build_slices(docs, "monthly", len(vocab))
    model, report = fit.fit(sliced, DtmHyper(n_topics=2, sigma2=0.05),
                            seed=11, max_iter=3, terms=vocab.terms)
    analysis = se.run_pipeline(model, records=records, cfg=cfg)
    embeddings = analytics.embed_topics(model)
    store = index.build(model, sliced, records, analysis, embeddings)
    return {
        "records": records, "cfg": cfg, "vocab": vocab, "sliced": sliced,
        "model": model, "report": report, "analysis": analysis,
        "embeddings": embeddings, "store": store,
    }
