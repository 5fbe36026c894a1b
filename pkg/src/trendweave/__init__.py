"""Trend tracking for opinion corpora.

Pipeline: ingest raw opinions, build a time-sliced corpus, fit a dynamic
topic model (with incremental updates for new batches), aggregate sentiment
over the topic structure, embed topics in 2D, and serve every view through
a persisted index and an HTTP API.
"""

from .corpus import (NormalizationConfig, RawRecord, SlicedCorpus,
                     Vocabulary, build_slices, export, import_corpus,
                     ingest, normalize)
from .fit import FitReport, init_dtm, slice_bound, total_bound
from .fit import fit as fit_dtm  # `trendweave.fit` stays the submodule
from .incremental import (LongTailValues, UpdateBatch, extend_vocabulary,
                          long_tail, prepare_batch, sequential_update)
from .kalman import (Chain, SmoothedChain, backward, forward,
                     one_step_extend, zeta)
from .lda import DocVariational, LdaModel, e_step_doc, fit_lda, lda_bound
from .model import DtmHyper, DtmModel, TopicChains
from .sentiment import (Lexicon, SentimentTriple, doc_score,
                        doc_score_given_topic, score_sentence, term_score,
                        term_score_given_topic, topic_score)
from .analytics import (TopicEmbedding, jensen_shannon, model_coherence,
                        pcoa_embed, umass_coherence)

__version__ = "0.1.0"

__all__ = [
    "NormalizationConfig", "RawRecord", "SlicedCorpus", "Vocabulary",
    "build_slices", "export", "import_corpus", "ingest", "normalize",
    "FitReport", "fit_dtm", "init_dtm", "slice_bound", "total_bound",
    "LongTailValues", "UpdateBatch", "extend_vocabulary", "long_tail",
    "prepare_batch", "sequential_update",
    "Chain", "SmoothedChain", "backward", "forward", "one_step_extend",
    "zeta",
    "DocVariational", "LdaModel", "e_step_doc", "fit_lda", "lda_bound",
    "DtmHyper", "DtmModel", "TopicChains",
    "Lexicon", "SentimentTriple", "doc_score", "doc_score_given_topic",
    "score_sentence", "term_score", "term_score_given_topic", "topic_score",
    "TopicEmbedding", "jensen_shannon", "model_coherence", "pcoa_embed",
    "umass_coherence",
    "__version__",
]
