"""anchorrank: zero-shot LLM re-ranking with anchor-based contrastive scoring.

The library is organized as a pipeline of small, independently testable
stages: first-stage retrieval (BM25), sentence processing, spectral anchor
construction, pointwise LLM scoring, rank aggregation, and NDCG evaluation.
"""

from anchorrank.aggregate import (
    AggregationSpec,
    aggregate,
    borda_aggregate,
    linear_aggregate,
    minmax_normalize,
)
from anchorrank.anchor import (
    AnchorDocument,
    AnchorUnavailable,
    assemble_anchor,
    build_anchor,
    random_anchor,
    top_anchor,
)
from anchorrank.backend import (
    BackendConfig,
    BackendError,
    CachedBackend,
    CapabilityError,
    HashMockBackend,
    OracleMockBackend,
    RemoteBackend,
    ScoreRequest,
    ScoreResponse,
)
from anchorrank.corpus import (
    CandidateRun,
    CorpusStats,
    Document,
    Qrels,
    Query,
    RunEntry,
    bm25_retrieve,
    bm25_score,
    load_corpus,
    load_qrels,
    load_queries,
    read_run,
    write_run,
)
from anchorrank.evaluate import (
    CostModel,
    EvalReport,
    estimate_cost,
    evaluate_run,
    evaluate_runs,
    ndcg_at_k,
)
from anchorrank.pipeline import PipelineConfig, run_pipeline
from anchorrank.scorers import (
    PromptTemplate,
    ScorerSpec,
    default_template,
    score_gccp,
    score_qg,
    score_rg_s,
    score_rg_yn,
    score_run,
)
from anchorrank.spectral import (
    AffinityMatrix,
    SpectralResult,
    build_affinity,
    fiedler_vector,
    normalized_laplacian,
    partition,
)
from anchorrank.textproc import (
    Sentence,
    TfIdfVector,
    build_vocabulary,
    cosine,
    dedup_sentences,
    split_sentences,
    tfidf_embed,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "AggregationSpec",
    "AnchorDocument",
    "AnchorUnavailable",
    "BackendConfig",
    "BackendError",
    "CachedBackend",
    "CandidateRun",
    "CapabilityError",
    "CorpusStats",
    "CostModel",
    "Document",
    "EvalReport",
    "HashMockBackend",
    "OracleMockBackend",
    "PipelineConfig",
    "PromptTemplate",
    "Qrels",
    "Query",
    "RemoteBackend",
    "RunEntry",
    "ScoreRequest",
    "ScoreResponse",
    "ScorerSpec",
    "Sentence",
    "SpectralResult",
    "TfIdfVector",
    "aggregate",
    "assemble_anchor",
    "bm25_retrieve",
    "bm25_score",
    "borda_aggregate",
    "build_affinity",
    "build_anchor",
    "build_vocabulary",
    "cosine",
    "dedup_sentences",
    "default_template",
    "estimate_cost",
    "evaluate_run",
    "evaluate_runs",
    "fiedler_vector",
    "linear_aggregate",
    "load_corpus",
    "load_qrels",
    "load_queries",
    "minmax_normalize",
    "ndcg_at_k",
    "normalized_laplacian",
    "partition",
    "random_anchor",
    "read_run",
    "run_pipeline",
    "score_gccp",
    "score_qg",
    "score_rg_s",
    "score_rg_yn",
    "score_run",
    "split_sentences",
    "tfidf_embed",
    "top_anchor",
    "write_run",
]
