"""Count backend calls per strategy and estimate API cost.

Scoring 100 candidates takes exactly 100 calls per pointwise strategy,
including the anchor-based contrastive one (the anchor itself is free),
and 200/300 calls when aggregating two/three strategies. A persistent
cache makes an identical re-run cost zero new calls.

Run with: python demos/calls_and_cost.py
"""

import tempfile

from anchorrank import (
    CachedBackend,
    CandidateRun,
    CostModel,
    Document,
    HashMockBackend,
    Query,
    ScorerSpec,
    build_anchor,
    estimate_cost,
    score_run,
)

corpus = {
    f"d{i:03d}": Document(f"d{i:03d}", f"Synthetic passage number {i} with shared phrasing. "
                                       f"Synthetic passages describe topic {i % 7} in detail.")
    for i in range(100)
}
query = Query("q1", "synthetic topic passages")
candidates = CandidateRun.from_scores("q1", [(d, 1.0) for d in corpus], tag="bm25")
anchor = build_anchor(query, candidates, corpus, m=10, z=10)
print(f"anchor built from the top-10 candidates with 0 LLM calls "
      f"({len(anchor.sentences)} sentences)\n")

print(f"{'strategy':<22} {'calls':>6}")
for kinds in (("qg",), ("rg_yn",), ("rg_s",), ("gccp",),
              ("rg_yn", "gccp"), ("qg", "rg_s", "gccp")):
    backend = HashMockBackend()
    for kind in kinds:
        spec = ScorerSpec(kind=kind, anchor=anchor if kind == "gccp" else None)
        score_run(query, candidates, spec, backend, corpus)
    print(f"{'+'.join(kinds):<22} {backend.stats.calls:>6}")

# cost model: priced per 1,000 prompt / generated tokens
model = CostModel()  # $0.0025 prompt, $0.01 generated
backend = HashMockBackend()
score_run(query, candidates, ScorerSpec(kind="rg_yn"), backend, corpus)
cost = estimate_cost(backend.stats.prompt_tokens, backend.stats.completion_tokens, model)
print(f"\nrg-yn over 100 docs used {backend.stats.prompt_tokens} prompt tokens "
      f"-> ${cost:.4f} at default prices")
print(f"10,000 prompt tokens alone would cost ${estimate_cost(10_000, 0, model):.4f}")

# identical requests hit the cache instead of the backend
with tempfile.NamedTemporaryFile(suffix=".jsonl") as tmp:
    inner = HashMockBackend()
    cached = CachedBackend(inner, tmp.name)
    for _ in range(2):
        score_run(query, candidates, ScorerSpec(kind="rg_yn"), cached, corpus)
    print(f"\nwith a cache: {inner.stats.calls} backend calls, "
          f"{cached.hits} cache hits over {cached.stats.calls} requests")
