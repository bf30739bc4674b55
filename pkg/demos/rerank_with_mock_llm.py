"""Re-rank a small corpus end to end with a known-ground-truth backend.

The oracle mock backend answers scoring prompts from a qrels table, so a
perfect scorer should recover the grade ordering exactly. The demo runs
BM25 first-stage retrieval, scores with all four strategies, aggregates,
and prints NDCG@10 for every run.

Run with: python demos/rerank_with_mock_llm.py
"""

from anchorrank import (
    AggregationSpec,
    Document,
    OracleMockBackend,
    Qrels,
    Query,
    ScorerSpec,
    bm25_retrieve,
    build_anchor,
    linear_aggregate,
    ndcg_at_k,
    score_run,
)

corpus = {
    "d0": Document("d0", "Gardening tips for growing tomatoes at home. "
                         "Tomato plants need regular watering and sunshine."),
    "d1": Document("d1", "Solar gadgets are a niche hobby market. "
                         "Some garden lamps store sunlight during the day."),
    "d2": Document("d2", "Solar chargers can top up a phone battery. "
                         "Portable solar chargers work best in summer."),
    "d3": Document("d3", "Solar water heaters warm household water. "
                         "Solar water heaters cut gas usage in sunny regions."),
    "d4": Document("d4", "Solar cells convert sunlight into current. "
                         "Efficiency of solar cells keeps improving yearly."),
    "d5": Document("d5", "Solar panels convert sunlight into electricity. "
                         "Rooftop solar panels reduce energy bills."),
    "d6": Document("d6", "Solar panels generate clean electricity for homes. "
                         "Installing solar panels lowers energy bills quickly."),
    "d7": Document("d7", "Solar panels are the cheapest home electricity source. "
                         "Modern solar panels pay for themselves fast."),
}
query = Query("q1", "solar panels home electricity")
qrels = Qrels()
for i in range(8):
    qrels.add("q1", f"d{i}", i)
judgments = qrels.for_query("q1")

# first stage: built-in BM25 over the full corpus
first_stage = bm25_retrieve(query, corpus, k=100)
print(f"BM25 order: {first_stage.doc_ids()}")
print(f"BM25 ndcg@10 = {ndcg_at_k(first_stage, judgments, k=10):.4f}\n")

# anchor for the contrastive scorer: built once, no LLM calls
anchor = build_anchor(query, first_stage, corpus, m=8, z=10)
print(f"anchor uses {len(anchor.sentences)} sentences from "
      f"{sorted({s.doc_id for s in anchor.sentences})}\n")

backend = OracleMockBackend(qrels, sigma=0.0)
runs = {}
for kind in ("qg", "rg_yn", "rg_s", "gccp"):
    spec = ScorerSpec(kind=kind, anchor=anchor if kind == "gccp" else None)
    runs[kind] = score_run(query, first_stage, spec, backend, corpus)
    value = ndcg_at_k(runs[kind], judgments, k=10)
    print(f"{runs[kind].tag:<6} ndcg@10 = {value:.4f}  order = {runs[kind].doc_ids()}")

# post-aggregation: min-max normalize, then average scores per document
fused = linear_aggregate(AggregationSpec.of_runs(
    [runs["qg"], runs["rg_yn"], runs["gccp"]]
))
print(f"\n{fused.tag:<8} ndcg@10 = {ndcg_at_k(fused, judgments, k=10):.4f}")
print(f"backend answered {backend.stats.calls} scoring calls "
      f"(4 scorers x {len(first_stage.entries)} documents)")
