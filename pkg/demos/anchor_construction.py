"""Walk through anchor construction step by step.

Four candidate documents (three on one theme, one off-topic) are split
into sentences, embedded with TF-IDF, connected into a similarity graph,
and partitioned with the Fiedler vector. The larger cluster becomes the
anchor document.

Run with: python demos/anchor_construction.py
"""

import numpy as np

from anchorrank import (
    CandidateRun,
    Document,
    Query,
    build_affinity,
    build_anchor,
    build_vocabulary,
    dedup_sentences,
    fiedler_vector,
    normalized_laplacian,
    partition,
    split_sentences,
    tfidf_embed,
)

corpus = {
    "t1": Document("t1", "Solar panels convert sunlight into usable electricity. "
                         "Solar panels reduce energy bills for suburban homes."),
    "t2": Document("t2", "Rooftop solar panels generate clean electricity. "
                         "Many homes install solar panels to cut energy bills."),
    "t3": Document("t3", "Solar panels capture sunlight with high efficiency. "
                         "Clean electricity from solar panels now powers entire homes."),
    "off": Document("off", "Basketball players practice jump shots before dawn. "
                           "Basketball players won championship games downtown."),
}
first_stage = CandidateRun.from_scores(
    "q1", [("t1", 4.0), ("t2", 3.0), ("t3", 2.0), ("off", 1.0)], tag="bm25"
)
query = Query("q1", "how do solar panels cut energy bills")

# 1. sentence segmentation and dedup over the top-m candidates
sentences = []
for entry in first_stage.top(4):
    sentences.extend(split_sentences(corpus[entry.doc_id], entry.rank))
sentences = dedup_sentences(sentences)
print(f"{len(sentences)} sentences after segmentation and dedup:")
for s in sentences:
    print(f"  [{s.doc_id} rank={s.doc_rank} idx={s.index}] {s.text}")

# 2. TF-IDF embeddings and the thresholded cosine affinity graph
vocab = build_vocabulary(sentences)
embeddings = [tfidf_embed(s, vocab) for s in sentences]
affinity = build_affinity(embeddings, theta=0.1)
print(f"\naffinity matrix ({affinity.n} vertices, theta={affinity.theta}):")
print(np.array_str(affinity.matrix, precision=2, suppress_small=True))

# 3. normalized Laplacian and its Fiedler eigenpair
lap, degrees, index_map = normalized_laplacian(affinity)
result = fiedler_vector(lap, degrees, index_map)
print(f"\nlambda2 = {result.lambda2:.6f} (residual {result.residual:.2e}, "
      f"{result.iterations} iterations)")
print("fiedler vector:", np.array_str(result.vector, precision=3))

# 4. sign partition and anchor assembly
plus, minus = partition(result)
print(f"\ncluster sizes: +{len(plus)} / -{len(minus)}")
for label, cluster in (("+", plus), ("-", minus)):
    for i in cluster:
        print(f"  {label} {sentences[i].doc_id}: {sentences[i].text[:60]}")

anchor = build_anchor(query, first_stage, corpus, m=4, z=10, theta=0.1)
print(f"\nanchor ({len(anchor.sentences)} sentences, zero LLM calls):")
print(f"  {anchor.text}")
