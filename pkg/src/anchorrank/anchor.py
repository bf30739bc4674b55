"""Anchor document construction.

The anchor is a query-focused extractive summary of the top-ranked
candidates: their sentences form a similarity graph, the Fiedler sign
partition splits them into a core and a periphery, and the larger cluster
contributes up to z sentences in original document order. The whole
construction is deterministic and makes no backend calls.
"""

import random
from dataclasses import dataclass, field

from anchorrank.corpus import CandidateRun, Document
from anchorrank.spectral import (
    AnchorUnavailable,
    build_affinity,
    fiedler_vector,
    normalized_laplacian,
    partition,
)
from anchorrank.textproc import (
    DEFAULT_ABBREVIATIONS,
    DEFAULT_MIN_SENTENCE_TOKENS,
    Sentence,
    build_vocabulary,
    dedup_sentences,
    split_sentences,
    tfidf_embed,
)

DEFAULT_TOP_M = 10
DEFAULT_Z = 10
DEFAULT_THETA = 0.1

__all__ = [
    "AnchorDocument",
    "AnchorUnavailable",
    "assemble_anchor",
    "build_anchor",
    "top_anchor",
    "random_anchor",
    "DEFAULT_TOP_M",
    "DEFAULT_Z",
    "DEFAULT_THETA",
]


@dataclass
class AnchorDocument:
    """The assembled anchor text plus provenance of its sentences."""

    text: str
    sentences: list[Sentence] = field(default_factory=list)
    cluster_sizes: tuple[int, int] = (0, 0)
    z_used: int = 0
    lambda2: float | None = None
    fallback: bool = False

    def provenance(self) -> list[dict]:
        return [
            {"doc_id": s.doc_id, "rank": s.doc_rank, "index": s.index}
            for s in self.sentences
        ]


def assemble_anchor(clusters, sentences, z: int) -> AnchorDocument:
    """Pick the larger cluster and keep its first z sentences.

    Sentences are ordered by (source doc rank, index in doc). A size tie
    goes to the cluster holding the earliest sentence under that order.
    """
    plus, minus = clusters
    if len(plus) != len(minus):
        chosen = plus if len(plus) > len(minus) else minus
    else:
        earliest_plus = min(sentences[i].order_key() for i in plus)
        earliest_minus = min(sentences[i].order_key() for i in minus)
        chosen = plus if earliest_plus < earliest_minus else minus
    ordered = sorted((sentences[i] for i in chosen), key=Sentence.order_key)
    selected = ordered[: min(z, len(ordered))]
    return AnchorDocument(
        text=" ".join(s.text for s in selected),
        sentences=selected,
        cluster_sizes=(len(plus), len(minus)),
        z_used=z,
    )


def build_anchor(query, run: CandidateRun, corpus: dict[str, Document],
                 m: int = DEFAULT_TOP_M, z: int = DEFAULT_Z,
                 theta: float = DEFAULT_THETA,
                 min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
                 abbreviations=DEFAULT_ABBREVIATIONS,
                 stopwords: frozenset = frozenset()) -> AnchorDocument:
    """Spectral anchor over the top-m candidates of a run.

    Query focus comes from the first-stage ranking (only top-m documents
    contribute sentences); the query text itself does not enter the
    vocabulary. Raises AnchorUnavailable when the sentence graph cannot
    be partitioned (fewer than 2 usable sentences, or fully isolated).
    """
    if not run.entries:
        raise ValueError("first-stage run is empty")
    sentences = []
    for entry in run.top(m):
        doc = corpus.get(entry.doc_id)
        if doc is None:
            raise KeyError(f"document {entry.doc_id!r} missing from corpus")
        sentences.extend(
            split_sentences(doc, entry.rank, min_tokens=min_tokens,
                            abbreviations=abbreviations)
        )
    sentences = dedup_sentences(sentences)
    if len(sentences) < 2:
        raise AnchorUnavailable(
            f"only {len(sentences)} usable sentence(s) in the top-{m} documents"
        )
    vocab = build_vocabulary(sentences, stopwords=stopwords)
    embeddings = [tfidf_embed(s, vocab) for s in sentences]
    affinity = build_affinity(embeddings, theta)
    lap, degrees, index_map = normalized_laplacian(affinity)
    if lap.shape[0] < 2:
        raise AnchorUnavailable("sentence graph has no connected pair")
    result = fiedler_vector(lap, degrees, index_map)
    clusters = partition(result)
    anchor = assemble_anchor(clusters, sentences, z)
    anchor.lambda2 = result.lambda2
    return anchor


def top_anchor(run: CandidateRun, corpus: dict[str, Document]) -> AnchorDocument:
    """Full text of the rank-1 candidate as the anchor."""
    if not run.entries:
        raise ValueError("first-stage run is empty")
    doc = corpus[run.entries[0].doc_id]
    return AnchorDocument(text=doc.text, sentences=[], cluster_sizes=(0, 0), z_used=0)


def random_anchor(run: CandidateRun, corpus: dict[str, Document], seed) -> AnchorDocument:
    """Seeded uniform pick of one candidate's full text as the anchor."""
    if not run.entries:
        raise ValueError("first-stage run is empty")
    rng = random.Random(str(seed))
    doc_id = rng.choice(run.doc_ids())
    return AnchorDocument(text=corpus[doc_id].text, sentences=[], cluster_sizes=(0, 0), z_used=0)
