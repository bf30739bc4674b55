"""Sentence segmentation, deduplication, and TF-IDF sentence embeddings.

These feed the sentence-similarity graph: documents are split into
sentences, near-trivial fragments and exact duplicates are dropped, and
each surviving sentence becomes an L2-normalized sparse TF-IDF vector.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from anchorrank.corpus import Document, tokenize

# Abbreviations whose trailing period must not end a sentence.
DEFAULT_ABBREVIATIONS = frozenset(
    a.lower()
    for a in [
        "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sr.", "Jr.", "St.",
        "vs.", "etc.", "e.g.", "i.e.", "cf.", "al.", "Fig.", "No.",
        "Inc.", "Ltd.", "Co.", "Corp.", "approx.", "U.S.", "U.K.", "U.N.",
        "Jan.", "Feb.", "Mar.", "Apr.", "Jun.", "Jul.", "Aug.", "Sep.",
        "Sept.", "Oct.", "Nov.", "Dec.",
    ]
)

DEFAULT_MIN_SENTENCE_TOKENS = 3

_TERMINATOR_RE = re.compile(r"[.!?]+")


@dataclass(frozen=True)
class Sentence:
    """A sentence with provenance back to its source document."""

    text: str
    doc_id: str
    doc_rank: int
    index: int

    def order_key(self) -> tuple[int, int]:
        return (self.doc_rank, self.index)


@dataclass
class TfIdfVector:
    """Sparse term->weight map, L2-normalized (or the zero vector)."""

    weights: dict[str, float] = field(default_factory=dict)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))

    def is_zero(self) -> bool:
        return not self.weights


def load_word_list(path) -> frozenset[str]:
    """Read a plain-text one-word-per-line list (for guards or stopwords)."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def _is_guarded(text: str, dot_end: int, abbreviations) -> bool:
    """True when the chunk ending at dot_end is a guarded abbreviation."""
    start = dot_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    chunk = text[start:dot_end].lower().lstrip("\"'([{")
    return chunk in abbreviations


def split_sentences(doc: Document, initial_rank: int,
                    min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
                    abbreviations=DEFAULT_ABBREVIATIONS) -> list[Sentence]:
    """Rule-based sentence split of a document.

    Splits after ., ! or ? runs followed by whitespace and a capital letter
    (or at end of text), unless the preceding token is a guarded
    abbreviation. Sentences with fewer than min_tokens tokens are dropped.
    """
    text = doc.text
    boundaries = []
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        if "." in m.group() and _is_guarded(text, end, abbreviations):
            continue
        rest = text[end:]
        if rest.strip() == "":
            boundaries.append(end)
        elif rest[0].isspace():
            follower = rest.lstrip()
            if follower and follower[0].isupper():
                boundaries.append(end)

    sentences = []
    start = 0
    segments = []
    for end in boundaries:
        segments.append(text[start:end])
        start = end
    if text[start:].strip():
        segments.append(text[start:])

    for idx, segment in enumerate(segments):
        stripped = segment.strip()
        if not stripped:
            continue
        if len(tokenize(stripped)) < min_tokens:
            continue
        sentences.append(
            Sentence(text=stripped, doc_id=doc.id, doc_rank=initial_rank, index=idx)
        )
    return sentences


def _normalize_for_dedup(text: str) -> str:
    collapsed = " ".join(text.lower().split())
    return collapsed.rstrip(".!?").rstrip()


def dedup_sentences(sentences: list[Sentence]) -> list[Sentence]:
    """Drop exact duplicates after normalization; earliest occurrence wins.

    Earliest means smallest (source doc rank, index in doc); the output is
    ordered by that key, which makes the operation idempotent.
    """
    seen: dict[str, Sentence] = {}
    for s in sorted(sentences, key=Sentence.order_key):
        key = _normalize_for_dedup(s.text)
        if key not in seen:
            seen[key] = s
    return sorted(seen.values(), key=Sentence.order_key)


@dataclass
class Vocabulary:
    """Term->IDF map built over a sentence population."""

    idf: dict[str, float]
    n_sentences: int
    stopwords: frozenset[str] = frozenset()

    def idf_of(self, term: str) -> float:
        return self.idf.get(term, 0.0)


def build_vocabulary(sentences: list[Sentence],
                     stopwords: frozenset[str] = frozenset(),
                     count_over: str = "sentences") -> Vocabulary:
    """Smoothed IDF over the sentence set: ln((1+n)/(1+freq)) + 1.

    count_over="documents" counts a term once per source document instead
    of once per sentence (the document-level alternative).
    """
    if count_over not in ("sentences", "documents"):
        raise ValueError(f"unknown count_over mode {count_over!r}")
    freq: Counter = Counter()
    if count_over == "sentences":
        n = len(sentences)
        for s in sentences:
            freq.update(t for t in set(tokenize(s.text)) if t not in stopwords)
    else:
        by_doc: dict[str, set[str]] = {}
        for s in sentences:
            by_doc.setdefault(s.doc_id, set()).update(
                t for t in tokenize(s.text) if t not in stopwords
            )
        n = len(by_doc)
        for terms in by_doc.values():
            freq.update(terms)
    idf = {t: math.log((1.0 + n) / (1.0 + f)) + 1.0 for t, f in freq.items()}
    return Vocabulary(idf=idf, n_sentences=len(sentences), stopwords=stopwords)


def tfidf_embed(sentence: Sentence, vocab: Vocabulary) -> TfIdfVector:
    """tf * idf weights, L2-normalized; unknown-only sentences map to zero."""
    tf = Counter(t for t in tokenize(sentence.text) if t not in vocab.stopwords)
    weights = {}
    for term, count in tf.items():
        idf = vocab.idf_of(term)
        if idf > 0.0:
            weights[term] = count * idf
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return TfIdfVector({})
    return TfIdfVector({t: w / norm for t, w in weights.items()})


def cosine(a: TfIdfVector, b: TfIdfVector) -> float:
    """Dot product of normalized vectors; zero vectors yield 0."""
    if a.is_zero() or b.is_zero():
        return 0.0
    small, large = (a.weights, b.weights) if len(a.weights) <= len(b.weights) else (b.weights, a.weights)
    value = sum(w * large[t] for t, w in small.items() if t in large)
    return min(value, 1.0)
