"""Corpus data model, TREC-style file I/O, and a self-contained BM25.

File formats:
    corpus   JSONL, one object per line: {"id": "...", "contents": "..."}
    queries  TSV, one query per line: "id<TAB>text"
    qrels    whitespace-separated: "qid 0 docid grade"
    run      space-separated: "qid Q0 docid rank score tag"
"""

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field


_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Ties are broken the same way everywhere: score descending, then the rank
# the document held before re-scoring (ascending), then doc id ascending.
_NO_PRIOR_RANK = 10**9


class FormatError(ValueError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line_no is not None:
            prefix += f":{line_no}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Query:
    id: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("query id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"query {self.id!r} has empty text")


@dataclass(frozen=True)
class Document:
    id: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")


class Qrels:
    """Graded relevance judgments keyed by (query id, doc id)."""

    def __init__(self):
        self._grades: dict[tuple[str, str], int] = {}

    def add(self, query_id: str, doc_id: str, grade: int):
        if grade < 0:
            raise ValueError(f"negative grade {grade} for ({query_id}, {doc_id})")
        key = (query_id, doc_id)
        if key in self._grades:
            raise ValueError(f"duplicate judgment for ({query_id}, {doc_id})")
        self._grades[key] = grade

    def grade(self, query_id: str, doc_id: str) -> int:
        """Grade of a pair; unjudged documents count as 0."""
        return self._grades.get((query_id, doc_id), 0)

    def for_query(self, query_id: str) -> dict[str, int]:
        return {
            d: g for (q, d), g in self._grades.items() if q == query_id
        }

    def query_ids(self) -> set[str]:
        return {q for q, _ in self._grades}

    def items(self):
        return self._grades.items()

    def __len__(self):
        return len(self._grades)

    def __contains__(self, key):
        return key in self._grades


@dataclass(frozen=True)
class RunEntry:
    doc_id: str
    score: float
    rank: int


@dataclass
class CandidateRun:
    """Per-query ranked list of documents with scores.

    Entries are always sorted and ranked 1..n under the global tie-break
    (score desc, prior rank asc, doc id asc).
    """

    query_id: str
    entries: list[RunEntry] = field(default_factory=list)
    tag: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        seen = set()
        for i, e in enumerate(self.entries):
            if e.rank != i + 1:
                raise ValueError(
                    f"run {self.query_id!r}: ranks not contiguous at position {i}"
                )
            if e.doc_id in seen:
                raise ValueError(f"run {self.query_id!r}: duplicate doc {e.doc_id!r}")
            seen.add(e.doc_id)

    @classmethod
    def from_scores(cls, query_id, scored, tag="", prior_ranks=None):
        """Build a run from (doc_id, score) pairs using the global tie-break.

        prior_ranks maps doc id to the rank held before re-scoring; documents
        without one sort after those that have one.
        """
        prior_ranks = prior_ranks or {}
        ordered = sorted(
            scored,
            key=lambda ds: (-ds[1], prior_ranks.get(ds[0], _NO_PRIOR_RANK), ds[0]),
        )
        entries = [
            RunEntry(doc_id=d, score=float(s), rank=i + 1)
            for i, (d, s) in enumerate(ordered)
        ]
        return cls(query_id=query_id, entries=entries, tag=tag)

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def scores(self) -> dict[str, float]:
        return {e.doc_id: e.score for e in self.entries}

    def ranks(self) -> dict[str, int]:
        return {e.doc_id: e.rank for e in self.entries}

    def top(self, k: int) -> list[RunEntry]:
        return self.entries[: max(k, 0)]


def load_corpus(path) -> dict[str, Document]:
    """Load a JSONL corpus into a doc id -> Document map."""
    docs: dict[str, Document] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc}", path, line_no) from exc
            if not isinstance(obj, dict) or "id" not in obj or "contents" not in obj:
                raise FormatError('expected object with "id" and "contents"', path, line_no)
            doc_id = obj["id"]
            if not isinstance(doc_id, str) or not isinstance(obj["contents"], str):
                raise FormatError('"id" and "contents" must be strings', path, line_no)
            if doc_id in docs:
                raise FormatError(f"duplicate document id {doc_id!r}", path, line_no)
            docs[doc_id] = Document(id=doc_id, text=obj["contents"])
    return docs


def load_queries(path) -> list[Query]:
    """Load tab-separated "id<TAB>text" queries; blank lines are skipped."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise FormatError("expected 'id<TAB>text'", path, line_no)
            qid, text = line.split("\t", 1)
            try:
                queries.append(Query(id=qid, text=text))
            except ValueError as exc:
                raise FormatError(str(exc), path, line_no) from exc
    return queries


def load_qrels(path) -> Qrels:
    """Load whitespace-separated "qid 0 docid grade" judgments."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise FormatError("expected 'qid 0 docid grade'", path, line_no)
            qid, _, doc_id, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError as exc:
                raise FormatError(f"non-integer grade {grade_str!r}", path, line_no) from exc
            try:
                qrels.add(qid, doc_id, grade)
            except ValueError as exc:
                raise FormatError(str(exc), path, line_no) from exc
    return qrels


def read_run(path) -> list[CandidateRun]:
    """Read a TREC run file, one CandidateRun per query in file order."""
    per_query: dict[str, list[tuple[int, str, float, str]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise FormatError("expected 'qid Q0 docid rank score tag'", path, line_no)
            qid, _, doc_id, rank_str, score_str, tag = parts
            try:
                rank = int(rank_str)
                score = float(score_str)
            except ValueError as exc:
                raise FormatError(f"unparsable rank/score: {exc}", path, line_no) from exc
            if qid not in per_query:
                per_query[qid] = []
                order.append(qid)
            per_query[qid].append((rank, doc_id, score, tag))

    runs = []
    for qid in order:
        rows = sorted(per_query[qid], key=lambda r: r[0])
        ranks = [r[0] for r in rows]
        if ranks != list(range(1, len(rows) + 1)):
            raise FormatError(f"ranks for query {qid!r} are not contiguous 1..n", path)
        entries = [RunEntry(doc_id=d, score=s, rank=r) for r, d, s, _ in rows]
        runs.append(CandidateRun(query_id=qid, entries=entries, tag=rows[0][3]))
    return runs


def write_run(runs, path):
    """Write runs in TREC format; scores at 6 decimals, ranks recomputed.

    Re-sorting uses each entry's current rank as its prior rank, so writing
    back a file read with read_run is byte-identical.
    """
    if isinstance(runs, CandidateRun):
        runs = [runs]
    with open(path, "w", encoding="utf-8") as fh:
        for run in runs:
            normalized = CandidateRun.from_scores(
                run.query_id,
                [(e.doc_id, e.score) for e in run.entries],
                tag=run.tag,
                prior_ranks=run.ranks(),
            )
            for e in normalized.entries:
                fh.write(
                    f"{run.query_id} Q0 {e.doc_id} {e.rank} {e.score:.6f} {run.tag}\n"
                )


@dataclass
class CorpusStats:
    """Global statistics BM25 needs: sizes, lengths, document frequencies."""

    n_docs: int
    avg_doc_len: float
    doc_freq: dict[str, int]

    @classmethod
    def from_corpus(cls, corpus: dict[str, Document]) -> "CorpusStats":
        if not corpus:
            raise ValueError("cannot compute statistics of an empty corpus")
        doc_freq: Counter = Counter()
        total_len = 0
        for doc in corpus.values():
            tokens = tokenize(doc.text)
            total_len += len(tokens)
            doc_freq.update(set(tokens))
        return cls(
            n_docs=len(corpus),
            avg_doc_len=total_len / len(corpus),
            doc_freq=dict(doc_freq),
        )

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        return math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)


def bm25_score(query: Query, doc: Document, stats: CorpusStats,
               k1: float = 0.9, b: float = 0.4) -> float:
    """Okapi BM25 with the +1-inside-log IDF variant (never negative)."""
    if stats.n_docs <= 0:
        raise ValueError("empty corpus statistics")
    doc_tokens = tokenize(doc.text)
    tf = Counter(doc_tokens)
    doc_len = len(doc_tokens)
    avg = stats.avg_doc_len if stats.avg_doc_len > 0 else 1.0
    score = 0.0
    for term in tokenize(query.text):
        f = tf.get(term, 0)
        if f == 0:
            continue
        score += stats.idf(term) * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * doc_len / avg))
    return score


def bm25_retrieve(query: Query, corpus: dict[str, Document], k: int,
                  k1: float = 0.9, b: float = 0.4,
                  stats: CorpusStats | None = None) -> CandidateRun:
    """Top-k BM25 candidates under the global tie-break (no prior ranks)."""
    stats = stats or CorpusStats.from_corpus(corpus)
    scored = [(doc_id, bm25_score(query, doc, stats, k1, b)) for doc_id, doc in corpus.items()]
    full = CandidateRun.from_scores(query.id, scored, tag="bm25")
    top = full.top(k)
    return CandidateRun(query_id=query.id, entries=list(top), tag="bm25")
