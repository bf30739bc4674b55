"""Pointwise relevance scorers.

Four strategies, all single-call-per-document:

    qg      mean log-likelihood of the query as a continuation of the passage
    rg_yn   two-way softmax over Yes/No label logits
    rg_s    graded 0..K-1 labels; peak mode returns the top label's raw
            logit, expected mode returns the softmax-weighted label mean
    gccp    probability the candidate beats the anchor passage in a
            two-passage comparison prompt

Score construction is split from backend arithmetic so each half can be
tested alone.
"""

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from anchorrank.anchor import AnchorDocument
from anchorrank.backend import Backend, ScoreRequest
from anchorrank.corpus import CandidateRun, Document, Query

KINDS = ("qg", "rg_yn", "rg_s", "gccp")

RUN_TAGS = {"qg": "qg", "rg_yn": "rg-yn", "rg_s": "rg-s", "gccp": "gccp"}

# initials used to tag aggregated runs, e.g. PAGC-QYG
KIND_INITIALS = {"qg": "Q", "rg_yn": "Y", "rg_s": "S", "gccp": "G"}

_PLACEHOLDER_RE = re.compile(r"\{(query|document|passage_a|passage_b)\}")

_REQUIRED_PLACEHOLDERS = {
    "qg": {"document"},
    "rg_yn": {"query", "document"},
    "rg_s": {"query", "document"},
    "gccp": {"query", "passage_a", "passage_b"},
}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str
    labels: tuple[str, ...] = ()

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.text))

    def render(self, **slots) -> str:
        def fill(match):
            key = match.group(1)
            if key not in slots:
                raise KeyError(f"template {self.name!r} needs a value for {{{key}}}")
            return slots[key]

        return _PLACEHOLDER_RE.sub(fill, self.text).strip()


def default_template(kind: str, k_levels: int = 5) -> PromptTemplate:
    """Shipped template for a scorer kind (user templates may replace it)."""
    if kind not in KINDS:
        raise ValueError(f"unknown scorer kind {kind!r}")
    text = resources.files("anchorrank").joinpath(f"templates/{kind}.txt").read_text("utf-8")
    labels: tuple[str, ...] = ()
    if kind == "rg_yn":
        labels = ("Yes", "No")
    elif kind == "rg_s":
        labels = tuple(str(i) for i in range(k_levels))
    elif kind == "gccp":
        labels = ("Passage A", "Passage B")
    return PromptTemplate(name=kind, text=text, labels=labels)


def load_template(path, kind: str, labels=None) -> PromptTemplate:
    """Template from a user file; label set defaults to the kind's own."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    base = default_template(kind)
    tpl = PromptTemplate(name=str(path), text=text,
                         labels=tuple(labels) if labels else base.labels)
    missing = _REQUIRED_PLACEHOLDERS[kind] - tpl.placeholders()
    if missing:
        raise ValueError(f"template {path} misses placeholders: {sorted(missing)}")
    return tpl


@dataclass
class ScorerSpec:
    kind: str
    template: PromptTemplate | None = None
    k_levels: int = 5
    relevance_mode: str = "pr"
    model_id: str = "default"
    order_average: bool = False
    anchor: AnchorDocument | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "rg_s" and self.k_levels < 2:
            raise ValueError("graded scoring needs at least 2 levels")
        if self.relevance_mode not in ("pr", "er"):
            raise ValueError(f"unknown relevance mode {self.relevance_mode!r}")

    def resolved_template(self) -> PromptTemplate:
        return self.template or default_template(self.kind, self.k_levels)

    @property
    def tag(self) -> str:
        return RUN_TAGS[self.kind]


@dataclass
class ScoredCandidate:
    doc_id: str
    score: float
    kind: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


_OPEN_UNIT_MAX = math.nextafter(1.0, 0.0)
_OPEN_UNIT_MIN = math.nextafter(0.0, 1.0)


def _sigmoid(x: float) -> float:
    # outputs stay strictly inside (0, 1) even when float math saturates
    x = max(-700.0, min(700.0, x))
    if x >= 0:
        p = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        p = e / (1.0 + e)
    return min(max(p, _OPEN_UNIT_MIN), _OPEN_UNIT_MAX)


def mean_logprob(values) -> float:
    """Query-likelihood aggregation: mean of per-token logprobs."""
    if not values:
        raise ValueError("no token logprobs to average")
    return sum(values) / len(values)


def yn_probability(s_yes: float, s_no: float) -> float:
    """exp(S_Y) / (exp(S_Y) + exp(S_N)), computed stably."""
    return _sigmoid(s_yes - s_no)


def expected_relevance(logits) -> float:
    """Softmax-weighted mean of the label levels 0..K-1."""
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    total = sum(exps)
    return sum(k * e for k, e in enumerate(exps)) / total


def peak_relevance(logits) -> float:
    """Raw logit of the most-relevant (last) label."""
    return logits[-1]


def contrast_probability(s_candidate: float, s_anchor: float) -> float:
    """Two-way softmax probability that the candidate wins."""
    return _sigmoid(s_candidate - s_anchor)


def _metadata(query: Query, doc: Document) -> dict:
    return {"query_id": query.id, "doc_id": doc.id}


def score_qg(query: Query, doc: Document, backend: Backend,
             template: PromptTemplate | None = None,
             model_id: str = "default") -> float:
    tpl = template or default_template("qg")
    response = backend.score(ScoreRequest(
        prompt=tpl.render(document=doc.text),
        mode="continuation",
        continuation=query.text,
        metadata=_metadata(query, doc),
        model_id=model_id,
    ))
    return mean_logprob(response.token_logprobs)


def score_rg_yn(query: Query, doc: Document, backend: Backend,
                template: PromptTemplate | None = None,
                model_id: str = "default") -> float:
    tpl = template or default_template("rg_yn")
    response = backend.score(ScoreRequest(
        prompt=tpl.render(query=query.text, document=doc.text),
        mode="labels",
        labels=tpl.labels or ("Yes", "No"),
        metadata=_metadata(query, doc),
        model_id=model_id,
    ))
    return yn_probability(response.label_logprobs[0], response.label_logprobs[1])


def score_rg_s(query: Query, doc: Document, backend: Backend,
               template: PromptTemplate | None = None, k_levels: int = 5,
               mode: str = "pr", model_id: str = "default") -> float:
    tpl = template or default_template("rg_s", k_levels)
    labels = tpl.labels or tuple(str(i) for i in range(k_levels))
    response = backend.score(ScoreRequest(
        prompt=tpl.render(query=query.text, document=doc.text),
        mode="labels",
        labels=labels,
        metadata=_metadata(query, doc),
        model_id=model_id,
    ))
    if mode == "er":
        return expected_relevance(response.label_logprobs)
    return peak_relevance(response.label_logprobs)


def score_gccp(query: Query, doc: Document, anchor: AnchorDocument,
               backend: Backend, template: PromptTemplate | None = None,
               model_id: str = "default", order_average: bool = False) -> float:
    """Candidate-vs-anchor comparison; candidate fills the first slot.

    order_average swaps the passages in a second call and averages the two
    win probabilities (twice the calls; off by default).
    """
    tpl = template or default_template("gccp")
    labels = tpl.labels or ("Passage A", "Passage B")

    def one_call(passage_a, passage_b):
        response = backend.score(ScoreRequest(
            prompt=tpl.render(query=query.text, passage_a=passage_a, passage_b=passage_b),
            mode="labels",
            labels=labels,
            metadata=_metadata(query, doc),
            model_id=model_id,
        ))
        return response.label_logprobs

    forward = one_call(doc.text, anchor.text)
    p = contrast_probability(forward[0], forward[1])
    if not order_average:
        return p
    backward = one_call(anchor.text, doc.text)
    return 0.5 * (p + contrast_probability(backward[1], backward[0]))


class _UsageProbe:
    """Pass-through wrapper that tallies the usage of calls made through it."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.prompt_tokens = 0
        self.completion_tokens = 0

    def score(self, request: ScoreRequest):
        response = self.inner.score(request)
        self.prompt_tokens += response.prompt_tokens
        self.completion_tokens += response.completion_tokens
        return response


def score_candidate(query: Query, doc: Document, spec: ScorerSpec,
                    backend: Backend) -> ScoredCandidate:
    """Score one document under a spec, capturing token usage."""
    probe = _UsageProbe(backend)
    tpl = spec.template
    if spec.kind == "qg":
        value = score_qg(query, doc, probe, tpl, spec.model_id)
    elif spec.kind == "rg_yn":
        value = score_rg_yn(query, doc, probe, tpl, spec.model_id)
    elif spec.kind == "rg_s":
        value = score_rg_s(query, doc, probe, tpl, spec.k_levels,
                           spec.relevance_mode, spec.model_id)
    else:
        if spec.anchor is None:
            raise ValueError("gccp scoring requires an anchor document")
        value = score_gccp(query, doc, spec.anchor, probe, tpl,
                           spec.model_id, spec.order_average)
    return ScoredCandidate(
        doc_id=doc.id,
        score=value,
        kind=spec.kind,
        prompt_tokens=probe.prompt_tokens,
        completion_tokens=probe.completion_tokens,
    )


def score_run(query: Query, run: CandidateRun, spec: ScorerSpec,
              backend: Backend, corpus: dict[str, Document],
              max_workers: int = 1) -> CandidateRun:
    """Re-score every candidate and re-rank under the global tie-break.

    Exactly one backend call per candidate for any pointwise kind (two
    with order averaging); anchor construction contributes none.
    """
    docs = []
    for entry in run.entries:
        doc = corpus.get(entry.doc_id)
        if doc is None:
            raise KeyError(f"document {entry.doc_id!r} missing from corpus")
        docs.append(doc)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            scored = list(pool.map(
                lambda d: score_candidate(query, d, spec, backend), docs
            ))
    else:
        scored = [score_candidate(query, d, spec, backend) for d in docs]

    return CandidateRun.from_scores(
        query.id,
        [(c.doc_id, c.score) for c in scored],
        tag=spec.tag,
        prior_ranks=run.ranks(),
    )
