"""Rank aggregation of heterogeneous pointwise runs.

The default path is per-query min-max normalization followed by a
(weighted) per-document mean, which puts query-generation log-likelihoods,
softmax probabilities, and raw label logits on one scale before averaging.
A Borda positional count is the score-free alternative.
"""

from dataclasses import dataclass, field

from anchorrank.corpus import CandidateRun, RunEntry

METHODS = ("linear", "borda")
NORMALIZATIONS = ("minmax", "none")

# initials of well-known component tags, used for the aggregate run tag
_TAG_INITIALS = {"qg": "Q", "rg-yn": "Y", "rg_yn": "Y", "rg-s": "S", "rg_s": "S",
                 "gccp": "G", "bm25": "B"}


@dataclass
class AggregationSpec:
    components: list[tuple[CandidateRun, float]]
    method: str = "linear"
    normalization: str = "minmax"
    tag: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown aggregation method {self.method!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if len(self.components) < 2:
            raise ValueError("aggregation needs at least 2 component runs")
        first, _ = self.components[0]
        docs = set(first.doc_ids())
        for run, weight in self.components[1:]:
            if run.query_id != first.query_id:
                raise ValueError(
                    f"component runs disagree on query: {run.query_id!r} vs {first.query_id!r}"
                )
            other = set(run.doc_ids())
            for missing in sorted(docs - other) + sorted(other - docs):
                raise ValueError(
                    f"document {missing!r} is missing from one component run"
                )

    @classmethod
    def of_runs(cls, runs, weights=None, method="linear", normalization="minmax",
                tag=None) -> "AggregationSpec":
        runs = list(runs)
        weights = list(weights) if weights is not None else [1.0] * len(runs)
        if len(weights) != len(runs):
            raise ValueError("one weight per component run required")
        return cls(components=list(zip(runs, weights)), method=method,
                   normalization=normalization, tag=tag)

    def resolved_tag(self) -> str:
        if self.tag:
            return self.tag
        initials = "".join(
            _TAG_INITIALS.get(run.tag, (run.tag[:1] or "x").upper())
            for run, _ in self.components
        )
        return f"PAGC-{initials}"


def minmax_normalize(run: CandidateRun) -> CandidateRun:
    """Rescale scores to [0, 1]; constant runs collapse to 0.5 everywhere.

    The map is monotone, so the ordering and ranks are untouched.
    """
    if not run.entries:
        return CandidateRun(run.query_id, [], run.tag)
    values = [e.score for e in run.entries]
    lo, hi = min(values), max(values)
    if hi == lo:
        rescored = [0.5] * len(values)
    else:
        rescored = [(v - lo) / (hi - lo) for v in values]
    entries = [
        RunEntry(doc_id=e.doc_id, score=s, rank=e.rank)
        for e, s in zip(run.entries, rescored)
    ]
    return CandidateRun(query_id=run.query_id, entries=entries, tag=run.tag)


def _best_prior_ranks(components) -> dict[str, int]:
    best: dict[str, int] = {}
    for run, _ in components:
        for e in run.entries:
            if e.doc_id not in best or e.rank < best[e.doc_id]:
                best[e.doc_id] = e.rank
    return best


def aggregate(spec: AggregationSpec) -> CandidateRun:
    if spec.method == "linear":
        return linear_aggregate(spec)
    return borda_aggregate(spec)


def linear_aggregate(spec: AggregationSpec) -> CandidateRun:
    """Weighted per-document mean of (optionally normalized) scores."""
    components = spec.components
    if spec.normalization == "minmax":
        components = [(minmax_normalize(run), w) for run, w in components]
    total_weight = sum(w for _, w in components)
    if total_weight <= 0:
        raise ValueError("component weights must sum to a positive value")
    sums: dict[str, float] = {}
    for run, weight in components:
        for e in run.entries:
            sums[e.doc_id] = sums.get(e.doc_id, 0.0) + weight * e.score
    scored = [(doc_id, value / total_weight) for doc_id, value in sums.items()]
    return CandidateRun.from_scores(
        spec.components[0][0].query_id,
        scored,
        tag=spec.resolved_tag(),
        prior_ranks=_best_prior_ranks(spec.components),
    )


def borda_aggregate(spec: AggregationSpec) -> CandidateRun:
    """Positional count: each component grants n - rank points per document."""
    points: dict[str, float] = {}
    for run, _ in spec.components:
        n = len(run.entries)
        for e in run.entries:
            points[e.doc_id] = points.get(e.doc_id, 0.0) + (n - e.rank)
    return CandidateRun.from_scores(
        spec.components[0][0].query_id,
        list(points.items()),
        tag=spec.resolved_tag(),
        prior_ranks=_best_prior_ranks(spec.components),
    )
