"""NDCG@k evaluation, backend call accounting, and API cost estimation."""

import math
from dataclasses import dataclass, field

from anchorrank.corpus import CandidateRun, Qrels, load_qrels, read_run

GAIN_MODES = ("linear", "exponential")


@dataclass
class CostModel:
    """Prices per 1,000 prompt / generated tokens."""

    prompt_price_per_1k: float = 0.0025
    generated_price_per_1k: float = 0.01

    def __post_init__(self):
        if self.prompt_price_per_1k < 0 or self.generated_price_per_1k < 0:
            raise ValueError("prices must be non-negative")


def estimate_cost(prompt_tokens: int, generated_tokens: int,
                  model: CostModel | None = None) -> float:
    model = model or CostModel()
    return (prompt_tokens / 1000.0 * model.prompt_price_per_1k
            + generated_tokens / 1000.0 * model.generated_price_per_1k)


def _gain(grade: int, mode: str) -> float:
    if mode == "linear":
        return float(grade)
    return 2.0 ** grade - 1.0


def ndcg_at_k(run: CandidateRun, judgments: dict[str, int], k: int,
              gain: str = "linear") -> float:
    """NDCG@k of a single ranked list against its judged grades.

    The ideal gain pool is every judged document for the query, retrieved
    or not; unjudged retrieved documents gain 0. Queries whose ideal gain
    is 0 score 0 (callers exclude them from means).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if gain not in GAIN_MODES:
        raise ValueError(f"unknown gain mode {gain!r}")
    dcg = 0.0
    for i, entry in enumerate(run.top(k), start=1):
        dcg += _gain(judgments.get(entry.doc_id, 0), gain) / math.log2(i + 1)
    ideal = sorted(judgments.values(), reverse=True)[:k]
    idcg = sum(_gain(g, gain) / math.log2(i + 1) for i, g in enumerate(ideal, start=1))
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


@dataclass
class CallAccounting:
    """Backend call tallies; remote plus cache hits equals total requests."""

    per_scorer: dict[str, int] = field(default_factory=dict)
    remote_calls: int = 0
    cache_hits: int = 0

    @property
    def total(self) -> int:
        return self.remote_calls + self.cache_hits

    def scorer_total(self) -> int:
        return sum(self.per_scorer.values())

    def to_dict(self) -> dict:
        return {
            "per_scorer": dict(self.per_scorer),
            "remote_calls": self.remote_calls,
            "cache_hits": self.cache_hits,
            "total": self.total,
        }


def count_calls(per_scorer: dict[str, int], remote_calls: int,
                cache_hits: int = 0) -> CallAccounting:
    """Assemble call accounting and check it is internally consistent."""
    accounting = CallAccounting(
        per_scorer=dict(per_scorer), remote_calls=remote_calls, cache_hits=cache_hits
    )
    if accounting.total != accounting.scorer_total():
        raise ValueError(
            f"call accounting mismatch: scorers saw {accounting.scorer_total()} "
            f"calls but backends answered {accounting.total}"
        )
    return accounting


@dataclass
class EvalReport:
    per_query: dict[str, float]
    mean_ndcg: float
    k: int
    gain: str
    evaluated_queries: int
    skipped_queries: int = 0
    zero_idcg_queries: int = 0
    calls: CallAccounting | None = None
    prompt_tokens: int = 0
    generated_tokens: int = 0
    estimated_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "metric": f"ndcg@{self.k}",
            "gain": self.gain,
            "mean": self.mean_ndcg,
            "per_query": dict(sorted(self.per_query.items())),
            "evaluated_queries": self.evaluated_queries,
            "skipped_queries": self.skipped_queries,
            "zero_idcg_queries": self.zero_idcg_queries,
            "calls": self.calls.to_dict() if self.calls else None,
            "prompt_tokens": self.prompt_tokens,
            "generated_tokens": self.generated_tokens,
            "estimated_cost": self.estimated_cost,
        }


def evaluate_runs(runs: list[CandidateRun], qrels: Qrels, k: int = 10,
                  gain: str = "linear") -> EvalReport:
    """Mean NDCG@k over the runs' queries.

    Queries absent from the qrels are skipped (counted); queries whose
    judged grades are all zero contribute nothing to the mean.
    """
    per_query: dict[str, float] = {}
    skipped = zero_idcg = 0
    total = 0.0
    counted = 0
    judged_queries = qrels.query_ids()
    for run in runs:
        if run.query_id not in judged_queries:
            skipped += 1
            continue
        judgments = qrels.for_query(run.query_id)
        value = ndcg_at_k(run, judgments, k, gain)
        per_query[run.query_id] = value
        if all(g == 0 for g in judgments.values()):
            zero_idcg += 1
            continue
        total += value
        counted += 1
    if counted == 0 and not per_query:
        raise ValueError("no overlap between run queries and qrels queries")
    mean = total / counted if counted else 0.0
    return EvalReport(
        per_query=per_query,
        mean_ndcg=mean,
        k=k,
        gain=gain,
        evaluated_queries=counted,
        skipped_queries=skipped,
        zero_idcg_queries=zero_idcg,
    )


def evaluate_run(run_path, qrels_path, k: int = 10, gain: str = "linear") -> EvalReport:
    """File-level wrapper: TREC run file + qrels file -> EvalReport."""
    return evaluate_runs(read_run(run_path), load_qrels(qrels_path), k, gain)
