"""End-to-end re-ranking pipeline.

One configuration drives the whole flow per query: first-stage candidates
-> anchor (when a contrastive scorer is configured) -> per-scorer runs ->
aggregation -> evaluation. Failures are isolated per query; outputs are a
pure function of (config, seed, backend behavior).

Output layout under the configured directory:
    runs/<scorer>.run      one TREC run file per scorer
    runs/aggregated.run    the aggregated run (2+ scorers)
    anchors.jsonl          one anchor record per query
    report.json            evaluation, call accounting, token usage, cost
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from anchorrank.aggregate import AggregationSpec, aggregate
from anchorrank.anchor import (
    DEFAULT_THETA,
    DEFAULT_TOP_M,
    DEFAULT_Z,
    AnchorDocument,
    AnchorUnavailable,
    build_anchor,
    random_anchor,
    top_anchor,
)
from anchorrank.backend import (
    BackendConfig,
    CachedBackend,
    HashMockBackend,
    OracleMockBackend,
    RemoteBackend,
)
from anchorrank.corpus import (
    CandidateRun,
    bm25_retrieve,
    load_corpus,
    load_qrels,
    load_queries,
    read_run,
    write_run,
)
from anchorrank.evaluate import (
    CostModel,
    count_calls,
    estimate_cost,
    evaluate_runs,
)
from anchorrank.scorers import ScorerSpec, load_template, score_run

ANCHOR_STRATEGIES = ("spectral", "top", "random")


class ConfigError(ValueError):
    """The pipeline configuration is invalid or incomplete."""


@dataclass
class PipelineConfig:
    corpus_path: str
    queries_path: str
    output_dir: str
    qrels_path: str | None = None
    first_stage_run: str | None = None
    first_stage_k: int = 100
    anchor_strategy: str = "spectral"
    anchor_m: int = DEFAULT_TOP_M
    anchor_z: int = DEFAULT_Z
    anchor_theta: float = DEFAULT_THETA
    scorers: list[dict] = field(default_factory=list)
    aggregation_method: str = "linear"
    aggregation_normalization: str = "minmax"
    aggregation_weights: list[float] | None = None
    backend_type: str = "hash"
    model_id: str = "default"
    cache_path: str | None = None
    oracle_sigma: float = 0.0
    endpoint_url: str = ""
    auth_env: str = "ANCHORRANK_API_TOKEN"
    max_concurrency: int = 4
    eval_k: int = 10
    eval_gain: str = "linear"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.anchor_m < 1 or self.anchor_z < 1:
            raise ConfigError("anchor m and z must be >= 1")
        if self.anchor_strategy not in ANCHOR_STRATEGIES:
            raise ConfigError(f"unknown anchor strategy {self.anchor_strategy!r}")
        if not self.scorers:
            raise ConfigError("at least one scorer is required")
        if self.backend_type not in ("hash", "oracle", "remote"):
            raise ConfigError(f"unknown backend type {self.backend_type!r}")
        if self.backend_type == "oracle" and not self.qrels_path:
            raise ConfigError("the oracle backend needs a qrels file")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        first_stage = raw.get("first_stage", {}) or {}
        anchor = raw.get("anchor", {}) or {}
        agg = raw.get("aggregation", {}) or {}
        backend = raw.get("backend", {}) or {}
        ev = raw.get("eval", {}) or {}
        try:
            return cls(
                corpus_path=raw["corpus"],
                queries_path=raw["queries"],
                output_dir=raw["output_dir"],
                qrels_path=raw.get("qrels"),
                first_stage_run=first_stage.get("run"),
                first_stage_k=int(first_stage.get("bm25", {}).get("k", 100))
                if isinstance(first_stage.get("bm25"), dict)
                else int(first_stage.get("k", 100)),
                anchor_strategy=anchor.get("strategy", "spectral"),
                anchor_m=int(anchor.get("m", DEFAULT_TOP_M)),
                anchor_z=int(anchor.get("z", DEFAULT_Z)),
                anchor_theta=float(anchor.get("theta", DEFAULT_THETA)),
                scorers=list(raw.get("scorers", [])),
                aggregation_method=agg.get("method", "linear"),
                aggregation_normalization=agg.get("normalization", "minmax"),
                aggregation_weights=agg.get("weights"),
                backend_type=backend.get("type", "hash"),
                model_id=backend.get("model_id", "default"),
                cache_path=backend.get("cache"),
                oracle_sigma=float(backend.get("sigma", 0.0)),
                endpoint_url=backend.get("endpoint", ""),
                auth_env=backend.get("auth_env", "ANCHORRANK_API_TOKEN"),
                max_concurrency=int(backend.get("max_concurrency", 4)),
                eval_k=int(ev.get("k", 10)),
                eval_gain=ev.get("gain", "linear"),
                seed=int(raw.get("seed", 0)),
                workers=int(raw.get("workers", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)


def build_backend(config: PipelineConfig, qrels=None):
    if config.backend_type == "hash":
        backend = HashMockBackend()
    elif config.backend_type == "oracle":
        backend = OracleMockBackend(qrels, sigma=config.oracle_sigma, seed=config.seed)
    else:
        backend = RemoteBackend(BackendConfig(
            endpoint_url=config.endpoint_url,
            auth_env=config.auth_env,
            max_concurrency=config.max_concurrency,
        ))
    if config.cache_path:
        backend = CachedBackend(backend, config.cache_path)
    return backend


def build_scorer_specs(config: PipelineConfig) -> list[ScorerSpec]:
    specs = []
    for raw in config.scorers:
        if isinstance(raw, str):
            raw = {"kind": raw}
        kind = raw.get("kind", "").replace("-", "_")
        template = None
        if raw.get("template"):
            template = load_template(raw["template"], kind)
        try:
            specs.append(ScorerSpec(
                kind=kind,
                template=template,
                k_levels=int(raw.get("k_levels", 5)),
                relevance_mode=raw.get("relevance_mode", "pr"),
                model_id=config.model_id,
                order_average=bool(raw.get("order_average", False)),
            ))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return specs


def make_anchor(query, candidates: CandidateRun, corpus,
                config: PipelineConfig) -> AnchorDocument:
    """Anchor per the configured strategy, with the documented fallback.

    When the spectral construction is unavailable the rank-1 document text
    stands in and the record is marked as a fallback.
    """
    if config.anchor_strategy == "top":
        return top_anchor(candidates, corpus)
    if config.anchor_strategy == "random":
        return random_anchor(candidates, corpus, seed=f"{config.seed}:{query.id}")
    try:
        return build_anchor(
            query, candidates, corpus,
            m=config.anchor_m, z=config.anchor_z, theta=config.anchor_theta,
        )
    except AnchorUnavailable:
        anchor = top_anchor(candidates, corpus)
        anchor.fallback = True
        return anchor


@dataclass
class QueryFailure:
    query_id: str
    stage: str
    error: str


@dataclass
class PipelineResult:
    output_dir: str
    run_paths: dict[str, str]
    aggregated_path: str | None
    anchors_path: str
    report_path: str
    report: dict
    failures: list[QueryFailure]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def _anchor_record(query_id: str, anchor: AnchorDocument) -> dict:
    return {
        "query_id": query_id,
        "anchor_text": anchor.text,
        "sentence_provenance": anchor.provenance(),
        "lambda2": anchor.lambda2,
        "cluster_sizes": list(anchor.cluster_sizes),
        "fallback": anchor.fallback,
    }


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    corpus = load_corpus(config.corpus_path)
    queries = load_queries(config.queries_path)
    qrels = load_qrels(config.qrels_path) if config.qrels_path else None
    specs = build_scorer_specs(config)
    backend = build_backend(config, qrels=qrels)

    first_stage: dict[str, CandidateRun] = {}
    if config.first_stage_run:
        for run in read_run(config.first_stage_run):
            first_stage[run.query_id] = run

    needs_anchor = any(s.kind == "gccp" for s in specs)

    def process(query):
        if config.first_stage_run:
            candidates = first_stage.get(query.id)
            if candidates is None:
                raise KeyError(f"query {query.id!r} missing from the first-stage run")
        else:
            candidates = bm25_retrieve(query, corpus, k=config.first_stage_k)
        anchor = make_anchor(query, candidates, corpus, config) if needs_anchor else None
        scorer_runs = {}
        for spec in specs:
            bound = replace(spec, anchor=anchor) if spec.kind == "gccp" else spec
            scorer_runs[spec.tag] = score_run(
                query, candidates, bound, backend, corpus, max_workers=config.workers
            )
        aggregated = None
        if len(specs) >= 2:
            agg_spec = AggregationSpec.of_runs(
                [scorer_runs[s.tag] for s in specs],
                weights=config.aggregation_weights,
                method=config.aggregation_method,
                normalization=config.aggregation_normalization,
            )
            aggregated = aggregate(agg_spec)
        return candidates, anchor, scorer_runs, aggregated

    # queries run under bounded parallelism; results are assembled in input
    # order afterwards, so the output files stay deterministic
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [(q, pool.submit(process, q)) for q in queries]

    per_scorer_runs: dict[str, list[CandidateRun]] = {s.tag: [] for s in specs}
    aggregated_runs: list[CandidateRun] = []
    anchor_records: list[dict] = []
    failures: list[QueryFailure] = []
    calls_per_scorer: dict[str, int] = {s.tag: 0 for s in specs}

    for query, future in futures:
        try:
            candidates, anchor, scorer_runs, aggregated = future.result()
        except Exception as exc:
            failures.append(QueryFailure(query.id, stage="pipeline", error=str(exc)))
            continue
        if anchor is not None:
            anchor_records.append(_anchor_record(query.id, anchor))
        for spec in specs:
            run = scorer_runs[spec.tag]
            per_scorer_runs[spec.tag].append(run)
            calls_per_scorer[spec.tag] += len(run.entries) * (
                2 if spec.kind == "gccp" and spec.order_average else 1
            )
        if aggregated is not None:
            aggregated_runs.append(aggregated)

    runs_dir = os.path.join(config.output_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    run_paths = {}
    for tag, runs in per_scorer_runs.items():
        path = os.path.join(runs_dir, f"{tag}.run")
        write_run(runs, path)
        run_paths[tag] = path
    aggregated_path = None
    if aggregated_runs:
        aggregated_path = os.path.join(runs_dir, "aggregated.run")
        write_run(aggregated_runs, aggregated_path)

    anchors_path = os.path.join(config.output_dir, "anchors.jsonl")
    with open(anchors_path, "w", encoding="utf-8") as fh:
        for record in anchor_records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    if isinstance(backend, CachedBackend):
        cache_hits = backend.hits
        remote_calls = backend.remote_calls
        token_stats = backend.inner.stats  # hits cost no new tokens
    else:
        cache_hits = 0
        remote_calls = backend.stats.calls
        token_stats = backend.stats
    accounting = count_calls(calls_per_scorer, remote_calls, cache_hits)
    prompt_tokens = token_stats.prompt_tokens
    generated_tokens = token_stats.completion_tokens

    report: dict = {
        "config": {
            "anchor": {
                "strategy": config.anchor_strategy,
                "m": config.anchor_m,
                "z": config.anchor_z,
                "theta": config.anchor_theta,
            },
            "scorers": [s.kind for s in specs],
            "aggregation": {
                "method": config.aggregation_method,
                "normalization": config.aggregation_normalization,
            },
            "backend": config.backend_type,
            "seed": config.seed,
        },
        "calls": accounting.to_dict(),
        "prompt_tokens": prompt_tokens,
        "generated_tokens": generated_tokens,
        "estimated_cost": estimate_cost(prompt_tokens, generated_tokens, CostModel()),
        "failures": [
            {"query_id": f.query_id, "stage": f.stage, "error": f.error}
            for f in failures
        ],
        "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }

    if qrels is not None:
        evaluations = {}
        for tag, runs in per_scorer_runs.items():
            if runs:
                evaluations[tag] = evaluate_runs(
                    runs, qrels, k=config.eval_k, gain=config.eval_gain
                ).to_dict()
        if aggregated_runs:
            evaluations["aggregated"] = evaluate_runs(
                aggregated_runs, qrels, k=config.eval_k, gain=config.eval_gain
            ).to_dict()
        report["evaluation"] = evaluations

    report_path = os.path.join(config.output_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")

    return PipelineResult(
        output_dir=config.output_dir,
        run_paths=run_paths,
        aggregated_path=aggregated_path,
        anchors_path=anchors_path,
        report_path=report_path,
        report=report,
        failures=failures,
    )
