"""Command-line interface.

Subcommands mirror the pipeline stages:

    anchor       build anchor documents and emit them as JSONL
    score        re-score a first-stage run with one scorer
    aggregate    fuse two or more run files
    eval         NDCG@k of a run file against qrels
    cache-stats  inspect a persistent backend cache
    pipeline     run the whole flow from a JSON config file

Exit codes: 0 success, 1 partial/evaluation failure, 2 configuration error.
"""

import argparse
import json
import sys

from anchorrank.aggregate import AggregationSpec, aggregate as run_aggregate
from anchorrank.backend import CachedBackend, HashMockBackend
from anchorrank.corpus import (
    bm25_retrieve,
    load_corpus,
    load_qrels,
    load_queries,
    read_run,
    write_run,
)
from anchorrank.evaluate import evaluate_run
from anchorrank.pipeline import (
    ConfigError,
    PipelineConfig,
    build_backend,
    make_anchor,
    run_pipeline,
    _anchor_record,
)
from anchorrank.scorers import ScorerSpec, load_template, score_run


def _add_backend_flags(parser):
    parser.add_argument("--backend", choices=["hash", "oracle", "remote"],
                        default="hash", help="scoring backend")
    parser.add_argument("--model-id", default="default")
    parser.add_argument("--cache", default=None, help="persistent cache JSONL path")
    parser.add_argument("--sigma", type=float, default=0.0,
                        help="oracle mock noise level")
    parser.add_argument("--endpoint", default="", help="remote completions URL")
    parser.add_argument("--auth-env", default="ANCHORRANK_API_TOKEN",
                        help="environment variable holding the API token")
    parser.add_argument("--seed", type=int, default=0)


def _add_first_stage_flags(parser):
    parser.add_argument("--run", default=None, help="first-stage TREC run file")
    parser.add_argument("--bm25-k", type=int, default=100,
                        help="built-in BM25 depth when no run file is given")


def _first_stage_runs(args, corpus, queries):
    if args.run:
        by_query = {r.query_id: r for r in read_run(args.run)}
        missing = [q.id for q in queries if q.id not in by_query]
        if missing:
            raise ConfigError(f"queries missing from the run file: {missing}")
        return {q.id: by_query[q.id] for q in queries}
    return {q.id: bm25_retrieve(q, corpus, k=args.bm25_k) for q in queries}


def _mini_config(args, **overrides) -> PipelineConfig:
    values = dict(
        corpus_path=getattr(args, "corpus", ""),
        queries_path=getattr(args, "queries", ""),
        output_dir=".",
        qrels_path=getattr(args, "qrels", None),
        backend_type=getattr(args, "backend", "hash"),
        model_id=getattr(args, "model_id", "default"),
        cache_path=getattr(args, "cache", None),
        oracle_sigma=getattr(args, "sigma", 0.0),
        endpoint_url=getattr(args, "endpoint", ""),
        auth_env=getattr(args, "auth_env", "ANCHORRANK_API_TOKEN"),
        seed=getattr(args, "seed", 0),
        scorers=[{"kind": "rg_yn"}],
    )
    values.update(overrides)
    return PipelineConfig(**values)


def cmd_anchor(args) -> int:
    corpus = load_corpus(args.corpus)
    queries = load_queries(args.queries)
    config = _mini_config(
        args,
        anchor_strategy=args.strategy,
        anchor_m=args.m,
        anchor_z=args.z,
        anchor_theta=args.theta,
    )
    first_stage = _first_stage_runs(args, corpus, queries)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for query in queries:
            anchor = make_anchor(query, first_stage[query.id], corpus, config)
            out.write(json.dumps(_anchor_record(query.id, anchor),
                                 ensure_ascii=False, sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_score(args) -> int:
    corpus = load_corpus(args.corpus)
    queries = load_queries(args.queries)
    kind = args.scorer.replace("-", "_")
    config = _mini_config(
        args,
        scorers=[{"kind": kind}],
        anchor_strategy=args.anchor_strategy,
        anchor_m=args.m,
        anchor_z=args.z,
        anchor_theta=args.theta,
    )
    qrels = load_qrels(args.qrels) if args.qrels else None
    backend = build_backend(config, qrels=qrels)
    template = load_template(args.template, kind) if args.template else None
    first_stage = _first_stage_runs(args, corpus, queries)
    outputs = []
    for query in queries:
        candidates = first_stage[query.id]
        anchor = None
        if kind == "gccp":
            anchor = make_anchor(query, candidates, corpus, config)
        spec = ScorerSpec(kind=kind, template=template, k_levels=args.k_levels,
                          relevance_mode=args.relevance_mode,
                          model_id=args.model_id, anchor=anchor)
        outputs.append(score_run(query, candidates, spec, backend, corpus))
    write_run(outputs, args.out)
    print(f"wrote {len(outputs)} querie(s) to {args.out} "
          f"({backend.stats.calls} backend calls)")
    return 0


def cmd_aggregate(args) -> int:
    runs_by_file = [read_run(path) for path in args.runs]
    weights = [float(w) for w in args.weights.split(",")] if args.weights else None
    by_query: dict[str, list] = {}
    for runs in runs_by_file:
        for run in runs:
            by_query.setdefault(run.query_id, []).append(run)
    outputs = []
    for query_id, components in by_query.items():
        if len(components) != len(args.runs):
            raise ConfigError(
                f"query {query_id!r} is not present in every input run file"
            )
        spec = AggregationSpec.of_runs(
            components, weights=weights, method=args.method,
            normalization=args.normalize,
        )
        outputs.append(run_aggregate(spec))
    write_run(outputs, args.out)
    print(f"wrote {len(outputs)} querie(s) to {args.out} (tag {outputs[0].tag})")
    return 0


def cmd_eval(args) -> int:
    try:
        report = evaluate_run(args.run, args.qrels, k=args.k, gain=args.gain)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = report.to_dict()
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(f"ndcg@{report.k} (gain={report.gain})")
        for qid, value in sorted(report.per_query.items()):
            print(f"  {qid:<12} {value:.4f}")
        print(f"  {'mean':<12} {report.mean_ndcg:.4f} "
              f"({report.evaluated_queries} queries, "
              f"{report.skipped_queries} skipped)")
    return 0


def cmd_cache_stats(args) -> int:
    cached = CachedBackend(HashMockBackend(), args.cache)
    stats = cached.cache_stats()
    print(json.dumps({"entries": stats["entries"], "path": args.cache}, indent=2))
    return 0


def cmd_pipeline(args) -> int:
    config = PipelineConfig.from_file(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    if args.seed is not None:
        config.seed = args.seed
    result = run_pipeline(config)
    summary = {
        "output_dir": result.output_dir,
        "runs": result.run_paths,
        "aggregated": result.aggregated_path,
        "report": result.report_path,
        "failures": len(result.failures),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorrank",
        description="Zero-shot LLM re-ranking with anchor-based contrastive scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_anchor = sub.add_parser("anchor", help="build anchor documents")
    p_anchor.add_argument("--corpus", required=True)
    p_anchor.add_argument("--queries", required=True)
    _add_first_stage_flags(p_anchor)
    p_anchor.add_argument("--strategy", choices=["spectral", "top", "random"],
                          default="spectral")
    p_anchor.add_argument("--m", type=int, default=10)
    p_anchor.add_argument("--z", type=int, default=10)
    p_anchor.add_argument("--theta", type=float, default=0.1)
    p_anchor.add_argument("--seed", type=int, default=0)
    p_anchor.add_argument("--out", default=None, help="output JSONL (default stdout)")
    p_anchor.set_defaults(func=cmd_anchor)

    p_score = sub.add_parser("score", help="re-score a run with one scorer")
    p_score.add_argument("--corpus", required=True)
    p_score.add_argument("--queries", required=True)
    p_score.add_argument("--qrels", default=None, help="needed by the oracle backend")
    _add_first_stage_flags(p_score)
    p_score.add_argument("--scorer", required=True,
                         choices=["qg", "rg-yn", "rg-s", "gccp"])
    p_score.add_argument("--template", default=None, help="prompt template file")
    p_score.add_argument("--k-levels", type=int, default=5)
    p_score.add_argument("--relevance-mode", choices=["pr", "er"], default="pr")
    p_score.add_argument("--anchor-strategy", choices=["spectral", "top", "random"],
                         default="spectral")
    p_score.add_argument("--m", type=int, default=10)
    p_score.add_argument("--z", type=int, default=10)
    p_score.add_argument("--theta", type=float, default=0.1)
    _add_backend_flags(p_score)
    p_score.add_argument("--out", required=True, help="output run file")
    p_score.set_defaults(func=cmd_score)

    p_agg = sub.add_parser("aggregate", help="fuse run files")
    p_agg.add_argument("runs", nargs="+", help="two or more run files")
    p_agg.add_argument("--method", choices=["linear", "borda"], default="linear")
    p_agg.add_argument("--normalize", choices=["minmax", "none"], default="minmax")
    p_agg.add_argument("--weights", default=None, help="comma-separated weights")
    p_agg.add_argument("--out", required=True)
    p_agg.set_defaults(func=cmd_aggregate)

    p_eval = sub.add_parser("eval", help="NDCG@k of a run against qrels")
    p_eval.add_argument("--run", required=True)
    p_eval.add_argument("--qrels", required=True)
    p_eval.add_argument("--k", type=int, default=10)
    p_eval.add_argument("--gain", choices=["linear", "exponential"], default="linear")
    p_eval.add_argument("--json", action="store_true", help="JSON report only")
    p_eval.set_defaults(func=cmd_eval)

    p_cache = sub.add_parser("cache-stats", help="inspect a cache file")
    p_cache.add_argument("--cache", required=True)
    p_cache.set_defaults(func=cmd_cache_stats)

    p_pipe = sub.add_parser("pipeline", help="run the full pipeline from a config")
    p_pipe.add_argument("--config", required=True, help="JSON config file")
    p_pipe.add_argument("--output-dir", default=None, help="override the config value")
    p_pipe.add_argument("--seed", type=int, default=None, help="override the config value")
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
