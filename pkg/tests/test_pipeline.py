"""End-to-end pipeline tests: oracle runs, determinism, failure isolation."""

import json
import os

import pytest

from anchorrank.corpus import read_run, write_run, CandidateRun
from anchorrank.pipeline import ConfigError, PipelineConfig, run_pipeline

from conftest import TOY_GRADES


def base_config(paths, outdir, **overrides):
    values = dict(
        corpus_path=paths["corpus"],
        queries_path=paths["queries"],
        qrels_path=paths["qrels"],
        output_dir=str(outdir),
        backend_type="oracle",
        scorers=[{"kind": "rg_s"}],
        seed=0,
    )
    values.update(overrides)
    return PipelineConfig(**values)


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def normalized_report_bytes(path):
    report = read_report(path)
    report.pop("generated_at", None)
    return json.dumps(report, sort_keys=True).encode()


class TestOracleRuns:
    def test_rg_s_alone_orders_by_grade(self, toy_paths, tmp_path):
        result = run_pipeline(base_config(toy_paths, tmp_path / "out"))
        assert result.failures == []
        (run,) = read_run(result.run_paths["rg-s"])
        grades = [TOY_GRADES[d] for d in run.doc_ids()]
        assert grades == sorted(grades, reverse=True)
        report = read_report(result.report_path)
        assert report["evaluation"]["rg-s"]["mean"] == pytest.approx(1.0)

    def test_adding_gccp_and_aggregating_keeps_perfect_order(self, toy_paths, tmp_path):
        config = base_config(
            toy_paths, tmp_path / "out",
            scorers=[{"kind": "rg_s"}, {"kind": "gccp"}],
        )
        result = run_pipeline(config)
        assert result.failures == []
        report = read_report(result.report_path)
        assert report["evaluation"]["rg-s"]["mean"] == pytest.approx(1.0)
        assert report["evaluation"]["gccp"]["mean"] == pytest.approx(1.0)
        assert report["evaluation"]["aggregated"]["mean"] == pytest.approx(1.0)
        (aggregated,) = read_run(result.aggregated_path)
        grades = [TOY_GRADES[d] for d in aggregated.doc_ids()]
        assert grades == sorted(grades, reverse=True)

    def test_rg_yn_four_doc_fixture(self, tmp_path):
        docs = {
            "a": "Cats sleep most of the day in warm spots.",
            "b": "Solar lanterns store daylight for the garden.",
            "c": "Solar panels power homes with clean electricity.",
            "d": "Electric grids balance power demand constantly.",
        }
        corpus = tmp_path / "c.jsonl"
        with open(corpus, "w") as fh:
            for doc_id, text in docs.items():
                fh.write(json.dumps({"id": doc_id, "contents": text}) + "\n")
        queries = tmp_path / "q.tsv"
        queries.write_text("q1\tsolar panel electricity\n")
        qrels = tmp_path / "qrels.txt"
        qrels.write_text("q1 0 a 0\nq1 0 b 1\nq1 0 c 2\nq1 0 d 0\n")
        config = PipelineConfig(
            corpus_path=str(corpus),
            queries_path=str(queries),
            qrels_path=str(qrels),
            output_dir=str(tmp_path / "out"),
            backend_type="oracle",
            scorers=[{"kind": "rg_yn"}],
        )
        result = run_pipeline(config)
        report = read_report(result.report_path)
        assert report["evaluation"]["rg-yn"]["mean"] == pytest.approx(1.0)

    def test_unusable_graph_falls_back_to_top_document(self, tmp_path):
        # one-sentence documents with disjoint vocabularies cannot form a graph
        docs = {"a": "Lone sentence about kites here.", "b": "Separate words entirely disjoint now."}
        corpus = tmp_path / "c.jsonl"
        with open(corpus, "w") as fh:
            for doc_id, text in docs.items():
                fh.write(json.dumps({"id": doc_id, "contents": text}) + "\n")
        queries = tmp_path / "q.tsv"
        queries.write_text("q1\tkites\n")
        config = PipelineConfig(
            corpus_path=str(corpus),
            queries_path=str(queries),
            output_dir=str(tmp_path / "out"),
            backend_type="hash",
            scorers=[{"kind": "gccp"}],
        )
        result = run_pipeline(config)
        assert result.failures == []
        record = json.loads(open(result.anchors_path).read().splitlines()[0])
        assert record["fallback"] is True
        assert record["lambda2"] is None
        assert record["anchor_text"] in docs.values()

    def test_anchor_records_written(self, toy_paths, tmp_path):
        config = base_config(
            toy_paths, tmp_path / "out", scorers=[{"kind": "gccp"}]
        )
        result = run_pipeline(config)
        lines = open(result.anchors_path, encoding="utf-8").read().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["query_id"] == "q1"
        assert record["anchor_text"]
        assert record["fallback"] is False
        assert record["lambda2"] is not None
        assert all(set(p) == {"doc_id", "rank", "index"}
                   for p in record["sentence_provenance"])


class TestCallAccounting:
    def test_counts_match_theory(self, toy_paths, tmp_path):
        config = base_config(
            toy_paths, tmp_path / "out",
            scorers=[{"kind": "qg"}, {"kind": "rg_s"}, {"kind": "gccp"}],
        )
        result = run_pipeline(config)
        calls = read_report(result.report_path)["calls"]
        n = len(TOY_GRADES)
        assert calls["per_scorer"] == {"qg": n, "rg-s": n, "gccp": n}
        assert calls["remote_calls"] == 3 * n
        assert calls["cache_hits"] == 0

    def test_cached_rerun_hits_everything(self, toy_paths, tmp_path):
        cache = str(tmp_path / "cache.jsonl")
        config = base_config(
            toy_paths, tmp_path / "out1",
            backend_type="hash", cache_path=cache,
        )
        first = read_report(run_pipeline(config).report_path)
        config2 = base_config(
            toy_paths, tmp_path / "out2",
            backend_type="hash", cache_path=cache,
        )
        second = read_report(run_pipeline(config2).report_path)
        assert first["calls"]["remote_calls"] == len(TOY_GRADES)
        assert second["calls"]["remote_calls"] == 0
        assert second["calls"]["cache_hits"] == first["calls"]["remote_calls"]

    def test_cost_fields_populated(self, toy_paths, tmp_path):
        result = run_pipeline(base_config(toy_paths, tmp_path / "out"))
        report = read_report(result.report_path)
        assert report["prompt_tokens"] > 0
        assert report["estimated_cost"] == pytest.approx(
            report["prompt_tokens"] / 1000 * 0.0025
            + report["generated_tokens"] / 1000 * 0.01
        )


class TestDeterminism:
    def _run_twice(self, toy_paths, tmp_path, **overrides):
        paths = []
        for name in ("a", "b"):
            config = base_config(
                toy_paths, tmp_path / name,
                backend_type="hash",
                scorers=[{"kind": "rg_s"}, {"kind": "gccp"}],
                **overrides,
            )
            paths.append(run_pipeline(config))
        return paths

    def test_byte_identical_outputs(self, toy_paths, tmp_path):
        a, b = self._run_twice(toy_paths, tmp_path)
        for tag in a.run_paths:
            assert open(a.run_paths[tag], "rb").read() == open(b.run_paths[tag], "rb").read()
        assert open(a.aggregated_path, "rb").read() == open(b.aggregated_path, "rb").read()
        assert open(a.anchors_path, "rb").read() == open(b.anchors_path, "rb").read()
        assert normalized_report_bytes(a.report_path) == normalized_report_bytes(b.report_path)

    def test_parallel_workers_match_serial_output(self, toy_paths, tmp_path):
        queries_path = tmp_path / "queries3.tsv"
        queries_path.write_text(
            "q1\tsolar panels home electricity\n"
            "q2\tsolar water heater\n"
            "q3\tgarden lamps\n"
        )
        outputs = []
        for name, workers in (("serial", 1), ("parallel", 3)):
            config = base_config(
                toy_paths, tmp_path / name,
                queries_path=str(queries_path),
                qrels_path=None,
                backend_type="hash",
                scorers=[{"kind": "rg_s"}, {"kind": "gccp"}],
                workers=workers,
            )
            result = run_pipeline(config)
            outputs.append({
                tag: open(path, "rb").read() for tag, path in result.run_paths.items()
            } | {"anchors": open(result.anchors_path, "rb").read()})
        assert outputs[0] == outputs[1]

    def test_random_strategy_stable_under_seed(self, toy_paths, tmp_path):
        records = []
        for name in ("a", "b"):
            config = base_config(
                toy_paths, tmp_path / name,
                backend_type="hash",
                scorers=[{"kind": "gccp"}],
                anchor_strategy="random",
                seed=42,
            )
            result = run_pipeline(config)
            records.append(open(result.anchors_path, encoding="utf-8").read())
        assert records[0] == records[1]


class TestFailureIsolation:
    def test_missing_query_in_first_stage_run(self, toy_paths, tmp_path):
        # first-stage run only covers a query that is not in the queries file
        run_path = tmp_path / "partial.run"
        write_run(
            [CandidateRun.from_scores("q1", [("d5", 1.0), ("d6", 0.5)], tag="x")],
            run_path,
        )
        queries_path = tmp_path / "queries2.tsv"
        queries_path.write_text("q1\tsolar panels\nq2\tunknown query\n")
        config = base_config(
            toy_paths, tmp_path / "out",
            queries_path=str(queries_path),
            first_stage_run=str(run_path),
            backend_type="hash",
        )
        result = run_pipeline(config)
        assert result.exit_code == 1
        assert [f.query_id for f in result.failures] == ["q2"]
        (run,) = read_run(result.run_paths["rg-s"])
        assert run.query_id == "q1"

    def test_all_queries_good_exit_zero(self, toy_paths, tmp_path):
        result = run_pipeline(base_config(toy_paths, tmp_path / "out"))
        assert result.exit_code == 0


class TestConfig:
    def test_from_file_round_trip(self, toy_paths, tmp_path):
        raw = {
            "corpus": toy_paths["corpus"],
            "queries": toy_paths["queries"],
            "qrels": toy_paths["qrels"],
            "output_dir": str(tmp_path / "out"),
            "first_stage": {"bm25": {"k": 50}},
            "anchor": {"strategy": "spectral", "m": 5, "z": 4, "theta": 0.2},
            "scorers": [{"kind": "rg_s", "k_levels": 5}, {"kind": "gccp"}],
            "aggregation": {"method": "linear", "normalization": "minmax"},
            "backend": {"type": "oracle", "sigma": 0.0},
            "eval": {"k": 10, "gain": "linear"},
            "seed": 7,
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(raw))
        config = PipelineConfig.from_file(config_path)
        assert config.anchor_m == 5
        assert config.first_stage_k == 50
        result = run_pipeline(config)
        assert result.exit_code == 0

    def test_invalid_m_rejected(self, toy_paths):
        with pytest.raises(ConfigError):
            base_config(toy_paths, "out", anchor_m=0)

    def test_scorers_required(self, toy_paths):
        with pytest.raises(ConfigError):
            base_config(toy_paths, "out", scorers=[])

    def test_oracle_backend_needs_qrels(self, toy_paths):
        with pytest.raises(ConfigError):
            base_config(toy_paths, "out", qrels_path=None)

    def test_unknown_strategy_rejected(self, toy_paths):
        with pytest.raises(ConfigError):
            base_config(toy_paths, "out", anchor_strategy="middle")
