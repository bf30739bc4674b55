"""Tests for the corpus data model, file I/O, and BM25."""

import math
import random

import pytest

from anchorrank.corpus import (
    CandidateRun,
    CorpusStats,
    Document,
    FormatError,
    Qrels,
    Query,
    RunEntry,
    bm25_retrieve,
    bm25_score,
    load_corpus,
    load_qrels,
    load_queries,
    read_run,
    tokenize,
    write_run,
)


class TestTypes:
    def test_query_rejects_blank_text(self):
        with pytest.raises(ValueError):
            Query(id="q1", text="   ")

    def test_query_rejects_empty_id(self):
        with pytest.raises(ValueError):
            Query(id="", text="ok")

    def test_document_requires_id(self):
        with pytest.raises(ValueError):
            Document(id="", text="x")

    def test_qrels_duplicate_and_negative(self):
        q = Qrels()
        q.add("q1", "d1", 2)
        with pytest.raises(ValueError):
            q.add("q1", "d1", 1)
        with pytest.raises(ValueError):
            q.add("q1", "d2", -1)
        assert q.grade("q1", "d1") == 2
        assert q.grade("q1", "unjudged") == 0

    def test_run_validates_contiguous_ranks(self):
        with pytest.raises(ValueError):
            CandidateRun("q1", [RunEntry("d1", 1.0, 2)])

    def test_run_rejects_duplicate_docs(self):
        with pytest.raises(ValueError):
            CandidateRun("q1", [RunEntry("d1", 1.0, 1), RunEntry("d1", 0.5, 2)])


class TestTieBreak:
    def test_sorts_by_score_descending(self):
        run = CandidateRun.from_scores("q1", [("a", 0.5), ("b", 0.9)])
        assert run.doc_ids() == ["b", "a"]
        assert [e.rank for e in run.entries] == [1, 2]

    def test_equal_scores_fall_back_to_prior_rank(self):
        run = CandidateRun.from_scores(
            "q1", [("a", 1.0), ("b", 1.0)], prior_ranks={"a": 2, "b": 1}
        )
        assert run.doc_ids() == ["b", "a"]

    def test_equal_scores_without_prior_rank_use_doc_id(self):
        run = CandidateRun.from_scores("q1", [("z", 1.0), ("a", 1.0)])
        assert run.doc_ids() == ["a", "z"]


class TestLoaders:
    def test_load_corpus(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "d1", "contents": "alpha"}\n{"id": "d2", "contents": "beta"}\n')
        docs = load_corpus(p)
        assert set(docs) == {"d1", "d2"}
        assert docs["d1"].text == "alpha"

    def test_load_corpus_empty_file(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text("")
        assert load_corpus(p) == {}

    def test_load_corpus_missing_contents(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "d1", "contents": "x"}\n{"id": "d2"}\n')
        with pytest.raises(FormatError) as exc:
            load_corpus(p)
        assert exc.value.line_no == 2

    def test_load_corpus_duplicate_id(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "d1", "contents": "x"}\n{"id": "d1", "contents": "y"}\n')
        with pytest.raises(FormatError, match="d1"):
            load_corpus(p)

    def test_load_queries(self, tmp_path):
        p = tmp_path / "q.tsv"
        p.write_text("q1\tfirst\nq2\tsecond\nq3\tthird\n")
        qs = load_queries(p)
        assert [q.id for q in qs] == ["q1", "q2", "q3"]

    def test_load_queries_skips_blank_lines(self, tmp_path):
        p = tmp_path / "q.tsv"
        p.write_text("q1\tfirst\n\nq2\tsecond\n")
        assert len(load_queries(p)) == 2

    def test_load_queries_requires_tab(self, tmp_path):
        p = tmp_path / "q.tsv"
        p.write_text("q1 no tab here\n")
        with pytest.raises(FormatError):
            load_queries(p)

    def test_load_qrels(self, tmp_path):
        p = tmp_path / "qrels.txt"
        p.write_text("q1 0 d1 2\n")
        qrels = load_qrels(p)
        assert qrels.grade("q1", "d1") == 2

    def test_load_qrels_duplicate_pair(self, tmp_path):
        p = tmp_path / "qrels.txt"
        p.write_text("q1 0 d1 2\nq1 0 d1 1\n")
        with pytest.raises(FormatError):
            load_qrels(p)

    def test_load_qrels_negative_grade(self, tmp_path):
        p = tmp_path / "qrels.txt"
        p.write_text("q1 0 d1 -1\n")
        with pytest.raises(FormatError):
            load_qrels(p)

    def test_load_qrels_non_integer_grade(self, tmp_path):
        p = tmp_path / "qrels.txt"
        p.write_text("q1 0 d1 two\n")
        with pytest.raises(FormatError):
            load_qrels(p)


class TestRunIO:
    def test_write_ranks_follow_scores(self, tmp_path):
        run = CandidateRun.from_scores("q1", [("d2", 0.5), ("d1", 0.9)], tag="t")
        p = tmp_path / "a.run"
        write_run(run, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "q1 Q0 d1 1 0.900000 t"
        assert lines[1] == "q1 Q0 d2 2 0.500000 t"

    def test_equal_scores_keep_prior_rank_order(self, tmp_path):
        # file lists the doc that previously ranked 2 first by score order
        p = tmp_path / "a.run"
        p.write_text("q1 Q0 db 1 0.700000 t\nq1 Q0 da 2 0.700000 t\n")
        (run,) = read_run(p)
        out = tmp_path / "b.run"
        write_run(run, out)
        assert out.read_text() == p.read_text()

    def test_round_trip_random_run_is_byte_identical(self, tmp_path):
        for seed in range(5):
            rng = random.Random(seed)
            n = rng.randint(1, 100)
            scored = [(f"d{i:03d}", round(rng.uniform(-5, 5), 6)) for i in range(n)]
            run = CandidateRun.from_scores("q9", scored, tag="rand")
            first = tmp_path / f"first{seed}.run"
            write_run(run, first)
            second = tmp_path / f"second{seed}.run"
            write_run(read_run(first), second)
            assert first.read_bytes() == second.read_bytes()

    def test_read_rejects_non_contiguous_ranks(self, tmp_path):
        p = tmp_path / "a.run"
        p.write_text("q1 Q0 d1 1 0.9 t\nq1 Q0 d2 3 0.5 t\n")
        with pytest.raises(FormatError):
            read_run(p)

    def test_read_rejects_unparsable_score(self, tmp_path):
        p = tmp_path / "a.run"
        p.write_text("q1 Q0 d1 1 high t\n")
        with pytest.raises(FormatError):
            read_run(p)


class TestTokenize:
    def test_lowercase_and_split(self):
        assert tokenize("The CAT, sat!") == ["the", "cat", "sat"]

    def test_idempotent(self):
        for text in ["Héllo, wörld 42!", "a--b  c", "", "under_score"]:
            once = tokenize(text)
            again = tokenize(" ".join(once))
            assert once == again


class TestBM25:
    def _single_doc_stats(self):
        corpus = {"d1": Document("d1", "a a")}
        return corpus, CorpusStats.from_corpus(corpus)

    def test_absent_term_contributes_zero(self):
        corpus, stats = self._single_doc_stats()
        assert bm25_score(Query("q", "zebra"), corpus["d1"], stats) == 0.0

    def test_hand_computed_single_doc(self):
        # tf=2, len=avglen, N=1, df=1: idf = ln(0.5/1.5 + 1), score = idf*3.8/2.9
        corpus, stats = self._single_doc_stats()
        expected = math.log(0.5 / 1.5 + 1.0) * (2 * 1.9) / (2 + 0.9)
        got = bm25_score(Query("q", "a"), corpus["d1"], stats)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.376963, abs=1e-6)

    def test_b_zero_removes_length_normalization(self):
        corpus = {
            "short": Document("short", "cat dog"),
            "long": Document("long", "cat dog bird fish mouse horse"),
        }
        stats = CorpusStats.from_corpus(corpus)
        q = Query("q", "cat")
        s_short = bm25_score(q, corpus["short"], stats, b=0.0)
        s_long = bm25_score(q, corpus["long"], stats, b=0.0)
        assert s_short == pytest.approx(s_long)

    def test_monotone_in_tf(self):
        docs = {f"d{n}": Document(f"d{n}", " ".join(["cat"] * n + ["pad"])) for n in range(1, 6)}
        stats = CorpusStats(n_docs=10, avg_doc_len=5.0, doc_freq={"cat": 4, "pad": 10})
        q = Query("q", "cat")
        scores = []
        for n in range(1, 6):
            # keep length fixed so only tf varies
            doc = Document("d", " ".join(["cat"] * n + ["pad"] * (6 - n)))
            scores.append(bm25_score(q, doc, stats))
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_empty_stats_rejected(self):
        with pytest.raises(ValueError):
            CorpusStats.from_corpus({})

    def test_retrieve_k_larger_than_corpus(self):
        corpus = {
            "d1": Document("d1", "apple pie"),
            "d2": Document("d2", "banana split"),
        }
        run = bm25_retrieve(Query("q", "apple"), corpus, k=10)
        assert len(run.entries) == 2

    def test_retrieve_identical_docs_tie_break_by_id(self):
        corpus = {
            "b": Document("b", "same words here"),
            "a": Document("a", "same words here"),
        }
        run = bm25_retrieve(Query("q", "same"), corpus, k=2)
        assert run.doc_ids() == ["a", "b"]

    def test_retrieve_matches_brute_force_on_toy_corpus(self):
        corpus = {
            "d1": Document("d1", "the cat sat on the mat"),
            "d2": Document("d2", "dogs chase the cat"),
            "d3": Document("d3", "weather report for tomorrow"),
        }
        stats = CorpusStats.from_corpus(corpus)
        q = Query("q", "cat mat")
        expected = sorted(
            ((d, bm25_score(q, doc, stats)) for d, doc in corpus.items()),
            key=lambda x: (-x[1], x[0]),
        )
        run = bm25_retrieve(q, corpus, k=3)
        assert run.doc_ids() == [d for d, _ in expected]
        for e, (_, s) in zip(run.entries, expected):
            assert e.score == pytest.approx(s)
