"""Shared fixtures: a small graded corpus for end-to-end runs."""

import json

import pytest

# Eight documents on one theme with distinct relevance grades for q1.
# Multi-sentence bodies keep the sentence graph connected so the spectral
# anchor is always available.
TOY_DOCS = {
    "d0": "Gardening tips for growing tomatoes at home. Tomato plants need regular watering and sunshine.",
    "d1": "Solar gadgets are a niche hobby market. Some garden lamps store sunlight during the day.",
    "d2": "Solar chargers can top up a phone battery. Portable solar chargers work best in summer.",
    "d3": "Solar water heaters warm household water. Solar water heaters cut gas usage in sunny regions.",
    "d4": "Solar cells convert sunlight into current. Efficiency of solar cells keeps improving yearly.",
    "d5": "Solar panels convert sunlight into electricity. Rooftop solar panels reduce energy bills.",
    "d6": "Solar panels generate clean electricity for homes. Installing solar panels lowers energy bills quickly.",
    "d7": "Solar panels are the cheapest home electricity source. Modern solar panels pay for themselves fast.",
}

TOY_GRADES = {f"d{i}": i for i in range(8)}

TOY_QUERY = ("q1", "solar panels home electricity")


@pytest.fixture
def toy_paths(tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for doc_id, text in TOY_DOCS.items():
            fh.write(json.dumps({"id": doc_id, "contents": text}) + "\n")
    queries_path = tmp_path / "queries.tsv"
    queries_path.write_text(f"{TOY_QUERY[0]}\t{TOY_QUERY[1]}\n")
    qrels_path = tmp_path / "qrels.txt"
    with open(qrels_path, "w", encoding="utf-8") as fh:
        for doc_id, grade in TOY_GRADES.items():
            fh.write(f"q1 0 {doc_id} {grade}\n")
    return {
        "corpus": str(corpus_path),
        "queries": str(queries_path),
        "qrels": str(qrels_path),
        "dir": tmp_path,
    }
