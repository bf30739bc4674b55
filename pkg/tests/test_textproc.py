"""Tests for sentence segmentation, dedup, and TF-IDF embeddings."""

import math
import random

import pytest

from anchorrank.corpus import Document
from anchorrank.textproc import (
    Sentence,
    TfIdfVector,
    build_vocabulary,
    cosine,
    dedup_sentences,
    load_word_list,
    split_sentences,
    tfidf_embed,
)


def _sent(text, doc="d1", rank=1, index=0):
    return Sentence(text=text, doc_id=doc, doc_rank=rank, index=index)


class TestSplitSentences:
    def test_basic_two_sentences(self):
        doc = Document("d1", "A cat sat here. A dog ran away.")
        sents = split_sentences(doc, initial_rank=1)
        assert [s.text for s in sents] == ["A cat sat here.", "A dog ran away."]
        assert [s.index for s in sents] == [0, 1]

    def test_abbreviation_guard(self):
        doc = Document("d1", "See Dr. Smith works here today.")
        sents = split_sentences(doc, initial_rank=1)
        assert len(sents) == 1

    def test_eg_guard(self):
        doc = Document("d1", "Some fruits, e.g. Apples and pears, are sweet here.")
        assert len(split_sentences(doc, 1)) == 1

    def test_short_sentences_filtered(self):
        doc = Document("d1", "Hi. Ok.")
        assert split_sentences(doc, 1) == []

    def test_empty_doc(self):
        assert split_sentences(Document("d1", "   "), 1) == []

    def test_question_and_exclamation(self):
        doc = Document("d1", "Is the cat here? The dog barked loudly!")
        sents = split_sentences(doc, 1)
        assert len(sents) == 2

    def test_no_split_before_lowercase(self):
        doc = Document("d1", "It cost 3.50 dollars in total yesterday.")
        assert len(split_sentences(doc, 1)) == 1

    def test_indices_strictly_increase(self):
        doc = Document(
            "d1",
            "First point made here. Ok. Second point made here. Third point made here.",
        )
        sents = split_sentences(doc, 1)
        indices = [s.index for s in sents]
        assert indices == sorted(indices)
        assert len(set(indices)) == len(indices)

    def test_custom_guard_file(self, tmp_path):
        p = tmp_path / "abbrev.txt"
        p.write_text("fig.\n")
        guards = load_word_list(p)
        doc = Document("d1", "See Fig. Two for the diagram of parts.")
        assert len(split_sentences(doc, 1, abbreviations=guards)) == 1


class TestDedup:
    def test_exact_duplicates_collapse(self):
        sents = [_sent("The cat sat.", index=0), _sent("the  cat sat", index=1)]
        assert len(dedup_sentences(sents)) == 1

    def test_no_duplicates_is_identity(self):
        sents = [_sent("The cat sat here.", index=0), _sent("A dog ran away.", index=1)]
        assert dedup_sentences(sents) == sents

    def test_survivor_from_higher_ranked_doc(self):
        low = _sent("Shared sentence text.", doc="d2", rank=2, index=0)
        high = _sent("Shared sentence text.", doc="d1", rank=1, index=3)
        out = dedup_sentences([low, high])
        assert out == [high]

    def test_idempotent(self):
        sents = [
            _sent("One thing happened.", index=0),
            _sent("one thing happened", index=1),
            _sent("Another thing happened.", index=2),
        ]
        once = dedup_sentences(sents)
        assert dedup_sentences(once) == once


class TestVocabulary:
    def test_term_in_every_sentence_has_idf_one(self):
        sents = [_sent("cat runs fast", index=0), _sent("cat sleeps now", index=1)]
        vocab = build_vocabulary(sents)
        assert vocab.idf_of("cat") == pytest.approx(math.log((1 + 2) / (1 + 2)) + 1) == 1.0

    def test_rare_term_idf(self):
        sents = [
            _sent("alpha beta gamma", index=0),
            _sent("beta gamma delta", index=1),
            _sent("gamma delta epsilon", index=2),
        ]
        vocab = build_vocabulary(sents)
        assert vocab.idf_of("alpha") == pytest.approx(math.log(2) + 1, abs=1e-9)
        assert vocab.idf_of("alpha") == pytest.approx(1.6931, abs=1e-4)

    def test_unseen_term_weight_zero(self):
        vocab = build_vocabulary([_sent("alpha beta gamma", index=0)])
        assert vocab.idf_of("zeta") == 0.0

    def test_document_level_counting(self):
        sents = [
            _sent("cat here now", doc="d1", rank=1, index=0),
            _sent("cat there later", doc="d1", rank=1, index=1),
            _sent("dog somewhere else", doc="d2", rank=2, index=0),
        ]
        vocab = build_vocabulary(sents, count_over="documents")
        # "cat" appears in 1 of 2 documents
        assert vocab.idf_of("cat") == pytest.approx(math.log(3 / 2) + 1)


class TestEmbedding:
    def test_single_term_sentence(self):
        vocab = build_vocabulary([_sent("cat cat cat", index=0), _sent("dog dog dog", index=1)])
        vec = tfidf_embed(_sent("cat cat cat"), vocab)
        assert vec.weights["cat"] == pytest.approx(1.0)

    def test_all_unknown_terms_zero_vector(self):
        vocab = build_vocabulary([_sent("alpha beta gamma", index=0)])
        vec = tfidf_embed(_sent("zeta eta theta"), vocab)
        assert vec.is_zero()

    def test_two_equal_idf_terms(self):
        sents = [_sent("cat mat hat", index=0), _sent("dog fog log", index=1)]
        vocab = build_vocabulary(sents)
        vec = tfidf_embed(_sent("cat mat cat mat"), vocab)  # equal tf and idf
        assert vec.weights["cat"] == pytest.approx(1 / math.sqrt(2))
        assert vec.weights["mat"] == pytest.approx(1 / math.sqrt(2))

    def test_unit_norm(self):
        rng = random.Random(3)
        words = ["w%d" % i for i in range(20)]
        sents = [
            _sent(" ".join(rng.choices(words, k=rng.randint(3, 10))), index=i)
            for i in range(15)
        ]
        vocab = build_vocabulary(sents)
        for s in sents:
            vec = tfidf_embed(s, vocab)
            if not vec.is_zero():
                assert vec.norm() == pytest.approx(1.0, abs=1e-9)


class TestCosine:
    def test_identical_vectors(self):
        v = TfIdfVector({"a": 0.6, "b": 0.8})
        assert cosine(v, v) == pytest.approx(1.0)

    def test_disjoint_supports(self):
        assert cosine(TfIdfVector({"a": 1.0}), TfIdfVector({"b": 1.0})) == 0.0

    def test_partial_overlap(self):
        a = TfIdfVector({"a": 1 / math.sqrt(2), "b": 1 / math.sqrt(2)})
        b = TfIdfVector({"a": 1.0})
        assert cosine(a, b) == pytest.approx(0.7071, abs=1e-4)

    def test_zero_vector_yields_zero(self):
        assert cosine(TfIdfVector({}), TfIdfVector({"a": 1.0})) == 0.0

    def test_symmetric_and_bounded(self):
        rng = random.Random(11)
        words = ["t%d" % i for i in range(10)]
        sents = [
            _sent(" ".join(rng.choices(words, k=5)), index=i) for i in range(12)
        ]
        vocab = build_vocabulary(sents)
        vecs = [tfidf_embed(s, vocab) for s in sents]
        for a in vecs:
            for b in vecs:
                c1, c2 = cosine(a, b), cosine(b, a)
                assert c1 == pytest.approx(c2, abs=1e-12)
                assert 0.0 <= c1 <= 1.0
