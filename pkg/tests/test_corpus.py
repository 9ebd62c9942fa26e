import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multigrain.corpus import (
    Corpus,
    build_corpus,
    read_jsonl,
    sentence_spans,
    sentence_split,
    tokenize,
)
from multigrain.errors import DataError


class TestSentenceSplit:
    def test_two_sentences(self):
        assert sentence_split("Good room. Bad service.") == ["Good room.", "Bad service."]

    def test_empty(self):
        assert sentence_split("") == []
        assert sentence_split("   \n ") == []

    def test_mixed_terminators(self):
        assert sentence_split("Is it good? Yes! Fine.") == ["Is it good?", "Yes!", "Fine."]

    def test_no_split_after_initial(self):
        assert sentence_split("Ask J. Smith at the desk. He helps.") == [
            "Ask J. Smith at the desk.",
            "He helps.",
        ]

    def test_no_split_without_whitespace(self):
        assert sentence_split("Price was 1.50 pounds.Nice") == ["Price was 1.50 pounds.Nice"]

    @given(st.text(alphabet="ab .!?\nJ", max_size=60))
    def test_spans_cover_nonspace_text(self, text):
        spans = sentence_spans(text)
        covered = set()
        prev = 0
        for a, b in spans:
            assert prev <= a < b
            prev = b
            covered.update(range(a, b))
        assert all(i in covered for i, ch in enumerate(text) if not ch.isspace())


class TestTokenize:
    def test_stopwords_and_punctuation(self):
        assert tokenize("The tube station!", {"the"}) == ["tube", "station"]

    def test_numbers_kept(self):
        assert tokenize("Room 101.", set()) == ["room", "101"]

    def test_all_stopwords(self):
        assert tokenize("the a an", {"the", "a", "an"}) == []

    def test_lowercase(self):
        assert tokenize("GREAT View", set()) == ["great", "view"]


class TestBuildCorpus:
    def test_shared_word_counted_once(self):
        c = build_corpus([("a", "Nice room."), ("b", "Small room.")])
        assert c.vocab.terms == ("nice", "room", "small")
        assert c.vocab.size == 3

    def test_stopword_only_doc_dropped(self):
        c = build_corpus([("a", "The a an."), ("b", "Room ok.")], {"the", "a", "an"})
        assert [d.doc_id for d in c.documents] == ["b"]
        assert c.dropped == ("a",)
        assert c.stats()["dropped"] == 1

    def test_empty_sentence_kept_for_alignment(self):
        c = build_corpus([("a", "Room ok. The. Bed soft.")], {"the"})
        doc = c.documents[0]
        assert [len(s) for s in doc.sentences] == [2, 0, 2]
        assert c.n_sentences == 3

    def test_duplicate_id_rejected(self):
        with pytest.raises(DataError, match="'x'"):
            build_corpus([("x", "One."), ("x", "Two.")])

    def test_rating_out_of_range(self):
        with pytest.raises(DataError, match="rooms"):
            build_corpus([("x", "Ok.", {"rooms": 6})], rating_scale=5)

    def test_stats_match_recount(self):
        raw = [("a", "Good room. Bad service!"), ("b", "Great location. Near the tube. Noisy.")]
        c = build_corpus(raw, {"the"})
        assert c.n_docs == len(c.documents)
        assert c.n_sentences == sum(len(d.sentences) for d in c.documents)
        assert c.n_tokens == sum(len(s.tokens) for d in c.documents for s in d.sentences)
        arr = c.arrays()
        assert len(arr.words) == c.n_tokens
        assert arr.doc_token_start[-1] == c.n_tokens
        assert arr.doc_sent_start[-1] == c.n_sentences

    def test_round_trip_decode(self):
        raw = [("a", "Good room. Bad service!"), ("b", "Room 12 was great.")]
        stop = {"was"}
        c = build_corpus(raw, stop)
        for (_, text), doc in zip(raw, c.documents):
            expected = [tokenize(s, stop) for s in sentence_split(text)]
            assert [c.vocab.decode(s.tokens) for s in doc.sentences] == expected

    def test_deterministic_bytes(self):
        raw = [("a", "Good room. Bad service!"), ("b", "Room 12 was great.")]
        assert build_corpus(raw).dumps() == build_corpus(list(raw)).dumps()

    def test_save_load(self, tmp_path):
        c = build_corpus([("a", "Good room.", {"rooms": 4})])
        c.save(tmp_path / "c.json")
        back = Corpus.load(tmp_path / "c.json")
        assert back == c
        assert back.documents[0].ratings == {"rooms": 4}

    def test_version_mismatch_rejected(self, tmp_path):
        c = build_corpus([("a", "Good room.")])
        data = c.to_dict()
        data["version"] = 99
        (tmp_path / "c.json").write_text(json.dumps(data))
        with pytest.raises(DataError, match="version"):
            Corpus.load(tmp_path / "c.json")

    @settings(max_examples=50)
    @given(st.lists(st.text(alphabet="abc .!", max_size=30), min_size=1, max_size=5))
    def test_invariants(self, texts):
        c = build_corpus([(str(i), t) for i, t in enumerate(texts)])
        W = c.vocab.size
        assert all(c.vocab.index[t] == i for i, t in enumerate(c.vocab.terms))
        for d in c.documents:
            assert any(s.tokens for s in d.sentences)
            assert all(0 <= t < W for s in d.sentences for t in s.tokens)


class TestReadJsonl:
    def test_malformed_line_names_line_number(self, tmp_path):
        p = tmp_path / "in.jsonl"
        p.write_text('{"id": "a", "text": "ok."}\n{broken\n')
        with pytest.raises(DataError, match=":2:"):
            read_jsonl(p)

    def test_records(self, tmp_path):
        p = tmp_path / "in.jsonl"
        p.write_text('{"id": "a", "text": "ok.", "ratings": {"value": 3}}\n\n{"id": 7, "text": "x"}\n')
        assert read_jsonl(p) == [("a", "ok.", {"value": 3}), ("7", "x", None)]
