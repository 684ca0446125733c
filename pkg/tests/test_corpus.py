import json

import mpmath
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from disfl.corpus import (
    Corpus,
    CorpusFormatError,
    Dialogue,
    EOS_ID,
    PAD_ID,
    RESERVED,
    Token,
    UNK_ID,
    Utterance,
    Vocabulary,
    build_vocabulary,
    class_weights,
    count_tags,
    decode_ids,
    encode_utterance,
    read_corpus,
    weights_from_counts,
    write_corpus,
)
from disfl.tags import EDIT, FLUENT, EndMarker, onset


def utt(pairs, speaker="usr", tags=None):
    tokens = tuple(
        Token(w, p, tags[i] if tags else FLUENT) for i, (w, p) in enumerate(pairs)
    )
    return Utterance(speaker, tokens)


def small_corpus():
    u1 = utt([("with", "IN"), ("italian", "JJ"), ("cuisine", "NN")])
    u2 = utt(
        [("with", "IN"), ("italian", "JJ"), ("uh", "UH"), ("spanish", "JJ"),
         ("cuisine", "NN")],
        tags=[FLUENT, FLUENT, EDIT, onset(2, EndMarker.END_SUB), FLUENT],
    )
    d = Dialogue("d00001", (u1, u2))
    return Corpus((d,), name="tiny", meta={"seed": 7})


class TestIO:
    def test_roundtrip(self, tmp_path):
        corpus = small_corpus()
        write_corpus(corpus, tmp_path / "c")
        assert read_corpus(tmp_path / "c") == corpus

    def test_rewrite_byte_identical(self, tmp_path):
        corpus = small_corpus()
        p1 = write_corpus(corpus, tmp_path / "a")
        p2 = write_corpus(read_corpus(tmp_path / "a"), tmp_path / "b")
        assert p1.read_bytes() == p2.read_bytes()

    def test_explicit_jsonl_path(self, tmp_path):
        corpus = small_corpus()
        path = write_corpus(corpus, tmp_path / "train.jsonl")
        assert path.name == "train.jsonl"
        assert (tmp_path / "train.meta.json").exists()
        assert read_corpus(path) == corpus

    def test_invalid_tag_reports_line(self, tmp_path):
        line = json.dumps({
            "id": "d1",
            "utterances": [{"speaker": "usr",
                            "tokens": [{"w": "a", "p": "DT",
                                        "t": "<rm-0/><rpEndSub/>"}]}],
        })
        path = tmp_path / "bad.jsonl"
        path.write_text(line + "\n")
        with pytest.raises(CorpusFormatError, match="line 1"):
            read_corpus(path)

    def test_missing_field_reports_location(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "d1", "utterances": [{"speaker": "usr", "tokens": [{"w": "a"}]}]}\n')
        with pytest.raises(CorpusFormatError, match="token 0"):
            read_corpus(path)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "d1"}\nnot json\n')
        with pytest.raises(CorpusFormatError, match="line 2"):
            read_corpus(path)

    def test_structurally_bad_tags_rejected(self, tmp_path):
        line = json.dumps({
            "id": "d1",
            "utterances": [{"speaker": "usr",
                            "tokens": [{"w": "a", "p": "DT",
                                        "t": "<rm-3/><rpEndSub/>"}]}],
        })
        path = tmp_path / "bad.jsonl"
        path.write_text(line + "\n")
        with pytest.raises(CorpusFormatError, match="line 1"):
            read_corpus(path)

    def test_untagged_tokens_allowed(self, tmp_path):
        line = json.dumps({
            "id": "d1",
            "utterances": [{"speaker": "usr",
                            "tokens": [{"w": "a", "p": "DT"}]}],
        })
        path = tmp_path / "ok.jsonl"
        path.write_text(line + "\n")
        corpus = read_corpus(path)
        assert corpus.dialogues[0].utterances[0].tags is None


class TestDataModel:
    def test_word_with_separator_rejected(self):
        with pytest.raises(CorpusFormatError):
            Token("a|b", "DT")

    def test_empty_word_rejected(self):
        with pytest.raises(CorpusFormatError):
            Token("", "DT")

    def test_bad_speaker_rejected(self):
        with pytest.raises(CorpusFormatError):
            Utterance("system", (Token("a", "DT"),))

    def test_duplicate_dialogue_ids_rejected(self):
        d = Dialogue("dup", (utt([("a", "DT")]),))
        with pytest.raises(CorpusFormatError, match="dup"):
            Corpus((d, Dialogue("dup", ())))


class TestVocabulary:
    def test_reserved_plus_entries(self):
        corpus = Corpus((Dialogue("d1", (
            utt([("with", "IN")] * 3 + [("spanish", "JJ")]),
        )),))
        vocab = build_vocabulary(corpus, min_count=1)
        assert vocab.size == 5
        assert vocab.entries[:3] == RESERVED
        assert vocab.entries[3] == "with|IN"  # higher count first

    def test_min_count_excludes(self):
        corpus = Corpus((Dialogue("d1", (
            utt([("with", "IN")] * 3 + [("spanish", "JJ")]),
        )),))
        vocab = build_vocabulary(corpus, min_count=2)
        assert vocab.size == 4
        assert vocab.id_of("spanish", "JJ") == UNK_ID

    def test_deterministic_order(self):
        corpus = small_corpus()
        v1 = build_vocabulary(corpus)
        v2 = build_vocabulary(corpus)
        assert v1.entries == v2.entries
        assert v1.counts == v2.counts

    def test_tie_break_lexicographic(self):
        corpus = Corpus((Dialogue("d1", (
            utt([("b", "X"), ("a", "X")]),
        )),))
        vocab = build_vocabulary(corpus)
        assert vocab.entries[3:] == ("a|X", "b|X")

    def test_counts_match_bruteforce_recount(self):
        from disfl.generator import preset_config, generate_corpus

        corpus = generate_corpus(preset_config("mixed", seed=5, n_dialogues=20))
        vocab = build_vocabulary(corpus)
        recount = {}
        for d in corpus.dialogues:
            for u in d.utterances:
                for t in u.tokens:
                    key = f"{t.word}|{t.pos}"
                    recount[key] = recount.get(key, 0) + 1
        assert vocab.size == len(recount) + 3
        for entry, count in zip(vocab.entries[3:], vocab.counts[3:]):
            assert recount[entry] == count

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusFormatError):
            build_vocabulary(Corpus(()))

    def test_lookup_render_inverse(self):
        vocab = build_vocabulary(small_corpus())
        for i, entry in enumerate(vocab.entries):
            assert vocab.lookup(entry) == i


class TestEncode:
    def test_known_tokens_and_eos(self):
        corpus = small_corpus()
        vocab = build_vocabulary(corpus)
        u = corpus.dialogues[0].utterances[0]
        ids = encode_utterance(vocab, u)
        assert ids[-1] == EOS_ID
        assert all(i not in (PAD_ID, UNK_ID) for i in ids[:-1])

    def test_unknown_maps_to_unk(self):
        vocab = build_vocabulary(small_corpus())
        ids = encode_utterance(vocab, utt([("zebra", "NN")]))
        assert ids == [UNK_ID, EOS_ID]

    def test_decode_roundtrip_in_vocabulary(self):
        corpus = small_corpus()
        vocab = build_vocabulary(corpus)
        u = corpus.dialogues[0].utterances[1]
        ids = encode_utterance(vocab, u)[:-1]
        assert decode_ids(vocab, ids) == [t.combined for t in u.tokens]


SWDA_COUNTS = {"fluent": 574771, "edit": 45729, "single_sub": 13003,
               "single_del": 1011, "mid": 6976, "end": 6818}


class TestClassWeights:
    def test_formula_matches_arbitrary_precision(self):
        gamma = 1.05
        weights = weights_from_counts(SWDA_COUNTS, gamma)
        with mpmath.workdps(60):
            for key, c in SWDA_COUNTS.items():
                exact = mpmath.power(c, -mpmath.mpf("1.05"))
                assert abs(weights[key] - float(exact)) <= 1e-12 * float(exact)

    def test_edit_to_fluent_ratio(self):
        weights = weights_from_counts(SWDA_COUNTS, 1.05)
        ratio = weights["edit"] / weights["fluent"]
        with mpmath.workdps(60):
            exact = mpmath.power(
                mpmath.mpf(574771) / mpmath.mpf(45729), mpmath.mpf("1.05")
            )
            assert abs(ratio / float(exact) - 1) < 1e-12
        assert ratio == pytest.approx(14.26, abs=0.01)

    def test_equal_counts_equal_weights(self):
        w = weights_from_counts({"a": 10, "b": 10}, 1.0)
        assert w["a"] == w["b"]

    def test_single_class(self):
        w = weights_from_counts({"a": 8}, 2.0)
        assert w["a"] == pytest.approx(8.0**-2.0, rel=1e-15)

    def test_nonpositive_gamma_rejected(self):
        with pytest.raises(ValueError):
            weights_from_counts({"a": 1}, 0.0)
        with pytest.raises(ValueError):
            class_weights(small_corpus(), -1.0)

    def test_absent_classes_get_zero(self):
        cw = class_weights(small_corpus(), 1.05)
        vec = cw.vector()
        counts = count_tags(small_corpus())
        assert (vec > 0).sum() == len(counts)
        assert cw[onset(5, EndMarker.MID)] == 0.0

    def test_decreasing_in_frequency(self):
        w = weights_from_counts({"a": 10, "b": 100, "c": 1000}, 1.05)
        assert w["a"] > w["b"] > w["c"] > 0

    @given(
        st.dictionaries(st.text(min_size=1, max_size=3),
                        st.integers(1, 10**6), min_size=1, max_size=8),
        st.integers(2, 50),
        st.floats(0.1, 3.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_scale_covariance(self, counts, m, gamma):
        base = weights_from_counts(counts, gamma)
        scaled = weights_from_counts({k: m * c for k, c in counts.items()}, gamma)
        factor = float(m) ** -gamma
        for key in counts:
            assert scaled[key] == pytest.approx(base[key] * factor, rel=1e-12)
