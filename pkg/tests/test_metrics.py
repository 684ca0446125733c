import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from disfl.metrics import (
    F1Counts,
    evaluate,
    evaluate_sequences,
    f1_edit,
    f1_rm,
    f1_rps,
    f1_structure_match,
    score_sequences,
    tag_accuracy,
)
from disfl.tags import (
    ALL_TAGS,
    EDIT,
    FLUENT,
    REPAIR_END,
    EndMarker,
    onset,
    resolve_structures,
    resolve_structures_lenient,
    structures_to_tags,
)

import bruteforce
from test_tags import EX_TAGS, structure_sets


class TestF1Counts:
    def test_zero_denominators(self):
        c = F1Counts(0, 0, 0)
        assert c.precision == 0.0 and c.recall == 0.0 and c.f1 == 0.0

    def test_perfect(self):
        c = F1Counts(5, 0, 0)
        assert c.f1 == 1.0

    def test_formula(self):
        c = F1Counts(3, 1, 2)
        assert c.precision == 0.75
        assert c.recall == 0.6
        assert c.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)


class TestEdit:
    def test_exact_match(self):
        counts = f1_edit([[FLUENT, EDIT, FLUENT]], [[FLUENT, EDIT, FLUENT]])
        assert (counts.tp, counts.fp, counts.fn) == (1, 0, 0)
        assert counts.f1 == 1.0

    def test_swapped(self):
        counts = f1_edit([[FLUENT, EDIT]], [[EDIT, FLUENT]])
        assert (counts.tp, counts.fp, counts.fn) == (0, 1, 1)
        assert counts.f1 == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            f1_edit([[FLUENT]], [[FLUENT, EDIT]])


class TestRm:
    def test_same_retrace_tp(self):
        g = [[FLUENT] * 5 + [onset(4, EndMarker.END_SUB)]]
        p = [[FLUENT] * 5 + [onset(4, EndMarker.END_SUB)]]
        assert f1_rm(g, p).tp == 1

    def test_different_retrace_counts_both_ways(self):
        g = [[FLUENT] * 5 + [onset(4, EndMarker.END_SUB)]]
        p = [[FLUENT] * 5 + [onset(3, EndMarker.END_SUB)]]
        counts = f1_rm(g, p)
        assert (counts.tp, counts.fp, counts.fn) == (0, 1, 1)

    def test_rm_only_ignores_marker(self):
        g = [[FLUENT] * 5 + [onset(4, EndMarker.END_SUB)]]
        p = [[FLUENT] * 5 + [onset(4, EndMarker.MID)]]
        assert f1_rm(g, p, "rm-only").tp == 1
        strict = f1_rm(g, p, "strict")
        assert (strict.tp, strict.fp, strict.fn) == (0, 1, 1)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            f1_rm([[FLUENT]], [[FLUENT]], "loose")


class TestRps:
    def test_example_perfect_prediction(self):
        counts, dropped = f1_rps([EX_TAGS], [list(EX_TAGS)])
        assert counts.tp == 5  # tokens 1..5
        assert counts.f1 == 1.0
        assert dropped == 0

    def test_all_fluent_prediction(self):
        counts, _ = f1_rps([EX_TAGS], [[FLUENT] * 7])
        assert (counts.tp, counts.fp, counts.fn) == (0, 0, 5)
        assert counts.f1 == 0.0

    def test_invalid_prediction_repaired_and_counted(self):
        pred = [FLUENT, onset(3, EndMarker.END_SUB), FLUENT, FLUENT, FLUENT,
                FLUENT, FLUENT]
        counts, dropped = f1_rps([EX_TAGS], [pred])
        assert dropped == 1
        assert counts.fp == 0  # dropped onset contributes nothing

    def test_gold_must_resolve(self):
        bad = [FLUENT, onset(3, EndMarker.END_SUB)]
        with pytest.raises(Exception):
            f1_rps([bad], [[FLUENT, FLUENT]])


class TestStructureMatch:
    def test_exact(self):
        assert f1_structure_match([EX_TAGS], [list(EX_TAGS)]).f1 == 1.0

    def test_shifted_span_no_match(self):
        pred = [FLUENT, FLUENT, EDIT, EDIT, onset(3, EndMarker.END_SUB),
                FLUENT, FLUENT]
        counts = f1_structure_match([EX_TAGS], [pred])
        assert counts.tp == 0 and counts.fp == 1 and counts.fn == 1


def random_valid_tagseq(rng):
    """A valid tag sequence derived from a random structure set."""
    n_structs = int(rng.integers(0, 3))
    structures = []
    edits = set()
    cursor = int(rng.integers(0, 3))
    from disfl.tags import RepairKind, RepairStructure

    for _ in range(n_structs):
        rep_s = cursor + int(rng.integers(0, 2))
        rep_len = int(rng.integers(1, 3))
        int_len = int(rng.integers(0, 2))
        rep_e = rep_s + rep_len
        r_s = rep_e + int_len
        if r_s - rep_s > 8:
            break
        single = bool(rng.integers(0, 2))
        r_e = r_s + 1 if single else r_s + int(rng.integers(2, 4))
        structures.append(RepairStructure(rep_s, rep_e, rep_e, r_s, r_s, r_e,
                                          RepairKind.SUBSTITUTION))
        edits.update(range(rep_e, r_s))
        cursor = r_e
    length = cursor + int(rng.integers(1, 4))
    return structures_to_tags(structures, length, edits)


def corrupt(tags, rng):
    out = list(tags)
    for _ in range(int(rng.integers(0, 3))):
        i = int(rng.integers(0, len(out)))
        out[i] = ALL_TAGS[int(rng.integers(0, 27))]
    return out


class TestOracleEquivalence:
    def test_1000_randomized_pairs(self):
        rng = np.random.default_rng(123)
        gold, pred = [], []
        for _ in range(1000):
            g = random_valid_tagseq(rng)
            gold.append(g)
            pred.append(corrupt(g, rng))

        edit_counts = f1_edit(gold, pred)
        assert (edit_counts.tp, edit_counts.fp, edit_counts.fn) == \
            bruteforce.count_edit(gold, pred)

        for strict in (False, True):
            counts = f1_rm(gold, pred, "strict" if strict else "rm-only")
            assert (counts.tp, counts.fp, counts.fn) == \
                bruteforce.count_rm(gold, pred, strict)

        rps_counts, _ = f1_rps(gold, pred)
        g_structs = [resolve_structures(g) for g in gold]
        p_structs = [resolve_structures_lenient(p)[0] for p in pred]
        assert (rps_counts.tp, rps_counts.fp, rps_counts.fn) == \
            bruteforce.count_rps(g_structs, p_structs, [len(g) for g in gold])

        assert rps_counts.f1 == pytest.approx(
            bruteforce.f1_from(*bruteforce.count_rps(
                g_structs, p_structs, [len(g) for g in gold])), rel=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        gold = [random_valid_tagseq(rng) for _ in range(60)]
        pred = [corrupt(g, rng) for g in gold]
        base = score_sequences(gold, pred)
        perm = rng.permutation(len(gold))
        gold2 = [gold[i] for i in perm]
        pred2 = [pred[i] for i in perm]
        assert score_sequences(gold2, pred2) == base

    def test_perfect_iff_equal_on_positives(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            g = random_valid_tagseq(rng)
            scores = score_sequences([g], [list(g)])
            assert scores["f_e"] in (0.0, 1.0)  # 1 when edits exist, 0 denom else
            if any(t.is_edit for t in g):
                assert scores["f_e"] == 1.0
            if any(t.is_onset for t in g):
                assert scores["f_rm"] == 1.0
                assert scores["f_rps"] == 1.0


class TestEvaluate:
    def _fake_model(self, output_map):
        class Fake:
            def tag_corpus(self, corpus):
                return [output_map(utt) for utt in corpus.utterances()]
        return Fake()

    def _corpus(self):
        from disfl.generator import GeneratorConfig, generate_corpus

        return generate_corpus(GeneratorConfig(seed=21, n_dialogues=25))

    def test_gold_fed_back_scores_one(self):
        corpus = self._corpus()
        model = self._fake_model(lambda utt: utt.tags)
        report = evaluate(model, corpus)
        assert report.f_e == 1.0 and report.f_rm == 1.0 and report.f_rps == 1.0
        assert report.tag_accuracy == 1.0

    def test_constant_fluent_model(self):
        corpus = self._corpus()
        model = self._fake_model(lambda utt: [FLUENT] * len(utt.tokens))
        report = evaluate(model, corpus)
        assert report.f_e == 0.0 and report.f_rm == 0.0 and report.f_rps == 0.0
        gold_fluent = sum(
            t.tag.is_fluent for u in corpus.utterances() for t in u.tokens)
        total = sum(len(u.tokens) for u in corpus.utterances())
        assert report.tag_accuracy == pytest.approx(gold_fluent / total)

    def test_untagged_corpus_rejected(self):
        from disfl.corpus import Corpus, Dialogue, Token, Utterance

        corpus = Corpus((Dialogue("d1", (
            Utterance("usr", (Token("a", "DT"),)),
        )),))
        with pytest.raises(ValueError, match="gold"):
            evaluate(self._fake_model(lambda u: [FLUENT]), corpus)

    def test_report_serializes(self):
        import json

        corpus = self._corpus()
        model = self._fake_model(lambda utt: utt.tags)
        report = evaluate(model, corpus)
        payload = json.loads(json.dumps(report.to_dict()))
        assert payload["f_e"] == 1.0
        assert "confusion" in payload
        assert "<f/>" in payload["confusion"]
        assert payload["rm_match_mode"] == "rm-only"
        assert "text" not in payload  # purely numeric/categorical
        assert report.table()  # renders


@given(structure_sets())
@settings(max_examples=100, deadline=None)
def test_metrics_agree_with_oracles_property(case):
    structures, length, edits = case
    tags = structures_to_tags(structures, length, edits)
    rng = np.random.default_rng(abs(hash((length, len(edits)))) % 2**32)
    pred = corrupt(tags, rng)
    edit_counts = f1_edit([tags], [pred])
    assert (edit_counts.tp, edit_counts.fp, edit_counts.fn) == \
        bruteforce.count_edit([tags], [pred])
    rm_counts = f1_rm([tags], [pred])
    assert (rm_counts.tp, rm_counts.fp, rm_counts.fn) == \
        bruteforce.count_rm([tags], [pred], False)
