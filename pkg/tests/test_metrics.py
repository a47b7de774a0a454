import csv
import itertools
import random

import pytest

from minimt.errors import MiniMTError
from minimt.metrics import (
    ClassificationStats,
    ConfusionMatrix,
    RatingRecord,
    aggregate_ratings,
    bleu,
    classification_stats,
    corpus_ter,
    make_rating_sheet,
    read_ratings,
    ter,
)
from oracles import all_shift_orderings, lev, optimal_ter_edits


class TestBleu:
    def test_identity_scores_100(self):
        refs = [["the", "cat", "sat"], ["a", "dog"]]
        rep = bleu(refs, refs)
        assert rep.score == pytest.approx(100.0)
        assert rep.brevity_penalty == 1.0

    def test_clipped_unigram_precision(self):
        # the canonical clipping example: "the" appears once in the reference
        rep = bleu([["the", "cat"]], [["the", "the", "the"]])
        assert rep.raw_precisions[0] == pytest.approx(1.0 / 3.0)

    def test_brevity_penalty_direction(self):
        rep = bleu([["a", "b", "c", "d"]], [["a", "b"]])
        assert rep.brevity_penalty < 1.0
        assert rep.score < 100.0

    def test_order_invariance_under_pair_permutation(self):
        rng = random.Random(5)
        refs = [[rng.choice("abc") for _ in range(rng.randint(1, 6))] for _ in range(12)]
        hyps = [[rng.choice("abc") for _ in range(rng.randint(1, 6))] for _ in range(12)]
        base = bleu(refs, hyps).score
        order = list(range(12))
        rng.shuffle(order)
        assert bleu([refs[i] for i in order], [hyps[i] for i in order]).score == pytest.approx(base)

    def test_zero_match_smoothing_recorded(self):
        rep = bleu([["a", "b"]], [["x", "y"]])
        assert rep.unsmoothed_score == 0.0
        assert rep.score > 0.0
        assert 1 in rep.smoothed_orders

    def test_range_and_errors(self):
        with pytest.raises(MiniMTError):
            bleu([], [])
        rng = random.Random(0)
        for _ in range(50):
            refs = [[rng.choice("ab") for _ in range(rng.randint(1, 5))]]
            hyps = [[rng.choice("ab") for _ in range(rng.randint(1, 5))]]
            s = bleu(refs, hyps).score
            assert 0.0 <= s <= 100.0


class TestTer:
    def test_identity_is_zero(self):
        assert ter(["a", "b"], ["a", "b"]).score == 0.0

    def test_single_shift_example(self):
        rep = ter("a b c d".split(), "a c d b".split())
        assert rep.shifts == 1
        assert rep.edits == 1
        assert rep.score == pytest.approx(25.0)

    def test_score_can_exceed_100(self):
        rep = ter(["a"], ["a", "x", "y", "z"])
        assert rep.score > 100.0

    def test_empty_reference_is_an_error(self):
        with pytest.raises(MiniMTError):
            ter([], ["a"])

    def test_shift_phase_never_hurts(self):
        rng = random.Random(11)
        for _ in range(200):
            ref = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
            hyp = [rng.choice("abc") for _ in range(rng.randint(1, 6))]
            rep = ter(ref, hyp)
            assert rep.edits <= lev(ref, hyp)

    def test_greedy_between_optimal_and_levenshtein_sampled(self):
        rng = random.Random(23)
        for _ in range(60):
            ref = [rng.choice("abc") for _ in range(rng.randint(1, 5))]
            hyp = [rng.choice("abc") for _ in range(rng.randint(1, 5))]
            rep = ter(ref, hyp)
            assert optimal_ter_edits(ref, hyp) <= rep.edits <= lev(ref, hyp)

    def test_equals_levenshtein_when_no_improving_shift(self):
        # repeated-symbol hypotheses: every shift is a no-op or neutral
        rng = random.Random(7)
        for _ in range(40):
            ref = [rng.choice("ab") for _ in range(rng.randint(1, 5))]
            hyp = ["a"] * rng.randint(1, 5)
            rep = ter(ref, hyp)
            orderings = all_shift_orderings(hyp)
            no_shift_helps = all(
                shifts + lev(ref, o) >= lev(ref, hyp) for o, shifts in orderings.items()
            )
            if no_shift_helps:
                assert rep.edits == lev(ref, hyp)

    def test_corpus_ter_aggregates_edits(self):
        refs = [["a", "b"], ["c", "d", "e"]]
        hyps = [["a", "b"], ["c", "x", "e"]]
        rep = corpus_ter(refs, hyps)
        assert rep.ref_len == 5
        assert rep.edits == 1
        assert rep.score == pytest.approx(20.0)


class TestClassificationStats:
    def test_published_confusion_matrix(self):
        m = ConfusionMatrix([[1275, 90], [220, 1291]])
        stats = classification_stats(m, positive_class="Other")
        assert stats.precision == pytest.approx(93.41, abs=0.01)
        assert stats.recall == pytest.approx(85.28, abs=0.01)
        assert stats.accuracy == pytest.approx(89.22, abs=0.01)
        assert stats.f1 == pytest.approx(89.16, abs=0.01)
        assert stats.kappa == pytest.approx(0.78, abs=0.01)

    def test_perfect_diagonal(self):
        stats = classification_stats(ConfusionMatrix([[10, 0], [0, 10]]), "Other")
        assert stats.precision == stats.recall == stats.accuracy == stats.f1 == 100.0
        assert stats.kappa == pytest.approx(1.0)

    def test_chance_level_kappa_near_zero(self):
        # identical marginals, predictions independent of labels
        stats = classification_stats(ConfusionMatrix([[25, 25], [25, 25]]), "Other")
        assert stats.kappa == pytest.approx(0.0, abs=1e-12)

    def test_undefined_is_none_not_zero(self):
        stats = classification_stats(ConfusionMatrix([[0, 0], [5, 5]]), "Other")
        assert stats.precision is None

    def test_all_zero_matrix_errors(self):
        with pytest.raises(MiniMTError):
            classification_stats(ConfusionMatrix(), "Other")


class TestRatings:
    def test_sheet_layout_and_determinism(self, tmp_path):
        sources = ["s one", "s two", "s three"]
        hyps = ["h one", "h two", "h three"]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        make_rating_sheet(sources, hyps, p1, shuffle_seed=4)
        make_rating_sheet(sources, hyps, p2, shuffle_seed=4)
        assert p1.read_bytes() == p2.read_bytes()
        with open(p1, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["sentence_id", "source", "hypothesis", "adequacy", "fluency"]
        assert len(rows) == 4
        assert all(row[3] == "" and row[4] == "" for row in rows[1:])

    def test_sheet_misalignment_errors(self, tmp_path):
        with pytest.raises(MiniMTError):
            make_rating_sheet(["a"], ["x", "y"], tmp_path / "s.csv")

    def test_paper_average_row_arithmetic(self):
        # two raters whose fluency means are 1.98 and 2.26 average to 2.12
        records = []
        for rater, mean in (("r1", 1.98), ("r2", 2.26)):
            ratings = [2] * 100  # adjust entries until the mean hits the target
            diff = round(mean * 100) - 200
            for i in range(abs(diff)):
                ratings[i] += 1 if diff > 0 else -1
            records.extend(
                RatingRecord(i, rater, 3, r) for i, r in enumerate(ratings)
            )
        summary = aggregate_ratings(records)
        assert summary["per_rater"]["r1"]["fluency"] == pytest.approx(1.98)
        assert summary["per_rater"]["r2"]["fluency"] == pytest.approx(2.26)
        assert summary["average"]["fluency"] == pytest.approx(2.12)

    def test_single_rater_average_is_their_mean(self):
        records = [RatingRecord(0, "solo", 4, 2), RatingRecord(1, "solo", 2, 4)]
        summary = aggregate_ratings(records)
        assert summary["average"]["adequacy"] == summary["per_rater"]["solo"]["adequacy"] == 3.0

    def test_out_of_range_rating_names_row(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(
            "sentence_id,rater_id,adequacy,fluency\n0,r1,3,3\n1,r1,6,2\n"
        )
        with pytest.raises(MiniMTError, match="row 3"):
            read_ratings(path)

    def test_record_validation(self):
        with pytest.raises(MiniMTError):
            RatingRecord(0, "r", 0, 3)
