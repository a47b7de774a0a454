import math
import random

import pytest

from minimt.corpus import ParallelCorpus, Sentence
from minimt.errors import MiniMTError
from minimt.lm import NGramLM, train_lm
from minimt.smt import (
    NULL,
    Alignment,
    DecoderConfig,
    PhraseTable,
    PhraseTableEntry,
    TranslationTable,
    decode,
    extract_phrases,
    model1_loglik,
    score_phrase_table,
    symmetrize,
    train_ibm1,
    viterbi_align,
)
from oracles import consistent_phrase_boxes, exhaustive_decode_score, ibm1_em_step


def corpus_of(pairs):
    return ParallelCorpus(
        tuple(
            (Sentence.from_words(i, s.split()), Sentence.from_words(i, t.split()))
            for i, (s, t) in enumerate(pairs)
        )
    )


class TestIBM1:
    def test_forced_alignment_single_pair(self):
        table = train_ibm1(corpus_of([("a", "x")]), iterations=1)
        assert table.prob("a", "x") == pytest.approx(1.0)

    def test_the_das_anchor(self):
        cp = corpus_of([("the house", "das haus"), ("the", "das")])
        table = train_ibm1(cp, iterations=10)
        assert table.prob("the", "das") > 0.9

    def test_rows_normalize_after_every_iteration(self):
        cp = corpus_of([("the house", "das haus"), ("the", "das"), ("house", "haus")])
        for iters in (1, 3, 7):
            table = train_ibm1(cp, iterations=iters)
            for e, row in table.rows.items():
                assert sum(row.values()) == pytest.approx(1.0, abs=1e-6)

    def test_loglik_non_decreasing(self):
        cp = corpus_of(
            [
                ("the house", "das haus"), ("the book", "das buch"),
                ("a book", "ein buch"), ("the", "das"), ("house", "haus"),
                ("a house", "ein haus"), ("the old book", "das alte buch"),
                ("old", "alte"), ("a", "ein"), ("book", "buch"),
            ]
        )
        logliks = [model1_loglik(train_ibm1(cp, iterations=k), cp) for k in range(1, 11)]
        for prev, cur in zip(logliks, logliks[1:]):
            assert cur >= prev - 1e-9

    def test_matches_exact_em_oracle(self):
        # the oracle E-step enumerates every alignment function explicitly
        cp = corpus_of([("a b", "x y"), ("b", "y"), ("a", "x z")])
        bitext = [(s.surfaces, t.surfaces) for s, t in cp]
        tgt_vocab = {f for _, fs in bitext for f in fs}
        oracle = {
            (e, f): 1.0 / len(tgt_vocab)
            for es, fs in bitext
            for e in (NULL,) + es
            for f in fs
        }
        for iters in (1, 2, 3):
            oracle = ibm1_em_step(bitext, oracle, NULL)
            mine = train_ibm1(cp, iterations=iters)
            for (e, f), p in oracle.items():
                assert mine.prob(e, f) == pytest.approx(p, abs=1e-12)


class TestViterbi:
    def test_degenerate_pair_links_when_better_than_null(self):
        table = TranslationTable({"a": {"x": 0.9}, NULL: {"x": 0.1}})
        a = viterbi_align(table, (["a"], ["x"]))
        assert a.links == {(0, 0)}

    def test_uniform_ties_go_leftmost(self):
        table = TranslationTable(
            {"a": {"x": 0.5}, "b": {"x": 0.5}, NULL: {"x": 0.5}}
        )
        a = viterbi_align(table, (["a", "b"], ["x"]))
        assert a.links == {(0, 0)}

    def test_null_dominant_gives_no_link(self):
        table = TranslationTable({"a": {"x": 0.2}, NULL: {"x": 0.8}})
        a = viterbi_align(table, (["a"], ["x"]))
        assert a.links == frozenset()


class TestSymmetrize:
    def test_identical_directions_unchanged(self):
        a = Alignment.of([(0, 0), (1, 1)])
        assert symmetrize(a, a, 2, 2).links == a.links

    def test_sandwich_property_random(self):
        rng = random.Random(2)
        for _ in range(100):
            sl, tl = rng.randint(1, 5), rng.randint(1, 5)
            mk = lambda: Alignment.of(
                (i, j)
                for i in range(sl)
                for j in range(tl)
                if rng.random() < 0.3
            )
            fwd, rev = mk(), mk()
            out = symmetrize(fwd, rev, sl, tl).links
            assert out >= (fwd.links & rev.links)
            assert out <= (fwd.links | rev.links)

    def test_disjoint_no_adjacency_final_covers_uncovered(self):
        fwd = Alignment.of([(0, 0)])
        rev = Alignment.of([(3, 3)])
        out = symmetrize(fwd, rev, 4, 4).links
        # intersection empty; both union links touch uncovered rows/cols
        assert out == {(0, 0), (3, 3)}

    def test_out_of_bounds_link_rejected(self):
        with pytest.raises(MiniMTError):
            symmetrize(Alignment.of([(5, 0)]), Alignment.of([]), 2, 2)


class TestExtractPhrases:
    def test_diagonal_two_word_pair(self):
        pairs = extract_phrases(
            (["w0", "w1"], ["v0", "v1"]), Alignment.of([(0, 0), (1, 1)])
        )
        got = {(p.src, p.tgt) for p in pairs}
        assert got == {
            (("w0",), ("v0",)),
            (("w1",), ("v1",)),
            (("w0", "w1"), ("v0", "v1")),
        }

    def test_crossing_alignment(self):
        # the two crossing singletons are themselves consistent boxes, plus
        # the full 2x2 box; nothing with a link leaving the box qualifies
        pairs = extract_phrases(
            (["w0", "w1"], ["v0", "v1"]), Alignment.of([(0, 1), (1, 0)])
        )
        assert {(p.src, p.tgt) for p in pairs} == {
            (("w0",), ("v1",)),
            (("w1",), ("v0",)),
            (("w0", "w1"), ("v0", "v1")),
        }

    def test_empty_alignment_extracts_nothing(self):
        assert extract_phrases((["a", "b"], ["x"]), Alignment.of([])) == []

    def test_matches_brute_force_on_random_pairs(self):
        rng = random.Random(17)
        for _ in range(120):
            sl, tl = rng.randint(1, 6), rng.randint(1, 6)
            links = [
                (i, j) for i in range(sl) for j in range(tl) if rng.random() < 0.35
            ]
            src = [f"s{i}" for i in range(sl)]
            tgt = [f"t{j}" for j in range(tl)]
            mine = {
                (p.src_span, p.tgt_span)
                for p in extract_phrases((src, tgt), Alignment.of(links), 7)
            }
            assert mine == consistent_phrase_boxes(sl, tl, links, 7)


class TestScorePhraseTable:
    def table(self):
        cp = corpus_of([("a b", "x y"), ("a", "x"), ("b c", "y z")])
        fwd = train_ibm1(cp, 5)
        rev = train_ibm1(corpus_of([("x y", "a b"), ("x", "a"), ("y z", "b c")]), 5)
        phrases = []
        for s, t in cp:
            a = viterbi_align(fwd, (s, t))
            phrases.extend(extract_phrases((s, t), a))
        return score_phrase_table(phrases, fwd, rev)

    def test_unique_source_scores_one(self):
        table = self.table()
        opts = table.options(("a",))
        assert len(opts) == 1
        assert opts[0].scores[0] == pytest.approx(1.0)

    def test_forward_scores_normalize_per_source(self):
        table = self.table()
        by_src = {}
        for entry in table:
            by_src.setdefault(entry.src, 0.0)
            by_src[entry.src] += entry.scores[0]
        for total in by_src.values():
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_all_scores_in_unit_interval(self):
        for entry in self.table():
            for s in entry.scores:
                assert 0.0 < s <= 1.0

    def test_file_round_trip(self, tmp_path):
        table = self.table()
        path = tmp_path / "phrase-table.txt"
        table.save(path)
        back = PhraseTable.load(path)
        assert sorted(
            (e.src, e.tgt, e.scores) for e in table
        ) == sorted((e.src, e.tgt, e.scores) for e in back)


def identity_setup(words):
    table = PhraseTable()
    for w in set(words):
        table.add(PhraseTableEntry((w,), (w,), (1.0, 1.0, 1.0, 1.0)))
    return table, NGramLM.uniform(sorted(set(words)))


def collect_options(src, table, cfg):
    options = {}
    for i in range(len(src)):
        for j in range(i + 1, min(i + cfg.max_phrase_len, len(src)) + 1):
            opts = table.options(tuple(src[i:j]))
            if opts:
                options[(i, j)] = opts
    for i, w in enumerate(src):
        if (i, i + 1) not in options:
            options[(i, i + 1)] = [PhraseTableEntry((w,), (w,), (1e-4,) * 4)]
    return options


class TestDecode:
    def test_identity_reproduces_input(self):
        words = "the cat sat on the mat".split()
        table, lm = identity_setup(words)
        cfg = DecoderConfig(lambda_distortion=0.0)
        out, _, trace = decode(words, table, lm, cfg)
        assert out == words
        assert [t["span"] for t in trace] == sorted(t["span"] for t in trace)

    def test_lm_preference_flips_choice(self):
        table = PhraseTable()
        table.add(PhraseTableEntry(("x",), ("a",), (0.9, 0.9, 0.9, 0.9)))
        table.add(PhraseTableEntry(("x",), ("b",), (0.6, 0.6, 0.6, 0.6)))
        # LM strongly prefers b
        lm = train_lm([["b"]] * 20 + [["a"]], order=1)
        cfg_tm_only = DecoderConfig(lambda_lm=0.0)
        out, _, _ = decode(["x"], table, lm, cfg_tm_only)
        assert out == ["a"]
        cfg_lm_heavy = DecoderConfig(lambda_lm=12.0)
        out, score, _ = decode(["x"], table, lm, cfg_lm_heavy)
        assert out == ["b"]
        # score arithmetic is exactly the two-option maximum
        opts = collect_options(["x"], table, cfg_lm_heavy)
        expected = exhaustive_decode_score(["x"], opts, lm, cfg_lm_heavy, "<s>", "</s>")
        assert score == pytest.approx(expected, abs=1e-9)

    def test_unlimited_beam_matches_exhaustive_oracle(self):
        rng = random.Random(31)
        vocab = ["u", "v", "w"]
        for trial in range(20):
            n = rng.randint(1, 6)
            src = [f"s{rng.randint(0, 3)}" for _ in range(n)]
            table = PhraseTable()
            for i in range(n):
                for j in range(i + 1, min(i + 3, n) + 1):
                    if rng.random() < 0.7:
                        for _ in range(rng.randint(1, 2)):
                            tgt = tuple(
                                rng.choice(vocab)
                                for _ in range(rng.randint(1, 3))
                            )
                            table.add(
                                PhraseTableEntry(
                                    tuple(src[i:j]), tgt,
                                    tuple(rng.uniform(0.05, 1.0) for _ in range(4)),
                                )
                            )
            lm = train_lm([["u", "v"], ["v", "w"], ["w", "u", "v"]], order=2)
            cfg = DecoderConfig(beam_size=None, distortion_limit=3)
            if len(table) == 0:
                continue
            _, score, _ = decode(src, table, lm, cfg)
            expected = exhaustive_decode_score(
                src, collect_options(src, table, cfg), lm, cfg, "<s>", "</s>"
            )
            assert score == pytest.approx(expected, abs=1e-9), f"trial {trial}"

    def test_oov_words_copied_through(self):
        table = PhraseTable()
        table.add(PhraseTableEntry(("known",), ("k",), (1.0, 1.0, 1.0, 1.0)))
        lm = NGramLM.uniform(["k"])
        out, _, _ = decode(["known", "mystery"], table, lm, DecoderConfig())
        assert out == ["k", "mystery"]

    def test_empty_phrase_table_errors(self):
        with pytest.raises(MiniMTError):
            decode(["a"], PhraseTable(), NGramLM.uniform(["a"]), DecoderConfig())

    def test_tight_distortion_limit_still_completes_monotone(self):
        words = "a b c d e".split()
        table, lm = identity_setup(words)
        out, _, _ = decode(words, table, lm, DecoderConfig(distortion_limit=0))
        assert out == words

    def test_beam_one_still_translates(self):
        words = "a b c".split()
        table, lm = identity_setup(words)
        out, _, _ = decode(words, table, lm, DecoderConfig(beam_size=1))
        assert out == words

    def test_recombination_keeps_best_score(self):
        # two paths to the same signature: different phrase segmentations
        table = PhraseTable()
        table.add(PhraseTableEntry(("a",), ("x",), (0.5, 1.0, 1.0, 1.0)))
        table.add(PhraseTableEntry(("b",), ("y",), (0.5, 1.0, 1.0, 1.0)))
        table.add(PhraseTableEntry(("a", "b"), ("x", "y"), (0.9, 1.0, 1.0, 1.0)))
        lm = NGramLM.uniform(["x", "y"])
        cfg = DecoderConfig(beam_size=None)
        _, score, trace = decode(["a", "b"], table, lm, cfg)
        expected = exhaustive_decode_score(
            ["a", "b"], collect_options(["a", "b"], table, cfg), lm, cfg, "<s>", "</s>"
        )
        assert score == pytest.approx(expected, abs=1e-12)
        assert len(trace) == 1  # the one-phrase derivation wins
