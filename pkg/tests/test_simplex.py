import numpy as np
import pytest

from minimt.corpus import ParallelCorpus, Sentence
from minimt.errors import MiniMTError
from minimt.simplex import (
    OTHER,
    SIMPLE,
    ChunkSequence,
    ChunkTag,
    FFNNConfig,
    FFNNModel,
    LabeledDataset,
    Rule,
    RuleSet,
    classify_ffnn,
    classify_rule,
    cross_validate,
    encode_features,
    extract_simple,
    fallback_chunk,
    ffnn_loss_and_grads,
    mine_rules,
    parse_pattern,
    pattern_to_str,
    read_chunk_file,
    read_rules,
    surface_form,
    train_ffnn,
    write_chunk_file,
    write_rules,
)
from oracles import perceptron_accuracy

NP, VP, PP, ADVP = ChunkTag.NP, ChunkTag.VP, ChunkTag.PP, ChunkTag.ADVP


def seq(tags, sid=0):
    return ChunkSequence(sid, tuple(tags))


def sent(words, sid=0):
    return Sentence.from_words(sid, words)


class TestFallbackChunk:
    def test_pronoun_verb_adverb(self):
        assert fallback_chunk(sent(["She", "ran", "quickly"])).tags == (NP, VP, ADVP)

    def test_preposition_then_noun_phrase(self):
        assert fallback_chunk(sent(["In", "the", "house"])).tags == (PP, NP)

    def test_unknown_token_defaults_to_np(self):
        assert fallback_chunk(sent(["flibber"])).tags == (NP,)

    def test_adjacent_same_tags_merge(self):
        assert fallback_chunk(sent(["the", "old", "dog", "ran"])).tags == (
            NP, ChunkTag.ADJP, NP, VP,
        )
        assert fallback_chunk(sent(["the", "dog", "cat"])).tags == (NP,)

    def test_conjunction_and_punctuation_are_other(self):
        assert fallback_chunk(sent(["he", "ran", "and", "slept", "."])).tags == (
            NP, VP, ChunkTag.OTHER, VP, ChunkTag.OTHER,
        )


class TestSurfaceForm:
    def test_run_collapse(self):
        assert surface_form(seq([NP, NP, VP, NP])) == ((NP, True), (VP, False), (NP, False))

    def test_no_adjacent_repeats_unstarred(self):
        got = surface_form(seq([PP, NP, VP, PP, NP]))
        assert got == ((PP, False), (NP, False), (VP, False), (PP, False), (NP, False))

    def test_full_collapse(self):
        assert surface_form(seq([VP, VP, VP])) == ((VP, True),)

    def test_never_two_adjacent_same_tags(self):
        rng = np.random.RandomState(0)
        tags = list(ChunkTag)
        for _ in range(100):
            s = seq([tags[i] for i in rng.randint(0, len(tags), rng.randint(1, 12))])
            form = surface_form(s)
            assert all(a[0] != b[0] for a, b in zip(form, form[1:]))

    def test_pattern_string_round_trip(self):
        pattern = surface_form(seq([NP, NP, VP, NP]))
        assert pattern_to_str(pattern) == "NP* VP NP"
        assert parse_pattern("NP* VP NP") == pattern


class TestRules:
    def test_confidence_formula(self):
        seqs = [seq([NP, VP, NP], i) for i in range(12)]
        seqs += [seq([NP, VP], 100 + i) for i in range(88)]
        rules = mine_rules(seqs)
        by_pattern = {pattern_to_str(r.pattern): r.confidence for r in rules.rules}
        assert by_pattern["NP VP NP"] == pytest.approx(12.0)
        assert rules.source_count == 100

    def test_single_pattern_confidence_100(self):
        rules = mine_rules([seq([NP, VP], i) for i in range(5)])
        assert len(rules.rules) == 1
        assert rules.rules[0].confidence == pytest.approx(100.0)

    def test_sorted_by_confidence_descending(self):
        seqs = [seq([NP, VP], i) for i in range(3)] + [seq([VP], 10)]
        rules = mine_rules(seqs)
        confs = [r.confidence for r in rules.rules]
        assert confs == sorted(confs, reverse=True)

    def test_empty_input_errors(self):
        with pytest.raises(MiniMTError):
            mine_rules([])

    def test_confidences_sum_to_100(self):
        rng = np.random.RandomState(3)
        tags = [NP, VP, PP]
        seqs = [
            seq([tags[i] for i in rng.randint(0, 3, rng.randint(1, 5))], n)
            for n in range(60)
        ]
        rules = mine_rules(seqs)
        assert sum(r.confidence for r in rules.rules) == pytest.approx(100.0)
        assert all(0.0 < r.confidence <= 100.0 for r in rules.rules)

    def test_starred_needs_one_or_more_in_position(self):
        rules = RuleSet((Rule(parse_pattern("NP* VP NP*"), 50.0),), 10)
        assert classify_rule(rules, seq([NP, NP, VP])) == OTHER
        assert classify_rule(rules, seq([NP, VP, NP])) == SIMPLE
        assert classify_rule(rules, seq([NP, NP, VP, NP, NP, NP])) == SIMPLE

    def test_unstarred_matches_exactly_one(self):
        rules = RuleSet((Rule(parse_pattern("NP VP"), 50.0),), 10)
        assert classify_rule(rules, seq([NP, NP, VP])) == OTHER
        assert classify_rule(rules, seq([NP, VP])) == SIMPLE

    def test_training_set_closure(self):
        rng = np.random.RandomState(9)
        tags = [NP, VP, PP, ADVP]
        seqs = [
            seq([tags[i] for i in rng.randint(0, 4, rng.randint(1, 8))], n)
            for n in range(40)
        ]
        rules = mine_rules(seqs)
        for s in seqs:
            assert classify_rule(rules, s) == SIMPLE

    def test_rules_file_round_trip(self, tmp_path):
        rules = mine_rules([seq([NP, NP, VP], 0), seq([PP, NP], 1)])
        path = tmp_path / "rules.txt"
        write_rules(rules, path)
        back = read_rules(path)
        assert back.source_count == rules.source_count
        assert back.rules == rules.rules


class TestFeatures:
    def test_one_hot_count(self):
        vec = encode_features(seq([NP]), max_len=2)
        assert vec.shape == (16,)
        assert vec.sum() == 2.0

    def test_l1_norm_is_max_len(self):
        rng = np.random.RandomState(1)
        tags = list(ChunkTag)
        for _ in range(20):
            s = seq([tags[i] for i in rng.randint(0, 7, rng.randint(1, 60))])
            assert np.abs(encode_features(s, 40)).sum() == 40.0

    def test_injective_up_to_truncation(self):
        a = encode_features(seq([NP, VP]), 4)
        b = encode_features(seq([VP, NP]), 4)
        assert not np.array_equal(a, b)


def _separable_dataset(n=60, max_len=8):
    items = []
    for i in range(n):
        length = 1 + i % max_len
        items.append((seq([NP] * length, i), SIMPLE))
        items.append((seq([VP] * length, 1000 + i), OTHER))
    return LabeledDataset(tuple(items))


class TestFFNN:
    def test_default_config_matches_published_hyperparameters(self):
        cfg = FFNNConfig()
        assert (cfg.lr, cfg.epochs, cfg.batch_size) == (0.001, 100, 128)

    def test_gradients_match_finite_differences(self):
        rng = np.random.RandomState(4)
        in_dim = 2 * 8
        model = FFNNModel(
            W1=rng.uniform(-0.5, 0.5, (in_dim, 50)), b1=rng.uniform(-0.1, 0.1, 50),
            W2=rng.uniform(-0.5, 0.5, (50, 50)), b2=rng.uniform(-0.1, 0.1, 50),
            W3=rng.uniform(-0.5, 0.5, (50, 2)), b3=rng.uniform(-0.1, 0.1, 2),
            in_dim=in_dim, max_len=2,
        )
        X = rng.uniform(0, 1, (5, in_dim))
        T = np.where(rng.uniform(size=(5, 2)) > 0.5, 1.0, -1.0)
        _, grads = ffnn_loss_and_grads(model, X, T)
        eps = 1e-5
        worst = 0.0
        for name in ("W1", "b1", "W2", "b2", "W3", "b3"):
            p = getattr(model, name)
            for _ in range(25):
                idx = tuple(rng.randint(0, s) for s in p.shape)
                orig = p[idx]
                p[idx] = orig + eps
                up = ffnn_loss_and_grads(model, X, T)[0]
                p[idx] = orig - eps
                down = ffnn_loss_and_grads(model, X, T)[0]
                p[idx] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric) + abs(grads[name][idx]), 1e-8)
                worst = max(worst, abs(numeric - grads[name][idx]) / denom)
        assert worst < 1e-4

    def test_loss_descends_on_seeded_run(self):
        data = _separable_dataset(20, 4)
        cfg = FFNNConfig(epochs=1, seed=0, max_len=8)
        m1 = train_ffnn(data, cfg)
        m100 = train_ffnn(data, FFNNConfig(epochs=100, seed=0, max_len=8))
        X = np.stack([encode_features(c, 8) for c, _ in data.items])
        T = np.where(
            np.array([label == SIMPLE for _, label in data.items])[:, None],
            [1.0, -1.0], [-1.0, 1.0],
        )
        assert ffnn_loss_and_grads(m100, X, T)[0] <= ffnn_loss_and_grads(m1, X, T)[0]

    def test_separable_dataset_reaches_99pct(self):
        data = _separable_dataset()
        X = np.stack([encode_features(c, 8) for c, _ in data.items])
        y = np.array([1 if label == SIMPLE else 0 for _, label in data.items])
        assert perceptron_accuracy(X, y) >= 0.99  # oracle: truly separable
        model = train_ffnn(data, FFNNConfig(seed=1, max_len=8, epochs=800, batch_size=32))
        hits = sum(
            classify_ffnn(model, c)[0] == label for c, label in data.items
        )
        assert hits / len(data.items) >= 0.99

    def test_single_class_errors(self):
        with pytest.raises(MiniMTError):
            train_ffnn(LabeledDataset(((seq([NP]), SIMPLE), (seq([VP]), SIMPLE))))

    def test_argmax_and_tie_break(self):
        model = FFNNModel(
            W1=np.zeros((8, 50)), b1=np.zeros(50),
            W2=np.zeros((50, 50)), b2=np.zeros(50),
            W3=np.zeros((50, 2)), b3=np.array([0.9, -0.7]),
            in_dim=8, max_len=1,
        )
        label, score = classify_ffnn(model, seq([NP]))
        assert label == SIMPLE
        assert score == pytest.approx(np.tanh(0.9))
        model.b3 = np.array([0.2, 0.2])
        assert classify_ffnn(model, seq([NP]))[0] == OTHER  # tie -> higher class id

    def test_feature_dim_mismatch_errors(self):
        model = FFNNModel(
            W1=np.zeros((8, 50)), b1=np.zeros(50), W2=np.zeros((50, 50)),
            b2=np.zeros(50), W3=np.zeros((50, 2)), b3=np.zeros(2),
            in_dim=99, max_len=1,
        )
        with pytest.raises(MiniMTError):
            classify_ffnn(model, seq([NP]))

    def test_deterministic_under_seed(self):
        data = _separable_dataset(10, 3)
        cfg = FFNNConfig(epochs=3, seed=7, max_len=6)
        a = train_ffnn(data, cfg)
        b = train_ffnn(data, cfg)
        assert np.array_equal(a.W1, b.W1) and np.array_equal(a.b3, b.b3)


class TestCrossValidate:
    def test_each_item_tested_once_and_counts_conserved(self):
        items = tuple(
            (seq([NP] * (1 + i % 3), i), SIMPLE) for i in range(5)
        ) + tuple(
            (seq([VP] * (1 + i % 3), 10 + i), OTHER) for i in range(5)
        )
        data = LabeledDataset(items)
        matrix = cross_validate(data, k=10, cfg=FFNNConfig(epochs=5, max_len=4), seed=0)
        assert matrix.total() == 10

    def test_k_bounds(self):
        data = _separable_dataset(6, 2)
        with pytest.raises(MiniMTError):
            cross_validate(data, k=1)
        with pytest.raises(MiniMTError):
            cross_validate(LabeledDataset(data.items[:3]), k=10)


class TestExtractSimple:
    def corpus(self):
        pairs = tuple(
            (sent(ws, i), sent(["t"] * len(ws), i))
            for i, ws in enumerate([["she", "ran"], ["he", "ran", "and", "slept"], ["a", "dog"]])
        )
        return ParallelCorpus(pairs)

    def test_partition(self):
        cp = self.corpus()
        kept = extract_simple(cp, lambda s: SIMPLE if len(s) == 2 else OTHER)
        assert len(kept) + sum(
            1 for s, _ in cp if len(s) != 2
        ) == len(cp)
        assert [s.id for s, _ in kept] == [0, 2]

    def test_always_other_gives_empty_with_warning(self):
        with pytest.warns(UserWarning):
            kept = extract_simple(self.corpus(), lambda s: OTHER)
        assert len(kept) == 0

    def test_targets_carried_along(self):
        kept = extract_simple(self.corpus(), lambda s: SIMPLE)
        for s, t in kept:
            assert s.id == t.id


class TestChunkIO:
    def test_round_trip(self, tmp_path):
        chunks = [seq([NP, VP], 0), seq([PP, NP, VP], 1)]
        path = tmp_path / "chunks.tsv"
        write_chunk_file(chunks, path)
        back = read_chunk_file(path)
        assert back[0].tags == (NP, VP)
        assert back[1].tags == (PP, NP, VP)

    def test_bad_tag_reports_line(self, tmp_path):
        path = tmp_path / "chunks.tsv"
        path.write_text("0\tNP XX\n")
        with pytest.raises(MiniMTError, match=":1:"):
            read_chunk_file(path)
