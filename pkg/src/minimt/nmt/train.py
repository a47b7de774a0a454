"""Training loops for the word- and character-level seq2seq models:
mini-batch BPTT with rmsprop (or plain SGD), gradient clipping at global
norm 5.0, deterministic under the config seed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..corpus import RESERVED, ParallelCorpus, Vocab, build_vocab
from ..errors import MiniMTError
from .layers import RmsPropState, clip_global_norm, rmsprop_update, sgd_update
from .model import Seq2SeqModel, build_model, forward_batch, loss_and_grads, make_batch

CLIP_NORM = 5.0


@dataclass
class TrainConfig:
    lr: float = 0.001
    epochs: int = 100
    batch_size: int = 256
    optimizer: str = "rmsprop"
    seed: int = 0
    max_len: int = 80
    teacher_forcing: bool = True

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise MiniMTError("invalid training config")
        if self.optimizer not in ("rmsprop", "sgd"):
            raise MiniMTError(f"unknown optimizer {self.optimizer!r}")

    @classmethod
    def char_defaults(cls) -> "TrainConfig":
        return cls(batch_size=64)


def encode_word_pairs(corpus: ParallelCorpus, src_vocab: Vocab, tgt_vocab: Vocab):
    return [
        (src_vocab.encode(s.surfaces), tgt_vocab.encode(t.surfaces))
        for s, t in corpus
    ]


def encode_char_pairs(corpus: ParallelCorpus, src_vocab: Vocab, tgt_vocab: Vocab):
    pairs = []
    for s, t in corpus:
        pairs.append(
            (
                [src_vocab.index(ch) for ch in s.text()],
                [tgt_vocab.index(ch) for ch in t.text()],
            )
        )
    return pairs


def build_char_vocab(sentences) -> Vocab:
    """Vocabulary over observed characters (space included); no UNK is needed
    at char level but the reserved slots stay fixed."""
    counts = Counter()
    for s in sentences:
        counts.update(s.text())
    chars = sorted(counts, key=lambda c: (-counts[c], c))
    return Vocab(list(RESERVED) + chars, counts)


def train_model(model: Seq2SeqModel, pairs, cfg: TrainConfig) -> list[float]:
    """Train in place; returns the per-epoch mean loss history."""
    if not pairs:
        raise MiniMTError("cannot train on an empty corpus")
    params = model.params()
    opt_state = RmsPropState.for_params(params) if cfg.optimizer == "rmsprop" else None
    rng = np.random.RandomState(cfg.seed)
    n = len(pairs)
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            loss, grads, _ = loss_and_grads(
                model, batch, cfg.max_len, cfg.teacher_forcing
            )
            clip_global_norm(grads, CLIP_NORM)
            if opt_state is not None:
                rmsprop_update(params, grads, opt_state, cfg.lr)
            else:
                sgd_update(params, grads, cfg.lr)
            total += loss * len(batch)
        history.append(total / n)
    return history


def train_word_nmt(corpus: ParallelCorpus, cfg: TrainConfig | None = None,
                   hidden: int = 256, emb_dim: int = 128, attention: bool = True,
                   min_count: int = 1, src_vocab: Vocab | None = None,
                   tgt_vocab: Vocab | None = None) -> Seq2SeqModel:
    """Word-level seq2seq (soft attention by default). Paper-default budget:
    batch 256, 100 epochs, lr 0.001, rmsprop."""
    if len(corpus) == 0:
        raise MiniMTError("cannot train on an empty corpus")
    cfg = cfg or TrainConfig()
    src_vocab = src_vocab or build_vocab(corpus.sources, min_count)
    tgt_vocab = tgt_vocab or build_vocab(corpus.targets, min_count)
    model = build_model(
        "word", src_vocab, tgt_vocab, hidden, emb_dim, attention, seed=cfg.seed
    )
    model.train_history = train_model(model, encode_word_pairs(corpus, src_vocab, tgt_vocab), cfg)
    return model


def train_char_nmt(corpus: ParallelCorpus, cfg: TrainConfig | None = None,
                   hidden: int = 256) -> Seq2SeqModel:
    """Character-level seq2seq: one-hot inputs, no attention, encoder final
    states seed the decoder. Paper-default batch size is 64."""
    if len(corpus) == 0:
        raise MiniMTError("cannot train on an empty corpus")
    cfg = cfg or TrainConfig.char_defaults()
    src_vocab = build_char_vocab(corpus.sources)
    tgt_vocab = build_char_vocab(corpus.targets)
    model = build_model("char", src_vocab, tgt_vocab, hidden, seed=cfg.seed)
    model.train_history = train_model(model, encode_char_pairs(corpus, src_vocab, tgt_vocab), cfg)
    return model


def next_token_accuracy(model: Seq2SeqModel, pairs, max_len: int = 80) -> float:
    """Teacher-forced next-token accuracy over non-PAD positions."""
    _, _, stats = forward_batch(model, *make_batch(pairs, max_len), need_cache=False)
    if stats["count"] == 0:
        raise MiniMTError("no target tokens to score")
    return stats["hits"] / stats["count"]
