"""From-scratch neural MT: LSTM seq2seq with soft attention (word level) and
one-hot character models, manual backpropagation, rmsprop training."""

from .layers import (
    LSTMParams,
    RmsPropState,
    clip_global_norm,
    log_softmax,
    lstm_step,
    rmsprop_update,
    sgd_update,
    softmax,
)
from .model import (
    AttentionParams,
    Seq2SeqModel,
    attend,
    backward_batch,
    build_model,
    decode_step,
    encode,
    forward_batch,
    grad_check,
    loss_and_grads,
    make_batch,
    max_rel_error,
    nll_loss,
    translate_greedy,
)
from .train import (
    TrainConfig,
    build_char_vocab,
    encode_char_pairs,
    encode_word_pairs,
    next_token_accuracy,
    train_char_nmt,
    train_model,
    train_word_nmt,
)
from .checkpoint import load_model, save_model

__all__ = [
    "AttentionParams", "LSTMParams", "RmsPropState", "Seq2SeqModel",
    "TrainConfig", "attend", "backward_batch", "build_char_vocab",
    "build_model", "clip_global_norm", "decode_step", "encode",
    "encode_char_pairs", "encode_word_pairs", "forward_batch", "grad_check",
    "load_model", "log_softmax", "loss_and_grads", "lstm_step", "make_batch",
    "max_rel_error", "next_token_accuracy", "nll_loss", "rmsprop_update",
    "save_model", "sgd_update", "softmax", "train_char_nmt", "train_model",
    "train_word_nmt", "translate_greedy",
]
