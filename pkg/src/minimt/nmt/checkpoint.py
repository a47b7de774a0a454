"""Model checkpoints: magic string, JSON header (kind, dims, vocabs, tensor
manifest), then row-major little-endian float64 tensor data. Round-trips are
bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..corpus import Vocab
from ..errors import MiniMTError
from .layers import LSTMParams
from .model import AttentionParams, Seq2SeqModel

MAGIC = b"MINIMT1\n"


def _tensors(model: Seq2SeqModel) -> dict:
    out = {
        "E_x": model.E_x, "E_y": model.E_y,
        "enc_W": model.enc.W, "enc_U": model.enc.U, "enc_b": model.enc.b,
        "dec_W": model.dec.W, "dec_U": model.dec.U, "dec_b": model.dec.b,
        "W_out": model.W_out, "b_out": model.b_out,
    }
    if model.att is not None:
        out.update(
            att_W1=model.att.W1, att_b1=model.att.b1,
            att_v=model.att.v, att_b2=model.att.b2,
        )
    return out


def save_model(model: Seq2SeqModel, path):
    tensors = _tensors(model)
    names = sorted(tensors)
    header = {
        "kind": model.kind,
        "hidden": model.hidden,
        "attention": model.att is not None,
        "src_vocab": {"symbols": list(model.src_vocab.symbols),
                      "counts": model.src_vocab.counts},
        "tgt_vocab": {"symbols": list(model.tgt_vocab.symbols),
                      "counts": model.tgt_vocab.counts},
        "tensors": [{"name": n, "shape": list(tensors[n].shape)} for n in names],
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes())


def load_model(path) -> Seq2SeqModel:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise MiniMTError(f"{path}: not a minimt checkpoint")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        tensors = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(n * 8), dtype="<f8").astype(np.float64)
            tensors[spec["name"]] = data.reshape(shape)
    src_vocab = Vocab(header["src_vocab"]["symbols"], header["src_vocab"]["counts"])
    tgt_vocab = Vocab(header["tgt_vocab"]["symbols"], header["tgt_vocab"]["counts"])
    enc = LSTMParams(tensors["enc_W"], tensors["enc_U"], tensors["enc_b"])
    dec = LSTMParams(tensors["dec_W"], tensors["dec_U"], tensors["dec_b"])
    att = None
    if header["attention"]:
        att = AttentionParams(
            tensors["att_W1"], tensors["att_b1"], tensors["att_v"], tensors["att_b2"]
        )
    return Seq2SeqModel(
        header["kind"], src_vocab, tgt_vocab, tensors["E_x"], tensors["E_y"],
        enc, dec, att, tensors["W_out"], tensors["b_out"],
    )
