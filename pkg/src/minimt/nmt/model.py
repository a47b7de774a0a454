"""Seq2seq encoder/decoder with optional soft attention, written directly in
numpy with hand-derived gradients.

Word models use learned embedding tables; char models feed one-hot vectors
(identity embeddings, frozen) and never use attention. The decoder input is
the previous target embedding, with the attention context vector concatenated
when attention is on; the output projection reads [s_t ; c_t ; E_y(y_prev)].

Loss is the mean over sentence pairs of the summed per-step negative log
likelihood (natural log); padded positions are masked out of loss, accuracy
and every gradient.
"""

from __future__ import annotations

import numpy as np

from ..corpus import Vocab
from ..errors import MiniMTError
from .layers import LSTMParams, log_softmax, lstm_forward, lstm_backward, softmax

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

_NEG_BIG = 1e30  # masked attention scores underflow to exactly zero weight


class AttentionParams:
    """Single-hidden-layer score net over [E_y(y_prev); s_prev; h_k]."""

    def __init__(self, W1, b1, v, b2):
        self.W1 = W1  # (a, d_ey + h + h)
        self.b1 = b1  # (a,)
        self.v = v    # (a,)
        self.b2 = b2  # (1,)

    @classmethod
    def init(cls, d_ey: int, hidden: int, a: int, rng, scale: float = 0.08):
        return cls(
            rng.uniform(-scale, scale, (a, d_ey + 2 * hidden)),
            np.zeros(a),
            rng.uniform(-scale, scale, a),
            np.zeros(1),
        )


class Seq2SeqModel:
    def __init__(self, kind, src_vocab: Vocab, tgt_vocab: Vocab, E_x, E_y,
                 enc: LSTMParams, dec: LSTMParams, att: AttentionParams | None,
                 W_out, b_out):
        if kind not in ("word", "char"):
            raise MiniMTError(f"unknown model kind {kind!r}")
        if kind == "char" and att is not None:
            raise MiniMTError("char models do not use attention")
        self.kind = kind
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.E_x = E_x
        self.E_y = E_y
        self.enc = enc
        self.dec = dec
        self.att = att
        self.W_out = W_out
        self.b_out = b_out

    @property
    def hidden(self) -> int:
        return self.enc.hidden

    @property
    def d_ey(self) -> int:
        return self.E_y.shape[1]

    @property
    def train_embeddings(self) -> bool:
        return self.kind == "word"

    def params(self) -> dict:
        """Trainable tensors by name; char one-hot embeddings are frozen."""
        out = {
            "enc_W": self.enc.W, "enc_U": self.enc.U, "enc_b": self.enc.b,
            "dec_W": self.dec.W, "dec_U": self.dec.U, "dec_b": self.dec.b,
            "W_out": self.W_out, "b_out": self.b_out,
        }
        if self.train_embeddings:
            out["E_x"] = self.E_x
            out["E_y"] = self.E_y
        if self.att is not None:
            out.update(
                att_W1=self.att.W1, att_b1=self.att.b1,
                att_v=self.att.v, att_b2=self.att.b2,
            )
        return out

    def zero_grads(self) -> dict:
        return {name: np.zeros_like(p) for name, p in self.params().items()}

    def _att_slices(self):
        d, h = self.d_ey, self.hidden
        return slice(0, d), slice(d, d + h), slice(d + h, d + 2 * h)


def build_model(kind: str, src_vocab: Vocab, tgt_vocab: Vocab, hidden: int = 256,
                emb_dim: int = 128, attention: bool = True, att_hidden: int | None = None,
                seed: int = 0) -> Seq2SeqModel:
    """Fresh model with seeded uniform initialization."""
    rng = np.random.RandomState(seed)
    vx, vy = len(src_vocab), len(tgt_vocab)
    if kind == "char":
        E_x, E_y = np.eye(vx), np.eye(vy)
        d_ex, d_ey = vx, vy
        attention = False
    else:
        E_x = rng.uniform(-0.08, 0.08, (vx, emb_dim))
        E_y = rng.uniform(-0.08, 0.08, (vy, emb_dim))
        d_ex = d_ey = emb_dim
    enc = LSTMParams.init(d_ex, hidden, rng)
    dec = LSTMParams.init(d_ey + (hidden if attention else 0), hidden, rng)
    att = AttentionParams.init(d_ey, hidden, att_hidden or hidden, rng) if attention else None
    d_out = hidden + (hidden if attention else 0) + d_ey
    W_out = rng.uniform(-0.08, 0.08, (vy, d_out))
    b_out = np.zeros(vy)
    return Seq2SeqModel(kind, src_vocab, tgt_vocab, E_x, E_y, enc, dec, att, W_out, b_out)


# ----------------------------------------------------------------------
# single-sequence operations

def encode(model: Seq2SeqModel, src_ids):
    """Run the encoder left to right; returns (H of shape (Tx, hidden) and
    the final (h, c) state)."""
    ids = np.asarray(src_ids, dtype=int)
    if ids.size == 0:
        raise MiniMTError("cannot encode an empty sequence")
    h = np.zeros((1, model.hidden))
    c = np.zeros((1, model.hidden))
    H = np.empty((ids.size, model.hidden))
    for t, idx in enumerate(ids):
        h, c, _ = lstm_forward(model.enc, model.E_x[idx][None, :], h, c)
        H[t] = h[0]
    return H, (h[0], c[0])


def attend(att: AttentionParams, ey, s_prev, H):
    """Score every encoder state, softmax-normalize, mix. Returns (context
    vector, attention weights)."""
    d = ey.shape[-1]
    h = s_prev.shape[-1]
    W1y, W1s, W1h = att.W1[:, :d], att.W1[:, d : d + h], att.W1[:, d + h :]
    pre = ey @ W1y.T + s_prev @ W1s.T + att.b1  # (a,)
    z = np.tanh(pre[None, :] + H @ W1h.T)       # (Tx, a)
    scores = z @ att.v + att.b2[0]
    alpha = softmax(scores)
    return alpha @ H, alpha


def decode_step(model: Seq2SeqModel, y_prev: int, state, ctx=None):
    """One decoder step: new (h, c) state and the next-symbol distribution.
    ctx is the attention context vector (None for attention-free models)."""
    h_prev, c_prev = state
    ey = model.E_y[y_prev]
    if model.att is not None:
        if ctx is None:
            raise MiniMTError("attention model needs a context vector")
        u = np.concatenate([ey, ctx])
    else:
        u = ey
    h, c, _ = lstm_forward(model.dec, u[None, :], h_prev[None, :], c_prev[None, :])
    pieces = [h[0]] + ([ctx] if model.att is not None else []) + [ey]
    logits = np.concatenate(pieces) @ model.W_out.T + model.b_out
    return (h[0], c[0]), softmax(logits)


def translate_greedy(model: Seq2SeqModel, source, max_len: int = 80):
    """Greedy generation: feed BOS, emit argmax symbols until EOS or max_len.
    Word models take/return token lists; char models take/return strings."""
    if model.kind == "char":
        src_ids = [model.src_vocab.index(ch) for ch in source]
    else:
        words = source.surfaces if hasattr(source, "surfaces") else source
        src_ids = [model.src_vocab.index(w) for w in words]
    H, state = encode(model, src_ids)
    out_ids = []
    y_prev = BOS_ID
    for _ in range(max_len):
        ctx = attend(model.att, model.E_y[y_prev], state[0], H)[0] if model.att else None
        state, dist = decode_step(model, y_prev, state, ctx)
        y_prev = int(np.argmax(dist))
        if y_prev == EOS_ID:
            break
        out_ids.append(y_prev)
    symbols = model.tgt_vocab.decode(out_ids)
    return "".join(symbols) if model.kind == "char" else symbols


# ----------------------------------------------------------------------
# batched training path

def make_batch(pairs, max_len: int = 80):
    """Pad encoded (src_ids, tgt_ids) pairs into batch arrays. Returns
    (X, src_mask, Yin, Yout, tgt_mask); Yout carries EOS, Yin starts at BOS."""
    if not pairs:
        raise MiniMTError("empty batch")
    srcs = [list(s)[:max_len] for s, _ in pairs]
    tgts = [list(t)[:max_len] for _, t in pairs]
    if any(len(s) == 0 for s in srcs):
        raise MiniMTError("cannot encode an empty sequence")
    B = len(pairs)
    Tx = max(len(s) for s in srcs)
    Ty = max(len(t) for t in tgts) + 1  # room for EOS
    X = np.full((B, Tx), PAD_ID, dtype=int)
    src_mask = np.zeros((B, Tx))
    Yin = np.full((B, Ty), PAD_ID, dtype=int)
    Yout = np.full((B, Ty), PAD_ID, dtype=int)
    tgt_mask = np.zeros((B, Ty))
    for b, (s, t) in enumerate(zip(srcs, tgts)):
        X[b, : len(s)] = s
        src_mask[b, : len(s)] = 1.0
        gold = list(t) + [EOS_ID]
        Yin[b, 0] = BOS_ID
        Yin[b, 1 : len(gold)] = gold[:-1]
        Yout[b, : len(gold)] = gold
        tgt_mask[b, : len(gold)] = 1.0
    return X, src_mask, Yin, Yout, tgt_mask


def forward_batch(model: Seq2SeqModel, X, src_mask, Yin, Yout, tgt_mask,
                  teacher_forcing: bool = True, need_cache: bool = True):
    """Batched teacher-forced forward pass. Returns (loss, cache, stats);
    stats holds masked next-token hits and counts."""
    B, Tx = X.shape
    Ty = Yin.shape[1]
    hdim = model.hidden

    hs = np.zeros((B, hdim))
    cs = np.zeros((B, hdim))
    H = np.empty((B, Tx, hdim))
    enc_caches = []
    for t in range(Tx):
        hn, cn, cache = lstm_forward(model.enc, model.E_x[X[:, t]], hs, cs)
        m = src_mask[:, t : t + 1]
        hs = m * hn + (1.0 - m) * hs
        cs = m * cn + (1.0 - m) * cs
        enc_caches.append(cache if need_cache else None)
        H[:, t, :] = hs

    att = model.att
    if att is not None:
        sy, ss, sh = model._att_slices()
        K = H @ att.W1[:, sh].T  # (B, Tx, a)
    s_h, s_c = hs, cs
    loss = 0.0
    hits = 0.0
    count = 0.0
    dec_caches = []
    y_prev = None
    for t in range(Ty):
        if teacher_forcing or t == 0:
            y_ids = Yin[:, t]
        else:
            y_ids = y_prev
        ey = model.E_y[y_ids]
        if att is not None:
            pre = ey @ att.W1[:, sy].T + s_h @ att.W1[:, ss].T + att.b1
            z = np.tanh(pre[:, None, :] + K)
            scores = z @ att.v + att.b2[0] + (src_mask - 1.0) * _NEG_BIG
            alpha = softmax(scores)
            ctx = np.einsum("bk,bkh->bh", alpha, H)
            u = np.concatenate([ey, ctx], axis=1)
        else:
            z = alpha = ctx = None
            u = ey
        s_prev_h = s_h
        s_h, s_c, lcache = lstm_forward(model.dec, u, s_h, s_c)
        pieces = [s_h] + ([ctx] if att is not None else []) + [ey]
        out_in = np.concatenate(pieces, axis=1)
        logits = out_in @ model.W_out.T + model.b_out
        logp = log_softmax(logits)
        gold = Yout[:, t]
        mask = tgt_mask[:, t]
        loss -= float((logp[np.arange(B), gold] * mask).sum())
        pred = logits.argmax(axis=1)
        hits += float(((pred == gold) * mask).sum())
        count += float(mask.sum())
        if need_cache:
            dec_caches.append((y_ids, ey, s_prev_h, alpha, z, ctx, lcache, out_in, logits))
        y_prev = pred

    loss /= B
    cache = (X, src_mask, Yout, tgt_mask, enc_caches, H, dec_caches) if need_cache else None
    return loss, cache, {"hits": hits, "count": count}


def backward_batch(model: Seq2SeqModel, cache) -> dict:
    """Backprop through the full unrolled graph; returns gradient dict
    matching model.params()."""
    X, src_mask, Yout, tgt_mask, enc_caches, H, dec_caches = cache
    B, Tx = X.shape
    hdim = model.hidden
    att = model.att
    grads = model.zero_grads()
    if att is not None:
        sy, ss, sh = model._att_slices()

    d_sh = np.zeros((B, hdim))
    d_sc = np.zeros((B, hdim))
    dH = np.zeros_like(H)
    for t in range(len(dec_caches) - 1, -1, -1):
        y_ids, ey, s_prev_h, alpha, z, ctx, lcache, out_in, logits = dec_caches[t]
        p = softmax(logits)
        p[np.arange(B), Yout[:, t]] -= 1.0
        dlogits = p * (tgt_mask[:, t][:, None] / B)
        grads["W_out"] += dlogits.T @ out_in
        grads["b_out"] += dlogits.sum(axis=0)
        dout = dlogits @ model.W_out
        dsh_here = dout[:, :hdim]
        if att is not None:
            dctx = dout[:, hdim : 2 * hdim].copy()
            dey = dout[:, 2 * hdim :].copy()
        else:
            dctx = None
            dey = dout[:, hdim:].copy()

        du, dsprev_h, dsprev_c = lstm_backward(
            model.dec, lcache, d_sh + dsh_here, d_sc, grads, "dec_"
        )
        dey += du[:, : model.d_ey]
        if att is not None:
            dctx += du[:, model.d_ey :]
            dalpha = np.einsum("bkh,bh->bk", H, dctx)
            dH += alpha[:, :, None] * dctx[:, None, :]
            de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
            grads["att_v"] += np.einsum("bka,bk->a", z, de)
            grads["att_b2"][0] += de.sum()
            dz = de[:, :, None] * att.v[None, None, :]
            dpre_full = dz * (1.0 - z * z)
            grads["att_W1"][:, sh] += np.einsum("bka,bkh->ah", dpre_full, H)
            dH += np.einsum("bka,ah->bkh", dpre_full, att.W1[:, sh])
            dpre = dpre_full.sum(axis=1)
            grads["att_W1"][:, sy] += dpre.T @ ey
            grads["att_W1"][:, ss] += dpre.T @ s_prev_h
            grads["att_b1"] += dpre.sum(axis=0)
            dey += dpre @ att.W1[:, sy]
            dsprev_h += dpre @ att.W1[:, ss]
        if model.train_embeddings:
            np.add.at(grads["E_y"], y_ids, dey)
        d_sh, d_sc = dsprev_h, dsprev_c

    dh_run, dc_run = d_sh, d_sc
    for t in range(Tx - 1, -1, -1):
        dh_t = dh_run + dH[:, t, :]
        m = src_mask[:, t : t + 1]
        dx, dh_prev, dc_prev = lstm_backward(
            model.enc, enc_caches[t], m * dh_t, m * dc_run, grads, "enc_"
        )
        dh_run = (1.0 - m) * dh_t + dh_prev
        dc_run = (1.0 - m) * dc_run + dc_prev
        if model.train_embeddings:
            np.add.at(grads["E_x"], X[:, t], dx)
    return grads


def nll_loss(model: Seq2SeqModel, pairs, max_len: int = 80) -> float:
    """Teacher-forced loss L = -(1/N) sum_n sum_t log p(y_t | y_<t, X)."""
    batch = make_batch(pairs, max_len)
    loss, _, _ = forward_batch(model, *batch, need_cache=False)
    return loss


def loss_and_grads(model: Seq2SeqModel, pairs, max_len: int = 80,
                   teacher_forcing: bool = True):
    batch = make_batch(pairs, max_len)
    loss, cache, stats = forward_batch(model, *batch, teacher_forcing=teacher_forcing)
    grads = backward_batch(model, cache)
    return loss, grads, stats


def max_rel_error(model: Seq2SeqModel, pairs, grads: dict, eps: float = 1e-5,
                  n_samples: int = 200, seed: int = 0) -> float:
    """Compare given analytic gradients against central differences on
    coordinates sampled from every parameter tensor."""
    rng = np.random.RandomState(seed)
    params = model.params()
    names = sorted(params)
    per = max(1, n_samples // len(names))
    worst = 0.0
    for name in names:
        p = params[name]
        for _ in range(per):
            idx = tuple(rng.randint(0, s) for s in p.shape) if p.shape else ()
            orig = p[idx]
            p[idx] = orig + eps
            up = nll_loss(model, pairs)
            p[idx] = orig - eps
            down = nll_loss(model, pairs)
            p[idx] = orig
            numeric = (up - down) / (2.0 * eps)
            analytic = grads[name][idx]
            denom = max(abs(numeric) + abs(analytic), 1e-5)
            worst = max(worst, abs(numeric - analytic) / denom)
    return worst


def grad_check(model: Seq2SeqModel, pairs, eps: float = 1e-5,
               n_samples: int = 200, seed: int = 0) -> float:
    """Max relative error between analytic and finite-difference gradients."""
    _, grads, _ = loss_and_grads(model, pairs)
    return max_rel_error(model, pairs, grads, eps, n_samples, seed)
