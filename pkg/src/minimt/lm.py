"""N-gram language model with interpolated Kneser-Ney smoothing and ARPA
text-format serialization. Log base 10 throughout (ARPA convention).

Estimation follows the usual recipe: highest-order raw counts, adjusted
(continuation) counts below except after the sentence-start marker, one
absolute discount per order from count-of-counts, and interpolation down to
a uniform distribution over the event vocabulary. Backoff weights are the
interpolation factors, so every context distribution sums to one exactly.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter

from .corpus import BOS, EOS, UNK, RESERVED, Vocab
from .errors import MiniMTError

_ZERO_LOG10 = -99.0  # ARPA sentinel for "never predicted"


def _words(sent) -> list[str]:
    if hasattr(sent, "surfaces"):
        return list(sent.surfaces)
    return list(sent)


def ngram_counts(sentences, order: int) -> dict[int, Counter]:
    """Raw counts of all 1..order-grams over BOS-padded, EOS-terminated
    sentences (a single BOS, KenLM style)."""
    counts: dict[int, Counter] = {n: Counter() for n in range(1, order + 1)}
    for sent in sentences:
        padded = [BOS] + _words(sent) + [EOS]
        for n in range(1, order + 1):
            for i in range(len(padded) - n + 1):
                counts[n][tuple(padded[i : i + n])] += 1
    return counts


def _adjusted_counts(raw: dict[int, Counter], order: int) -> dict[int, Counter]:
    """Kneser-Ney continuation counts below the top order; grams starting
    with BOS keep their raw counts (they cannot be extended left)."""
    adj: dict[int, Counter] = {order: Counter(raw[order])}
    for n in range(order - 1, 0, -1):
        table = Counter()
        for gram in raw[n]:
            if gram[0] == BOS:
                table[gram] = raw[n][gram]
        for longer in raw[n + 1]:
            suffix = longer[1:]
            if suffix[0] != BOS:
                table[suffix] += 1
        adj[n] = table
    return adj


def _discount(table: Counter) -> float:
    n1 = sum(1 for g, c in table.items() if c == 1 and g != (BOS,))
    n2 = sum(1 for g, c in table.items() if c == 2 and g != (BOS,))
    if n1 == 0 and n2 == 0:
        warnings.warn("count-of-counts empty; falling back to discount 0.5", stacklevel=3)
        return 0.5
    return min(max(n1 / (n1 + 2.0 * n2), 0.1), 0.9)


def _safe_log10(p: float) -> float:
    return math.log10(p) if p > 0.0 else _ZERO_LOG10


class NGramLM:
    """Immutable after training; queries are thread-safe."""

    def __init__(self, order: int, prob: dict, backoff: dict, vocab: Vocab):
        if order < 1:
            raise MiniMTError("order must be >= 1")
        self.order = order
        self.prob = prob          # tuple(gram) -> log10 probability
        self.backoff = backoff    # tuple(context) -> log10 backoff weight
        self.vocab = vocab

    def event_words(self) -> list[str]:
        """Predictable symbols: vocabulary words plus EOS and UNK, no PAD/BOS."""
        skip = {RESERVED[0], BOS}
        return [w for w in self.vocab.symbols if w not in skip]

    def _map(self, word: str) -> str:
        return word if (word,) in self.prob else UNK

    def logprob(self, context, word: str) -> float:
        """log10 P(word | context) by longest-match backoff."""
        ctx = tuple(self._map(w) for w in _words(context))
        if self.order > 1:
            ctx = ctx[-(self.order - 1):]
        else:
            ctx = ()
        return self._resolve(ctx, self._map(word))

    def _resolve(self, ctx: tuple, word: str) -> float:
        gram = ctx + (word,)
        if gram in self.prob:
            return self.prob[gram]
        if not ctx:
            return self.prob[(word,)]  # UNK is always stored
        return self.backoff.get(ctx, 0.0) + self._resolve(ctx[1:], word)

    def sentence_logprob(self, sentence) -> float:
        """log10 probability of the sentence including the terminal EOS."""
        words = [self._map(w) for w in _words(sentence)]
        ctx: list[str] = [BOS]
        total = 0.0
        for w in words + [EOS]:
            total += self.logprob(ctx, w)
            ctx.append(w)
        return total

    def perplexity(self, sentences) -> float:
        total, events = 0.0, 0
        for sent in sentences:
            total += self.sentence_logprob(sent)
            events += len(_words(sent)) + 1
        if events == 0:
            raise MiniMTError("perplexity over an empty corpus")
        return 10.0 ** (-total / events)

    @classmethod
    def uniform(cls, words, order: int = 1) -> "NGramLM":
        """Uniform unigram model over the given words plus EOS and UNK."""
        events = sorted(set(words) - set(RESERVED)) + [EOS, UNK]
        logp = math.log10(1.0 / len(events))
        prob = {(w,): logp for w in events}
        prob[(BOS,)] = _ZERO_LOG10
        vocab = Vocab(list(RESERVED) + sorted(set(words) - set(RESERVED)))
        return cls(order, prob, {}, vocab)

    # ----- ARPA serialization -------------------------------------------

    def save_arpa(self, path):
        grams_by_order: dict[int, list] = {n: [] for n in range(1, self.order + 1)}
        for gram in self.prob:
            grams_by_order[len(gram)].append(gram)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\\data\\\n")
            for n in range(1, self.order + 1):
                fh.write(f"ngram {n}={len(grams_by_order[n])}\n")
            fh.write("\n")
            for n in range(1, self.order + 1):
                fh.write(f"\\{n}-grams:\n")
                for gram in sorted(grams_by_order[n]):
                    line = f"{self.prob[gram]!r}\t{' '.join(gram)}"
                    if n < self.order and gram in self.backoff:
                        line += f"\t{self.backoff[gram]!r}"
                    fh.write(line + "\n")
                fh.write("\n")
            fh.write("\\end\\\n")

    @classmethod
    def load_arpa(cls, path) -> "NGramLM":
        prob, backoff = {}, {}
        order = 0
        current = 0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line == "\\data\\" or line == "\\end\\":
                    continue
                if line.startswith("ngram "):
                    order = max(order, int(line.split("=")[0].split()[1]))
                    continue
                if line.startswith("\\") and line.endswith("-grams:"):
                    current = int(line[1:].split("-")[0])
                    continue
                parts = line.split("\t")
                if current == 0 or len(parts) < 2:
                    raise MiniMTError(f"{path}: unparseable ARPA line {line!r}")
                gram = tuple(parts[1].split(" "))
                if len(gram) != current:
                    raise MiniMTError(f"{path}: gram {gram} in \\{current}-grams: section")
                prob[gram] = float(parts[0])
                if len(parts) > 2:
                    backoff[gram] = float(parts[2])
        if order == 0 or not prob:
            raise MiniMTError(f"{path}: not an ARPA file")
        words = sorted(g[0] for g in prob if len(g) == 1 and g[0] not in RESERVED)
        vocab = Vocab(list(RESERVED) + words)
        return cls(order, prob, backoff, vocab)


def train_lm(sentences, order: int = 3, discount: float | None = None) -> NGramLM:
    """Interpolated Kneser-Ney estimates with BOS/EOS sentence markers.

    discount overrides the per-order count-of-counts estimate when given
    (useful for tests; 0 disables discounting entirely).
    """
    sentences = list(sentences)
    if not sentences:
        raise MiniMTError("cannot train an LM on an empty corpus")
    if order < 1:
        raise MiniMTError("order must be >= 1")

    raw = ngram_counts(sentences, order)
    adj = _adjusted_counts(raw, order)
    discounts = {
        n: (discount if discount is not None else _discount(adj[n]))
        for n in range(1, order + 1)
    }

    observed = sorted(set(w for (w,) in raw[1] if w not in (BOS, EOS)))
    counts = Counter({w: raw[1][(w,)] for w in observed})
    vocab = Vocab(list(RESERVED) + sorted(observed, key=lambda w: (-counts[w], w)), counts)
    n_events = len(observed) + 2  # plus EOS and UNK

    prob: dict[tuple, float] = {}
    backoff: dict[tuple, float] = {}

    # unigrams: interpolate with the uniform distribution over events
    d1 = discounts[1]
    uni = {g: c for g, c in adj[1].items() if g != (BOS,)}
    total = sum(uni.values())
    kinds = len(uni)
    gamma1 = d1 * kinds / total
    for (w,), c in sorted(uni.items()):
        prob[(w,)] = _safe_log10(max(c - d1, 0.0) / total + gamma1 / n_events)
    if (UNK,) not in prob:
        prob[(UNK,)] = _safe_log10(gamma1 / n_events)
    prob[(BOS,)] = _ZERO_LOG10

    # higher orders, bottom-up so the interpolated lower level is available
    for n in range(2, order + 1):
        d = discounts[n]
        by_ctx: dict[tuple, list] = {}
        for gram, c in adj[n].items():
            by_ctx.setdefault(gram[:-1], []).append((gram, c))
        for ctx, grams in sorted(by_ctx.items()):
            denom = sum(c for _, c in grams)
            gamma = d * len(grams) / denom
            backoff[ctx] = _safe_log10(gamma)
            for gram, c in grams:
                lower = 10.0 ** prob[gram[1:]]
                prob[gram] = _safe_log10(max(c - d, 0.0) / denom + gamma * lower)

    return NGramLM(order, prob, backoff, vocab)
