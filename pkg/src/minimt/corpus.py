"""Corpus data model and preprocessing: tokenization, truecasing, cleaning,
vocabulary construction and dataset splits.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import AllFilteredError, EmptySentenceError, MiniMTError

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)

# Characters split off token edges. Apostrophes and hyphens stay attached.
_PUNCT = set(".,!?;:\"()[]{}<>«»“”‘’…|/\\")


@dataclass(frozen=True)
class Token:
    """A single surface token with its cached lowercase form."""

    surface: str
    lowered: str = field(init=False)

    def __post_init__(self):
        if not self.surface:
            raise MiniMTError("token surface must be non-empty")
        if any(ch.isspace() for ch in self.surface):
            raise MiniMTError(f"token surface contains whitespace: {self.surface!r}")
        object.__setattr__(self, "lowered", self.surface.lower())


@dataclass(frozen=True)
class Sentence:
    id: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise EmptySentenceError(f"sentence {self.id} has no tokens")

    @classmethod
    def from_words(cls, sent_id: int, words) -> "Sentence":
        return cls(sent_id, tuple(Token(w) for w in words))

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def text(self) -> str:
        return " ".join(self.surfaces)

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class ParallelCorpus:
    """Position-aligned sentence pairs; source and target share ids pairwise."""

    pairs: tuple[tuple[Sentence, Sentence], ...]
    src_lang: str = "src"
    tgt_lang: str = "tgt"

    def __post_init__(self):
        seen = set()
        for src, tgt in self.pairs:
            if src.id != tgt.id:
                raise MiniMTError(f"misaligned pair ids {src.id} != {tgt.id}")
            if src.id in seen:
                raise MiniMTError(f"duplicate sentence id {src.id}")
            seen.add(src.id)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    @property
    def sources(self):
        return tuple(s for s, _ in self.pairs)

    @property
    def targets(self):
        return tuple(t for _, t in self.pairs)


class Vocab:
    """Dense symbol<->index bijection with fixed reserved entries.

    Index 0..3 are PAD, BOS, EOS, UNK; remaining symbols are ordered by
    descending count, ties broken lexicographically.
    """

    def __init__(self, symbols, counts=None):
        self._symbols = list(symbols)
        if self._symbols[: len(RESERVED)] != list(RESERVED):
            raise MiniMTError("vocab must start with the reserved symbols")
        self._index = {s: i for i, s in enumerate(self._symbols)}
        if len(self._index) != len(self._symbols):
            raise MiniMTError("vocab symbols must be unique")
        self.counts = dict(counts or {})

    def __len__(self):
        return len(self._symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    @property
    def symbols(self):
        return tuple(self._symbols)

    def index(self, symbol: str) -> int:
        """Index of symbol, falling back to the UNK index when unknown."""
        return self._index.get(symbol, self._index[UNK])

    def symbol(self, idx: int) -> str:
        return self._symbols[idx]

    def encode(self, words) -> list[int]:
        return [self.index(w) for w in words]

    def decode(self, ids) -> list[str]:
        return [self._symbols[i] for i in ids]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for i, sym in enumerate(self._symbols):
                fh.write(f"{i}\t{sym}\t{self.counts.get(sym, 0)}\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        symbols, counts = [], {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                idx, sym, count = line.split("\t")
                if int(idx) != len(symbols):
                    raise MiniMTError(f"non-dense vocab index {idx} in {path}")
                symbols.append(sym)
                counts[sym] = int(count)
        return cls(symbols, counts)


class TruecaseModel:
    """Casing statistics per lowercase form, trained on non-initial tokens."""

    def __init__(self, case_counts=None):
        self.case_counts: dict[str, Counter] = {k: Counter(v) for k, v in (case_counts or {}).items()}

    def best_casing(self, lowered: str) -> str:
        """Most frequent observed casing; ties go to the lexicographically
        smallest casing; unseen forms fall back to the lowercase form."""
        counts = self.case_counts.get(lowered)
        if not counts:
            return lowered
        best = max(sorted(counts), key=lambda c: counts[c])
        return best


def tokenize(text: str, sent_id: int = 0) -> Sentence:
    """Split a raw line into tokens: punctuation is peeled off word edges,
    digit runs and dot-internal forms (decimals, abbreviations) stay whole."""
    if not text.strip():
        raise EmptySentenceError("empty or whitespace-only line")
    out = []
    for chunk in text.split():
        left = []
        while chunk and chunk[0] in _PUNCT:
            left.append(chunk[0])
            chunk = chunk[1:]
        right = []
        while chunk and chunk[-1] in _PUNCT:
            # keep a final period on forms with an interior period ("U.S.", "3.4.")
            if chunk[-1] == "." and "." in chunk[:-1]:
                break
            right.append(chunk[-1])
            chunk = chunk[:-1]
        out.extend(left)
        if chunk:
            out.append(chunk)
        out.extend(reversed(right))
    return Sentence.from_words(sent_id, out)


def train_truecaser(sentences) -> TruecaseModel:
    """Collect casing counts for every non-initial token. Sentence-initial
    tokens are skipped: their casing is positional, not lexical."""
    sentences = list(sentences)
    if not sentences:
        raise MiniMTError("cannot train a truecaser on an empty corpus")
    model = TruecaseModel()
    for sent in sentences:
        for tok in sent.tokens[1:]:
            model.case_counts.setdefault(tok.lowered, Counter())[tok.surface] += 1
    return model


def truecase(model: TruecaseModel, sent: Sentence) -> Sentence:
    """Replace the sentence-initial token by its best casing; later tokens
    are left untouched."""
    first = model.best_casing(sent.tokens[0].lowered)
    return Sentence.from_words(sent.id, (first,) + tuple(t.surface for t in sent.tokens[1:]))


def clean_pairs(corpus: ParallelCorpus, max_len: int = 80) -> ParallelCorpus:
    """Drop pairs where either side is longer than max_len tokens."""
    kept = tuple(
        (s, t) for s, t in corpus.pairs if len(s) <= max_len and len(t) <= max_len
    )
    if not kept:
        raise AllFilteredError(f"all {len(corpus)} pairs exceed max_len={max_len}")
    return ParallelCorpus(kept, corpus.src_lang, corpus.tgt_lang)


def build_vocab(sentences, min_count: int = 1) -> Vocab:
    """Vocabulary over tokens with count >= min_count, ordered by descending
    count then lexicographically, after the four reserved symbols."""
    if min_count < 1:
        raise MiniMTError("min_count must be >= 1")
    counts = Counter()
    for sent in sentences:
        counts.update(t.surface for t in sent.tokens)
    qualified = sorted(
        (s for s, c in counts.items() if c >= min_count),
        key=lambda s: (-counts[s], s),
    )
    if not qualified:
        raise MiniMTError("no token reaches min_count; vocabulary would be empty")
    return Vocab(list(RESERVED) + qualified, counts)


def split(corpus: ParallelCorpus, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Deterministic shuffled (train, dev, test) split. Dev and test sizes are
    floored; the remainder goes to train."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise MiniMTError(f"split ratios must sum to 1, got {sum(ratios)}")
    n = len(corpus)
    n_dev = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_dev - n_test
    if min(n_train, n_dev, n_test) < 1:
        raise MiniMTError(f"split of {n} pairs with ratios {ratios} leaves an empty partition")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    pick = lambda idx: tuple(corpus.pairs[i] for i in idx)
    train = pick(order[:n_train])
    dev = pick(order[n_train : n_train + n_dev])
    test = pick(order[n_train + n_dev :])
    mk = lambda pairs: ParallelCorpus(pairs, corpus.src_lang, corpus.tgt_lang)
    return mk(train), mk(dev), mk(test)


def has_case(text: str) -> bool:
    """True when the text contains characters with an upper/lower distinction
    (truecasing only makes sense for such scripts)."""
    return any(ch.lower() != ch.upper() for ch in text)


def read_parallel(src_path, tgt_path, src_lang="src", tgt_lang="tgt", pretokenized=False) -> ParallelCorpus:
    """Load two aligned one-sentence-per-line files. Raises when line counts
    differ; blank lines are rejected (every line must hold one sentence)."""
    with open(src_path, encoding="utf-8") as fh:
        src_lines = fh.read().splitlines()
    with open(tgt_path, encoding="utf-8") as fh:
        tgt_lines = fh.read().splitlines()
    if len(src_lines) != len(tgt_lines):
        raise MiniMTError(
            f"line count mismatch: {src_path} has {len(src_lines)} lines, "
            f"{tgt_path} has {len(tgt_lines)}"
        )
    pairs = []
    for i, (s, t) in enumerate(zip(src_lines, tgt_lines)):
        if pretokenized:
            if not s.split() or not t.split():
                raise EmptySentenceError(f"blank line at {i + 1}")
            pairs.append((Sentence.from_words(i, s.split()), Sentence.from_words(i, t.split())))
        else:
            pairs.append((tokenize(s, i), tokenize(t, i)))
    return ParallelCorpus(tuple(pairs), src_lang, tgt_lang)


def write_parallel(corpus: ParallelCorpus, src_path, tgt_path):
    with open(src_path, "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus.sources:
            fh.write(s.text() + "\n")
    with open(tgt_path, "w", encoding="utf-8", newline="\n") as fh:
        for t in corpus.targets:
            fh.write(t.text() + "\n")
