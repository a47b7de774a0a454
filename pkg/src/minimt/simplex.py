"""Simple-sentence extraction: chunk-pattern rule mining with confidence
scores, plus a two-hidden-layer feed-forward classifier over chunk tags.

External chunk annotations are authoritative; `fallback_chunk` is a bundled
closed-class heuristic for demos and tests only.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import ParallelCorpus, Sentence
from .errors import MiniMTError

SIMPLE = "Simple"
OTHER = "Other"
LABELS = (SIMPLE, OTHER)

H1, H2 = 50, 50  # hidden layer widths are fixed


class ChunkTag(Enum):
    NP = "NP"
    VP = "VP"
    PP = "PP"
    ADJP = "ADJP"
    ADVP = "ADVP"
    PRP = "PRP"
    OTHER = "OTHER"


# one-hot slots: the 7 tags plus one pad slot
_TAG_INDEX = {tag: i for i, tag in enumerate(ChunkTag)}
_SLOTS = len(ChunkTag) + 1


@dataclass(frozen=True)
class ChunkSequence:
    sentence_id: int
    tags: tuple[ChunkTag, ...]

    def __post_init__(self):
        if not self.tags:
            raise MiniMTError(f"chunk sequence {self.sentence_id} is empty")


@dataclass(frozen=True)
class Rule:
    """A chunk pattern with starred items matching one-or-more repeats."""

    pattern: tuple[tuple[ChunkTag, bool], ...]
    confidence: float

    def __post_init__(self):
        if not self.pattern:
            raise MiniMTError("rule pattern is empty")
        if not 0.0 <= self.confidence <= 100.0:
            raise MiniMTError(f"confidence {self.confidence} outside [0, 100]")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    source_count: int

    def __post_init__(self):
        patterns = [r.pattern for r in self.rules]
        if len(set(patterns)) != len(patterns):
            raise MiniMTError("duplicate rule patterns")
        if sum(r.confidence for r in self.rules) > 100.0 + 1e-9:
            raise MiniMTError("rule confidences sum above 100")


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple[tuple[ChunkSequence, str], ...]

    def __post_init__(self):
        if not self.items:
            raise MiniMTError("labeled dataset is empty")
        for _, label in self.items:
            if label not in LABELS:
                raise MiniMTError(f"unknown label {label!r}")


@dataclass
class FFNNModel:
    """tanh MLP with layers in_dim -> 50 -> 50 -> 2 (index 0 = Simple)."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray
    in_dim: int
    max_len: int


@dataclass
class FFNNConfig:
    lr: float = 0.001
    epochs: int = 100
    batch_size: int = 128
    seed: int = 0
    max_len: int = 40


# Closed-class word lists for the fallback chunker. Deliberately small;
# anything unknown defaults to NP.
_CONJUNCTIONS = {
    "and", "or", "but", "nor", "so", "yet", "because", "although", "though",
    "whereas", "unless", "while", "if", "that", "which", "who", "whom", "whose",
}
_PREPOSITIONS = {
    "in", "on", "at", "to", "from", "with", "by", "for", "of", "into", "onto",
    "under", "over", "about", "after", "before", "between", "through", "during",
    "without", "within", "against", "among", "across", "behind", "beyond",
    "near", "toward", "towards", "upon",
}
_AUXILIARIES = {
    "is", "am", "are", "was", "were", "be", "been", "being", "do", "does",
    "did", "have", "has", "had", "will", "would", "shall", "should", "can",
    "could", "may", "might", "must",
}
_COMMON_VERBS = {
    "ran", "run", "runs", "went", "go", "goes", "gone", "said", "say", "says",
    "saw", "see", "sees", "seen", "came", "come", "comes", "took", "take",
    "takes", "taken", "got", "get", "gets", "made", "make", "makes", "knew",
    "know", "knows", "known", "ate", "eat", "eats", "eaten", "slept", "sleep",
    "sleeps", "gave", "give", "gives", "given", "found", "find", "finds",
    "told", "tell", "tells", "wrote", "write", "writes", "written", "read",
    "reads", "bought", "buy", "buys", "sold", "sell", "sells", "met", "meet",
    "meets", "sat", "sit", "sits", "stood", "stand", "stands", "won", "win",
    "wins", "lost", "lose", "loses", "felt", "feel", "feels", "kept", "keep",
    "keeps", "held", "hold", "holds", "brought", "bring", "brings", "thought",
    "think", "thinks", "spoke", "speak", "speaks", "drank", "drink", "drinks",
    "flew", "fly", "flies", "drove", "drive", "drives", "likes", "like",
    "liked", "loves", "love", "loved", "chased", "chase", "chases",
}
_ADVERBS = {
    "very", "quite", "often", "always", "never", "sometimes", "soon", "now",
    "then", "here", "there", "today", "yesterday", "tomorrow",
}
_PERSONAL_PRONOUNS = {
    "i", "you", "he", "she", "it", "we", "they", "him", "her", "them", "us", "me",
}
_POSSESSIVE_PRONOUNS = {
    "my", "your", "his", "its", "our", "their", "mine", "yours", "hers",
    "ours", "theirs", "myself", "yourself", "himself", "herself", "itself",
    "ourselves", "yourselves", "themselves",
}
_DETERMINERS = {
    "the", "a", "an", "this", "these", "those", "some", "any", "each", "every", "no",
}
_ADJECTIVES = {
    "good", "bad", "big", "small", "happy", "sad", "old", "new", "young",
    "red", "blue", "green", "tall", "short", "hot", "cold", "fast", "slow", "nice",
}
_ADJ_SUFFIXES = ("ful", "ous", "ive", "less", "able", "ible")


def _tag_word(word: str) -> ChunkTag:
    w = word.lower()
    if not any(ch.isalnum() for ch in w) or w in _CONJUNCTIONS:
        return ChunkTag.OTHER
    if w in _PREPOSITIONS:
        return ChunkTag.PP
    if w in _AUXILIARIES or w in _COMMON_VERBS:
        return ChunkTag.VP
    if len(w) > 4 and (w.endswith("ed") or w.endswith("ing")):
        return ChunkTag.VP
    if w in _ADVERBS or (len(w) > 3 and w.endswith("ly")):
        return ChunkTag.ADVP
    if w in _POSSESSIVE_PRONOUNS:
        return ChunkTag.PRP
    if w in _PERSONAL_PRONOUNS or w in _DETERMINERS:
        return ChunkTag.NP
    if w in _ADJECTIVES or w.endswith(_ADJ_SUFFIXES):
        return ChunkTag.ADJP
    return ChunkTag.NP


def fallback_chunk(sent: Sentence) -> ChunkSequence:
    """Heuristic chunker: tag each token from the closed-class tables and
    merge adjacent same-tag tokens into one chunk."""
    tags = []
    for tok in sent.tokens:
        tag = _tag_word(tok.surface)
        if not tags or tags[-1] != tag:
            tags.append(tag)
    return ChunkSequence(sent.id, tuple(tags))


def _runs(tags) -> list[tuple[ChunkTag, int]]:
    runs = []
    for tag in tags:
        if runs and runs[-1][0] == tag:
            runs[-1] = (tag, runs[-1][1] + 1)
        else:
            runs.append((tag, 1))
    return runs


def surface_form(chunks: ChunkSequence) -> tuple[tuple[ChunkTag, bool], ...]:
    """Collapse runs of identical adjacent tags; runs longer than one become
    starred (one-or-more) items."""
    return tuple((tag, n > 1) for tag, n in _runs(chunks.tags))


def pattern_to_str(pattern) -> str:
    return " ".join(tag.value + ("*" if starred else "") for tag, starred in pattern)


def parse_pattern(text: str):
    items = []
    for piece in text.split():
        starred = piece.endswith("*")
        name = piece[:-1] if starred else piece
        try:
            items.append((ChunkTag[name], starred))
        except KeyError:
            raise MiniMTError(f"unknown chunk tag {name!r} in pattern {text!r}") from None
    if not items:
        raise MiniMTError("empty rule pattern")
    return tuple(items)


def mine_rules(simple_chunked) -> RuleSet:
    """Count unique surface forms over known-simple sentences; confidence is
    the percentage of sentences matching each form."""
    seqs = list(simple_chunked)
    if not seqs:
        raise MiniMTError("cannot mine rules from an empty sentence list")
    counts = Counter(surface_form(c) for c in seqs)
    total = len(seqs)
    rules = [Rule(p, 100.0 * c / total) for p, c in counts.items()]
    rules.sort(key=lambda r: (-r.confidence, pattern_to_str(r.pattern)))
    return RuleSet(tuple(rules), total)


def _matches(pattern, runs) -> bool:
    if len(pattern) != len(runs):
        return False
    for (ptag, starred), (rtag, n) in zip(pattern, runs):
        if ptag != rtag or (not starred and n != 1):
            return False
    return True


def classify_rule(rules: RuleSet, chunks: ChunkSequence) -> str:
    """Simple iff the whole tag sequence matches any rule pattern."""
    if not rules.rules:
        raise MiniMTError("empty rule set")
    runs = _runs(chunks.tags)
    for rule in rules.rules:
        if _matches(rule.pattern, runs):
            return SIMPLE
    return OTHER


def encode_features(chunks: ChunkSequence, max_len: int = 40) -> np.ndarray:
    """Positional one-hot over the 7 tags plus a pad slot; sequences are
    truncated or padded to max_len, giving a max_len*8 vector."""
    if max_len < 1:
        raise MiniMTError("max_len must be >= 1")
    vec = np.zeros(max_len * _SLOTS)
    for pos in range(max_len):
        if pos < len(chunks.tags):
            vec[pos * _SLOTS + _TAG_INDEX[chunks.tags[pos]]] = 1.0
        else:
            vec[pos * _SLOTS + _SLOTS - 1] = 1.0
    return vec


def _targets(labels) -> np.ndarray:
    # one-hot scaled to the tanh range: Simple -> (+1, -1), Other -> (-1, +1)
    t = np.full((len(labels), 2), -1.0)
    for i, label in enumerate(labels):
        t[i, 0 if label == SIMPLE else 1] = 1.0
    return t


def ffnn_forward(model: FFNNModel, X: np.ndarray):
    a1 = np.tanh(X @ model.W1 + model.b1)
    a2 = np.tanh(a1 @ model.W2 + model.b2)
    y = np.tanh(a2 @ model.W3 + model.b3)
    return a1, a2, y


def ffnn_loss_and_grads(model: FFNNModel, X: np.ndarray, T: np.ndarray):
    """MSE loss over all output elements and its gradients."""
    a1, a2, y = ffnn_forward(model, X)
    diff = y - T
    loss = float(np.mean(diff**2))
    dy = 2.0 * diff / diff.size
    dz3 = dy * (1.0 - y**2)
    dz2 = (dz3 @ model.W3.T) * (1.0 - a2**2)
    dz1 = (dz2 @ model.W2.T) * (1.0 - a1**2)
    grads = {
        "W3": a2.T @ dz3, "b3": dz3.sum(axis=0),
        "W2": a1.T @ dz2, "b2": dz2.sum(axis=0),
        "W1": X.T @ dz1, "b1": dz1.sum(axis=0),
    }
    return loss, grads


def train_ffnn(data: LabeledDataset, cfg: FFNNConfig | None = None) -> FFNNModel:
    """Mini-batch SGD on the tanh MLP; deterministic under cfg.seed."""
    cfg = cfg or FFNNConfig()
    labels = {label for _, label in data.items}
    if len(data.items) < 2 or len(labels) < 2:
        raise MiniMTError("training needs at least two items covering both classes")
    X = np.stack([encode_features(c, cfg.max_len) for c, _ in data.items])
    T = _targets([label for _, label in data.items])

    rng = np.random.RandomState(cfg.seed)
    in_dim = cfg.max_len * _SLOTS
    model = FFNNModel(
        W1=rng.uniform(-0.1, 0.1, (in_dim, H1)), b1=rng.uniform(-0.1, 0.1, H1),
        W2=rng.uniform(-0.1, 0.1, (H1, H2)), b2=rng.uniform(-0.1, 0.1, H2),
        W3=rng.uniform(-0.1, 0.1, (H2, 2)), b3=rng.uniform(-0.1, 0.1, 2),
        in_dim=in_dim, max_len=cfg.max_len,
    )
    n = len(X)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, grads = ffnn_loss_and_grads(model, X[idx], T[idx])
            for name, g in grads.items():
                setattr(model, name, getattr(model, name) - cfg.lr * g)
    return model


def classify_ffnn(model: FFNNModel, chunks: ChunkSequence) -> tuple[str, float]:
    """Argmax over the 2-dim output; exact ties go to Other (higher class id)."""
    x = encode_features(chunks, model.max_len)
    if x.size != model.in_dim:
        raise MiniMTError(f"feature dim {x.size} != model in_dim {model.in_dim}")
    _, _, y = ffnn_forward(model, x[None, :])
    out = y[0]
    label = SIMPLE if out[0] > out[1] else OTHER
    return label, float(out.max())


def cross_validate(data: LabeledDataset, k: int = 10, cfg: FFNNConfig | None = None, seed: int = 0):
    """k-fold cross validation; returns the summed confusion matrix."""
    from .metrics import ConfusionMatrix

    if k < 2:
        raise MiniMTError("cross validation needs k >= 2")
    if len(data.items) < k:
        raise MiniMTError(f"{len(data.items)} items cannot fill {k} folds")
    cfg = cfg or FFNNConfig()
    rng = np.random.RandomState(seed)
    order = rng.permutation(len(data.items))
    folds = np.array_split(order, k)
    matrix = ConfusionMatrix()
    for f in range(k):
        test_idx = set(folds[f].tolist())
        train_items = tuple(it for i, it in enumerate(data.items) if i not in test_idx)
        model = train_ffnn(LabeledDataset(train_items), cfg)
        for i in sorted(test_idx):
            chunks, actual = data.items[i]
            predicted, _ = classify_ffnn(model, chunks)
            matrix.add(actual, predicted)
    return matrix


def extract_simple(corpus: ParallelCorpus, classifier) -> ParallelCorpus:
    """Keep pairs whose source side the classifier labels Simple; target
    sides are carried along unchanged."""
    kept = tuple((s, t) for s, t in corpus.pairs if classifier(s) == SIMPLE)
    if not kept:
        warnings.warn("extract_simple kept no pairs", stacklevel=2)
    return ParallelCorpus(kept, corpus.src_lang, corpus.tgt_lang)


def write_chunk_file(chunks, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in chunks:
            fh.write(f"{c.sentence_id}\t{' '.join(t.value for t in c.tags)}\n")


def read_chunk_file(path) -> dict[int, ChunkSequence]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                sid, tags = line.split("\t")
                seq = ChunkSequence(int(sid), tuple(ChunkTag[t] for t in tags.split()))
            except (ValueError, KeyError) as exc:
                raise MiniMTError(f"{path}:{lineno}: bad chunk line {line!r}") from exc
            out[seq.sentence_id] = seq
    return out


def write_rules(rules: RuleSet, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# source_count\t{rules.source_count}\n")
        for rule in rules.rules:
            fh.write(f"{pattern_to_str(rule.pattern)}\t{rule.confidence!r}\n")


def read_rules(path) -> RuleSet:
    rules, source_count = [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# source_count\t"):
                source_count = int(line.split("\t")[1])
                continue
            pattern, conf = line.split("\t")
            rules.append(Rule(parse_pattern(pattern), float(conf)))
    return RuleSet(tuple(rules), source_count)
