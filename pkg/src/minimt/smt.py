"""Miniature phrase-based SMT: IBM Model 1 EM alignment, grow-diag-final
symmetrization, consistent phrase-pair extraction, phrase-table scoring and
a log-linear stack (beam) decoder.

Scores are log10 throughout to match the language model.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .corpus import BOS, EOS
from .errors import MiniMTError
from .lm import NGramLM

NULL = "<null>"  # empty source word for Model 1

# score components for a synthetic copy-through entry of an unknown word
OOV_SCORE = 1e-4


def _surfaces(sent):
    return tuple(sent.surfaces) if hasattr(sent, "surfaces") else tuple(sent)


class TranslationTable:
    """Lexical translation probabilities t(f|e), each source row normalized."""

    def __init__(self, rows=None):
        # rows: src word e -> {tgt word f: probability}
        self.rows: dict[str, dict[str, float]] = rows or {}

    def prob(self, e: str, f: str) -> float:
        return self.rows.get(e, {}).get(f, 0.0)

    def row(self, e: str) -> dict[str, float]:
        return self.rows.get(e, {})


@dataclass(frozen=True)
class Alignment:
    links: frozenset  # of (src_index, tgt_index)

    @classmethod
    def of(cls, pairs) -> "Alignment":
        return cls(frozenset((int(i), int(j)) for i, j in pairs))


def train_ibm1(corpus, iterations: int = 10) -> TranslationTable:
    """EM for t(f|e) with a NULL source word and uniform initialization."""
    bitext = [((NULL,) + _surfaces(s), _surfaces(t)) for s, t in corpus]
    if not bitext:
        raise MiniMTError("cannot train IBM Model 1 on an empty corpus")
    if iterations < 1:
        raise MiniMTError("iterations must be >= 1")

    tgt_vocab = set()
    cooc: dict[str, set] = defaultdict(set)
    for es, fs in bitext:
        tgt_vocab.update(fs)
        for e in es:
            cooc[e].update(fs)
    uniform = 1.0 / len(tgt_vocab)
    table = {e: {f: uniform for f in fs} for e, fs in cooc.items()}

    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        totals: dict[str, float] = defaultdict(float)
        for es, fs in bitext:
            for f in fs:
                z = sum(table[e][f] for e in es)
                for e in es:
                    c = table[e][f] / z
                    counts[e][f] += c
                    totals[e] += c
        table = {
            e: {f: c / totals[e] for f, c in fcounts.items()}
            for e, fcounts in counts.items()
        }
    return TranslationTable(table)


def model1_loglik(table: TranslationTable, corpus) -> float:
    """Corpus log-likelihood under Model 1 (natural log), including the
    uniform alignment factor 1/(l+1) per target word."""
    total = 0.0
    for s, t in corpus:
        es = (NULL,) + _surfaces(s)
        for f in _surfaces(t):
            z = sum(table.prob(e, f) for e in es)
            if z <= 0.0:
                return float("-inf")
            total += math.log(z) - math.log(len(es))
    return total


def viterbi_align(table: TranslationTable, pair) -> Alignment:
    """Link each target word to its most probable source word; ties go to the
    leftmost source, and NULL (no link) only wins when strictly better."""
    src, tgt = _surfaces(pair[0]), _surfaces(pair[1])
    links = set()
    for j, f in enumerate(tgt):
        best_p, best_i = -1.0, None
        for i, e in enumerate(src):
            p = table.prob(e, f)
            if p > best_p:
                best_p, best_i = p, i
        if table.prob(NULL, f) > best_p:
            continue
        links.add((best_i, j))
    return Alignment(frozenset(links))


_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def symmetrize(a_fwd: Alignment, a_rev: Alignment, src_len: int, tgt_len: int) -> Alignment:
    """grow-diag-final over two directional alignments in (src, tgt) space."""
    for i, j in a_fwd.links | a_rev.links:
        if not (0 <= i < src_len and 0 <= j < tgt_len):
            raise MiniMTError(f"alignment link ({i},{j}) out of bounds")
    inter = a_fwd.links & a_rev.links
    union = a_fwd.links | a_rev.links
    links = set(inter)
    src_cov = {i for i, _ in links}
    tgt_cov = {j for _, j in links}

    changed = True
    while changed:
        changed = False
        for i, j in sorted(links):
            for di, dj in _NEIGHBORS:
                ni, nj = i + di, j + dj
                if (ni, nj) in union and (ni, nj) not in links:
                    if ni not in src_cov or nj not in tgt_cov:
                        links.add((ni, nj))
                        src_cov.add(ni)
                        tgt_cov.add(nj)
                        changed = True

    for i, j in sorted(union):
        if i not in src_cov or j not in tgt_cov:
            links.add((i, j))
            src_cov.add(i)
            tgt_cov.add(j)
    return Alignment(frozenset(links))


@dataclass(frozen=True)
class PhrasePair:
    src: tuple[str, ...]
    tgt: tuple[str, ...]
    src_span: tuple[int, int]  # [start, end) over source positions
    tgt_span: tuple[int, int]


def extract_phrases(pair, alignment: Alignment, max_phrase_len: int = 7) -> list[PhrasePair]:
    """All phrase pairs consistent with the alignment: every link inside the
    source span lands inside the target span and vice versa, at least one
    link inside, extended over unaligned boundary target words."""
    src, tgt = _surfaces(pair[0]), _surfaces(pair[1])
    links = alignment.links
    tgt_aligned = {j for _, j in links}
    out = []
    for i1 in range(len(src)):
        for i2 in range(i1, min(i1 + max_phrase_len, len(src))):
            tps = [j for i, j in links if i1 <= i <= i2]
            if not tps:
                continue
            j1, j2 = min(tps), max(tps)
            if any(j1 <= j <= j2 and not i1 <= i <= i2 for i, j in links):
                continue
            js = j1
            while True:
                je = j2
                while True:
                    if je - js + 1 <= max_phrase_len:
                        out.append(
                            PhrasePair(
                                src[i1 : i2 + 1], tgt[js : je + 1],
                                (i1, i2 + 1), (js, je + 1),
                            )
                        )
                    je += 1
                    if je >= len(tgt) or je in tgt_aligned:
                        break
                js -= 1
                if js < 0 or js in tgt_aligned:
                    break
    return sorted(out, key=lambda p: (p.src_span, p.tgt_span))


@dataclass(frozen=True)
class PhraseTableEntry:
    src: tuple[str, ...]
    tgt: tuple[str, ...]
    # (phi_tgt|src, phi_src|tgt, lex_tgt|src, lex_src|tgt)
    scores: tuple[float, float, float, float]


class PhraseTable:
    def __init__(self):
        self._entries: dict[tuple, list[PhraseTableEntry]] = {}

    def add(self, entry: PhraseTableEntry):
        self._entries.setdefault(entry.src, []).append(entry)

    def options(self, src_phrase) -> list[PhraseTableEntry]:
        return self._entries.get(tuple(src_phrase), [])

    def __len__(self):
        return sum(len(v) for v in self._entries.values())

    def __iter__(self):
        for src in sorted(self._entries):
            yield from self._entries[src]

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for e in self:
                fh.write(
                    f"{' '.join(e.src)} ||| {' '.join(e.tgt)} ||| "
                    + " ".join(repr(s) for s in e.scores) + "\n"
                )

    @classmethod
    def load(cls, path) -> "PhraseTable":
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    src, tgt, scores = line.split(" ||| ")
                    table.add(
                        PhraseTableEntry(
                            tuple(src.split()), tuple(tgt.split()),
                            tuple(float(x) for x in scores.split()),
                        )
                    )
                except ValueError as exc:
                    raise MiniMTError(f"{path}:{lineno}: bad phrase table line") from exc
        return table


def _lex_weight(phrase_a, phrase_b, table: TranslationTable) -> float:
    """Max-link product: for each word of phrase_a, the best t(word|b) over
    phrase_b and NULL."""
    w = 1.0
    for a in phrase_a:
        best = max([table.prob(b, a) for b in phrase_b] + [table.prob(NULL, a)])
        w *= max(best, 1e-12)
    return w


def score_phrase_table(phrase_pairs, t_fwd: TranslationTable, t_rev: TranslationTable) -> PhraseTable:
    """Relative-frequency phrase scores plus lexical max-link weights.
    t_fwd is t(tgt|src), t_rev is t(src|tgt)."""
    co = Counter()
    cs = Counter()
    ct = Counter()
    for pp in phrase_pairs:
        co[(pp.src, pp.tgt)] += 1
        cs[pp.src] += 1
        ct[pp.tgt] += 1
    table = PhraseTable()
    for (src, tgt), c in sorted(co.items()):
        table.add(
            PhraseTableEntry(
                src, tgt,
                (
                    c / cs[src],
                    c / ct[tgt],
                    _lex_weight(tgt, src, t_fwd),
                    _lex_weight(src, tgt, t_rev),
                ),
            )
        )
    return table


@dataclass
class DecoderConfig:
    beam_size: int | None = 100          # None = unlimited
    distortion_limit: int = 6
    max_phrase_len: int = 7
    lambda_tm: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    lambda_lm: float = 1.0
    lambda_distortion: float = 0.6
    lambda_word_penalty: float = -1.0


@dataclass
class Hypothesis:
    coverage: int                         # bitmask over source positions
    lm_state: tuple
    partial_score: float
    future_cost: float
    last_phrase_end: int
    cum_distortion: int
    predecessor: "Hypothesis | None" = None
    entry: PhraseTableEntry | None = None
    span: tuple[int, int] | None = None
    seq: int = field(default=0, compare=False)


def _lm_advance(lm: NGramLM, state: tuple, words) -> tuple[float, tuple]:
    logp = 0.0
    st = list(state)
    for w in words:
        logp += lm.logprob(st, w)
        st.append(w)
    if lm.order > 1:
        st = st[-(lm.order - 1):]
    else:
        st = []
    return logp, tuple(st)


def _collect_options(src, table: PhraseTable, cfg: DecoderConfig):
    """Translation options per source span, with copy-through entries for
    out-of-vocabulary single words."""
    options = {}
    for i in range(len(src)):
        for j in range(i + 1, min(i + cfg.max_phrase_len, len(src)) + 1):
            opts = table.options(src[i:j])
            if opts:
                options[(i, j)] = opts
    for i, w in enumerate(src):
        if (i, i + 1) not in options:
            options[(i, i + 1)] = [
                PhraseTableEntry((w,), (w,), (OOV_SCORE,) * 4)
            ]
    return options


def _entry_score(entry: PhraseTableEntry, lm: NGramLM, cfg: DecoderConfig) -> float:
    """Distortion-free score of one option: TM, word penalty and a unigram
    LM estimate. Used for the future-cost table."""
    s = sum(l * math.log10(p) for l, p in zip(cfg.lambda_tm, entry.scores))
    s += cfg.lambda_word_penalty * len(entry.tgt)
    s += cfg.lambda_lm * sum(lm.logprob((), w) for w in entry.tgt)
    return s


def _future_costs(n, options, lm, cfg):
    """Cheapest-cost estimate per span via span DP; possibly inadmissible."""
    best = {}
    for (i, j), opts in options.items():
        best[(i, j)] = max(_entry_score(e, lm, cfg) for e in opts)
    for length in range(2, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            cur = best.get((i, j), -math.inf)
            for k in range(i + 1, j):
                left = best.get((i, k), -math.inf)
                right = best.get((k, j), -math.inf)
                if left + right > cur:
                    cur = left + right
            best[(i, j)] = cur
    return best


def _coverage_future(coverage: int, n: int, span_costs) -> float:
    total = 0.0
    i = 0
    while i < n:
        if coverage >> i & 1:
            i += 1
            continue
        j = i
        while j < n and not coverage >> j & 1:
            j += 1
        total += span_costs[(i, j)]
        i = j
    return total


def decode(sentence, phrase_table: PhraseTable, lm: NGramLM, cfg: DecoderConfig | None = None):
    """Stack decoding over number of covered source words with recombination
    on (coverage, lm_state, last_phrase_end) and per-stack beam pruning.

    Returns (target words, total score, trace). Score ties are broken toward
    less total distortion, then earlier discovery, keeping runs deterministic.
    """
    cfg = cfg or DecoderConfig()
    src = _surfaces(sentence)
    if len(phrase_table) == 0:
        raise MiniMTError("cannot decode with an empty phrase table")
    n = len(src)
    options = _collect_options(src, phrase_table, cfg)
    span_costs = _future_costs(n, options, lm, cfg)

    init_state = (BOS,) if lm.order > 1 else ()
    full = (1 << n) - 1
    init = Hypothesis(0, init_state, 0.0, _coverage_future(0, n, span_costs), 0, 0)
    stacks: list[dict] = [dict() for _ in range(n + 1)]
    stacks[0][(0, init_state, 0)] = init
    seq = 1

    def better(a: Hypothesis, b: Hypothesis) -> bool:
        return (a.partial_score, -a.cum_distortion) > (b.partial_score, -b.cum_distortion)

    for k in range(n):
        hyps = sorted(
            stacks[k].values(),
            key=lambda h: (-(h.partial_score + h.future_cost), h.cum_distortion, h.seq),
        )
        if cfg.beam_size is not None:
            hyps = hyps[: cfg.beam_size]
        for hyp in hyps:
            for (i, j), opts in options.items():
                span_mask = ((1 << (j - i)) - 1) << i
                if hyp.coverage & span_mask:
                    continue
                d = abs(i - hyp.last_phrase_end)
                if d > cfg.distortion_limit:
                    continue
                for entry in opts:
                    lm_logp, state = _lm_advance(lm, hyp.lm_state, entry.tgt)
                    score = hyp.partial_score
                    score += sum(
                        l * math.log10(p) for l, p in zip(cfg.lambda_tm, entry.scores)
                    )
                    score += cfg.lambda_lm * lm_logp
                    score += cfg.lambda_distortion * -d
                    score += cfg.lambda_word_penalty * len(entry.tgt)
                    coverage = hyp.coverage | span_mask
                    if coverage == full:
                        score += cfg.lambda_lm * lm.logprob(state, EOS)
                    new = Hypothesis(
                        coverage, state, score,
                        _coverage_future(coverage, n, span_costs),
                        j, hyp.cum_distortion + d, hyp, entry, (i, j), seq,
                    )
                    seq += 1
                    key = (coverage, state, j)
                    stack = stacks[bin(coverage).count("1")]
                    old = stack.get(key)
                    if old is None or better(new, old):
                        stack[key] = new

    if not stacks[n]:
        raise MiniMTError("no complete hypothesis (distortion limit too tight)")
    best = None
    for h in sorted(stacks[n].values(), key=lambda h: h.seq):
        if best is None or better(h, best):
            best = h

    words: list[str] = []
    trace = []
    h = best
    while h.predecessor is not None:
        trace.append(
            {
                "span": list(h.span),
                "src": list(h.entry.src),
                "tgt": list(h.entry.tgt),
                "scores": list(h.entry.scores),
            }
        )
        words[:0] = h.entry.tgt
        h = h.predecessor
    trace.reverse()
    return words, best.partial_score, trace
