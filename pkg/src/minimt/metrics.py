"""Automatic and manual evaluation: corpus BLEU, greedy-shift TER,
confusion-matrix statistics, and adequacy/fluency sheet handling.

BLEU decisions (the usual underdetermined knobs) are recorded inside every
report: case-sensitive, single reference, add-one smoothing on zero n-gram
counts. TER uses greedy block-shift search with the standard constraints;
exact TER is NP-hard.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import MiniMTError

# tercom-style search limits
MAX_SHIFT_SIZE = 10
MAX_SHIFT_DIST = 10


@dataclass
class BleuReport:
    precisions: list[float]          # smoothed, used for the score
    raw_precisions: list[float]
    brevity_penalty: float
    score: float                     # 0..100
    unsmoothed_score: float          # exact 0 stays representable here
    hyp_len: int
    ref_len: int
    smoothed_orders: list[int] = field(default_factory=list)
    decisions: str = "case-sensitive, single-reference, add-one smoothing on zero counts"

    def as_dict(self):
        return {
            "score": self.score,
            "unsmoothed_score": self.unsmoothed_score,
            "precisions": self.precisions,
            "raw_precisions": self.raw_precisions,
            "brevity_penalty": self.brevity_penalty,
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
            "smoothed_orders": self.smoothed_orders,
            "decisions": self.decisions,
        }


@dataclass
class TerReport:
    insertions: int
    deletions: int
    substitutions: int
    shifts: int
    ref_len: int
    score: float                     # 100 * edits / ref_len, may exceed 100

    @property
    def edits(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts

    def as_dict(self):
        return {
            "score": self.score,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "substitutions": self.substitutions,
            "shifts": self.shifts,
            "ref_len": self.ref_len,
        }


def _ngrams(tokens, n) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(references, hypotheses, max_n: int = 4) -> BleuReport:
    """Corpus-level BLEU with clipped n-gram counts and brevity penalty."""
    refs = [list(r) for r in references]
    hyps = [list(h) for h in hypotheses]
    if not hyps:
        raise MiniMTError("bleu needs at least one hypothesis")
    if len(refs) != len(hyps):
        raise MiniMTError(f"{len(refs)} references vs {len(hyps)} hypotheses")

    matched = [0] * max_n
    total = [0] * max_n
    hyp_len = ref_len = 0
    for ref, hyp in zip(refs, hyps):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            total[n - 1] += max(len(hyp) - n + 1, 0)
            matched[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())

    raw, smoothed, smoothed_orders = [], [], []
    for n in range(max_n):
        if total[n] == 0:
            # hypothesis corpus too short for this order: neutral
            raw.append(1.0)
            smoothed.append(1.0)
        elif matched[n] == 0:
            raw.append(0.0)
            smoothed.append(1.0 / (total[n] + 1))
            smoothed_orders.append(n + 1)
        else:
            raw.append(matched[n] / total[n])
            smoothed.append(matched[n] / total[n])

    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
    geo = math.exp(sum(math.log(p) for p in smoothed) / max_n)
    score = 100.0 * bp * geo
    unsmoothed = 0.0 if any(p == 0.0 for p in raw) else 100.0 * bp * math.exp(
        sum(math.log(p) for p in raw) / max_n
    )
    return BleuReport(smoothed, raw, bp, score, unsmoothed, hyp_len, ref_len, smoothed_orders)


def _lev(ref, hyp) -> int:
    """Word-level Levenshtein distance, two-row DP."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, 1):
        cur = [i]
        for j, h in enumerate(hyp, 1):
            cur.append(min(prev[j - 1] + (r != h), prev[j] + 1, cur[-1] + 1))
        prev = cur
    return prev[-1]


def _lev_breakdown(ref, hyp) -> tuple[int, int, int]:
    """(insertions, deletions, substitutions) turning hyp into ref.
    Backtrace prefers match, then substitution, insertion, deletion."""
    m, n = len(ref), len(hyp)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            d[i][j] = min(
                d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]),
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
            )
    ins = dele = sub = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] and ref[i - 1] == hyp[j - 1]:
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            sub += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            ins += 1
            i -= 1
        else:
            dele += 1
            j -= 1
    return ins, dele, sub


def _substring_positions(ref):
    """All contiguous subsequences of ref up to MAX_SHIFT_SIZE, as a set."""
    subs = set()
    for i in range(len(ref)):
        for l in range(1, min(MAX_SHIFT_SIZE, len(ref) - i) + 1):
            subs.add(tuple(ref[i : i + l]))
    return subs


def _best_shift(ref, hyp, base, ref_subs):
    """Best single block shift, or None when no shift beats its unit cost."""
    best = None
    best_dist = base
    n = len(hyp)
    for i in range(n):
        for length in range(1, min(MAX_SHIFT_SIZE, n - i) + 1):
            block = tuple(hyp[i : i + length])
            if block not in ref_subs:
                break  # longer blocks at i cannot match either
            # skip blocks already matching the reference in place
            if tuple(ref[i : i + length]) == block:
                continue
            rest = hyp[:i] + hyp[i + length :]
            for j in range(len(rest) + 1):
                if j == i or abs(j - i) > MAX_SHIFT_DIST:
                    continue
                cand = rest[:j] + list(block) + rest[j:]
                dist = _lev(ref, cand)
                if dist < best_dist:
                    best_dist = dist
                    best = cand
    # a shift costs one edit: only worth it when it saves more than one
    if best is not None and best_dist + 1 < base:
        return best, best_dist
    return None


def ter(reference, hypothesis) -> TerReport:
    """Translation edit rate: greedy improving block shifts, then Levenshtein
    insertions/deletions/substitutions; every shift costs one edit."""
    ref = list(reference)
    hyp = list(hypothesis)
    if not ref:
        raise MiniMTError("ter needs a non-empty reference")
    ref_subs = _substring_positions(ref)
    shifts = 0
    dist = _lev(ref, hyp)
    while dist > 0:
        found = _best_shift(ref, hyp, dist, ref_subs)
        if found is None:
            break
        hyp, dist = found
        shifts += 1
    ins, dele, sub = _lev_breakdown(ref, hyp)
    edits = ins + dele + sub + shifts
    return TerReport(ins, dele, sub, shifts, len(ref), 100.0 * edits / len(ref))


def corpus_ter(references, hypotheses) -> TerReport:
    """Aggregate TER over a corpus: summed edits over summed reference length."""
    refs = [list(r) for r in references]
    hyps = [list(h) for h in hypotheses]
    if len(refs) != len(hyps):
        raise MiniMTError(f"{len(refs)} references vs {len(hyps)} hypotheses")
    if not refs:
        raise MiniMTError("corpus_ter needs at least one pair")
    ins = dele = sub = shifts = ref_len = 0
    for r, h in zip(refs, hyps):
        rep = ter(r, h)
        ins += rep.insertions
        dele += rep.deletions
        sub += rep.substitutions
        shifts += rep.shifts
        ref_len += rep.ref_len
    edits = ins + dele + sub + shifts
    return TerReport(ins, dele, sub, shifts, ref_len, 100.0 * edits / ref_len)


class ConfusionMatrix:
    """2x2 counts[actual][predicted] over the classes (Other, Simple)."""

    CLASSES = ("Other", "Simple")

    def __init__(self, counts=None):
        self.counts = [[0, 0], [0, 0]]
        if counts is not None:
            for i in range(2):
                for j in range(2):
                    if counts[i][j] < 0:
                        raise MiniMTError("confusion counts must be >= 0")
                    self.counts[i][j] = int(counts[i][j])

    def add(self, actual: str, predicted: str, n: int = 1):
        self.counts[self.CLASSES.index(actual)][self.CLASSES.index(predicted)] += n

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def __iadd__(self, other: "ConfusionMatrix"):
        for i in range(2):
            for j in range(2):
                self.counts[i][j] += other.counts[i][j]
        return self


@dataclass
class ClassificationStats:
    """precision/recall/accuracy/f1 in percent, kappa in [-1, 1].
    Metrics whose denominator is zero are None (undefined), never 0."""

    precision: float | None
    recall: float | None
    accuracy: float
    f1: float | None
    kappa: float | None


def classification_stats(m: ConfusionMatrix, positive_class: str = "Other") -> ClassificationStats:
    """Statistics as published in this line of work: for the positive class p,
    precision = counts[p][p] / row p, recall = counts[p][p] / column p."""
    total = m.total()
    if total == 0:
        raise MiniMTError("all-zero confusion matrix")
    p = m.CLASSES.index(positive_class)
    tp = m.counts[p][p]
    row = sum(m.counts[p])
    col = sum(m.counts[i][p] for i in range(2))
    precision = 100.0 * tp / row if row else None
    recall = 100.0 * tp / col if col else None
    accuracy = 100.0 * (m.counts[0][0] + m.counts[1][1]) / total
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    p_o = (m.counts[0][0] + m.counts[1][1]) / total
    p_e = sum(
        sum(m.counts[i]) * sum(m.counts[r][i] for r in range(2)) for i in range(2)
    ) / (total * total)
    kappa = None if p_e == 1.0 else (p_o - p_e) / (1.0 - p_e)
    return ClassificationStats(precision, recall, accuracy, f1, kappa)


@dataclass(frozen=True)
class RatingRecord:
    sentence_id: int
    rater_id: str
    adequacy: int
    fluency: int

    def __post_init__(self):
        for name in ("adequacy", "fluency"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 1 <= v <= 5:
                raise MiniMTError(f"{name} must be an integer in 1..5, got {v!r}")


def make_rating_sheet(sources, hypotheses, path, shuffle_seed: int = 0):
    """Blind rating sheet: shuffled rows, empty adequacy/fluency columns,
    no system identity."""
    import random

    sources = list(sources)
    hypotheses = list(hypotheses)
    if len(sources) != len(hypotheses):
        raise MiniMTError(f"{len(sources)} sources vs {len(hypotheses)} hypotheses")
    rows = list(enumerate(zip(sources, hypotheses)))
    random.Random(shuffle_seed).shuffle(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sentence_id", "source", "hypothesis", "adequacy", "fluency"])
        for sid, (src, hyp) in rows:
            writer.writerow([sid, src, hyp, "", ""])


def read_ratings(path) -> list[RatingRecord]:
    """Parse a filled rating CSV with columns sentence_id, rater_id,
    adequacy, fluency; bad scores are reported with their row number."""
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rowno, row in enumerate(reader, 2):  # header is row 1
            try:
                records.append(
                    RatingRecord(
                        int(row["sentence_id"]), row["rater_id"],
                        int(row["adequacy"]), int(row["fluency"]),
                    )
                )
            except (MiniMTError, KeyError, TypeError, ValueError) as exc:
                raise MiniMTError(f"{path}: invalid rating on row {rowno}: {exc}") from exc
    return records


def aggregate_ratings(records) -> dict:
    """Per-rater mean adequacy/fluency plus the grand mean of rater means."""
    records = list(records)
    if not records:
        raise MiniMTError("no rating records")
    by_rater: dict[str, list[RatingRecord]] = {}
    for rec in records:
        by_rater.setdefault(rec.rater_id, []).append(rec)
    per_rater = {
        rater: {
            "adequacy": sum(r.adequacy for r in recs) / len(recs),
            "fluency": sum(r.fluency for r in recs) / len(recs),
        }
        for rater, recs in sorted(by_rater.items())
    }
    k = len(per_rater)
    average = {
        "adequacy": sum(v["adequacy"] for v in per_rater.values()) / k,
        "fluency": sum(v["fluency"] for v in per_rater.values()) / k,
    }
    return {"per_rater": per_rater, "average": average}
