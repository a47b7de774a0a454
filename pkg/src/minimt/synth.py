"""Bundled synthetic parallel corpus for demos, smoke tests and the
end-to-end comparison run.

Source sentences come from a small template grammar over closed word lists
(so the fallback chunker tags them sensibly); the toy target language maps
each word to its reversal plus "u" and reverses the word order, keeping the
final period in place. Sentences built from two clauses joined by a
conjunction are labeled Other, single-clause ones Simple.
"""

from __future__ import annotations

import random
from importlib import resources

from .corpus import ParallelCorpus, Sentence
from .simplex import OTHER, SIMPLE

_DETS = ["the", "a"]
_NOUNS = ["dog", "cat", "man", "woman", "boy", "girl", "house", "tree",
          "bird", "fish", "car", "book"]
_VERBS_I = ["ran", "slept", "jumped", "smiled", "walked", "came", "went"]
_VERBS_T = ["chased", "saw", "liked", "loved", "found", "took", "made", "bought"]
_ADJS = ["big", "small", "old", "young", "happy", "red"]
_ADVS = ["quickly", "slowly", "often", "today"]
_PREPS = ["in", "into", "near"]
_PRONOUNS = ["he", "she", "they"]

_SIMPLE_TEMPLATES = [
    ("D", "N", "Vi", "."),
    ("D", "N", "Vi", "ADV", "."),
    ("D", "N", "Vt", "D", "N", "."),
    ("PRO", "Vt", "D", "ADJ", "N", "."),
    ("D", "ADJ", "N", "Vi", "P", "D", "N", "."),
    ("PRO", "Vi", "ADV", "."),
]
_OTHER_TEMPLATES = [
    ("D", "N", "Vi", "and", "D", "N", "Vi", "."),
    ("D", "N", "Vt", "D", "N", "because", "PRO", "Vi", "."),
    ("PRO", "Vi", "but", "D", "N", "Vt", "D", "N", "."),
]
_SLOTS = {
    "D": _DETS, "N": _NOUNS, "Vi": _VERBS_I, "Vt": _VERBS_T,
    "ADJ": _ADJS, "ADV": _ADVS, "P": _PREPS, "PRO": _PRONOUNS,
}


def target_word(word: str) -> str:
    return word if word == "." else word[::-1] + "u"


def target_sentence(words) -> list[str]:
    content = [w for w in words if w != "."]
    return [target_word(w) for w in reversed(content)] + ["."]


def make_synthetic_corpus(n: int = 500, seed: int = 2024, simple_share: float = 0.55):
    """Deterministic corpus of n pairs; returns (corpus, labels by id)."""
    rng = random.Random(seed)
    pairs = []
    labels = {}
    for i in range(n):
        simple = rng.random() < simple_share
        template = rng.choice(_SIMPLE_TEMPLATES if simple else _OTHER_TEMPLATES)
        words = [slot if slot not in _SLOTS else rng.choice(_SLOTS[slot]) for slot in template]
        pairs.append(
            (Sentence.from_words(i, words), Sentence.from_words(i, target_sentence(words)))
        )
        labels[i] = SIMPLE if simple else OTHER
    return ParallelCorpus(tuple(pairs), "en", "rv"), labels


def data_path(name: str):
    """Path to a bundled data file."""
    return resources.files("minimt") / "data" / name


def write_synthetic_data(out_dir, n: int = 500, seed: int = 2024):
    """Regenerate the bundled corpus, labels, chunk and rule files."""
    from pathlib import Path

    from .corpus import write_parallel
    from .simplex import fallback_chunk, mine_rules, write_chunk_file, write_rules

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, labels = make_synthetic_corpus(n, seed)
    write_parallel(corpus, out / "synthetic.en", out / "synthetic.rv")
    with open(out / "synthetic.labels", "w", encoding="utf-8", newline="\n") as fh:
        for i in sorted(labels):
            fh.write(f"{i}\t{labels[i]}\n")
    chunked = [fallback_chunk(s) for s in corpus.sources]
    write_chunk_file(chunked, out / "synthetic.chunks")
    simple_chunks = [c for c in chunked if labels[c.sentence_id] == SIMPLE]
    write_rules(mine_rules(simple_chunks), out / "synthetic.rules")


if __name__ == "__main__":
    import pathlib

    write_synthetic_data(pathlib.Path(__file__).parent / "data")
