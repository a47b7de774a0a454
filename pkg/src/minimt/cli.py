"""Pipeline commands: preprocess, extract-simple, train, translate, evaluate,
rate-sheet, rate-aggregate and the full comparison grid.

Configuration is layered: built-in defaults < config file (key=value lines)
< command-line flags. Every command writes a manifest.json (config snapshot,
input digests, seed, version, timestamp) before producing artifacts; reruns
with identical inputs and seed produce byte-identical outputs apart from the
manifest timestamp.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial result.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from . import __version__, corpus as corpus_mod, metrics, simplex, smt
from . import synth as data_mod
from . import lm as lm_mod
from . import nmt
from .errors import MiniMTError

DEFAULT_SEED = 13
VALID_METRICS = ("bleu", "ter")
SYSTEMS = ("smt", "cnmt", "wnmt_na", "wnmt_a")
CORPORA = ("simple", "whole")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _resolve_seed(flag_seed) -> int:
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("MINIMT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"MINIMT_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@contextmanager
def _atomic(path):
    """Write-temp-then-rename so interrupted runs never leave half files."""
    tmp = Path(str(path) + ".tmp")
    yield tmp
    os.replace(tmp, path)


def _write_json(path, obj):
    with _atomic(path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")


def _write_manifest(out_dir, command, config, inputs, outputs, seed):
    manifest = {
        "command": command,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "seed": seed,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(o) for o in outputs],
    }
    _write_json(Path(out_dir) / "manifest.json", manifest)


def _guard_overwrite(paths, force: bool):
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        raise MiniMTError(
            "refusing to overwrite existing artifacts (use --force): " + ", ".join(existing)
        )


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _write_lines(path, lines):
    with _atomic(path) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")


def _read_config_file(path):
    cfg = {}
    for lineno, line in enumerate(_read_lines(path), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MiniMTError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


# ----------------------------------------------------------------------
# preprocess

def run_preprocess(src_file, tgt_file, out_dir, max_len=80, min_count=1,
                   src_lang="src", tgt_lang="tgt", seed=DEFAULT_SEED):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = {
        "src_file": str(src_file), "tgt_file": str(tgt_file), "max_len": max_len,
        "min_count": min_count, "src_lang": src_lang, "tgt_lang": tgt_lang,
    }
    _write_manifest(out, "preprocess", cfg, [src_file, tgt_file],
                    ["corpus.src", "corpus.tgt", "vocab.src", "vocab.tgt"], seed)

    cp = corpus_mod.read_parallel(src_file, tgt_file, src_lang, tgt_lang)

    # truecase Latin-script sides only; caseless scripts pass through
    def _truecase_side(sents):
        if not corpus_mod.has_case(" ".join(s.text() for s in sents)):
            return sents
        model = corpus_mod.train_truecaser(sents)
        return tuple(corpus_mod.truecase(model, s) for s in sents)

    sources = _truecase_side(cp.sources)
    targets = _truecase_side(cp.targets)
    cp = corpus_mod.ParallelCorpus(tuple(zip(sources, targets)), src_lang, tgt_lang)
    cp = corpus_mod.clean_pairs(cp, max_len)

    with _atomic(out / "corpus.src") as t1, _atomic(out / "corpus.tgt") as t2:
        corpus_mod.write_parallel(cp, t1, t2)
    with _atomic(out / "vocab.src") as tmp:
        corpus_mod.build_vocab(cp.sources, min_count).save(tmp)
    with _atomic(out / "vocab.tgt") as tmp:
        corpus_mod.build_vocab(cp.targets, min_count).save(tmp)
    return cp


def _load_corpus_dir(corpus_dir, src_lang="src", tgt_lang="tgt"):
    d = Path(corpus_dir)
    src, tgt = d / "corpus.src", d / "corpus.tgt"
    if not src.exists() or not tgt.exists():
        raise MiniMTError(f"{corpus_dir} has no corpus.src/corpus.tgt (run preprocess first)")
    return corpus_mod.read_parallel(src, tgt, src_lang, tgt_lang, pretokenized=True)


# ----------------------------------------------------------------------
# extract-simple

def _read_labels(path):
    labels = {}
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line:
            continue
        try:
            sid, label = line.split("\t")
        except ValueError:
            raise MiniMTError(f"{path}:{lineno}: expected id<TAB>label") from None
        if label not in simplex.LABELS:
            raise MiniMTError(f"{path}:{lineno}: unknown label {label!r}")
        labels[int(sid)] = label
    return labels


def run_extract_simple(corpus_dir, out_dir, method="rules", chunks_file=None,
                       allow_fallback=False, rules_file=None, labels_file=None,
                       seed=DEFAULT_SEED, ffnn_epochs=100):
    if method not in ("rules", "ffnn"):
        raise UsageError(f"method must be rules or ffnn, got {method!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cp = _load_corpus_dir(corpus_dir)

    chunk_map = simplex.read_chunk_file(chunks_file) if chunks_file else {}
    if not chunks_file and not allow_fallback:
        raise MiniMTError("no chunk file given; pass --chunks or --allow-fallback")

    def chunk_of(sent):
        got = chunk_map.get(sent.id)
        if got is not None:
            return got
        if not allow_fallback:
            raise MiniMTError(f"no chunk annotation for sentence {sent.id}")
        return simplex.fallback_chunk(sent)

    inputs = [Path(corpus_dir) / "corpus.src", Path(corpus_dir) / "corpus.tgt"]
    for p in (chunks_file, rules_file, labels_file):
        if p:
            inputs.append(p)
    cfg = {
        "method": method, "chunks_file": str(chunks_file) if chunks_file else None,
        "allow_fallback": allow_fallback,
        "rules_file": str(rules_file) if rules_file else None,
        "labels_file": str(labels_file) if labels_file else None,
    }
    _write_manifest(out, "extract-simple", cfg, inputs,
                    ["corpus.src", "corpus.tgt", "counts.json"], seed)

    mined = None
    if method == "rules":
        if rules_file:
            ruleset = simplex.read_rules(rules_file)
        elif labels_file:
            labels = _read_labels(labels_file)
            simple_chunks = [chunk_of(s) for s in cp.sources if labels.get(s.id) == simplex.SIMPLE]
            ruleset = mined = simplex.mine_rules(simple_chunks)
        else:
            raise MiniMTError("rules method needs --rules or --labels to mine from")
        classifier = lambda s: simplex.classify_rule(ruleset, chunk_of(s))
    else:
        if not labels_file:
            raise MiniMTError("ffnn method needs --labels training data")
        labels = _read_labels(labels_file)
        items = tuple(
            (chunk_of(s), labels[s.id]) for s in cp.sources if s.id in labels
        )
        model = simplex.train_ffnn(
            simplex.LabeledDataset(items), simplex.FFNNConfig(seed=seed, epochs=ffnn_epochs)
        )
        classifier = lambda s: simplex.classify_ffnn(model, chunk_of(s))[0]

    kept = simplex.extract_simple(cp, classifier)
    with _atomic(out / "corpus.src") as t1, _atomic(out / "corpus.tgt") as t2:
        corpus_mod.write_parallel(kept, t1, t2)
    counts = {
        "total": len(cp), "simple": len(kept),
        "other": len(cp) - len(kept), "method": method,
    }
    _write_json(out / "counts.json", counts)
    if mined is not None:
        with _atomic(out / "rules.txt") as tmp:
            simplex.write_rules(mined, tmp)
    return counts


# ----------------------------------------------------------------------
# train

def _train_smt(cp, out, seed, lm_order=3, ibm_iters=10, max_phrase_len=7):
    fwd = smt.train_ibm1(cp, ibm_iters)                       # t(tgt|src)
    rev_pairs = corpus_mod.ParallelCorpus(
        tuple((t, s) for s, t in cp), cp.tgt_lang, cp.src_lang
    )
    rev = smt.train_ibm1(rev_pairs, ibm_iters)                # t(src|tgt)
    phrases = []
    for s, t in cp:
        a_fwd = smt.viterbi_align(fwd, (s, t))
        a_rev = smt.Alignment.of((i, j) for j, i in smt.viterbi_align(rev, (t, s)).links)
        sym = smt.symmetrize(a_fwd, a_rev, len(s), len(t))
        phrases.extend(smt.extract_phrases((s, t), sym, max_phrase_len))
    table = smt.score_phrase_table(phrases, fwd, rev)
    model_lm = lm_mod.train_lm(cp.targets, lm_order)
    with _atomic(out / "phrase-table.txt") as tmp:
        table.save(tmp)
    with _atomic(out / "lm.arpa") as tmp:
        model_lm.save_arpa(tmp)


TRAIN_DEFAULTS = {
    "epochs": None, "batch_size": None, "lr": 0.001, "hidden": None,
    "emb_dim": 128, "attention": True, "max_len": 80, "lm_order": 3,
    "ibm_iters": 10, "max_phrase_len": 7,
}


def _layer_train_config(config_file, flags: dict) -> dict:
    """built-in defaults < config file < explicit command-line flags."""
    cfg = dict(TRAIN_DEFAULTS)
    if config_file:
        parsers = {
            "lr": float, "attention": lambda v: v.lower() not in ("off", "false", "0"),
        }
        for key, value in _read_config_file(config_file).items():
            if key not in TRAIN_DEFAULTS:
                raise UsageError(f"unknown train config key {key!r}")
            cfg[key] = parsers.get(key, int)(value)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    return cfg


def run_train(system, corpus_dir, out_dir, seed=DEFAULT_SEED, force=False,
              epochs=None, batch_size=None, lr=0.001, hidden=None, emb_dim=128,
              attention=True, max_len=80, lm_order=3, ibm_iters=10, max_phrase_len=7):
    if system not in ("smt", "nmt-word", "nmt-char"):
        raise UsageError(f"unknown system {system!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cp = _load_corpus_dir(corpus_dir)

    artifacts = ["phrase-table.txt", "lm.arpa"] if system == "smt" else ["model.ckpt"]
    _guard_overwrite([out / a for a in artifacts], force)
    cfg = {
        "system": system, "corpus_dir": str(corpus_dir), "epochs": epochs,
        "batch_size": batch_size, "lr": lr, "hidden": hidden, "emb_dim": emb_dim,
        "attention": attention, "max_len": max_len, "lm_order": lm_order,
        "ibm_iters": ibm_iters, "max_phrase_len": max_phrase_len,
    }
    _write_manifest(out, "train", cfg,
                    [Path(corpus_dir) / "corpus.src", Path(corpus_dir) / "corpus.tgt"],
                    artifacts, seed)

    if system == "smt":
        _train_smt(cp, out, seed, lm_order, ibm_iters, max_phrase_len)
        return

    if system == "nmt-word":
        tc = nmt.TrainConfig(
            lr=lr, epochs=epochs or 100, batch_size=batch_size or 256,
            seed=seed, max_len=max_len,
        )
        model = nmt.train_word_nmt(
            cp, tc, hidden=hidden or 256, emb_dim=emb_dim, attention=attention
        )
    else:
        tc = nmt.TrainConfig(
            lr=lr, epochs=epochs or 100, batch_size=batch_size or 64,
            seed=seed, max_len=max_len * 6,  # characters, not words
        )
        model = nmt.train_char_nmt(cp, tc, hidden=hidden or 256)
    with _atomic(out / "model.ckpt") as tmp:
        nmt.save_model(model, tmp)


# ----------------------------------------------------------------------
# translate

def _detect_model(model_path):
    p = Path(model_path)
    if p.is_dir():
        if (p / "phrase-table.txt").exists():
            return "smt", p
        if (p / "model.ckpt").exists():
            return "nmt", p / "model.ckpt"
        raise MiniMTError(f"{model_path} holds neither phrase-table.txt nor model.ckpt")
    with open(p, "rb") as fh:
        if fh.read(8) == b"MINIMT1\n":
            return "nmt", p
    raise MiniMTError(f"{model_path} is not a minimt model")


def run_translate(model_path, input_file, output_file, beam_size=100,
                  distortion_limit=6, max_len=80, trace_file=None):
    kind, path = _detect_model(model_path)
    lines = _read_lines(input_file)
    out_lines = []
    traces = []
    if kind == "smt":
        table = smt.PhraseTable.load(path / "phrase-table.txt")
        model_lm = lm_mod.NGramLM.load_arpa(path / "lm.arpa")
        cfg = smt.DecoderConfig(beam_size=beam_size, distortion_limit=distortion_limit)
        for i, line in enumerate(lines):
            words, score, trace = smt.decode(line.split(), table, model_lm, cfg)
            out_lines.append(" ".join(words))
            traces.append({"line": i, "score": score, "phrases": trace})
    else:
        model = nmt.load_model(path)
        for line in lines:
            if model.kind == "char":
                out_lines.append(nmt.translate_greedy(model, line, max_len * 6))
            else:
                out_lines.append(" ".join(nmt.translate_greedy(model, line.split(), max_len)))
    _write_lines(output_file, out_lines)
    if trace_file:
        if kind != "smt":
            raise UsageError("--trace is only available for SMT models")
        _write_lines(trace_file, [json.dumps(t, sort_keys=True) for t in traces])
    return out_lines


# ----------------------------------------------------------------------
# evaluate

def run_evaluate(ref_file, hyp_file, metric_names=VALID_METRICS, out_json=None, out_csv=None):
    bad = [m for m in metric_names if m not in VALID_METRICS]
    if bad:
        raise UsageError(
            f"unknown metric(s) {', '.join(bad)}; valid metrics: {', '.join(VALID_METRICS)}"
        )
    refs = [line.split() for line in _read_lines(ref_file)]
    hyps = [line.split() for line in _read_lines(hyp_file)]
    if len(refs) != len(hyps):
        raise MiniMTError(f"{ref_file} has {len(refs)} lines, {hyp_file} has {len(hyps)}")
    report = {}
    if "bleu" in metric_names:
        report["bleu"] = metrics.bleu(refs, hyps).as_dict()
    if "ter" in metric_names:
        report["ter"] = metrics.corpus_ter(refs, hyps).as_dict()
    if out_json:
        _write_json(out_json, report)
    if out_csv:
        rows = ["metric,value"]
        for name in metric_names:
            rows.append(f"{name},{report[name]['score']}")
        _write_lines(out_csv, rows)
    return report


# ----------------------------------------------------------------------
# compare

COMPARE_DEFAULTS = {
    "src_file": str(data_mod.data_path("synthetic.en")),
    "tgt_file": str(data_mod.data_path("synthetic.rv")),
    "chunks_file": str(data_mod.data_path("synthetic.chunks")),
    "rules_file": str(data_mod.data_path("synthetic.rules")),
    "labels_file": "",
    "simple_method": "rules",
    "allow_fallback": "true",
    "systems": ",".join(SYSTEMS),
    "eval_on": "train",
    "max_len": "80",
    "max_eval": "0",
    "smt_lm_order": "3",
    "smt_ibm_iters": "10",
    "smt_beam": "50",
    "smt_distortion": "6",
    "smt_max_phrase": "7",
    "wnmt_epochs": "40",
    "wnmt_hidden": "48",
    "wnmt_emb": "32",
    "wnmt_batch": "32",
    "wnmt_lr": "0.002",
    "cnmt_epochs": "30",
    "cnmt_hidden": "48",
    "cnmt_batch": "64",
    "cnmt_lr": "0.002",
}


def _compare_config(config_file, overrides):
    cfg = dict(COMPARE_DEFAULTS)
    if config_file:
        file_cfg = _read_config_file(config_file)
        unknown = set(file_cfg) - set(COMPARE_DEFAULTS) - {"seed"}
        if unknown:
            raise UsageError(f"unknown compare config keys: {', '.join(sorted(unknown))}")
        cfg.update(file_cfg)
    for item in overrides or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key not in COMPARE_DEFAULTS and key != "seed":
            raise UsageError(f"unknown compare config key {key!r}")
        cfg[key] = value
    return cfg


def render_grid(report) -> str:
    lines = []
    header = f"{'system':10s}"
    for c in CORPORA:
        header += f" | {c + ' BLEU':>12s} {c + ' TER':>12s}"
    lines.append(header)
    lines.append("-" * len(header))
    for system in SYSTEMS:
        row = f"{system:10s}"
        for c in CORPORA:
            cell = report["grid"][c][system]
            if cell.get("missing"):
                row += f" | {'missing':>12s} {'missing':>12s}"
            else:
                row += f" | {cell['bleu']:12.2f} {cell['ter']:12.2f}"
        lines.append(row)
    for c in CORPORA:
        w = report["winners"][c]
        lines.append(
            f"{c}: best BLEU = {w['bleu'] or 'n/a'}, best TER = {w['ter'] or 'n/a'}"
        )
    return "\n".join(lines)


def run_compare(out_dir, config_file=None, overrides=None, seed=DEFAULT_SEED, force=False):
    cfg = _compare_config(config_file, overrides)
    seed = int(cfg.get("seed", seed))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    systems = [s.strip() for s in cfg["systems"].split(",") if s.strip()]
    bad = [s for s in systems if s not in SYSTEMS]
    if bad:
        raise UsageError(f"unknown systems: {', '.join(bad)}")

    inputs = [cfg["src_file"], cfg["tgt_file"]]
    _write_manifest(out, "compare", cfg, inputs, ["report.json", "report.txt"], seed)

    run_preprocess(cfg["src_file"], cfg["tgt_file"], out / "whole",
                   max_len=int(cfg["max_len"]), seed=seed)
    run_extract_simple(
        out / "whole", out / "simple", method=cfg["simple_method"],
        chunks_file=cfg["chunks_file"] or None,
        allow_fallback=cfg["allow_fallback"].lower() == "true",
        rules_file=cfg["rules_file"] or None,
        labels_file=cfg["labels_file"] or None,
        seed=seed,
    )

    grid = {c: {s: {"missing": True} for s in SYSTEMS} for c in CORPORA}
    errors = {}
    for corp in CORPORA:
        corpus_dir = out / corp
        eval_src = _read_lines(corpus_dir / "corpus.src")
        eval_ref = _read_lines(corpus_dir / "corpus.tgt")
        if cfg["eval_on"] == "test":
            cp = _load_corpus_dir(corpus_dir)
            _, _, test = corpus_mod.split(cp, (0.8, 0.1, 0.1), seed)
            eval_src = [s.text() for s in test.sources]
            eval_ref = [t.text() for t in test.targets]
        limit = int(cfg["max_eval"])
        if limit:
            eval_src, eval_ref = eval_src[:limit], eval_ref[:limit]
        src_path = out / f"eval.{corp}.src"
        ref_path = out / f"eval.{corp}.ref"
        _write_lines(src_path, eval_src)
        _write_lines(ref_path, eval_ref)

        for system in systems:
            model_dir = out / "models" / f"{corp}_{system}"
            hyp_path = out / f"eval.{corp}.{system}.hyp"
            try:
                if system == "smt":
                    run_train("smt", corpus_dir, model_dir, seed=seed, force=force,
                              lm_order=int(cfg["smt_lm_order"]),
                              ibm_iters=int(cfg["smt_ibm_iters"]),
                              max_phrase_len=int(cfg["smt_max_phrase"]))
                    run_translate(model_dir, src_path, hyp_path,
                                  beam_size=int(cfg["smt_beam"]),
                                  distortion_limit=int(cfg["smt_distortion"]))
                elif system == "cnmt":
                    run_train("nmt-char", corpus_dir, model_dir, seed=seed, force=force,
                              epochs=int(cfg["cnmt_epochs"]), batch_size=int(cfg["cnmt_batch"]),
                              lr=float(cfg["cnmt_lr"]), hidden=int(cfg["cnmt_hidden"]),
                              max_len=int(cfg["max_len"]))
                    run_translate(model_dir, src_path, hyp_path, max_len=int(cfg["max_len"]))
                else:
                    run_train("nmt-word", corpus_dir, model_dir, seed=seed, force=force,
                              epochs=int(cfg["wnmt_epochs"]), batch_size=int(cfg["wnmt_batch"]),
                              lr=float(cfg["wnmt_lr"]), hidden=int(cfg["wnmt_hidden"]),
                              emb_dim=int(cfg["wnmt_emb"]),
                              attention=(system == "wnmt_a"), max_len=int(cfg["max_len"]))
                    run_translate(model_dir, src_path, hyp_path, max_len=int(cfg["max_len"]))
                rep = run_evaluate(ref_path, hyp_path)
                grid[corp][system] = {
                    "bleu": rep["bleu"]["score"], "ter": rep["ter"]["score"],
                    "missing": False,
                }
            except MiniMTError as exc:
                errors[f"{corp}/{system}"] = str(exc)

    winners = {}
    for corp in CORPORA:
        present = {s: c for s, c in grid[corp].items() if not c.get("missing")}
        winners[corp] = {
            "bleu": max(present, key=lambda s: present[s]["bleu"]) if present else None,
            "ter": min(present, key=lambda s: present[s]["ter"]) if present else None,
        }
    report = {"grid": grid, "winners": winners, "errors": errors, "seed": seed}
    _write_json(out / "report.json", report)
    _write_lines(out / "report.txt", render_grid(report).splitlines())
    complete = all(
        not grid[c][s].get("missing") for c in CORPORA for s in SYSTEMS
    )
    return report, (0 if complete else 3)


# ----------------------------------------------------------------------
# argument wiring

def _build_parser() -> _Parser:
    p = _Parser(prog="minimt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("preprocess", help="tokenize, truecase, clean, build vocabs")
    sp.add_argument("src_file")
    sp.add_argument("tgt_file")
    sp.add_argument("out_dir")
    sp.add_argument("--max-len", type=int, default=80)
    sp.add_argument("--min-count", type=int, default=1)
    sp.add_argument("--src-lang", default="src")
    sp.add_argument("--tgt-lang", default="tgt")
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("extract-simple", help="keep pairs with simple source sentences")
    sp.add_argument("corpus_dir")
    sp.add_argument("out_dir")
    sp.add_argument("--method", choices=("rules", "ffnn"), default="rules")
    sp.add_argument("--chunks")
    sp.add_argument("--allow-fallback", action="store_true")
    sp.add_argument("--rules")
    sp.add_argument("--labels")
    sp.add_argument("--ffnn-epochs", type=int, default=100)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("train", help="train smt, nmt-word or nmt-char")
    sp.add_argument("system", choices=("smt", "nmt-word", "nmt-char"))
    sp.add_argument("corpus_dir")
    sp.add_argument("out_dir")
    sp.add_argument("--config", help="key=value file layered under the flags")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--emb-dim", type=int)
    sp.add_argument("--attention", choices=("on", "off"))
    sp.add_argument("--max-len", type=int)
    sp.add_argument("--lm-order", type=int)
    sp.add_argument("--ibm-iters", type=int)
    sp.add_argument("--max-phrase-len", type=int)

    sp = sub.add_parser("translate", help="translate a file line by line")
    sp.add_argument("model")
    sp.add_argument("input_file")
    sp.add_argument("output_file")
    sp.add_argument("--beam-size", type=int, default=100)
    sp.add_argument("--distortion-limit", type=int, default=6)
    sp.add_argument("--max-len", type=int, default=80)
    sp.add_argument("--trace", help="write per-sentence SMT decoder traces (JSON lines)")

    sp = sub.add_parser("evaluate", help="score hypotheses against references")
    sp.add_argument("ref_file")
    sp.add_argument("hyp_file")
    sp.add_argument("--metrics", default="bleu,ter")
    sp.add_argument("--out")
    sp.add_argument("--csv")

    sp = sub.add_parser("rate-sheet", help="write a blind manual-rating sheet")
    sp.add_argument("source_file")
    sp.add_argument("hyp_file")
    sp.add_argument("out_csv")
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("rate-aggregate", help="aggregate filled rating sheets")
    sp.add_argument("ratings_csv")
    sp.add_argument("--out")

    sp = sub.add_parser("compare", help="train and evaluate the full 4x2 grid")
    sp.add_argument("out_dir")
    sp.add_argument("--config")
    sp.add_argument("--set", action="append", dest="overrides", metavar="KEY=VALUE")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--from-json", help="re-render a saved report without running")
    return p


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "preprocess":
        cp = run_preprocess(args.src_file, args.tgt_file, args.out_dir,
                            args.max_len, args.min_count, args.src_lang,
                            args.tgt_lang, _resolve_seed(args.seed))
        print(f"kept {len(cp)} pairs")
        return 0
    if cmd == "extract-simple":
        counts = run_extract_simple(
            args.corpus_dir, args.out_dir, args.method, args.chunks,
            args.allow_fallback, args.rules, args.labels,
            _resolve_seed(args.seed), args.ffnn_epochs,
        )
        print(json.dumps(counts, sort_keys=True))
        return 0
    if cmd == "train":
        cfg = _layer_train_config(args.config, {
            "epochs": args.epochs, "batch_size": args.batch_size, "lr": args.lr,
            "hidden": args.hidden, "emb_dim": args.emb_dim,
            "attention": None if args.attention is None else args.attention == "on",
            "max_len": args.max_len, "lm_order": args.lm_order,
            "ibm_iters": args.ibm_iters, "max_phrase_len": args.max_phrase_len,
        })
        run_train(args.system, args.corpus_dir, args.out_dir,
                  _resolve_seed(args.seed), args.force, **cfg)
        print(f"trained {args.system} -> {args.out_dir}")
        return 0
    if cmd == "translate":
        lines = run_translate(args.model, args.input_file, args.output_file,
                              args.beam_size, args.distortion_limit, args.max_len,
                              args.trace)
        print(f"translated {len(lines)} lines -> {args.output_file}")
        return 0
    if cmd == "evaluate":
        names = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
        report = run_evaluate(args.ref_file, args.hyp_file, names, args.out, args.csv)
        print(json.dumps({k: v["score"] for k, v in report.items()}, sort_keys=True))
        return 0
    if cmd == "rate-sheet":
        sources = _read_lines(args.source_file)
        hyps = _read_lines(args.hyp_file)
        with _atomic(args.out_csv) as tmp:
            metrics.make_rating_sheet(sources, hyps, tmp, _resolve_seed(args.seed))
        print(f"wrote {args.out_csv}")
        return 0
    if cmd == "rate-aggregate":
        summary = metrics.aggregate_ratings(metrics.read_ratings(args.ratings_csv))
        if args.out:
            _write_json(args.out, summary)
        print(json.dumps(summary, sort_keys=True))
        return 0
    if cmd == "compare":
        if args.from_json:
            with open(args.from_json, encoding="utf-8") as fh:
                report = json.load(fh)
            print(render_grid(report))
            return 0 if not report.get("errors") else 3
        report, code = run_compare(args.out_dir, args.config, args.overrides,
                                   _resolve_seed(args.seed), args.force)
        print(render_grid(report))
        return code
    raise UsageError(f"unknown command {cmd!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except MiniMTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
