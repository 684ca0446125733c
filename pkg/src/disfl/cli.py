"""Command-line pipeline: generate, train, tag, clean, eval, inspect.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric fault.
Every run is reproducible from its flags; seeds are echoed into outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import generator as gen
from .corpus import (
    Corpus,
    CorpusFormatError,
    Dialogue,
    Token,
    Utterance,
    read_corpus,
    write_corpus,
)
from .generator import GeneratorConfig, GeneratorConfigError, PRESETS, preset_config
from .metrics import RM_MATCH_MODES, evaluate
from .model import (
    Hyperparams,
    ModelFormatError,
    NumericFault,
    load_model,
    save_model,
)
from .tags import (
    StructureError,
    TagParseError,
    clean_utterance,
    render_tag,
    resolve_structures_lenient,
)
from .training import TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DATA_ERRORS = (
    CorpusFormatError,
    TagParseError,
    StructureError,
    GeneratorConfigError,
    ModelFormatError,
    FileNotFoundError,
    IsADirectoryError,
    json.JSONDecodeError,
    ValueError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="disfl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic annotated corpus")
    p.add_argument("--config", help="JSON file with generator config fields")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named phenomenon mix")
    p.add_argument("--dialogues", type=int)
    p.add_argument("--p-hesitation", type=float, dest="p_hesitation")
    p.add_argument("--p-correction", type=float, dest="p_correction")
    p.add_argument("--p-restart", type=float, dest="p_restart")
    p.add_argument("--restart-split", type=float, dest="restart_split")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory (or .jsonl path)")

    p = sub.add_parser("train", help="train a tagger")
    p.add_argument("--train", required=True, dest="train_path")
    p.add_argument("--dev", required=True, dest="dev_path")
    p.add_argument("--hyper", help="JSON file with hyperparameter overrides")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--report", help="training report path (default <out>.report.json)")

    p = sub.add_parser("tag", help="annotate a corpus or a token stream")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path")
    p.add_argument("--out", dest="out_path")
    p.add_argument("--stream", action="store_true",
                   help="read word|POS per line from stdin, write one tag per line")

    p = sub.add_parser("clean", help="tag a corpus and remove detected disfluencies")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)

    p = sub.add_parser("eval", help="score a model against gold annotations")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True, dest="test_path")
    p.add_argument("--report", required=True)
    p.add_argument("--rm-match", choices=RM_MATCH_MODES, default="rm-only",
                   dest="rm_match")

    p = sub.add_parser("inspect", help="print corpus label and phenomenon statistics")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--stats", action="store_true",
                   help="also print per-phenomenon user-turn percentages")
    return parser


def _cmd_generate(ns) -> int:
    flag_overrides = {
        key: getattr(ns, key)
        for key in ("p_hesitation", "p_correction", "p_restart", "restart_split", "seed")
        if getattr(ns, key) is not None
    }
    if ns.dialogues is not None:
        flag_overrides["n_dialogues"] = ns.dialogues
    if ns.config:
        if ns.preset or flag_overrides:
            raise UsageError("--config conflicts with --preset and per-field flags")
        with open(ns.config, encoding="utf-8") as fh:
            config = GeneratorConfig.from_json_dict(json.load(fh))
        name = "custom"
    else:
        name = ns.preset or "mixed"
        config = preset_config(name, **flag_overrides)
    corpus = gen.generate_corpus(config, name=name)
    path = write_corpus(corpus, ns.out)
    print(f"wrote {len(corpus)} dialogues to {path} (seed {config.seed})")
    return EXIT_OK


def _split_hyper_json(obj: dict, seed: int | None) -> tuple[Hyperparams, TrainConfig]:
    hyper_keys = set(Hyperparams.__dataclass_fields__) - {"vocab_size"}
    config_keys = set(TrainConfig.__dataclass_fields__)
    unknown = set(obj) - hyper_keys - config_keys
    if unknown:
        raise ValueError(f"unknown hyperparameter keys: {sorted(unknown)}")
    hyper_kw = {k: v for k, v in obj.items() if k in hyper_keys}
    if "head_dims" in hyper_kw:
        hyper_kw["head_dims"] = tuple(hyper_kw["head_dims"])
    config_kw = {k: v for k, v in obj.items() if k in config_keys}
    if seed is not None:
        hyper_kw["seed"] = seed
        config_kw["seed"] = seed
    return Hyperparams(vocab_size=1, **hyper_kw), TrainConfig(**config_kw)


def _cmd_train(ns) -> int:
    obj = {}
    if ns.hyper:
        with open(ns.hyper, encoding="utf-8") as fh:
            obj = json.load(fh)
    hyper, config = _split_hyper_json(obj, ns.seed)
    train_corpus = read_corpus(ns.train_path)
    dev_corpus = read_corpus(ns.dev_path)
    model, report = train(train_corpus, dev_corpus, hyper, config)
    save_model(model.params, model.hyper, model.vocab, ns.out)
    report_path = ns.report or f"{ns.out}.report.json"
    payload = report.to_dict()
    payload["args"] = {
        "train": ns.train_path, "dev": ns.dev_path, "hyper": ns.hyper,
        "out": ns.out, "seed": ns.seed,
    }
    Path(report_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    best = report.best_epoch
    print(f"trained {len(report.epochs)} epochs; best epoch {best} "
          f"(dev F_rm {report.best_dev_f_rm:.4f}); model at {ns.out}")
    return EXIT_OK


def _stream_tags(model, stdin, stdout) -> int:
    session = model.open_session()
    for line in stdin:
        text = line.strip()
        if not text:
            session.end_utterance()
            stdout.write("\n")
            stdout.flush()
            continue
        if "|" not in text:
            raise CorpusFormatError(f"malformed stream token {text!r} (expected word|POS)")
        word, pos = text.rsplit("|", 1)
        tag, _, _ = session.feed_word(word, pos)
        stdout.write(render_tag(tag) + "\n")
        stdout.flush()
    return EXIT_OK


def _retag_corpus(model, corpus: Corpus) -> Corpus:
    dialogues = []
    for d in corpus.dialogues:
        utts = []
        for utt in d.utterances:
            tags = model.tag_utterance(utt)
            tokens = tuple(Token(t.word, t.pos, tag) for t, tag in zip(utt.tokens, tags))
            utts.append(Utterance(utt.speaker, tokens))
        dialogues.append(Dialogue(d.id, tuple(utts)))
    return Corpus(tuple(dialogues), corpus.name, dict(corpus.meta))


def _cmd_tag(ns) -> int:
    model = load_model(ns.model)
    if ns.stream:
        if ns.in_path or ns.out_path:
            raise UsageError("--stream conflicts with --in/--out")
        return _stream_tags(model, sys.stdin, sys.stdout)
    if not ns.in_path or not ns.out_path:
        raise UsageError("tag needs --in and --out unless --stream is given")
    corpus = read_corpus(ns.in_path)
    write_corpus(_retag_corpus(model, corpus), ns.out_path)
    print(f"tagged {len(corpus)} dialogues into {ns.out_path}")
    return EXIT_OK


def _cmd_clean(ns) -> int:
    model = load_model(ns.model)
    corpus = read_corpus(ns.in_path)
    dialogues = []
    for d in corpus.dialogues:
        utts = []
        for utt in d.utterances:
            tags = model.tag_utterance(utt)
            structures, repaired, _ = resolve_structures_lenient(tags)
            edits = {i for i, t in enumerate(repaired) if t.is_edit}
            kept = clean_utterance(list(utt.tokens), structures, edits)
            tokens = tuple(Token(t.word, t.pos) for t in kept)
            if tokens:
                utts.append(Utterance(utt.speaker, tokens))
        dialogues.append(Dialogue(d.id, tuple(utts)))
    write_corpus(Corpus(tuple(dialogues), corpus.name, dict(corpus.meta)), ns.out_path)
    print(f"cleaned {len(corpus)} dialogues into {ns.out_path}")
    return EXIT_OK


def _cmd_eval(ns) -> int:
    model = load_model(ns.model)
    corpus = read_corpus(ns.test_path)
    report = evaluate(model, corpus, ns.rm_match)
    payload = report.to_dict()
    payload["args"] = {
        "model": ns.model, "test": ns.test_path, "rm_match": ns.rm_match,
    }
    Path(ns.report).parent.mkdir(parents=True, exist_ok=True)
    Path(ns.report).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    print(report.table())
    return EXIT_OK


LABEL_ROWS = (
    ("fluent token", lambda t: t.is_fluent),
    ("edit token", lambda t: t.is_edit),
    ("single-token substitution",
     lambda t: t.is_onset and t.marker.value == "rpEndSub"),
    ("single-token deletion",
     lambda t: t.is_onset and t.marker.value == "rpEndDel"),
    ("multi-token substitution start",
     lambda t: t.is_onset and t.marker.value == "rpMid"),
    ("multi-token substitution end", lambda t: t.is_end),
)


def _cmd_inspect(ns) -> int:
    corpus = read_corpus(ns.in_path)
    counts = {name: 0 for name, _ in LABEL_ROWS}
    total = 0
    for utt in corpus.utterances():
        for tok in utt.tokens:
            if tok.tag is None:
                continue
            total += 1
            for name, match in LABEL_ROWS:
                if match(tok.tag):
                    counts[name] += 1
                    break
    width = max(len(n) for n in counts)
    print(f"{len(corpus)} dialogues, {total} tagged tokens")
    for name, _ in LABEL_ROWS:
        print(f"{name:<{width}}  {counts[name]}")
    if ns.stats:
        rates = gen.phenomenon_rates(corpus)
        print("user-turn phenomenon rates:")
        for phen in gen.PHENOMENA:
            print(f"  {phen:<11} {rates[phen] * 100:.2f}%")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "tag": _cmd_tag,
    "clean": _cmd_clean,
    "eval": _cmd_eval,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        return _COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint():  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
