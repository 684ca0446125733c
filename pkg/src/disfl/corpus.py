"""Annotated dialogue data model, JSONL corpus I/O, vocabulary, class weights.

Corpus files are UTF-8 JSON lines, one dialogue per line::

    {"id": "d0007", "utterances": [{"speaker": "usr",
        "tokens": [{"w": "with", "p": "IN", "t": "<f/>"}, ...]}, ...]}

The "t" field is optional (untagged input).  User utterances produced by the
generator additionally carry a "fluent" field holding the pre-disfluency
token list, used for clean-up round trips.  A sidecar meta JSON file stores
the generator config and seed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .tags import (
    ALL_TAGS,
    TAG_INDEX,
    StructureError,
    Tag,
    TagParseError,
    parse_tag,
    render_tag,
    validate_tags,
)

SPEAKERS = ("usr", "sys")
COMBINE_SEP = "|"

PAD_ID, UNK_ID, EOS_ID = 0, 1, 2
RESERVED = ("<pad>", "<unk>", "<eos>")


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    word: str
    pos: str
    tag: Tag | None = None

    def __post_init__(self):
        if not self.word:
            raise CorpusFormatError("empty word")
        if COMBINE_SEP in self.word:
            raise CorpusFormatError(f"word may not contain {COMBINE_SEP!r}: {self.word!r}")
        if not self.pos:
            raise CorpusFormatError(f"empty POS tag for word {self.word!r}")

    @property
    def combined(self) -> str:
        return f"{self.word}{COMBINE_SEP}{self.pos}"


@dataclass(frozen=True)
class Utterance:
    speaker: str
    tokens: tuple[Token, ...]
    fluent: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise CorpusFormatError(f"speaker must be one of {SPEAKERS}, got {self.speaker!r}")

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.tokens]

    @property
    def tags(self) -> list[Tag] | None:
        """Gold tag sequence, or None unless every token is tagged."""
        tags = [t.tag for t in self.tokens]
        if any(t is None for t in tags):
            return None
        return tags

    def validate(self):
        tags = self.tags
        if tags is not None:
            validate_tags(tags)


@dataclass(frozen=True)
class Dialogue:
    id: str
    utterances: tuple[Utterance, ...]


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[Dialogue, ...]
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [d.id for d in self.dialogues]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise CorpusFormatError(f"duplicate dialogue id {dup!r}")

    def utterances(self) -> Iterator[Utterance]:
        for d in self.dialogues:
            yield from d.utterances

    def __len__(self):
        return len(self.dialogues)


def slice_dialogues(corpus: Corpus, start: int, stop: int, name: str | None = None) -> Corpus:
    return Corpus(corpus.dialogues[start:stop], name or corpus.name, dict(corpus.meta))


def _utterance_to_obj(utt: Utterance) -> dict:
    tokens = []
    for tok in utt.tokens:
        obj = {"w": tok.word, "p": tok.pos}
        if tok.tag is not None:
            obj["t"] = render_tag(tok.tag)
        tokens.append(obj)
    out = {"speaker": utt.speaker, "tokens": tokens}
    if utt.fluent is not None:
        out["fluent"] = [[w, p] for w, p in utt.fluent]
    return out


def _paths(path) -> tuple[Path, Path]:
    """Resolve a corpus target into (jsonl path, meta sidecar path)."""
    p = Path(path)
    if p.suffix == ".jsonl":
        return p, p.with_suffix(".meta.json")
    return p / "corpus.jsonl", p / "meta.json"


def write_corpus(corpus: Corpus, path) -> Path:
    """Write corpus JSONL plus its meta sidecar; returns the JSONL path.

    Output bytes are deterministic for equal corpora.
    """
    jsonl, meta_path = _paths(path)
    jsonl.parent.mkdir(parents=True, exist_ok=True)
    with open(jsonl, "w", encoding="utf-8") as fh:
        for d in corpus.dialogues:
            obj = {"id": d.id, "utterances": [_utterance_to_obj(u) for u in d.utterances]}
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump({"name": corpus.name, "meta": corpus.meta}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return jsonl


def _parse_utterance(obj: dict, where: str) -> Utterance:
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{where}: utterance must be an object")
    try:
        speaker = obj["speaker"]
        raw_tokens = obj["tokens"]
    except KeyError as exc:
        raise CorpusFormatError(f"{where}: missing field {exc.args[0]!r}") from None
    tokens = []
    for j, t in enumerate(raw_tokens):
        try:
            word, pos = t["w"], t["p"]
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{where}, token {j}: missing field 'w' or 'p'") from None
        tag = None
        if "t" in t and t["t"] is not None:
            try:
                tag = parse_tag(t["t"])
            except TagParseError as exc:
                raise CorpusFormatError(f"{where}, token {j}: {exc}") from None
        try:
            tokens.append(Token(word, pos, tag))
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"{where}, token {j}: {exc}") from None
    fluent = None
    if "fluent" in obj:
        fluent = tuple((w, p) for w, p in obj["fluent"])
    try:
        utt = Utterance(speaker, tuple(tokens), fluent)
        utt.validate()
    except (CorpusFormatError, StructureError) as exc:
        raise CorpusFormatError(f"{where}: {exc}") from None
    return utt


def read_corpus(path) -> Corpus:
    jsonl, meta_path = _paths(path)
    if not jsonl.exists() and Path(path).is_file():
        jsonl, meta_path = Path(path), Path(path).with_suffix(".meta.json")
    name, meta = "", {}
    if meta_path.exists():
        with open(meta_path, encoding="utf-8") as fh:
            head = json.load(fh)
        name = head.get("name", "")
        meta = head.get("meta", {})
    dialogues = []
    with open(jsonl, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if "id" not in obj:
                raise CorpusFormatError(f"line {lineno}: missing field 'id'")
            utts = tuple(
                _parse_utterance(u, f"line {lineno}, utterance {k}")
                for k, u in enumerate(obj.get("utterances", []))
            )
            dialogues.append(Dialogue(obj["id"], utts))
    return Corpus(tuple(dialogues), name, meta)


@dataclass(frozen=True)
class Vocabulary:
    """Combined word|POS vocabulary with reserved pad/unk/eos entries."""

    entries: tuple[str, ...]
    counts: tuple[int, ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.entries)})

    @property
    def size(self) -> int:
        return len(self.entries)

    def lookup(self, combined: str) -> int:
        return self._index.get(combined, UNK_ID)

    def id_of(self, word: str, pos: str) -> int:
        return self.lookup(f"{word}{COMBINE_SEP}{pos}")

    def render(self, token_id: int) -> str:
        return self.entries[token_id]


def build_vocabulary(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    """One entry per word|POS pair with count >= min_count, after the reserved ids.

    Order is deterministic: descending count, ties broken lexicographically.
    """
    counter: Counter[str] = Counter()
    for utt in corpus.utterances():
        counter.update(tok.combined for tok in utt.tokens)
    if not counter:
        raise CorpusFormatError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (item for item in counter.items() if item[1] >= min_count),
        key=lambda kv: (-kv[1], kv[0]),
    )
    entries = RESERVED + tuple(k for k, _ in kept)
    counts = (0,) * len(RESERVED) + tuple(c for _, c in kept)
    return Vocabulary(entries, counts)


def encode_utterance(vocab: Vocabulary, utterance: Utterance) -> list[int]:
    """Token ids for an utterance with the EOS id appended."""
    ids = [vocab.lookup(tok.combined) for tok in utterance.tokens]
    ids.append(EOS_ID)
    return ids


def decode_ids(vocab: Vocabulary, ids: Iterable[int]) -> list[str]:
    return [vocab.render(i) for i in ids]


def count_tags(corpus: Corpus) -> dict[Tag, int]:
    counter: Counter[Tag] = Counter()
    for utt in corpus.utterances():
        for tok in utt.tokens:
            if tok.tag is not None:
                counter[tok.tag] += 1
    return dict(counter)


def weights_from_counts(counts: Mapping, gamma: float) -> dict:
    """Inverse-frequency weights w = count ** -gamma for any count mapping."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    out = {}
    for key, c in counts.items():
        if c < 1:
            raise ValueError(f"class {key!r} has count {c}; counts must be >= 1")
        out[key] = float(c) ** -gamma
    return out


@dataclass(frozen=True)
class ClassWeights:
    """Per-tag loss weights; tags absent from the corpus get weight 0."""

    weights: dict
    gamma: float

    def vector(self, dtype=np.float64) -> np.ndarray:
        return np.array([self.weights.get(t, 0.0) for t in ALL_TAGS], dtype=dtype)

    def __getitem__(self, tag: Tag) -> float:
        return self.weights.get(tag, 0.0)


def class_weights(corpus: Corpus, gamma: float) -> ClassWeights:
    counts = count_tags(corpus)
    if not counts:
        raise ValueError("corpus has no gold tags; cannot derive class weights")
    present = weights_from_counts(counts, gamma)
    weights = {t: present.get(t, 0.0) for t in ALL_TAGS}
    return ClassWeights(weights, gamma)


def tag_indices(tags: Iterable[Tag]) -> list[int]:
    return [TAG_INDEX[t] for t in tags]
