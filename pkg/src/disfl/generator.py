"""Seeded generator of goal-oriented restaurant dialogues with disfluencies.

Dialogues follow a slot-filling script (request, clarification questions,
answers).  Each user turn independently receives, with configured
probabilities, up to one of each phenomenon:

* hesitation: a single filler token inserted between words, tagged edit;
* restart: a prefix of the utterance (clausal) or of a prepositional phrase
  is spoken once or twice before the real one, with optional fillers in
  between, producing chained substitution structures whose repair text equals
  the reparandum text;
* correction: a wrong slot value (plus an interregnum such as "sorry") is
  spoken before the intended one, short distance on the value token itself or
  long distance over the enclosing prepositional phrase.

The generator records exact repair spans and edit positions as it edits the
token sequence, renders gold tags from them, and keeps the pre-disfluency
token list on each user utterance so cleaning can be verified exactly.
Identical seeds yield byte-identical corpora; each dialogue draws from its
own sub-generator seeded by (master seed, dialogue index).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Dialogue, Token, Utterance
from .tags import (
    FLUENT,
    MAX_RETRACE,
    RepairKind,
    RepairStructure,
    clean_utterance,
    resolve_structures,
    structures_to_tags,
)


class GeneratorConfigError(ValueError):
    pass


# Closed POS lexicon for all template words, slot fillers, and fillers.
LEXICON = {
    "i": "PRP", "would": "MD", "like": "VB", "to": "TO", "book": "VB",
    "a": "DT", "table": "NN", "with": "IN", "cuisine": "NN", "food": "NN",
    "in": "IN", "price": "NN", "range": "NN", "can": "MD", "you": "PRP",
    "make": "VB", "restaurant": "NN", "reservation": "NN", "for": "IN",
    "people": "NNS", "please": "UH", "we": "PRP", "will": "MD", "be": "VB",
    "am": "VBP", "looking": "VBG", "may": "MD", "have": "VB",
    "hello": "UH", "what": "WP", "help": "VB", "today": "NN",
    "any": "DT", "preference": "NN", "on": "IN", "type": "NN", "of": "IN",
    "where": "WRB", "should": "MD", "it": "PRP", "how": "WRB", "many": "JJ",
    "your": "PRP$", "party": "NN", "which": "WDT", "are": "VBP",
    "ok": "UH", "let": "VB", "me": "PRP", "look": "VB", "into": "IN",
    "some": "DT", "options": "NNS",
    # fillers and interregnum words
    "uh": "UH", "uhm": "UH", "um": "UH", "yeah": "UH", "sorry": "UH",
    "no": "UH", "oh": "UH", "mean": "VBP",
    # slot fillers
    "british": "JJ", "french": "JJ", "indian": "JJ", "italian": "JJ",
    "spanish": "JJ", "cantonese": "JJ",
    "london": "NNP", "paris": "NNP", "madrid": "NNP", "rome": "NNP",
    "bombay": "NNP",
    "cheap": "JJ", "moderate": "JJ", "expensive": "JJ",
    "two": "CD", "four": "CD", "six": "CD", "eight": "CD",
}


def _pos(word: str) -> str:
    return LEXICON.get(word, "UH")


PosToken = tuple[str, str]


def _tokens(text: str) -> tuple[PosToken, ...]:
    return tuple((w, _pos(w)) for w in text.split())


SLOT_ORDER = ("cuisine", "location", "party", "price")

SLOT_FILLERS: dict[str, tuple[str, ...]] = {
    "cuisine": ("british", "french", "indian", "italian", "spanish", "cantonese"),
    "location": ("london", "paris", "madrid", "rome", "bombay"),
    "party": ("two", "four", "six", "eight"),
    "price": ("cheap", "moderate", "expensive"),
}


@dataclass(frozen=True)
class Template:
    """User-turn pattern: words with {slot} placeholders, [..] marking PPs."""

    pattern: str
    words: tuple[str, ...] = ()
    slots: tuple[tuple[int, str], ...] = ()       # (token position, slot name)
    pp_spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        words, slots, pps = _parse_pattern(self.pattern)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "pp_spans", pps)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(name for _, name in self.slots)


def _parse_pattern(pattern: str) -> tuple[tuple, tuple, tuple]:
    words: list[str] = []
    slots: list[tuple[int, str]] = []
    pps: list[tuple[int, int]] = []
    open_at: int | None = None
    for raw in pattern.split():
        chunk = raw
        if chunk.startswith("["):
            if open_at is not None:
                raise GeneratorConfigError(f"nested [ in pattern {pattern!r}")
            open_at = len(words)
            chunk = chunk[1:]
        closes = chunk.endswith("]")
        if closes:
            chunk = chunk[:-1]
        m = re.fullmatch(r"\{(\w+)\}", chunk)
        if m:
            slots.append((len(words), m.group(1)))
            words.append(chunk)
        else:
            words.append(chunk)
        if closes:
            if open_at is None:
                raise GeneratorConfigError(f"unmatched ] in pattern {pattern!r}")
            pps.append((open_at, len(words)))
            open_at = None
    if open_at is not None:
        raise GeneratorConfigError(f"unclosed [ in pattern {pattern!r}")
    return tuple(words), tuple(slots), tuple(pps)


@dataclass(frozen=True)
class TemplateSet:
    name: str
    requests: tuple[Template, ...]
    answers: dict[str, tuple[Template, ...]]
    questions: dict[str, tuple[PosToken, ...]]
    greeting: tuple[PosToken, ...]
    closing: tuple[PosToken, ...]
    slot_fillers: dict[str, tuple[str, ...]] = field(default_factory=lambda: dict(SLOT_FILLERS))

    def __post_init__(self):
        for slot, fillers in self.slot_fillers.items():
            if len(fillers) < 2:
                raise GeneratorConfigError(f"slot {slot!r} needs at least 2 fillers")


DEFAULT_TEMPLATES = TemplateSet(
    name="default",
    requests=(
        Template("i would like to book a table [with {cuisine} cuisine] [in a {price} price range]"),
        Template("can you make a restaurant reservation [for {party} people] [with {cuisine} cuisine] [in a {price} price range]"),
        Template("can you book a table [in {location}] [for {party} people]"),
        Template("i am looking [for a {price} restaurant] [with {cuisine} food]"),
        Template("may i have a table [in {location}] [with {cuisine} food]"),
    ),
    answers={
        "cuisine": (
            Template("[with {cuisine} cuisine] please"),
            Template("[with {cuisine} food] please"),
        ),
        "location": (
            Template("[in {location}] please"),
            Template("a table [in {location}] please"),
        ),
        "party": (
            Template("[for {party} people] please"),
            Template("we will be {party}"),
        ),
        "price": (
            Template("[in a {price} price range] please"),
            Template("i am looking [for a {price} restaurant]"),
        ),
    },
    questions={
        "cuisine": _tokens("any preference on a type of cuisine"),
        "location": _tokens("where should it be"),
        "party": _tokens("how many people would be in your party"),
        "price": _tokens("which price range are you looking for"),
    },
    greeting=_tokens("hello what can i help you with today"),
    closing=_tokens("ok let me look into some options for you"),
)

TEMPLATE_SETS = {"default": DEFAULT_TEMPLATES}


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_dialogues: int = 100
    p_hesitation: float = 0.40
    p_correction: float = 0.21
    p_restart: float = 0.05
    restart_split: float = 0.5          # share of restarts rebuilt from the utterance start
    fillers: tuple[str, ...] = ("uh", "uhm", "um")
    correction_interregna: tuple[tuple[str, ...], ...] = (
        ("sorry",), ("no", "sorry"), ("oh", "no"), ("i", "mean"),
    )
    restart_interregna: tuple[tuple[str, ...], ...] = (
        (), ("uh",), ("um",), ("uhm", "yeah"),
    )
    template_set: str = "default"

    def __post_init__(self):
        for name in ("p_hesitation", "p_correction", "p_restart", "restart_split"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise GeneratorConfigError(f"{name} must be in [0, 1], got {v}")
        if self.n_dialogues < 0:
            raise GeneratorConfigError("n_dialogues must be >= 0")
        if not self.fillers:
            raise GeneratorConfigError("filler lexicon must not be empty")
        if any(len(seq) == 0 for seq in self.correction_interregna):
            raise GeneratorConfigError("correction interregna must be non-empty sequences")
        if any(len(seq) > MAX_RETRACE - 1 for seq in self.correction_interregna):
            raise GeneratorConfigError("correction interregna too long for the retrace bound")
        if self.template_set not in TEMPLATE_SETS:
            raise GeneratorConfigError(f"unknown template set {self.template_set!r}")

    def templates(self) -> TemplateSet:
        return TEMPLATE_SETS[self.template_set]

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["fillers"] = list(self.fillers)
        d["correction_interregna"] = [list(s) for s in self.correction_interregna]
        d["restart_interregna"] = [list(s) for s in self.restart_interregna]
        return d

    @classmethod
    def from_json_dict(cls, obj: dict) -> "GeneratorConfig":
        kw = dict(obj)
        for key in ("fillers",):
            if key in kw:
                kw[key] = tuple(kw[key])
        for key in ("correction_interregna", "restart_interregna"):
            if key in kw:
                kw[key] = tuple(tuple(s) for s in kw[key])
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise GeneratorConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kw)

    def hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


PRESETS: dict[str, dict] = {
    "mixed": {},
    "hesitations": {"p_hesitation": 0.4, "p_correction": 0.0, "p_restart": 0.0},
    "pp-restarts": {"p_hesitation": 0.0, "p_correction": 0.0, "p_restart": 0.5,
                    "restart_split": 0.0},
    "cl-restarts": {"p_hesitation": 0.0, "p_correction": 0.0, "p_restart": 0.5,
                    "restart_split": 1.0},
    "corrections": {"p_hesitation": 0.0, "p_correction": 0.5, "p_restart": 0.0},
}


def preset_config(name: str, **overrides) -> GeneratorConfig:
    if name not in PRESETS:
        raise GeneratorConfigError(f"unknown preset {name!r} (have {sorted(PRESETS)})")
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return GeneratorConfig(**kw)


def _pick(rng: np.random.Generator, seq: Sequence):
    return seq[int(rng.integers(0, len(seq)))]


class WorkingUtterance:
    """Mutable user utterance under construction, with span bookkeeping.

    Tracks tokens, repair structures, edit positions, current PP spans and
    slot occurrence positions.  ``insert`` shifts or extends every recorded
    span according to the insertion point, keeping recorded structures in
    sync with what tag resolution will later compute.
    """

    def __init__(self, tokens: Iterable[PosToken], pp_spans=(), slots=()):
        self.tokens: list[PosToken] = list(tokens)
        self.structures: list[RepairStructure] = []
        self.edits: set[int] = set()
        self.pp_spans: list[list[int]] = [list(s) for s in pp_spans]
        self.slots: list[dict] = [dict(s) for s in slots]  # {name, pos, word}
        self.fluent: tuple[PosToken, ...] = tuple(self.tokens)

    @classmethod
    def from_template(cls, template: Template, fills: dict[str, str]) -> "WorkingUtterance":
        tokens = []
        slots = []
        for i, w in enumerate(template.words):
            m = re.fullmatch(r"\{(\w+)\}", w)
            if m:
                name = m.group(1)
                word = fills[name]
                tokens.append((word, _pos(word)))
                slots.append({"name": name, "pos": i, "word": word})
            else:
                tokens.append((w, _pos(w)))
        return cls(tokens, pp_spans=template.pp_spans, slots=slots)

    def __len__(self):
        return len(self.tokens)

    def _shift_structure(self, s: RepairStructure, pos: int, width: int) -> RepairStructure:
        a, b, c, d, e, f = (s.reparandum_start, s.reparandum_end, s.interregnum_start,
                            s.interregnum_end, s.repair_start, s.repair_end)
        if pos <= a:
            a, b, c, d, e, f = (x + width for x in (a, b, c, d, e, f))
        elif pos < b:            # inside the reparandum; retrace grows
            b, c, d, e, f = (x + width for x in (b, c, d, e, f))
        elif pos <= d:           # at or inside the interregnum; retrace grows
            d, e, f = d + width, e + width, f + width
        elif pos < f:            # inside the repair
            f = f + width
        return RepairStructure(a, b, c, d, e, f, s.kind)

    def insert(self, pos: int, block: Sequence[PosToken], edit_offsets: Iterable[int] = ()):
        """Insert tokens at pos; edit_offsets are block-relative edit positions."""
        width = len(block)
        self.structures = [self._shift_structure(s, pos, width) for s in self.structures]
        self.edits = {e + width if e >= pos else e for e in self.edits}
        self.edits.update(pos + off for off in edit_offsets)
        for span in self.pp_spans:
            if pos <= span[0]:
                span[0] += width
                span[1] += width
            elif pos < span[1]:
                span[1] += width
        for slot in self.slots:
            if pos <= slot["pos"]:
                slot["pos"] += width
        self.tokens[pos:pos] = list(block)

    def add_structure(self, s: RepairStructure):
        self.structures.append(s)
        self.structures.sort(key=lambda x: x.repair_start)

    def zone_free(self, start: int, end: int) -> bool:
        """No recorded structure or edit touches [start, end)."""
        for s in self.structures:
            a, b = s.extent
            if start < b and a < end:
                return False
        return all(not start <= e < end for e in self.edits)

    def tags(self):
        return structures_to_tags(self.structures, len(self.tokens), self.edits)

    def to_utterance(self) -> Utterance:
        tags = self.tags()
        tokens = tuple(Token(w, p, tag) for (w, p), tag in zip(self.tokens, tags))
        return Utterance("usr", tokens, fluent=self.fluent)


# -- deterministic phenomenon builders (sampling wrappers follow) -----------


def insert_hesitation(w: WorkingUtterance, pos: int, filler: str):
    w.insert(pos, [(filler, _pos(filler))], edit_offsets=(0,))


def hesitation_positions(w: WorkingUtterance) -> list[int]:
    """Inter-word insertion points that keep recorded spans resolvable.

    Excluded: points inside or at the boundary of an interregnum (the filler
    would merge into it) and points that would push a retrace past the bound.
    """
    valid = []
    for p in range(1, len(w.tokens)):
        ok = True
        for s in w.structures:
            if s.interregnum_start <= p <= s.repair_start:
                ok = False
                break
            if s.reparandum_start < p < s.reparandum_end and s.retrace + 1 > MAX_RETRACE:
                ok = False
                break
        if ok:
            valid.append(p)
    return valid


def insert_clausal_restart(w: WorkingUtterance, break_pos: int, fillers: Sequence[str]):
    """Repeat tokens [0, break_pos) after optional fillers, from the start."""
    b, f = break_pos, len(fillers)
    if not 1 <= b < len(w.tokens):
        raise GeneratorConfigError(f"break position {b} out of range")
    if b + f > MAX_RETRACE:
        raise GeneratorConfigError(f"retrace {b + f} exceeds {MAX_RETRACE}")
    if not w.zone_free(0, b):
        raise GeneratorConfigError("restart region overlaps existing disfluencies")
    copy = list(w.tokens[0:b])
    block = copy + [(x, _pos(x)) for x in fillers]
    w.insert(0, block, edit_offsets=range(b, b + f))
    w.add_structure(
        RepairStructure(0, b, b, b + f, b + f, b + f + b, RepairKind.SUBSTITUTION)
    )


def insert_pp_restart(
    w: WorkingUtterance,
    pp_index: int,
    prefix_len: int,
    interregna: Sequence[Sequence[str]],
):
    """Duplicate a PP prefix len(interregna) times, chaining the structures.

    interregna[i] holds the fillers spoken after the i-th duplicate; the last
    repair is the original prefix itself.
    """
    a, b = w.pp_spans[pp_index]
    ell = prefix_len
    if not 1 <= ell <= b - a:
        raise GeneratorConfigError(f"prefix length {ell} out of range for PP [{a},{b})")
    if not w.zone_free(a, a + ell):
        raise GeneratorConfigError("PP prefix overlaps existing disfluencies")
    for fillers in interregna:
        if ell + len(fillers) > MAX_RETRACE:
            raise GeneratorConfigError("PP restart would exceed the retrace bound")
    prefix = list(w.tokens[a:a + ell])
    block: list[PosToken] = []
    edit_offsets: list[int] = []
    starts: list[tuple[int, int]] = []  # (copy start, fillers after)
    for fillers in interregna:
        starts.append((len(block), len(fillers)))
        block.extend(prefix)
        for x in fillers:
            edit_offsets.append(len(block))
            block.append((x, _pos(x)))
    w.insert(a, block, edit_offsets=edit_offsets)
    width = len(block)
    for i, (off, nfill) in enumerate(starts):
        rep_s = a + off
        rep_e = rep_s + ell
        int_e = rep_e + nfill
        if i + 1 < len(starts):
            next_off = starts[i + 1][0]
            repair_s = a + next_off
        else:
            repair_s = a + width  # the original prefix
        assert repair_s == int_e
        w.add_structure(
            RepairStructure(rep_s, rep_e, rep_e, int_e, repair_s, repair_s + ell,
                            RepairKind.SUBSTITUTION)
        )


def insert_correction(
    w: WorkingUtterance,
    slot_index: int,
    wrong: str,
    interregnum: Sequence[str],
    long_distance: bool,
):
    """Speak a wrong slot value plus interregnum before the intended one.

    Short distance inserts [wrong, interregnum...] before the value token;
    long distance repeats the whole enclosing PP with the wrong value.
    """
    slot = w.slots[slot_index]
    q = slot["pos"]
    k = len(interregnum)
    if wrong == slot["word"]:
        raise GeneratorConfigError("correction must use a different filler")
    inter = [(x, _pos(x)) for x in interregnum]
    if long_distance:
        pp = next((span for span in w.pp_spans if span[0] <= q < span[1]), None)
        if pp is None:
            raise GeneratorConfigError("slot is not inside a PP")
        a, b = pp
        ell = b - a
        if ell + k > MAX_RETRACE:
            raise GeneratorConfigError("long-distance correction exceeds the retrace bound")
        if not w.zone_free(a, b):
            raise GeneratorConfigError("PP overlaps existing disfluencies")
        copy = [
            ((wrong, _pos(wrong)) if i == q else w.tokens[i]) for i in range(a, b)
        ]
        block = copy + inter
        w.insert(a, block, edit_offsets=range(ell, ell + k))
        w.add_structure(
            RepairStructure(a, a + ell, a + ell, a + ell + k, a + ell + k,
                            a + 2 * ell + k, RepairKind.SUBSTITUTION)
        )
    else:
        if 1 + k > MAX_RETRACE:
            raise GeneratorConfigError("correction interregnum too long")
        if not w.zone_free(q, q + 1):
            raise GeneratorConfigError("slot token overlaps existing disfluencies")
        block = [(wrong, _pos(wrong))] + inter
        w.insert(q, block, edit_offsets=range(1, 1 + k))
        w.add_structure(
            RepairStructure(q, q + 1, q + 1, q + 1 + k, q + 1 + k, q + 2 + k,
                            RepairKind.SUBSTITUTION)
        )


# -- sampling wrappers -------------------------------------------------------

_ATTEMPTS = 10


def apply_hesitation(w: WorkingUtterance, rng: np.random.Generator,
                     config: GeneratorConfig) -> bool:
    positions = hesitation_positions(w)
    if not positions:
        return False
    pos = _pick(rng, positions)
    insert_hesitation(w, pos, _pick(rng, config.fillers))
    return True


def apply_cl_restart(w: WorkingUtterance, rng: np.random.Generator,
                     config: GeneratorConfig) -> bool:
    for _ in range(_ATTEMPTS):
        fillers = _pick(rng, config.restart_interregna)
        bmax = min(MAX_RETRACE - len(fillers), len(w.tokens) - 1)
        if bmax < 1:
            continue
        b = int(rng.integers(1, bmax + 1))
        if not w.zone_free(0, b):
            continue
        insert_clausal_restart(w, b, fillers)
        return True
    return False


def apply_pp_restart(w: WorkingUtterance, rng: np.random.Generator,
                     config: GeneratorConfig) -> bool:
    if not w.pp_spans:
        return False
    for _ in range(_ATTEMPTS):
        idx = int(rng.integers(0, len(w.pp_spans)))
        a, b = w.pp_spans[idx]
        ell = int(rng.integers(1, min(2, b - a) + 1))
        n_copies = int(rng.integers(1, 3))
        interregna = []
        feasible = True
        for _ in range(n_copies):
            fillers = _pick(rng, config.restart_interregna)
            if ell + len(fillers) > MAX_RETRACE:
                feasible = False
                break
            interregna.append(tuple(fillers))
        if not feasible or not w.zone_free(a, a + ell):
            continue
        insert_pp_restart(w, idx, ell, interregna)
        return True
    return False


def apply_correction(w: WorkingUtterance, rng: np.random.Generator,
                     config: GeneratorConfig) -> bool:
    tset = config.templates()
    for _ in range(_ATTEMPTS):
        if not w.slots:
            return False
        slot_index = int(rng.integers(0, len(w.slots)))
        slot = w.slots[slot_index]
        fillers = [x for x in tset.slot_fillers[slot["name"]] if x != slot["word"]]
        if not fillers:
            continue
        wrong = _pick(rng, fillers)
        interregnum = _pick(rng, config.correction_interregna)
        q = slot["pos"]
        in_pp = any(span[0] <= q < span[1] for span in w.pp_spans)
        long_distance = bool(in_pp and rng.random() < 0.5)
        if long_distance:
            pp = next(span for span in w.pp_spans if span[0] <= q < span[1])
            if (pp[1] - pp[0]) + len(interregnum) > MAX_RETRACE or not w.zone_free(*pp):
                long_distance = False
        if not long_distance and not w.zone_free(q, q + 1):
            continue
        insert_correction(w, slot_index, wrong, interregnum, long_distance)
        return True
    return False


PHENOMENA = ("hesitation", "correction", "restart")


def _apply_phenomena(w: WorkingUtterance, rng: np.random.Generator,
                     config: GeneratorConfig, counters: dict) -> None:
    # Order matters for span bookkeeping: corrections on the pristine
    # utterance, then restarts, then hesitations anywhere valid.
    todo = {
        "correction": rng.random() < config.p_correction,
        "restart": rng.random() < config.p_restart,
        "hesitation": rng.random() < config.p_hesitation,
    }
    clausal = rng.random() < config.restart_split
    if todo["correction"]:
        counters["correction"]["sampled"] += 1
        if apply_correction(w, rng, config):
            counters["correction"]["applied"] += 1
    if todo["restart"]:
        counters["restart"]["sampled"] += 1
        applied = (
            apply_cl_restart(w, rng, config)
            if clausal
            else apply_pp_restart(w, rng, config)
        )
        if applied:
            counters["restart"]["applied"] += 1
    if todo["hesitation"]:
        counters["hesitation"]["sampled"] += 1
        if apply_hesitation(w, rng, config):
            counters["hesitation"]["applied"] += 1


def _sys_utterance(tokens: Sequence[PosToken]) -> Utterance:
    return Utterance("sys", tuple(Token(w, p, FLUENT) for w, p in tokens))


def _gen_dialogue(index: int, config: GeneratorConfig, counters: dict) -> Dialogue:
    rng = np.random.default_rng([config.seed, index])
    tset = config.templates()
    utts: list[Utterance] = [_sys_utterance(tset.greeting)]

    request = _pick(rng, tset.requests)
    fills = {name: _pick(rng, tset.slot_fillers[name]) for name in request.slot_names}
    w = WorkingUtterance.from_template(request, fills)
    counters["user_turns"] += 1
    _apply_phenomena(w, rng, config, counters)
    utts.append(w.to_utterance())

    for slot in SLOT_ORDER:
        if slot in request.slot_names:
            continue
        utts.append(_sys_utterance(tset.questions[slot]))
        answer = _pick(rng, tset.answers[slot])
        w = WorkingUtterance.from_template(answer, {slot: _pick(rng, tset.slot_fillers[slot])})
        counters["user_turns"] += 1
        _apply_phenomena(w, rng, config, counters)
        utts.append(w.to_utterance())

    utts.append(_sys_utterance(tset.closing))
    return Dialogue(f"d{index:05d}", tuple(utts))


def generate_corpus(config: GeneratorConfig, name: str = "") -> Corpus:
    counters = {
        "user_turns": 0,
        **{p: {"sampled": 0, "applied": 0} for p in PHENOMENA},
    }
    dialogues = tuple(_gen_dialogue(i, config, counters) for i in range(config.n_dialogues))
    skipped = {p: counters[p]["sampled"] - counters[p]["applied"] for p in PHENOMENA}
    meta = {
        "config": config.to_json_dict(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "user_turns": counters["user_turns"],
        "applied": {p: counters[p]["applied"] for p in PHENOMENA},
        "sampled": {p: counters[p]["sampled"] for p in PHENOMENA},
        "skipped": skipped,
    }
    return Corpus(dialogues, name=name, meta=meta)


# -- recount helpers (used by `inspect` and by rate tests) -------------------


def classify_utterance(utt: Utterance) -> set[str]:
    """Phenomena present in a gold-tagged utterance, recovered from its tags.

    A turn counts as hesitation if it has an edit token outside every
    interregnum, as a restart if some structure repeats its reparandum text
    verbatim, and as a correction if some structure changes the text.
    """
    tags = utt.tags
    if tags is None:
        return set()
    structures = resolve_structures(tags)
    words = utt.words
    found: set[str] = set()
    inter = set()

    def span_text(a, b):  # hesitations inside a span are edits, not span text
        return [words[k] for k in range(a, b) if not tags[k].is_edit]

    for s in structures:
        inter.update(range(s.interregnum_start, s.interregnum_end))
        rep = span_text(s.reparandum_start, s.reparandum_end)
        repair = span_text(s.repair_start, s.repair_end)
        found.add("restart" if rep == repair else "correction")
    if any(t.is_edit and i not in inter for i, t in enumerate(tags)):
        found.add("hesitation")
    return found


def phenomenon_rates(corpus: Corpus) -> dict[str, float]:
    """Per-user-turn phenomenon rates recounted from gold annotations."""
    turns = 0
    counts = {p: 0 for p in PHENOMENA}
    for utt in corpus.utterances():
        if utt.speaker != "usr":
            continue
        turns += 1
        for p in classify_utterance(utt):
            counts[p] += 1
    if turns == 0:
        return {p: 0.0 for p in PHENOMENA}
    return {p: counts[p] / turns for p in PHENOMENA}


def cleaned_matches_fluent(utt: Utterance) -> bool:
    """Does cleaning the gold annotation reproduce the stored fluent original?"""
    if utt.fluent is None:
        return True
    tags = utt.tags
    if tags is None:
        return False
    structures = resolve_structures(tags)
    edits = {i for i, t in enumerate(tags) if t.is_edit}
    kept = clean_utterance([(t.word, t.pos) for t in utt.tokens], structures, edits)
    return kept == list(utt.fluent)
