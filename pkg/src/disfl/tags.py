"""Disfluency tag scheme: parsing, rendering, and repair-structure resolution.

The scheme labels every token of an utterance with one of 27 tags:

* ``<f/>``                   fluent token
* ``<e/>``                   edit token (fillers and other edit-phase material)
* ``<rm-N/><rpEndSub/>``     single-token substitution repair whose reparandum
                             starts N tokens back (N in 1..8)
* ``<rm-N/><rpEndDel/>``     single-token deletion repair
* ``<rm-N/><rpMid/>``        start of a multi-token substitution repair
* ``<rpEndSub/>``            end of a multi-token substitution repair

That is 2 + 8*3 + 1 = 27 distinct labels.  A repair onset at token t with
retrace N marks a structure whose reparandum starts at t - N; the edit tokens
immediately preceding t form the interregnum, and the repair runs from t to
either t + 1 (EndSub/EndDel onsets) or one past the closing end tag (Mid
onsets).  There is no standalone deletion end tag, so multi-token deletion
repairs are not representable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

MAX_RETRACE = 8


class TagParseError(ValueError):
    """A tag string (or tag construction) is not part of the label inventory."""


class StructureError(ValueError):
    """A tag sequence or structure set violates the repair-span rules."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} (token {index})")
        self.index = index


class RetraceOverflowError(StructureError):
    """A structure would need a retrace larger than MAX_RETRACE."""


class TagKind(Enum):
    FLUENT = "fluent"
    EDIT = "edit"
    REPAIR_ONSET = "repair_onset"
    REPAIR_END = "repair_end"


class EndMarker(Enum):
    END_SUB = "rpEndSub"
    END_DEL = "rpEndDel"
    MID = "rpMid"


class RepairKind(Enum):
    SUBSTITUTION = "substitution"
    DELETION = "deletion"


@dataclass(frozen=True)
class Tag:
    kind: TagKind
    retrace: int | None = None
    marker: EndMarker | None = None

    def __post_init__(self):
        if self.kind is TagKind.REPAIR_ONSET:
            if self.retrace is None or not 1 <= self.retrace <= MAX_RETRACE:
                raise TagParseError(
                    f"retrace must be in 1..{MAX_RETRACE}, got {self.retrace!r}"
                )
            if self.marker is None:
                raise TagParseError("repair onset requires an end marker")
        elif self.retrace is not None or self.marker is not None:
            raise TagParseError(f"{self.kind.value} tag carries no retrace or marker")

    @property
    def is_fluent(self) -> bool:
        return self.kind is TagKind.FLUENT

    @property
    def is_edit(self) -> bool:
        return self.kind is TagKind.EDIT

    @property
    def is_onset(self) -> bool:
        return self.kind is TagKind.REPAIR_ONSET

    @property
    def is_end(self) -> bool:
        return self.kind is TagKind.REPAIR_END

    def __repr__(self):
        return f"Tag({render_tag(self)})"


FLUENT = Tag(TagKind.FLUENT)
EDIT = Tag(TagKind.EDIT)
REPAIR_END = Tag(TagKind.REPAIR_END)


def onset(retrace: int, marker: EndMarker) -> Tag:
    return Tag(TagKind.REPAIR_ONSET, retrace, marker)


# Canonical inventory order; index 0 is the fluent tag so that an untrained
# (all-zero) model argmaxes to fluent output.
ALL_TAGS: tuple[Tag, ...] = (
    (FLUENT, EDIT)
    + tuple(
        onset(n, m)
        for n in range(1, MAX_RETRACE + 1)
        for m in (EndMarker.END_SUB, EndMarker.END_DEL, EndMarker.MID)
    )
    + (REPAIR_END,)
)
TAG_INDEX: dict[Tag, int] = {t: i for i, t in enumerate(ALL_TAGS)}
NUM_TAGS = len(ALL_TAGS)
assert NUM_TAGS == 27


def render_tag(tag: Tag) -> str:
    """Canonical string for a tag; parse_tag inverts this for all 27 tags."""
    if tag.kind is TagKind.FLUENT:
        return "<f/>"
    if tag.kind is TagKind.EDIT:
        return "<e/>"
    if tag.kind is TagKind.REPAIR_END:
        return "<rpEndSub/>"
    return f"<rm-{tag.retrace}/><{tag.marker.value}/>"


_SIMPLE = {"f": FLUENT, "e": EDIT}
_MARKERS = {
    "rpEndSub": EndMarker.END_SUB,
    "rpEndDel": EndMarker.END_DEL,
    "rpMid": EndMarker.MID,
    # prose variants, canonicalized on parse
    "rpSub": EndMarker.END_SUB,
    "rpDel": EndMarker.END_DEL,
}
_ONSET_RE = re.compile(r"^<rm-(-?\d+)\s*/?>\s*<(\w+)\s*/?>$")
_SINGLE_RE = re.compile(r"^<(\w+)\s*/?>$")


def parse_tag(text: str) -> Tag:
    """Parse a tag string, accepting both canonical and prose end-marker names."""
    s = text.strip()
    m = _ONSET_RE.match(s)
    if m:
        number, marker_name = m.group(1), m.group(2)
        marker = _MARKERS.get(marker_name)
        if marker is None:
            raise TagParseError(f"unknown repair marker <{marker_name}/> in {text!r}")
        n = int(number)
        if not 1 <= n <= MAX_RETRACE:
            raise TagParseError(
                f"retrace out of range in {text!r}: rm-{n} (must be 1..{MAX_RETRACE})"
            )
        return onset(n, marker)
    m = _SINGLE_RE.match(s)
    if m:
        name = m.group(1)
        if name in _SIMPLE:
            return _SIMPLE[name]
        if name in ("rpEndSub", "rpSub"):
            return REPAIR_END
        if name in _MARKERS:
            raise TagParseError(f"<{name}/> cannot stand alone in {text!r}")
        raise TagParseError(f"unknown tag {text!r}")
    raise TagParseError(f"malformed tag {text!r}")


@dataclass(frozen=True)
class RepairStructure:
    """Resolved spans of one self-repair over a single utterance.

    All indices are token offsets, spans half-open.  The interregnum may be
    empty; reparandum and repair never are.  For deletion repairs the repair
    span still covers the onset token.
    """

    reparandum_start: int
    reparandum_end: int
    interregnum_start: int
    interregnum_end: int
    repair_start: int
    repair_end: int
    kind: RepairKind

    def __post_init__(self):
        ok = (
            0 <= self.reparandum_start < self.reparandum_end
            and self.reparandum_end <= self.interregnum_start
            and self.interregnum_start <= self.interregnum_end
            and self.interregnum_end == self.repair_start
            and self.repair_start < self.repair_end
        )
        if not ok:
            raise StructureError(f"inconsistent repair spans: {self.spans()}")

    def spans(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        return (
            (self.reparandum_start, self.reparandum_end),
            (self.interregnum_start, self.interregnum_end),
            (self.repair_start, self.repair_end),
        )

    @property
    def retrace(self) -> int:
        return self.repair_start - self.reparandum_start

    @property
    def extent(self) -> tuple[int, int]:
        """Full zone from reparandum start to repair end."""
        return (self.reparandum_start, self.repair_end)


def resolve_structures(tags: Sequence[Tag]) -> list[RepairStructure]:
    """Resolve one utterance's tag sequence into repair structures.

    Each onset at position t with retrace n opens a reparandum at t - n; the
    maximal run of edit tokens immediately before t is the interregnum.  Mid
    onsets stay open until the next end tag; tokens in between (fluent or
    edit) belong to the repair.  Raises StructureError, with the offending
    token index, for retraces past the utterance start, empty reparanda,
    nested onsets, unmatched end tags, and unclosed mid onsets.
    """
    structures: list[RepairStructure] = []
    open_mid: tuple[int, int, int] | None = None  # (rep_start, int_start, onset_pos)
    for t, tag in enumerate(tags):
        if tag.is_onset:
            if open_mid is not None:
                raise StructureError("repair onset inside an open multi-token repair", t)
            rep_start = t - tag.retrace
            if rep_start < 0:
                raise StructureError(
                    f"retrace {tag.retrace} reaches beyond the utterance start", t
                )
            int_start = t
            while int_start > 0 and tags[int_start - 1].is_edit:
                int_start -= 1
            if rep_start >= int_start:
                raise StructureError("reparandum is empty after removing the interregnum", t)
            if tag.marker is EndMarker.MID:
                open_mid = (rep_start, int_start, t)
            else:
                kind = (
                    RepairKind.SUBSTITUTION
                    if tag.marker is EndMarker.END_SUB
                    else RepairKind.DELETION
                )
                structures.append(
                    RepairStructure(rep_start, int_start, int_start, t, t, t + 1, kind)
                )
        elif tag.is_end:
            if open_mid is None:
                raise StructureError("repair end with no open multi-token repair", t)
            rep_start, int_start, onset_pos = open_mid
            structures.append(
                RepairStructure(
                    rep_start, int_start, int_start, onset_pos, onset_pos, t + 1,
                    RepairKind.SUBSTITUTION,
                )
            )
            open_mid = None
    if open_mid is not None:
        raise StructureError("multi-token repair never closed", open_mid[2])
    return structures


def resolve_structures_lenient(
    tags: Sequence[Tag],
) -> tuple[list[RepairStructure], list[Tag], int]:
    """Resolve a possibly invalid tag sequence by dropping offending tags.

    Each structural error flips the offending onset/end tag to fluent and
    retries.  Returns (structures, repaired tags, number of dropped tags).
    """
    work = list(tags)
    dropped = 0
    while True:
        try:
            return resolve_structures(work), work, dropped
        except StructureError as err:
            if err.index is None:  # pragma: no cover - resolution always indexes
                raise
            work[err.index] = FLUENT
            dropped += 1


def structures_to_tags(
    structures: Iterable[RepairStructure],
    length: int,
    edit_positions: Iterable[int] = (),
) -> list[Tag]:
    """Emit the unique tag sequence whose resolution reproduces ``structures``.

    Reparandum tokens are tagged fluent (they are fluent when spoken);
    ``edit_positions`` must cover every interregnum token and any standalone
    fillers.  Structures may chain (a reparandum may cover an earlier repair)
    but their interregnum-plus-repair regions must be disjoint and ordered.
    """
    edits = set(edit_positions)
    ordered = sorted(structures, key=lambda s: s.repair_start)
    tags = [FLUENT] * length

    prev_end = 0
    for s in ordered:
        if s.repair_end > length:
            raise StructureError(f"structure exceeds utterance length {length}: {s.spans()}")
        if s.retrace > MAX_RETRACE:
            raise RetraceOverflowError(
                f"retrace {s.retrace} exceeds {MAX_RETRACE}", s.repair_start
            )
        single = s.repair_end == s.repair_start + 1
        if s.kind is RepairKind.DELETION and not single:
            raise StructureError(
                "multi-token deletion repairs are not representable", s.repair_start
            )
        if s.interregnum_start < prev_end:
            raise StructureError(
                "overlapping interregnum/repair regions", s.interregnum_start
            )
        prev_end = s.repair_end
        missing = [p for p in range(s.interregnum_start, s.interregnum_end) if p not in edits]
        if missing:
            raise StructureError("interregnum token not marked as edit", missing[0])

    for p in edits:
        if not 0 <= p < length:
            raise StructureError(f"edit position {p} outside utterance of length {length}")
        tags[p] = EDIT

    for s in ordered:
        end_pos = s.repair_end - 1
        single = s.repair_end == s.repair_start + 1
        if s.repair_start in edits or (not single and end_pos in edits):
            raise StructureError("edit position collides with a structural tag", s.repair_start)
        if single:
            marker = (
                EndMarker.END_SUB if s.kind is RepairKind.SUBSTITUTION else EndMarker.END_DEL
            )
            tags[s.repair_start] = onset(s.retrace, marker)
        else:
            tags[s.repair_start] = onset(s.retrace, EndMarker.MID)
            tags[end_pos] = REPAIR_END

    # An edit run touching an onset from the left would be resolved as a
    # longer interregnum, so it must start exactly where recorded.
    for s in ordered:
        before = s.interregnum_start - 1
        if before >= 0 and tags[before].is_edit:
            raise StructureError("edit run extends past the recorded interregnum", before)
    return tags


def validate_tags(tags: Sequence[Tag]) -> list[RepairStructure]:
    """Check that a tag sequence resolves and regenerates from its resolution.

    Returns the resolved structures; raises StructureError otherwise.
    """
    structures = resolve_structures(tags)
    edits = {i for i, t in enumerate(tags) if t.is_edit}
    regenerated = structures_to_tags(structures, len(tags), edits)
    if regenerated != list(tags):
        raise StructureError("tag sequence does not regenerate from its resolution")
    return structures


def edit_positions(tags: Sequence[Tag]) -> set[int]:
    return {i for i, t in enumerate(tags) if t.is_edit}


def clean_utterance(
    tokens: Sequence,
    structures: Iterable[RepairStructure],
    edit_positions: Iterable[int] = (),
) -> list:
    """Fluent rendering: drop reparanda, edit tokens, and deletion repair spans."""
    drop = set(edit_positions)
    for s in structures:
        drop.update(range(s.reparandum_start, s.reparandum_end))
        if s.kind is RepairKind.DELETION:
            drop.update(range(s.repair_start, s.repair_end))
    return [tok for i, tok in enumerate(tokens) if i not in drop]
