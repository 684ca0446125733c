"""Micro-averaged F1 evaluation over edit tokens, repair onsets, and repair spans.

All three scores pool true/false positive and false negative counts over
every token of every utterance.  ``f_rps`` resolves both tag sequences into
repair structures and scores token membership in any reparandum-through-
repair span; structurally invalid predictions are repaired by dropping the
offending tags first (the number dropped is reported).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Corpus
from .tags import Tag, render_tag, resolve_structures, resolve_structures_lenient

RM_MATCH_MODES = ("rm-only", "strict")


@dataclass
class F1Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "F1Counts") -> "F1Counts":
        return F1Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


def _check_aligned(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]]):
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold vs {len(pred)} predicted utterances")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(
                f"utterance {k}: {len(g)} gold vs {len(p)} predicted tags"
            )


def f1_edit(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]]) -> F1Counts:
    """Token-level F1 where a positive is an edit-tagged token."""
    _check_aligned(gold, pred)
    counts = F1Counts()
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            if g.is_edit and p.is_edit:
                counts.tp += 1
            elif p.is_edit:
                counts.fp += 1
            elif g.is_edit:
                counts.fn += 1
    return counts


def f1_rm(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]],
          mode: str = "rm-only") -> F1Counts:
    """Token-level F1 over repair-onset tags.

    A predicted onset is a true positive only when gold carries an onset with
    the same retrace; "strict" mode additionally requires the same end marker.
    """
    if mode not in RM_MATCH_MODES:
        raise ValueError(f"mode must be one of {RM_MATCH_MODES}, got {mode!r}")
    _check_aligned(gold, pred)
    counts = F1Counts()
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            if g.is_onset and p.is_onset:
                same = g.retrace == p.retrace
                if mode == "strict":
                    same = same and g.marker == p.marker
                if same:
                    counts.tp += 1
                else:
                    counts.fp += 1
                    counts.fn += 1
            elif p.is_onset:
                counts.fp += 1
            elif g.is_onset:
                counts.fn += 1
    return counts


def _span_membership(tags: Sequence[Tag], lenient: bool) -> tuple[set[int], int]:
    if lenient:
        structures, _, dropped = resolve_structures_lenient(tags)
    else:
        structures, dropped = resolve_structures(tags), 0
    member: set[int] = set()
    for s in structures:
        member.update(range(s.reparandum_start, s.repair_end))
    return member, dropped


def f1_rps(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]]
           ) -> tuple[F1Counts, int]:
    """Token-membership F1 over whole repair structures.

    Both sides resolve to structures; a token is positive when it lies inside
    any structure's reparandum-through-repair span.  Gold must resolve
    cleanly; invalid predicted tags are dropped (count returned).
    """
    _check_aligned(gold, pred)
    counts = F1Counts()
    total_dropped = 0
    for g_seq, p_seq in zip(gold, pred):
        g_member, _ = _span_membership(g_seq, lenient=False)
        p_member, dropped = _span_membership(p_seq, lenient=True)
        total_dropped += dropped
        counts.tp += len(g_member & p_member)
        counts.fp += len(p_member - g_member)
        counts.fn += len(g_member - p_member)
    return counts, total_dropped


def f1_structure_match(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]]
                       ) -> F1Counts:
    """Span-level exact match: a structure counts only if all spans and kind agree."""
    _check_aligned(gold, pred)
    counts = F1Counts()
    for g_seq, p_seq in zip(gold, pred):
        g_structs = set(resolve_structures(g_seq))
        p_structs = set(resolve_structures_lenient(p_seq)[0])
        counts.tp += len(g_structs & p_structs)
        counts.fp += len(p_structs - g_structs)
        counts.fn += len(g_structs - p_structs)
    return counts


def tag_accuracy(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]]) -> float:
    _check_aligned(gold, pred)
    total = correct = 0
    for g_seq, p_seq in zip(gold, pred):
        total += len(g_seq)
        correct += sum(g == p for g, p in zip(g_seq, p_seq))
    return correct / total if total else 0.0


def score_sequences(gold, pred, rm_mode: str = "rm-only") -> dict:
    """The three F1 scores plus accuracy, as plain floats."""
    rps, dropped = f1_rps(gold, pred)
    return {
        "f_e": f1_edit(gold, pred).f1,
        "f_rm": f1_rm(gold, pred, rm_mode).f1,
        "f_rps": rps.f1,
        "tag_accuracy": tag_accuracy(gold, pred),
        "dropped_predicted_tags": dropped,
    }


@dataclass
class EvalReport:
    f_e: float
    f_rm: float
    f_rps: float
    tag_accuracy: float
    rm_match_mode: str
    edit_counts: F1Counts
    rm_counts: F1Counts
    rps_counts: F1Counts
    structure_match: F1Counts
    token_count: int
    dropped_predicted_tags: int
    confusion: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "f_e": self.f_e,
            "f_rm": self.f_rm,
            "f_rps": self.f_rps,
            "tag_accuracy": self.tag_accuracy,
            "rm_match_mode": self.rm_match_mode,
            "edit_counts": self.edit_counts.to_dict(),
            "rm_counts": self.rm_counts.to_dict(),
            "rps_counts": self.rps_counts.to_dict(),
            "structure_exact_match": self.structure_match.to_dict(),
            "token_count": self.token_count,
            "dropped_predicted_tags": self.dropped_predicted_tags,
            "confusion": self.confusion,
        }

    def table(self) -> str:
        rows = [
            ("F_e", self.f_e),
            ("F_rm", self.f_rm),
            ("F_rps", self.f_rps),
            ("accuracy", self.tag_accuracy),
            ("span exact F1", self.structure_match.f1),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{name:<{width}}  {value:.4f}" for name, value in rows]
        lines.append(f"(rm match: {self.rm_match_mode}; "
                     f"{self.token_count} tokens; "
                     f"{self.dropped_predicted_tags} invalid predicted tags dropped)")
        return "\n".join(lines)


def evaluate_sequences(gold: Sequence[Sequence[Tag]], pred: Sequence[Sequence[Tag]],
                       rm_mode: str = "rm-only") -> EvalReport:
    edit = f1_edit(gold, pred)
    rm = f1_rm(gold, pred, rm_mode)
    rps, dropped = f1_rps(gold, pred)
    span = f1_structure_match(gold, pred)
    confusion: dict[str, dict[str, int]] = {}
    tokens = 0
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            tokens += 1
            row = confusion.setdefault(render_tag(g), {})
            key = render_tag(p)
            row[key] = row.get(key, 0) + 1
    return EvalReport(
        f_e=edit.f1, f_rm=rm.f1, f_rps=rps.f1,
        tag_accuracy=tag_accuracy(gold, pred),
        rm_match_mode=rm_mode,
        edit_counts=edit, rm_counts=rm, rps_counts=rps, structure_match=span,
        token_count=tokens, dropped_predicted_tags=dropped,
        confusion=confusion,
    )


def evaluate(model, corpus: Corpus, rm_mode: str = "rm-only") -> EvalReport:
    """Tag every utterance of a gold-annotated corpus and score the result."""
    gold = []
    for utt in corpus.utterances():
        tags = utt.tags
        if tags is None:
            raise ValueError("corpus has untagged utterances; evaluation needs gold tags")
        gold.append(tags)
    pred = model.tag_corpus(corpus)
    return evaluate_sequences(gold, pred, rm_mode)
