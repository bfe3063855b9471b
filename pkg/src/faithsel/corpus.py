"""Dialog records, the ``[role] text <END>`` turn markup, JSON-lines storage,
corpus statistics and word error rate."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

from .errors import (
    DuplicateId,
    EmptyReference,
    MalformedMarkup,
    SchemaViolation,
    TurnContainsReservedToken,
)

END = "<END>"

_KNOWN_ROLES = {"agent": "agent", "customer": "customer", "system": "system", "null": "system"}
_LEADING_MARKER = re.compile(r"^\[[^\]]*\]")


@dataclass(frozen=True)
class SpeakerRole:
    """A speaker label. ``label`` is kept verbatim so serialization is the
    identity; ``kind`` is the coarse role (``null`` counts as ``system``)."""

    label: str

    @property
    def kind(self) -> str:
        return _KNOWN_ROLES.get(self.label.lower(), "other")

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class Turn:
    speaker: SpeakerRole
    text: str


@dataclass(frozen=True)
class Source:
    kind: str = "manual"  # manual | asr
    system: Optional[str] = None


@dataclass(frozen=True)
class Transcript:
    turns: tuple = ()
    source: Source = Source()

    def text(self) -> str:
        return " ".join(t.text for t in self.turns)

    def word_count(self) -> int:
        return sum(len(t.text.split()) for t in self.turns)


@dataclass(frozen=True)
class DialogRecord:
    id: str
    transcript: Transcript
    reference_synopsis: Optional[str] = None
    reference_call_type: Optional[str] = None
    split: str = "other"
    extra: dict = field(default_factory=dict, compare=True, hash=False)


@dataclass(frozen=True)
class CorpusStats:
    n_dialogs: int
    mean_conv_len: Optional[float]
    mean_sum_len: Optional[float]
    n_with_synopsis: int = 0


def word_count(text: str) -> int:
    return len(text.split())


# -- turn markup -------------------------------------------------------------


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def parse_turn_markup(text: str, source: Source = Source()) -> Transcript:
    """Parse ``[role] body <END>`` segments into a :class:`Transcript`.

    Raises :class:`MalformedMarkup` with the byte offset of the first problem.
    """
    turns = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        if text[pos] != "[":
            raise MalformedMarkup("expected '[role]' marker", _byte_offset(text, pos))
        close = text.find("]", pos + 1)
        if close < 0:
            raise MalformedMarkup("unclosed role marker", _byte_offset(text, pos))
        role = text[pos + 1 : close]
        if not role.strip() or any(c.isspace() for c in role) or "[" in role:
            raise MalformedMarkup(f"invalid role label {role!r}", _byte_offset(text, pos))
        end = text.find(END, close + 1)
        if end < 0:
            raise MalformedMarkup("unterminated segment (no <END>)", _byte_offset(text, pos))
        body = text[close + 1 : end].strip()
        if _LEADING_MARKER.match(body):
            raise MalformedMarkup(
                "turn body starts with a role marker", _byte_offset(text, close + 1)
            )
        turns.append(Turn(SpeakerRole(role), body))
        pos = end + len(END)
    return Transcript(tuple(turns), source)


def serialize_turn_markup(t: Transcript) -> str:
    parts = []
    for turn in t.turns:
        label = turn.speaker.label
        if not label or any(c.isspace() for c in label) or "[" in label or "]" in label:
            raise TurnContainsReservedToken(f"role label {label!r} cannot be serialized")
        if END in turn.text or _LEADING_MARKER.match(turn.text.lstrip()):
            raise TurnContainsReservedToken(f"turn text {turn.text!r} holds a reserved token")
        body = turn.text.strip()
        parts.append(f"[{label}] {body} {END}" if body else f"[{label}] {END}")
    return " ".join(parts)


# -- JSON lines ---------------------------------------------------------------

_RECORD_KEYS = ("id", "split", "turns", "synopsis", "call_type", "source")


def record_from_json(obj, line=None) -> DialogRecord:
    if not isinstance(obj, dict):
        raise SchemaViolation("record must be a JSON object", line)
    for key in ("id", "split", "turns"):
        if key not in obj:
            raise SchemaViolation(f"missing required field {key!r}", line)
    if not isinstance(obj["id"], str) or not isinstance(obj["split"], str):
        raise SchemaViolation("'id' and 'split' must be strings", line)
    if not isinstance(obj["turns"], list):
        raise SchemaViolation("'turns' must be a list", line)
    turns = []
    for t in obj["turns"]:
        if not isinstance(t, dict) or not isinstance(t.get("speaker"), str) or not isinstance(
            t.get("text"), str
        ):
            raise SchemaViolation("each turn needs string 'speaker' and 'text'", line)
        turns.append(Turn(SpeakerRole(t["speaker"]), t["text"]))
    src = obj.get("source", {"kind": "manual"})
    if not isinstance(src, dict) or src.get("kind") not in ("manual", "asr"):
        raise SchemaViolation("'source.kind' must be 'manual' or 'asr'", line)
    system = src.get("system")
    if system is not None and not isinstance(system, str):
        raise SchemaViolation("'source.system' must be a string", line)
    for key in ("synopsis", "call_type"):
        if obj.get(key) is not None and not isinstance(obj[key], str):
            raise SchemaViolation(f"{key!r} must be a string", line)
    extra = {k: v for k, v in obj.items() if k not in _RECORD_KEYS}
    return DialogRecord(
        id=obj["id"],
        transcript=Transcript(tuple(turns), Source(src["kind"], system)),
        reference_synopsis=obj.get("synopsis"),
        reference_call_type=obj.get("call_type"),
        split=obj["split"],
        extra=extra,
    )


def record_to_json(rec: DialogRecord) -> dict:
    obj = {
        "id": rec.id,
        "split": rec.split,
        "turns": [{"speaker": t.speaker.label, "text": t.text} for t in rec.transcript.turns],
    }
    if rec.reference_synopsis is not None:
        obj["synopsis"] = rec.reference_synopsis
    if rec.reference_call_type is not None:
        obj["call_type"] = rec.reference_call_type
    src = {"kind": rec.transcript.source.kind}
    if rec.transcript.source.system is not None:
        src["system"] = rec.transcript.source.system
    obj["source"] = src
    obj.update(rec.extra)
    return obj


def iter_jsonl(stream: IO[str]):
    """Yield ``(line_number, object)`` for every non-blank line."""
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid JSON: {exc.msg}", lineno) from None


def load_corpus(stream: IO[str]) -> list:
    records = []
    seen = set()
    for lineno, obj in iter_jsonl(stream):
        rec = record_from_json(obj, lineno)
        if rec.id in seen:
            raise DuplicateId(f"line {lineno}: duplicate dialog id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    return records


def dumps_jsonl(objs: Iterable[dict]) -> str:
    return "".join(json.dumps(o, ensure_ascii=False) + "\n" for o in objs)


def save_corpus(records: Iterable[DialogRecord], stream: IO[str]) -> None:
    stream.write(dumps_jsonl(record_to_json(r) for r in records))


# -- statistics ---------------------------------------------------------------


def corpus_stats(records: Sequence[DialogRecord]) -> CorpusStats:
    n = len(records)
    if n == 0:
        return CorpusStats(0, None, None, 0)
    conv = [r.transcript.word_count() for r in records]
    sums = [word_count(r.reference_synopsis) for r in records if r.reference_synopsis is not None]
    return CorpusStats(
        n_dialogs=n,
        mean_conv_len=sum(conv) / n,
        mean_sum_len=sum(sums) / len(sums) if sums else None,
        n_with_synopsis=len(sums),
    )


# -- word error rate ----------------------------------------------------------


def edit_counts(hypothesis: Sequence[str], reference: Sequence[str]):
    """Return ``(substitutions, insertions, deletions)`` of a minimal alignment."""
    h, r = len(hypothesis), len(reference)
    # cost[i][j]: distance between reference[:i] and hypothesis[:j]
    cost = [[0] * (h + 1) for _ in range(r + 1)]
    for i in range(1, r + 1):
        cost[i][0] = i
    for j in range(1, h + 1):
        cost[0][j] = j
    for i in range(1, r + 1):
        ri = reference[i - 1]
        row, prev = cost[i], cost[i - 1]
        for j in range(1, h + 1):
            sub = prev[j - 1] + (ri != hypothesis[j - 1])
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)
    subs = ins = dels = 0
    i, j = r, h
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i][j] == cost[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1]):
            subs += reference[i - 1] != hypothesis[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, ins, dels


def word_error_rate(hypothesis: Sequence[str], reference: Sequence[str], fold_case: bool = True) -> float:
    if not reference:
        raise EmptyReference("reference must contain at least one token")
    if fold_case:
        hypothesis = [w.casefold() for w in hypothesis]
        reference = [w.casefold() for w in reference]
    return sum(edit_counts(hypothesis, reference)) / len(reference)


def wer_text(hypothesis: str, reference: str, fold_case: bool = True) -> float:
    return word_error_rate(hypothesis.split(), reference.split(), fold_case)
