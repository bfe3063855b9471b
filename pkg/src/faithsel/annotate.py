"""Named-entity normalization, gazetteer extraction, annotation ingestion and
entity matching."""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Optional

from .corpus import Transcript, iter_jsonl
from .errors import ConfigMismatch, SchemaViolation

log = logging.getLogger(__name__)

ENTITY_TYPES = (
    "transport_line",
    "location",
    "organization",
    "person",
    "time",
    "date",
    "numeral",
    "schedule",
)

KEY_TEXT = "normalized_text"
KEY_TEXT_TYPE = "normalized_text_plus_type"


@dataclass(frozen=True)
class EntityType:
    label: str

    @property
    def known(self) -> bool:
        return self.label in ENTITY_TYPES

    @property
    def kind(self) -> str:
        return self.label if self.known else "other"

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class NormConfig:
    accent_fold: bool = False


DEFAULT_NORM = NormConfig()

_WS = re.compile(r"\s+")


def _fold_accents(s):
    decomposed = unicodedata.normalize("NFD", s)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def _normalize_once(s, config):
    s = unicodedata.normalize("NFC", s)
    s = unicodedata.normalize("NFC", s.casefold())
    if config.accent_fold:
        s = unicodedata.normalize("NFC", _fold_accents(s))
    return _WS.sub(" ", s).strip()


def normalize_entity(surface: str, config: NormConfig = DEFAULT_NORM) -> str:
    """NFC, case fold, optional accent folding, whitespace collapse and trim."""
    s = _normalize_once(surface, config)
    # case folding can denormalize a handful of code points; iterate to a fixed point
    for _ in range(4):
        t = _normalize_once(s, config)
        if t == s:
            break
        s = t
    return s


@dataclass(frozen=True)
class EntitySpan:
    surface: str
    normalized: str
    type: EntityType
    start: Optional[int] = None
    end: Optional[int] = None

    @classmethod
    def make(cls, surface, type_label, start=None, end=None, config=DEFAULT_NORM):
        return cls(surface, normalize_entity(surface, config), EntityType(type_label), start, end)


class EntitySet:
    """Entities of one text, deduplicated under ``key`` unless ``multiset``.

    Keeps the normalization config it was built under so that comparisons
    across sets can refuse to mix configs.
    """

    def __init__(self, spans: Iterable[EntitySpan] = (), key=KEY_TEXT, config=DEFAULT_NORM, multiset=False):
        if key not in (KEY_TEXT, KEY_TEXT_TYPE):
            raise ValueError(f"unknown dedup key {key!r}")
        self.key = key
        self.config = config
        self.multiset = multiset
        kept, seen = [], set()
        for span in spans:
            k = self.key_of(span)
            if not multiset and k in seen:
                continue
            seen.add(k)
            kept.append(span)
        self.entities = tuple(kept)

    def key_of(self, span, key=None):
        key = key or self.key
        if key == KEY_TEXT:
            return span.normalized
        return (span.normalized, span.type.label.casefold())

    def keys(self, key=None) -> Counter:
        return Counter(self.key_of(s, key) for s in self.entities)

    def __len__(self):
        return len(self.entities)

    def __iter__(self):
        return iter(self.entities)

    def __repr__(self):
        return f"EntitySet({[s.normalized for s in self.entities]!r})"


def _check_config(a, b):
    if a.config != b.config:
        raise ConfigMismatch(f"entity sets normalized under {a.config} and {b.config}")
    if a.key != b.key or a.multiset != b.multiset:
        raise ConfigMismatch("entity sets use different matching keys or multiset modes")


def entity_intersection(a: EntitySet, b: EntitySet, mode: Optional[str] = None) -> EntitySet:
    """Entities of ``a`` whose key (under ``mode``) occurs in ``b``.

    In multiset mode each key of ``a`` is kept at most as often as it occurs in ``b``.
    """
    _check_config(a, b)
    mode = mode or a.key
    available = b.keys(mode)
    kept = []
    for span in a.entities:
        k = a.key_of(span, mode)
        if available[k] > 0:
            kept.append(span)
            if a.multiset or b.multiset:
                available[k] -= 1
    return EntitySet(kept, key=mode, config=a.config, multiset=a.multiset)


# -- gazetteer -----------------------------------------------------------------


@dataclass(frozen=True)
class GazetteerEntry:
    type: str
    pattern: str
    kind: str  # literal | regex


class Gazetteer:
    """Typed literal and regex patterns, compiled once and shared read-only.

    Literals match case-insensitively on token boundaries with flexible inner
    whitespace; regexes are used as written.
    """

    def __init__(self, entries: Iterable[GazetteerEntry]):
        self.entries = tuple(entries)
        compiled = []
        for e in self.entries:
            if not e.pattern or not e.pattern.strip():
                raise ValueError(f"empty pattern for type {e.type!r}")
            if e.kind == "literal":
                body = r"\s+".join(re.escape(w) for w in e.pattern.split())
                rx = re.compile(r"(?<!\w)" + body + r"(?!\w)", re.IGNORECASE)
            elif e.kind == "regex":
                try:
                    rx = re.compile(e.pattern)
                except re.error as exc:
                    raise ValueError(f"pattern {e.pattern!r} does not compile: {exc}") from None
            else:
                raise ValueError(f"unknown pattern kind {e.kind!r}")
            compiled.append((rx, e.type))
        self._compiled = tuple(compiled)

    @classmethod
    def from_mapping(cls, mapping, kind="literal"):
        return cls(GazetteerEntry(t, p, kind) for t, pats in mapping.items() for p in pats)

    @classmethod
    def load(cls, stream: IO[str]) -> "Gazetteer":
        entries = []
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                cols.append("literal")
            if len(cols) != 3 or cols[2] not in ("literal", "regex"):
                raise SchemaViolation("expected type<TAB>pattern<TAB>literal|regex", lineno)
            try:
                entries.append(GazetteerEntry(*cols))
            except ValueError as exc:
                raise SchemaViolation(str(exc), lineno) from None
        try:
            return cls(entries)
        except ValueError as exc:
            raise SchemaViolation(str(exc)) from None

    def __len__(self):
        return len(self.entries)


_FR_MONTHS = (
    "janvier|février|fevrier|mars|avril|mai|juin|juillet|août|aout|septembre|octobre|novembre|décembre|decembre"
)
_EN_MONTHS = "january|february|march|april|may|june|july|august|september|october|november|december"

BUILTIN_PATTERNS = (
    (re.compile(r"(?<!\w)\d{1,2}[/.-]\d{1,2}[/.-]\d{2,4}(?!\w)"), "date"),
    (re.compile(rf"(?<!\w)\d{{1,2}}(?:er)?\s+(?:{_FR_MONTHS}|{_EN_MONTHS})(?:\s+\d{{4}})?(?!\w)", re.I), "date"),
    (re.compile(r"(?<!\w)\d{1,2}\s*(?::\s*\d{2}|h\s*\d{2}|h(?!\w)|heures?(?:\s+\d{1,2})?(?!\w)|o'clock)", re.I), "time"),
    (re.compile(r"(?<!\w)\d+(?:[.,]\d+)?(?!\w)"), "numeral"),
)


def _select_spans(candidates, taken):
    """Left to right; at each start keep the longest candidate; skip overlaps."""
    candidates.sort(key=lambda c: (c[0], -(c[1] - c[0]), c[2]))
    chosen = []
    for start, end, prio, typ in candidates:
        if end <= start:
            continue
        if any(start < e and s < end for s, e in taken):
            continue
        taken.append((start, end))
        chosen.append((start, end, typ))
    return chosen


def _candidates(text, compiled):
    out = []
    for prio, (rx, typ) in enumerate(compiled):
        for m in rx.finditer(text):
            out.append((m.start(), m.end(), prio, typ))
    return out


def extract_entities(text: str, gazetteer: Gazetteer, config: NormConfig = DEFAULT_NORM, key=KEY_TEXT, multiset=False) -> EntitySet:
    """Gazetteer matches first, then built-in date/time/numeral patterns over
    what is left uncovered. Spans come back sorted by start offset."""
    taken = []
    spans = _select_spans(_candidates(text, gazetteer._compiled), taken)
    spans += _select_spans(_candidates(text, BUILTIN_PATTERNS), taken)
    spans.sort()
    return EntitySet(
        (EntitySpan(text[s:e], normalize_entity(text[s:e], config), EntityType(t), s, e) for s, e, t in spans),
        key=key,
        config=config,
        multiset=multiset,
    )


# -- external annotations -----------------------------------------------------


class EntityAnnotations(dict):
    """``target_id -> EntitySet`` plus the number of unknown type labels seen."""

    unknown_types = 0


def spans_from_json(items, config=DEFAULT_NORM, line=None, counter=None):
    if not isinstance(items, list):
        raise SchemaViolation("'entities' must be a list", line)
    spans = []
    for ent in items:
        if not isinstance(ent, dict) or not isinstance(ent.get("surface"), str) or not isinstance(ent.get("type"), str):
            raise SchemaViolation("each entity needs string 'surface' and 'type'", line)
        start, end = ent.get("start"), ent.get("end")
        if (start is None) != (end is None):
            raise SchemaViolation("'start' and 'end' must be given together", line)
        if start is not None:
            if not isinstance(start, int) or not isinstance(end, int) or not 0 <= start <= end:
                raise SchemaViolation("invalid character range", line)
        span = EntitySpan.make(ent["surface"], ent["type"], start, end, config)
        if not span.type.known and counter is not None:
            counter[span.type.label] += 1
        spans.append(span)
    return spans


def load_entity_annotations(stream: IO[str], config=DEFAULT_NORM, key=KEY_TEXT, multiset=False) -> EntityAnnotations:
    """Read ``{"target_id", "entities": [...]}`` lines; every surface is
    re-normalized under ``config``. Unknown type labels are kept as
    ``other`` types and counted, not rejected."""
    out = EntityAnnotations()
    unknown = Counter()
    for lineno, obj in iter_jsonl(stream):
        if not isinstance(obj, dict) or not isinstance(obj.get("target_id"), str) or "entities" not in obj:
            raise SchemaViolation("need string 'target_id' and 'entities'", lineno)
        if obj["target_id"] in out:
            raise SchemaViolation(f"duplicate target_id {obj['target_id']!r}", lineno)
        spans = spans_from_json(obj["entities"], config, lineno, unknown)
        out[obj["target_id"]] = EntitySet(spans, key=key, config=config, multiset=multiset)
    out.unknown_types = sum(unknown.values())
    if unknown:
        log.warning("%d entities with unknown types mapped to other: %s", out.unknown_types, dict(unknown))
    return out


def entity_set_to_json(target_id: str, es: EntitySet) -> dict:
    ents = []
    for s in es:
        e = {"surface": s.surface, "type": s.type.label}
        if s.start is not None:
            e["start"], e["end"] = s.start, s.end
        ents.append(e)
    return {"target_id": target_id, "entities": ents}


# -- source containment -----------------------------------------------------------


def normalized_source(source: Transcript, config: NormConfig = DEFAULT_NORM) -> str:
    return normalize_entity(source.text(), config)


def entity_in_source(e: EntitySpan, source, config: NormConfig = DEFAULT_NORM) -> bool:
    """True iff the normalized entity occurs in the normalized source text
    with a non-word character (or text edge) on both sides.

    ``source`` may be a Transcript or an already normalized string.
    """
    haystack = source if isinstance(source, str) else normalized_source(source, config)
    needle = e.normalized
    if not needle:
        return False
    return re.search(r"(?<!\w)" + re.escape(needle) + r"(?!\w)", haystack) is not None


def extract_entities_remote(client, texts, config=DEFAULT_NORM, key=KEY_TEXT, multiset=False):
    """Run NER through the shared backend protocol (``task: "ner"``)."""
    outputs = client.request("ner", list(texts))
    return [EntitySet(spans_from_json(o, config), key=key, config=config, multiset=multiset) for o in outputs]
