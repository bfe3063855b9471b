"""Decoding grids, generation manifests, conditioned inputs, few-shot prompts,
and ingestion of generator output into candidate pools."""

from __future__ import annotations

import itertools
import json
import logging
import re
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources
from typing import IO, Callable, Mapping, Optional, Sequence, Union

from .classify import CallTypeDistribution, argmax_calltype
from .corpus import DialogRecord, Transcript, iter_jsonl, parse_turn_markup, serialize_turn_markup
from .criteria import Candidate, CandidatePool
from .errors import (
    CountMismatch,
    InvalidRange,
    MalformedMarkup,
    MissingArtifact,
    MissingDistribution,
    SchemaViolation,
    SeparatorCollision,
    UnknownConfig,
    UnknownDialog,
)

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 1.0
DEFAULT_SEPARATOR = " <SEP> "


@dataclass(frozen=True)
class DecodeConfig:
    strategy: str  # greedy | beam | sample
    beam_size: Optional[int] = None
    n_best: Optional[int] = None
    top_p: Optional[float] = None
    top_k: Optional[int] = None
    temperature: float = DEFAULT_TEMPERATURE
    n_samples: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.strategy == "beam":
            if not self.beam_size or self.beam_size < 1 or not self.n_best or not 1 <= self.n_best <= self.beam_size:
                raise InvalidRange(f"beam needs 1 <= n_best <= size, got {self.n_best}/{self.beam_size}")
        elif self.strategy == "sample":
            if self.top_p is not None and not 0 < self.top_p <= 1:
                raise InvalidRange(f"top_p must lie in (0, 1], got {self.top_p}")
            if self.top_k is not None and self.top_k < 1:
                raise InvalidRange(f"top_k must be >= 1, got {self.top_k}")
            if not self.temperature > 0:
                raise InvalidRange(f"temperature must be > 0, got {self.temperature}")
            if self.n_samples < 1:
                raise InvalidRange("n_samples must be >= 1")
        elif self.strategy != "greedy":
            raise InvalidRange(f"unknown strategy {self.strategy!r}")

    @property
    def pure_sample(self) -> bool:
        return (self.strategy == "sample" and self.top_p is None and self.top_k is None
                and self.temperature == DEFAULT_TEMPERATURE)

    @property
    def config_id(self) -> str:
        if self.strategy == "greedy":
            return "greedy"
        if self.strategy == "beam":
            return f"beam-size{self.beam_size}-best{self.n_best}"
        parts = ["sample"]
        if self.top_p is not None:
            parts.append(f"p{self.top_p:g}")
        if self.top_k is not None:
            parts.append(f"k{self.top_k}")
        parts.append(f"t{self.temperature:g}")
        parts.append(f"n{self.n_samples}")
        if self.seed is not None:
            parts.append(f"seed{self.seed}")
        return "-".join(parts)

    @property
    def expected_candidates(self) -> int:
        return {"greedy": 1, "beam": self.n_best, "sample": self.n_samples}[self.strategy]

    def strategy_json(self) -> dict:
        if self.strategy == "greedy":
            return {"kind": "greedy"}
        if self.strategy == "beam":
            return {"kind": "beam", "size": self.beam_size, "n_best": self.n_best}
        d = {"kind": "sample", "top_p": self.top_p, "top_k": self.top_k,
             "temperature": self.temperature, "n_samples": self.n_samples}
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_strategy_json(cls, d: dict) -> "DecodeConfig":
        kind = d.get("kind")
        if kind == "greedy":
            return cls("greedy")
        if kind == "beam":
            return cls("beam", beam_size=d.get("size"), n_best=d.get("n_best"))
        if kind == "sample":
            return cls("sample", top_p=d.get("top_p"), top_k=d.get("top_k"),
                       temperature=d.get("temperature", DEFAULT_TEMPERATURE),
                       n_samples=d.get("n_samples", 1), seed=d.get("seed"))
        raise SchemaViolation(f"unknown strategy kind {kind!r}")


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float
    step: float
    closed: bool = False  # whether ``hi`` itself may be produced

    def values(self) -> list:
        """``lo + i*step`` in exact decimal arithmetic, so 0.7 + 3*0.05 is 0.85."""
        lo, hi, step = (Decimal(str(x)) for x in (self.lo, self.hi, self.step))
        if step <= 0:
            raise InvalidRange(f"step must be > 0, got {self.step}")
        out = []
        i = 0
        while True:
            v = lo + i * step
            if v > hi or (v == hi and not self.closed):
                break
            out.append(v)
            i += 1
        if not out:
            raise InvalidRange(f"range [{self.lo}, {self.hi}{']' if self.closed else '['} is empty")
        as_int = all(isinstance(x, int) for x in (self.lo, self.hi, self.step))
        return [int(v) if as_int else float(v) for v in out]


@dataclass(frozen=True)
class GridSpec:
    top_p: Optional[Range] = None
    top_k: Optional[Range] = None
    temperature: Optional[Range] = None
    include_greedy: bool = False
    beam: Optional[tuple] = None  # (size, n_best)
    mode: str = "independent_sweeps"
    n_samples_per_config: int = 1

    @classmethod
    def paper_defaults(cls, mode="independent_sweeps", n_samples_per_config=1) -> "GridSpec":
        return cls(
            top_p=Range(0.70, 0.95, 0.05),
            top_k=Range(30, 100, 15),
            temperature=Range(0.7, 1.0, 0.1, closed=True),
            include_greedy=True,
            beam=(6, 6),
            mode=mode,
            n_samples_per_config=n_samples_per_config,
        )

    def to_json(self) -> dict:
        def rng(r):
            return None if r is None else {"lo": r.lo, "hi": r.hi, "step": r.step, "closed": r.closed}

        return {"top_p": rng(self.top_p), "top_k": rng(self.top_k), "temperature": rng(self.temperature),
                "include_greedy": self.include_greedy, "beam": list(self.beam) if self.beam else None,
                "mode": self.mode, "n_samples_per_config": self.n_samples_per_config}

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        def rng(x):
            return None if x is None else Range(x["lo"], x["hi"], x["step"], x.get("closed", False))

        return cls(rng(d.get("top_p")), rng(d.get("top_k")), rng(d.get("temperature")),
                   d.get("include_greedy", False), tuple(d["beam"]) if d.get("beam") else None,
                   d.get("mode", "independent_sweeps"), d.get("n_samples_per_config", 1))


def expand_grid(spec: GridSpec) -> list:
    if spec.n_samples_per_config < 1:
        raise InvalidRange("n_samples_per_config must be >= 1")
    ps = spec.top_p.values() if spec.top_p else []
    ks = spec.top_k.values() if spec.top_k else []
    ts = spec.temperature.values() if spec.temperature else []
    n = spec.n_samples_per_config
    configs = []
    if spec.mode == "independent_sweeps":
        configs += [DecodeConfig("sample", top_p=p, n_samples=n) for p in ps]
        configs += [DecodeConfig("sample", top_k=k, n_samples=n) for k in ks]
        configs += [DecodeConfig("sample", temperature=t, n_samples=n) for t in ts]
    elif spec.mode == "cross_product":
        if ps or ks or ts:
            for p, k, t in itertools.product(ps or [None], ks or [None], ts or [DEFAULT_TEMPERATURE]):
                configs.append(DecodeConfig("sample", top_p=p, top_k=k, temperature=t, n_samples=n))
    else:
        raise InvalidRange(f"unknown grid mode {spec.mode!r}")
    if spec.include_greedy:
        configs.append(DecodeConfig("greedy"))
    if spec.beam:
        size, n_best = spec.beam
        configs.append(DecodeConfig("beam", beam_size=size, n_best=n_best))
    ids = [c.config_id for c in configs]
    if len(set(ids)) != len(ids):
        raise InvalidRange("grid produced duplicate configs")
    return configs


# -- inputs and prompts ------------------------------------------------------------


def build_conditioned_input(t: Transcript, call_type: str, separator: str = DEFAULT_SEPARATOR) -> str:
    if not separator or separator in call_type:
        raise SeparatorCollision(f"separator {separator!r} is empty or occurs in label {call_type!r}")
    return call_type + separator + serialize_turn_markup(t)


def split_conditioned_input(text: str, separator: str = DEFAULT_SEPARATOR):
    """Inverse of :func:`build_conditioned_input`: ``(label, transcript)``."""
    label, sep, rest = text.partition(separator)
    if not sep:
        raise MalformedMarkup("separator not found", 0)
    return label, parse_turn_markup(rest)


def _resource(name):
    return resources.files("faithsel").joinpath("resources", name).read_text(encoding="utf-8")


def prompt_template() -> str:
    return _resource("prompt_template_fr.txt")


def default_exemplar():
    """The bundled one-shot example as ``(dialog markup, summary)``."""
    return _resource("exemplar_dialog.txt").strip(), _resource("exemplar_summary.txt").strip()


@dataclass(frozen=True)
class PromptRequest:
    exemplar_dialog: str
    exemplar_summary: str
    target: str
    instruction: Optional[str] = None  # full template; the bundled French one when None


def build_augmentation_prompt(req: PromptRequest, allow_empty_target: bool = False) -> str:
    ex = parse_turn_markup(req.exemplar_dialog)
    target = parse_turn_markup(req.target)
    if not target.turns and not allow_empty_target:
        raise MalformedMarkup("target dialog has no turns", 0)
    template = req.instruction if req.instruction is not None else prompt_template()
    return (template
            .replace("{EXEMPLAR_DIALOG}", serialize_turn_markup(ex))
            .replace("{EXEMPLAR_SUMMARY}", req.exemplar_summary.strip())
            .replace("{TARGET_DIALOG}", serialize_turn_markup(target)))


# -- manifests -------------------------------------------------------------------


@dataclass(frozen=True)
class GenerationManifest:
    dialog_id: str
    input_text: str
    configs: tuple
    expected_candidates: int

    def to_json(self) -> dict:
        return {
            "dialog_id": self.dialog_id,
            "input": self.input_text,
            "configs": [{"config_id": c.config_id, "strategy": c.strategy_json()} for c in self.configs],
            "expected_candidates": self.expected_candidates,
        }

    @classmethod
    def from_json(cls, obj, line=None) -> "GenerationManifest":
        try:
            configs = tuple(DecodeConfig.from_strategy_json(c["strategy"]) for c in obj["configs"])
            m = cls(obj["dialog_id"], obj["input"], configs, obj["expected_candidates"])
        except (KeyError, TypeError, InvalidRange) as exc:
            raise SchemaViolation(f"bad manifest: {exc}", line) from None
        for c, raw in zip(configs, obj["configs"]):
            if raw.get("config_id") != c.config_id:
                raise SchemaViolation(f"config_id {raw.get('config_id')!r} does not match its strategy", line)
        return m


Conditioner = Union[Mapping[str, CallTypeDistribution], Callable[[DialogRecord], Optional[CallTypeDistribution]]]


def emit_manifests(records: Sequence[DialogRecord], configs: Sequence[DecodeConfig],
                   conditioning: Optional[Conditioner] = None, separator: str = DEFAULT_SEPARATOR) -> list:
    """One manifest per dialog. With ``conditioning`` (a map of dialog
    distributions or a callable) the input is prefixed with the argmax label."""
    configs = tuple(configs)
    expected = sum(c.expected_candidates for c in configs)
    out = []
    for rec in records:
        if conditioning is None:
            text = serialize_turn_markup(rec.transcript)
        else:
            if callable(conditioning):
                dist = conditioning(rec)
            else:
                dist = conditioning.get(rec.id)
            if dist is None:
                raise MissingDistribution(rec.id)
            text = build_conditioned_input(rec.transcript, argmax_calltype(dist), separator)
        out.append(GenerationManifest(rec.id, text, configs, expected))
    return out


def load_manifests(stream: IO[str]) -> list:
    out, seen = [], set()
    for lineno, obj in iter_jsonl(stream):
        m = GenerationManifest.from_json(obj, lineno)
        if m.dialog_id in seen:
            raise SchemaViolation(f"duplicate manifest for {m.dialog_id!r}", lineno)
        seen.add(m.dialog_id)
        out.append(m)
    return out


# -- candidate ingestion -----------------------------------------------------------


@dataclass(frozen=True)
class CandidateLine:
    dialog_id: str
    config_id: str
    candidate_id: str
    text: str
    external_scores: Mapping[str, float] = field(default_factory=dict)


def _natural_key(s):
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", s)]


def read_candidates(manifests: Sequence[GenerationManifest], stream: IO[str], strict: bool = False) -> dict:
    """Group generator output by dialog, in manifest order.

    Within a dialog, candidates follow manifest config order and then a
    natural sort of candidate ids, so input line order never matters.
    """
    by_dialog = {m.dialog_id: m for m in manifests}
    config_rank = {m.dialog_id: {c.config_id: i for i, c in enumerate(m.configs)} for m in manifests}
    grouped = {m.dialog_id: [] for m in manifests}
    seen = set()
    for lineno, obj in iter_jsonl(stream):
        if not isinstance(obj, dict):
            raise SchemaViolation("expected a JSON object", lineno)
        for key in ("dialog_id", "config_id", "candidate_id", "text"):
            if not isinstance(obj.get(key), str):
                raise SchemaViolation(f"missing string field {key!r}", lineno)
        ext = obj.get("external_scores") or {}
        if not isinstance(ext, dict) or not all(isinstance(v, (int, float)) for v in ext.values()):
            raise SchemaViolation("'external_scores' must map names to numbers", lineno)
        did = obj["dialog_id"]
        if did not in by_dialog:
            raise UnknownDialog(f"line {lineno}: dialog {did!r} has no manifest")
        if obj["config_id"] not in config_rank[did]:
            raise UnknownConfig(f"line {lineno}: config {obj['config_id']!r} not in manifest of {did!r}")
        if obj["candidate_id"] in seen:
            raise SchemaViolation(f"duplicate candidate_id {obj['candidate_id']!r}", lineno)
        seen.add(obj["candidate_id"])
        grouped[did].append(CandidateLine(did, obj["config_id"], obj["candidate_id"], obj["text"],
                                          {k: float(v) for k, v in ext.items()}))
    for did, lines in grouped.items():
        ranks = config_rank[did]
        lines.sort(key=lambda c: (ranks[c.config_id], _natural_key(c.candidate_id)))
        expected = by_dialog[did].expected_candidates
        if len(lines) != expected:
            msg = f"dialog {did!r}: {len(lines)} candidates, manifest expects {expected}"
            if strict:
                raise CountMismatch(msg)
            log.warning(msg)
    return grouped


def build_pools(manifests, grouped, records: Mapping[str, DialogRecord], entities, distributions,
                dialog_distributions, partial: bool = False):
    """Attach entity sets and distributions. Returns ``(pools, skipped_ids)``.

    ``entities`` and ``distributions`` map candidate ids (or are callables on
    a CandidateLine); ``dialog_distributions`` maps dialog ids.
    """
    def lookup(source, line):
        return source(line) if callable(source) else source.get(line.candidate_id)

    pools, skipped = [], []
    for m in manifests:
        did = m.dialog_id
        try:
            rec = records.get(did)
            if rec is None:
                raise MissingArtifact(did, "dialog record")
            lines = grouped.get(did) or []
            if not lines:
                raise MissingArtifact(did, "candidates")
            dd = dialog_distributions(rec) if callable(dialog_distributions) else dialog_distributions.get(did)
            if dd is None:
                raise MissingArtifact(did, "dialog call-type distribution")
            cands = []
            for line in lines:
                es = lookup(entities, line)
                if es is None:
                    raise MissingArtifact(did, f"entities for candidate {line.candidate_id!r}")
                dist = lookup(distributions, line)
                if dist is None:
                    raise MissingArtifact(did, f"distribution for candidate {line.candidate_id!r}")
                cands.append(Candidate(line.candidate_id, line.text, line.config_id, es, dist,
                                       line.external_scores))
        except MissingArtifact:
            if not partial:
                raise
            skipped.append(did)
            continue
        pools.append(CandidatePool(did, tuple(cands), dd, rec.transcript))
    return pools, skipped


def ingest_candidates(manifests, stream, records, entities, distributions, dialog_distributions,
                      strict=False, partial=False):
    grouped = read_candidates(manifests, stream, strict)
    return build_pools(manifests, grouped, records, entities, distributions, dialog_distributions, partial)


def manifests_to_jsonl(manifests) -> str:
    return "".join(json.dumps(m.to_json(), ensure_ascii=False) + "\n" for m in manifests)
