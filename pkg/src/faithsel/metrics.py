"""Summary evaluation: call-type accuracy, entity precision/recall/F1,
ROUGE-L, and corpus-level reports."""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .annotate import EntitySet, _check_config, entity_intersection
from .errors import EmptyInput, LengthMismatch, MissingArtifact


@dataclass(frozen=True)
class NEScore:
    precision: float
    recall: float
    f1: float


def ct_accuracy(predicted: Sequence[str], reference: Sequence[str]) -> float:
    if len(predicted) != len(reference):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(reference)} references")
    if not reference:
        raise EmptyInput("no labels to score")
    return sum(p == r for p, r in zip(predicted, reference)) / len(reference)


def ne_prf(generated: EntitySet, reference: EntitySet) -> NEScore:
    """Entity overlap between a generated and a reference summary.

    Both empty scores (1, 1, 1); exactly one empty scores (0, 0, 0).
    """
    _check_config(generated, reference)
    ng, nr = len(generated), len(reference)
    if ng == 0 and nr == 0:
        return NEScore(1.0, 1.0, 1.0)
    if ng == 0 or nr == 0:
        return NEScore(0.0, 0.0, 0.0)
    hits = len(entity_intersection(generated, reference))
    p, r = hits / ng, hits / nr
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return NEScore(p, r, f1)


def swap_duality_check(gen: EntitySet, ref: EntitySet) -> bool:
    return abs(ne_prf(gen, ref).precision - ne_prf(ref, gen).recall) <= 1e-12


def _is_punct(ch):
    return unicodedata.category(ch).startswith("P")


def rouge_tokenize(text: str) -> list:
    """Case fold, split on whitespace, then peel leading and trailing
    punctuation characters off as tokens of their own."""
    out = []
    for word in text.casefold().split():
        i, j = 0, len(word)
        while i < j and _is_punct(word[i]):
            i += 1
        while j > i and _is_punct(word[j - 1]):
            j -= 1
        out.extend(word[:i])
        if i < j:
            out.append(word[i:j])
        out.extend(word[j:])
    return out


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str], beta: float = 1.0) -> float:
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if not candidate or not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(candidate), lcs / len(reference)
    b2 = beta * beta
    return (1 + b2) * p * r / (r + b2 * p)


# -- reports ---------------------------------------------------------------------


@dataclass(frozen=True)
class DialogMetrics:
    rouge_l: float
    ct_correct: bool
    ne: NEScore
    external: Mapping[str, float] = field(default_factory=dict)


@dataclass
class MetricReport:
    per_dialog: dict
    aggregate: dict
    beta: float = 1.0
    excluded: list = field(default_factory=list)

    def to_json(self, digits: int = 4) -> str:
        def r(x):
            return round(x, digits) if isinstance(x, float) else x

        per = {}
        for did in sorted(self.per_dialog):
            m = self.per_dialog[did]
            per[did] = {
                "rouge_l": r(m.rouge_l),
                "ct_correct": m.ct_correct,
                "ne_p": r(m.ne.precision),
                "ne_r": r(m.ne.recall),
                "ne_f1": r(m.ne.f1),
                "external": {k: r(v) for k, v in sorted(m.external.items())},
            }
        doc = {
            "rouge_l_beta": self.beta,
            "aggregate": {k: r(v) for k, v in self.aggregate.items()},
            "table": self.table_row(digits),
            "per_dialog": per,
            "excluded": sorted(self.excluded),
        }
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"

    def to_tsv(self, digits: int = 4) -> str:
        lines = ["dialog_id\trouge_l\tct_correct\tne_p\tne_r\tne_f1"]
        for did in sorted(self.per_dialog):
            m = self.per_dialog[did]
            vals = [m.rouge_l, m.ne.precision, m.ne.recall, m.ne.f1]
            rl, p, rc, f = (f"{v:.{digits}f}" for v in vals)
            lines.append(f"{did}\t{rl}\t{int(m.ct_correct)}\t{p}\t{rc}\t{f}")
        return "\n".join(lines) + "\n"

    def table_row(self, digits: int = 4) -> dict:
        """Aggregate block in the column order of the published result tables."""
        a = self.aggregate
        fmt = lambda v: None if v is None else round(v, digits)  # noqa: E731
        return {
            f"ROUGE-L(beta={self.beta:g})": fmt(a.get("rouge_l_mean")),
            "BERTScore": fmt(a.get("external_means", {}).get("bertscore")),
            "CT-Acc": fmt(a.get("ct_acc")),
            "NE-P": fmt(a.get("ne_p_mean")),
            "NE-R": fmt(a.get("ne_r_mean")),
            "NE-F1": fmt(a.get("ne_f1_mean")),
        }


def aggregate(per_dialog: Mapping[str, DialogMetrics]) -> dict:
    ids = sorted(per_dialog)
    n = len(ids)
    if n == 0:
        return {"n": 0, "rouge_l_mean": None, "ct_acc": None, "ne_p_mean": None,
                "ne_r_mean": None, "ne_f1_mean": None, "external_means": {}}
    ms = [per_dialog[i] for i in ids]
    ext_names = sorted({k for m in ms for k in m.external})
    ext = {}
    for name in ext_names:
        vals = [m.external[name] for m in ms if name in m.external]
        ext[name] = math.fsum(vals) / len(vals)
    return {
        "n": n,
        "rouge_l_mean": math.fsum(m.rouge_l for m in ms) / n,
        "ct_acc": sum(m.ct_correct for m in ms) / n,
        "ne_p_mean": math.fsum(m.ne.precision for m in ms) / n,
        "ne_r_mean": math.fsum(m.ne.recall for m in ms) / n,
        "ne_f1_mean": math.fsum(m.ne.f1 for m in ms) / n,
        "external_means": ext,
    }


def build_report(
    dialog_ids: Sequence[str],
    summaries: Mapping[str, str],
    references: Mapping[str, Optional[str]],
    summary_entities: Mapping[str, EntitySet],
    reference_entities: Mapping[str, EntitySet],
    predicted_labels: Mapping[str, str],
    reference_labels: Mapping[str, Optional[str]],
    external: Optional[Mapping[str, Mapping[str, float]]] = None,
    beta: float = 1.0,
    partial: bool = False,
) -> MetricReport:
    """Score one summary per dialog. All maps are keyed by dialog id.

    Without ``partial`` any missing input raises :class:`MissingArtifact`;
    with it the dialog is dropped and listed in ``report.excluded``.
    """
    external = external or {}
    per, excluded = {}, []
    needs = (
        ("summary", summaries),
        ("reference synopsis", references),
        ("summary entities", summary_entities),
        ("reference entities", reference_entities),
        ("predicted call type", predicted_labels),
        ("reference call type", reference_labels),
    )
    for did in sorted(dialog_ids):
        missing = next((what for what, m in needs if m.get(did) is None), None)
        if missing is not None:
            if not partial:
                raise MissingArtifact(did, missing)
            excluded.append(did)
            continue
        per[did] = DialogMetrics(
            rouge_l=rouge_l(rouge_tokenize(summaries[did]), rouge_tokenize(references[did]), beta),
            ct_correct=predicted_labels[did] == reference_labels[did],
            ne=ne_prf(summary_entities[did], reference_entities[did]),
            external=dict(external.get(did, {})),
        )
    return MetricReport(per, aggregate(per), beta, excluded)
