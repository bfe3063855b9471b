"""Candidate selection: KL divergence between call-type distributions,
named-entity hallucination rate, and the selection strategies built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Optional

from .annotate import DEFAULT_NORM, EntitySet, entity_in_source, normalized_source
from .classify import CallTypeDistribution, check_inventory
from .corpus import Transcript
from .errors import DuplicateId, MissingArtifact

DEFAULT_EPSILON = 1e-10
CRITERIA = ("baseline_first", "min_nehr", "min_kl", "combined")


@dataclass(frozen=True)
class Candidate:
    candidate_id: str
    text: str
    decode_config_id: str
    entities: EntitySet
    distribution: CallTypeDistribution
    external_scores: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CandidatePool:
    dialog_id: str
    candidates: tuple
    dialog_distribution: CallTypeDistribution
    source_transcript: Transcript

    def __post_init__(self):
        if not self.candidates:
            raise ValueError(f"pool {self.dialog_id!r} has no candidates")
        ids = [c.candidate_id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise DuplicateId(f"pool {self.dialog_id!r} repeats candidate ids")


@dataclass(frozen=True)
class SelectionResult:
    dialog_id: str
    chosen: str
    criterion: str
    per_candidate: dict  # candidate_id -> {"nehr": float, "kl": float}
    tie_broken: bool
    degenerate: bool = False  # chosen summary has no entities, so its NEHR is 0 by convention

    def to_json(self) -> dict:
        return {
            "dialog_id": self.dialog_id,
            "criterion": self.criterion,
            "chosen": self.chosen,
            "scores": self.per_candidate,
            "tie_broken": self.tie_broken,
            "degenerate": self.degenerate,
        }


def kl_divergence(g: CallTypeDistribution, r: CallTypeDistribution, epsilon: float = DEFAULT_EPSILON) -> float:
    """D(G || R) in nats on add-``epsilon`` smoothed, renormalized copies."""
    check_inventory(g, r)
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    n = len(g.probs)
    gz = 1.0 + n * epsilon
    terms = []
    for gp, rp in zip(g.probs, r.probs):
        gs = (gp + epsilon) / gz
        rs = (rp + epsilon) / gz
        terms.append(gs * math.log(gs / rs))
    return max(0.0, math.fsum(terms))


class NEHRScore(NamedTuple):
    misses: int
    total: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.misses, self.total) if self.total else Fraction(0)

    @property
    def value(self) -> float:
        return self.misses / self.total if self.total else 0.0

    @property
    def degenerate(self) -> bool:
        return self.total == 0


def nehr_score(entities: EntitySet, source: Transcript, source_entities: Optional[EntitySet] = None) -> NEHRScore:
    """Count entities absent from the source.

    By default presence means token-bounded containment in the normalized
    transcript. Passing ``source_entities`` switches to membership in that set.
    """
    if source_entities is not None:
        present = source_entities.keys(entities.key)
        misses = sum(1 for e in entities if entities.key_of(e) not in present)
    else:
        haystack = normalized_source(source, entities.config or DEFAULT_NORM)
        misses = sum(1 for e in entities if not entity_in_source(e, haystack))
    return NEHRScore(misses, len(entities))


def nehr(c: Candidate, source: Transcript, source_entities: Optional[EntitySet] = None) -> float:
    return nehr_score(c.entities, source, source_entities).value


def _score_pool(pool, epsilon, source_entities=None):
    scores = []
    for c in pool.candidates:
        ns = nehr_score(c.entities, pool.source_transcript, source_entities)
        scores.append((ns, kl_divergence(c.distribution, pool.dialog_distribution, epsilon)))
    return scores


def _result(pool, criterion, idx, scores, tie_broken):
    per = {c.candidate_id: {"nehr": ns.value, "kl": kl} for c, (ns, kl) in zip(pool.candidates, scores)}
    return SelectionResult(
        dialog_id=pool.dialog_id,
        chosen=pool.candidates[idx].candidate_id,
        criterion=criterion,
        per_candidate=per,
        tie_broken=tie_broken,
        degenerate=scores[idx][0].degenerate,
    )


def select_min_nehr(pool: CandidatePool, epsilon=DEFAULT_EPSILON, source_entities=None) -> SelectionResult:
    """Lowest NEHR; ties go to lowest KL, then to pool order."""
    scores = _score_pool(pool, epsilon, source_entities)
    best = min(ns.ratio for ns, _ in scores)
    tied = [i for i, (ns, _) in enumerate(scores) if ns.ratio == best]
    idx = min(tied, key=lambda i: (scores[i][1], i))
    return _result(pool, "min_nehr", idx, scores, len(tied) > 1)


def select_min_kl(pool: CandidatePool, epsilon=DEFAULT_EPSILON, source_entities=None) -> SelectionResult:
    """Lowest KL to the dialog distribution; ties go to pool order."""
    scores = _score_pool(pool, epsilon, source_entities)
    best = min(kl for _, kl in scores)
    tied = [i for i, (_, kl) in enumerate(scores) if kl == best]
    return _result(pool, "min_kl", tied[0], scores, len(tied) > 1)


def select_combined(pool: CandidatePool, epsilon=DEFAULT_EPSILON, source_entities=None) -> SelectionResult:
    """Restrict to the candidates reaching the minimum NEHR (exact rational
    equality), then take the lowest KL among them; ties go to pool order."""
    scores = _score_pool(pool, epsilon, source_entities)
    m = min(ns.ratio for ns, _ in scores)
    v = [i for i, (ns, _) in enumerate(scores) if ns.ratio == m]
    best = min(scores[i][1] for i in v)
    tied = [i for i in v if scores[i][1] == best]
    return _result(pool, "combined", tied[0], scores, len(tied) > 1)


def select_baseline_first(pool: CandidatePool, baseline_config: Optional[str] = None,
                          epsilon=DEFAULT_EPSILON, source_entities=None) -> SelectionResult:
    """First candidate of the designated baseline decode config (or of the pool)."""
    scores = _score_pool(pool, epsilon, source_entities)
    if baseline_config is None:
        idx = 0
    else:
        idx = next((i for i, c in enumerate(pool.candidates) if c.decode_config_id == baseline_config), None)
        if idx is None:
            raise MissingArtifact(pool.dialog_id, f"candidate from baseline config {baseline_config!r}")
    return _result(pool, "baseline_first", idx, scores, False)


def select(pool: CandidatePool, criterion: str, epsilon=DEFAULT_EPSILON, baseline_config=None,
           source_entities=None) -> SelectionResult:
    if criterion == "baseline_first":
        return select_baseline_first(pool, baseline_config, epsilon, source_entities)
    fn = {"min_nehr": select_min_nehr, "min_kl": select_min_kl, "combined": select_combined}.get(criterion)
    if fn is None:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    return fn(pool, epsilon, source_entities)
