"""Call-type distributions: validation, ingestion, a multinomial naive Bayes
reference classifier, and a client for remote classifiers."""

from __future__ import annotations

import json
import logging
import math
import time
import urllib.error
import urllib.request
import uuid
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Optional, Sequence

from .corpus import iter_jsonl
from .errors import (
    EmptyCorpus,
    InventoryMismatch,
    MissingLabelExamples,
    NotADistribution,
    ProtocolError,
    SchemaViolation,
    TransportError,
    UnknownLabel,
)

log = logging.getLogger(__name__)

SUM_TOL = 1e-9
RENORM_TOL = 1e-6


@dataclass(frozen=True)
class CallTypeDistribution:
    """Probabilities over a fixed, ordered label inventory."""

    inventory: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.inventory) != len(self.probs):
            raise NotADistribution("inventory and probabilities differ in length")
        if len(set(self.inventory)) != len(self.inventory) or not self.inventory:
            raise NotADistribution("inventory must be nonempty with unique labels")
        for p in self.probs:
            if not math.isfinite(p) or p < 0:
                raise NotADistribution(f"invalid probability {p!r}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > SUM_TOL:
            raise NotADistribution(f"probabilities sum to {total!r}")

    @classmethod
    def from_mapping(cls, probs: Mapping[str, float], inventory: Sequence[str], renormalize_tol: float = 0.0):
        unknown = set(probs) - set(inventory)
        if unknown:
            raise UnknownLabel(f"labels outside the inventory: {sorted(unknown)}")
        missing = [lab for lab in inventory if lab not in probs]
        if missing:
            raise NotADistribution(f"no probability for labels {missing}")
        values = []
        for lab in inventory:
            p = probs[lab]
            if isinstance(p, bool) or not isinstance(p, (int, float)):
                raise NotADistribution(f"probability for {lab!r} is not a number")
            values.append(float(p))
        if any(not math.isfinite(p) or p < 0 for p in values):
            raise NotADistribution(f"negative or non-finite probability in {dict(probs)}")
        total = math.fsum(values)
        if abs(total - 1.0) > max(renormalize_tol, SUM_TOL):
            raise NotADistribution(f"probabilities sum to {total!r}")
        if total != 1.0:
            values = [p / total for p in values]
        return cls(tuple(inventory), tuple(values))

    def __getitem__(self, label):
        return self.probs[self.inventory.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.inventory, self.probs))


def check_inventory(a: CallTypeDistribution, b: CallTypeDistribution):
    if a.inventory != b.inventory:
        raise InventoryMismatch(f"inventories differ: {list(a.inventory)} vs {list(b.inventory)}")


def argmax_calltype(d: CallTypeDistribution) -> str:
    """Most probable label; ties go to the lexicographically smallest name."""
    best = max(d.probs)
    return min(lab for lab, p in zip(d.inventory, d.probs) if p == best)


# -- ingestion ----------------------------------------------------------------


class Distributions(dict):
    """``target_id -> CallTypeDistribution`` sharing one declared inventory."""

    inventory: tuple = ()


def load_distributions(stream: IO[str], inventory: Optional[Sequence[str]] = None) -> Distributions:
    out = Distributions()
    declared = None
    for lineno, obj in iter_jsonl(stream):
        if not isinstance(obj, dict):
            raise SchemaViolation("expected a JSON object", lineno)
        if declared is None:
            inv = obj.get("inventory")
            if not isinstance(inv, list) or not inv or not all(isinstance(x, str) for x in inv):
                raise SchemaViolation("first line must be an {\"inventory\": [...]} header", lineno)
            if len(set(inv)) != len(inv):
                raise SchemaViolation("inventory labels must be unique", lineno)
            declared = tuple(inv)
            if inventory is not None and tuple(inventory) != declared:
                raise InventoryMismatch(f"file inventory {list(declared)} != expected {list(inventory)}")
            continue
        tid, probs = obj.get("target_id"), obj.get("probs")
        if not isinstance(tid, str) or not isinstance(probs, dict):
            raise SchemaViolation("need string 'target_id' and object 'probs'", lineno)
        if tid in out:
            raise SchemaViolation(f"duplicate target_id {tid!r}", lineno)
        try:
            out[tid] = CallTypeDistribution.from_mapping(probs, declared, RENORM_TOL)
        except (NotADistribution, UnknownLabel) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    if declared is None:
        raise SchemaViolation("missing inventory header")
    out.inventory = declared
    return out


def dump_distributions(dists: Mapping[str, CallTypeDistribution], inventory: Sequence[str]) -> str:
    lines = [json.dumps({"inventory": list(inventory)})]
    for tid, d in dists.items():
        lines.append(json.dumps({"target_id": tid, "probs": d.as_dict()}, ensure_ascii=False))
    return "\n".join(lines) + "\n"


# -- naive Bayes ----------------------------------------------------------------


def tokenize(text: str):
    return text.casefold().split()


@dataclass(frozen=True)
class NBModel:
    inventory: tuple
    alpha: float
    log_priors: tuple
    vocab: tuple
    log_likelihood: Mapping[str, tuple]  # token -> per-label log P(token | label)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": "faithsel-nb",
                "version": 1,
                "inventory": list(self.inventory),
                "alpha": self.alpha,
                "log_priors": list(self.log_priors),
                "vocab": list(self.vocab),
                "log_likelihood": [list(self.log_likelihood[w]) for w in self.vocab],
            },
            ensure_ascii=False,
            indent=1,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NBModel":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"model file is not JSON: {exc.msg}") from None
        if not isinstance(obj, dict) or obj.get("format") != "faithsel-nb" or obj.get("version") != 1:
            raise SchemaViolation("not a version-1 naive Bayes model file")
        vocab = tuple(obj["vocab"])
        return cls(
            inventory=tuple(obj["inventory"]),
            alpha=obj["alpha"],
            log_priors=tuple(obj["log_priors"]),
            vocab=vocab,
            log_likelihood={w: tuple(row) for w, row in zip(vocab, obj["log_likelihood"])},
        )


def train_nb(labeled: Iterable[tuple], alpha: float = 1.0, inventory: Optional[Sequence[str]] = None) -> NBModel:
    """Multinomial naive Bayes with add-``alpha`` smoothing over case-folded
    whitespace tokens."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    labeled = list(labeled)
    if not labeled:
        raise EmptyCorpus("no training examples")
    inventory = tuple(inventory) if inventory is not None else tuple(sorted({lab for _, lab in labeled}))
    doc_counts = Counter(lab for _, lab in labeled)
    unknown = set(doc_counts) - set(inventory)
    if unknown:
        raise UnknownLabel(f"training labels outside the inventory: {sorted(unknown)}")
    missing = [lab for lab in inventory if doc_counts[lab] == 0]
    if missing:
        raise MissingLabelExamples(f"no training examples for {missing}")

    token_counts = {lab: Counter() for lab in inventory}
    for text, lab in labeled:
        token_counts[lab].update(tokenize(text))
    vocab = tuple(sorted(set().union(*token_counts.values())))
    n_docs = len(labeled)
    log_priors = tuple(math.log(doc_counts[lab] / n_docs) for lab in inventory)
    denom = {lab: sum(token_counts[lab].values()) + alpha * len(vocab) for lab in inventory}
    loglik = {
        w: tuple(math.log((token_counts[lab][w] + alpha) / denom[lab]) for lab in inventory) for w in vocab
    }
    return NBModel(inventory, float(alpha), log_priors, vocab, loglik)


def predict_distribution(model: NBModel, text: str) -> CallTypeDistribution:
    scores = list(model.log_priors)
    for w in tokenize(text):
        row = model.log_likelihood.get(w)
        if row is None:
            continue
        for i, v in enumerate(row):
            scores[i] += v
    top = max(scores)
    weights = [math.exp(s - top) for s in scores]
    z = math.fsum(weights)
    return CallTypeDistribution(model.inventory, tuple(w / z for w in weights))


# -- remote backend -----------------------------------------------------------------


def _http_post(endpoint, payload: bytes, timeout):
    req = urllib.request.Request(endpoint, data=payload, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read()
    except (urllib.error.URLError, OSError) as exc:
        raise TransportError(f"{endpoint}: {exc}") from exc


class BackendClient:
    """JSON-over-HTTP client for external classifier / NER services.

    One request in flight per client. A request keeps its id across
    retries so the server can deduplicate.
    """

    def __init__(self, endpoint, max_retries=3, backoff=0.2, max_backoff=5.0, timeout=30.0,
                 transport=None, sleep=time.sleep):
        self.endpoint = endpoint
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.timeout = timeout
        self._transport = transport or _http_post
        self._sleep = sleep
        self.attempts = 0

    def request(self, task: str, inputs: list) -> list:
        request_id = uuid.uuid4().hex
        payload = json.dumps({"task": task, "request_id": request_id, "inputs": inputs}).encode("utf-8")
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            self.attempts += 1
            try:
                raw = self._transport(self.endpoint, payload, self.timeout)
                break
            except TransportError as exc:
                if attempt == self.max_retries:
                    raise
                log.warning("backend attempt %d failed (%s); retrying in %.2fs", attempt + 1, exc, delay)
                self._sleep(delay)
                delay = min(delay * 2, self.max_backoff)
        try:
            resp = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ProtocolError(f"response is not JSON: {exc}") from None
        if not isinstance(resp, dict) or resp.get("request_id") != request_id:
            raise ProtocolError("response request_id does not match the request")
        outputs = resp.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(inputs):
            raise ProtocolError(f"expected {len(inputs)} outputs, got {outputs if not isinstance(outputs, list) else len(outputs)}")
        return outputs


def classify_remote(client: BackendClient, texts: Sequence[str], inventory: Sequence[str]):
    outputs = client.request("calltype", list(texts))
    dists = []
    for out in outputs:
        if not isinstance(out, dict):
            raise ProtocolError("each calltype output must be a {label: prob} object")
        dists.append(CallTypeDistribution.from_mapping(out, inventory, RENORM_TOL))
    return dists
