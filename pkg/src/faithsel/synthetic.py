"""A small deterministic transit call-center corpus for smoke runs.

Five dialogs over three call types, a ten-entry gazetteer, and scripted
generator output for every manifest slot. Candidate texts come in three
flavours: faithful, off-topic (wrong call-type vocabulary) and
hallucinating (an entity absent from the dialog).
"""

from __future__ import annotations

import random

from .annotate import Gazetteer, GazetteerEntry
from .corpus import DialogRecord, Source, Transcript, Turn, SpeakerRole

CALL_TYPES = ("Itinerary", "LostAndFound", "Schedule")

GAZETTEER = (
    ("transport_line", "RER B"),
    ("transport_line", "RER A"),
    ("transport_line", "ligne 13"),
    ("transport_line", "bus 38"),
    ("location", "Gare du Nord"),
    ("location", "Châtelet"),
    ("location", "Roissy"),
    ("location", "Nation"),
    ("organization", "RATP"),
    ("organization", "SNCF"),
)

VOCAB = {
    "Itinerary": "itinéraire aller changer direction correspondance trajet",
    "LostAndFound": "perdu oublié objet sac retrouvé déclaration",
    "Schedule": "horaire premier dernier passage fréquence départ",
}

_DIALOGS = (
    ("d1", "Itinerary", ("RER B", "Gare du Nord", "Roissy"),
     [("agent", "RATP bonjour"),
      ("customer", "bonjour je voudrais aller de Gare du Nord à Roissy"),
      ("agent", "prenez le RER B direction Roissy sans changer"),
      ("customer", "quel trajet est le plus simple pour cet itinéraire"),
      ("agent", "le RER B direct c'est le trajet le plus simple"),
      ("customer", "merci au revoir")],
     "Un appelant demande son itinéraire de Gare du Nord à Roissy. Le conseiller indique le RER B direct."),
    ("d2", "Schedule", ("bus 38", "Châtelet"),
     [("agent", "RATP bonjour"),
      ("customer", "à quelle heure passe le dernier bus 38 à Châtelet"),
      ("agent", "le dernier passage du bus 38 est à minuit"),
      ("customer", "et le premier départ le matin quel horaire"),
      ("agent", "premier départ vers 6 heures"),
      ("customer", "merci")],
     "Un appelant demande les horaires du bus 38 à Châtelet. Le conseiller donne le dernier passage et le premier départ à 6 heures."),
    ("d3", "LostAndFound", ("ligne 13", "Nation"),
     [("agent", "RATP bonjour"),
      ("customer", "j'ai oublié mon sac sur la ligne 13 hier"),
      ("agent", "avez vous fait une déclaration d'objet perdu"),
      ("customer", "non j'étais à Nation quand je l'ai perdu"),
      ("agent", "faites la déclaration le sac sera peut être retrouvé"),
      ("customer", "merci beaucoup")],
     "Un appelant a perdu un sac sur la ligne 13. Le conseiller conseille une déclaration d'objet perdu."),
    ("d4", "Itinerary", ("RER A", "Châtelet", "Nation"),
     [("agent", "RATP bonjour"),
      ("customer", "pour aller de Châtelet à Nation quel itinéraire"),
      ("agent", "prenez le RER A direction est"),
      ("customer", "faut il changer en route"),
      ("agent", "non pas de correspondance c'est direct"),
      ("customer", "parfait merci")],
     "Un appelant demande un itinéraire de Châtelet à Nation. Le conseiller propose le RER A sans correspondance."),
    ("d5", "Schedule", ("RER B", "SNCF"),
     [("agent", "RATP bonjour"),
      ("customer", "le RER B circule t il ce soir avec les travaux SNCF"),
      ("agent", "les horaires du soir sont modifiés à cause des travaux SNCF"),
      ("customer", "quel est le dernier départ"),
      ("agent", "dernier passage à 22 heures"),
      ("customer", "d'accord merci")],
     "Un appelant demande les horaires du RER B ce soir. Le conseiller signale des travaux SNCF et un dernier départ à 22 heures."),
)

_EXTRA_TRAINING = (
    ("je cherche le trajet le plus court pour aller à la station direction nord", "Itinerary"),
    ("quelle correspondance pour changer de ligne sur mon itinéraire", "Itinerary"),
    ("j'ai perdu mon téléphone il a été retrouvé au bureau des objets", "LostAndFound"),
    ("déclaration pour un sac oublié dans le métro", "LostAndFound"),
    ("quel est l'horaire du premier métro et la fréquence de passage", "Schedule"),
    ("à quelle heure est le dernier départ ce soir", "Schedule"),
)


def records():
    out = []
    for did, ct, _ents, turns, synopsis in _DIALOGS:
        tr = Transcript(tuple(Turn(SpeakerRole(r), t) for r, t in turns), Source("manual"))
        out.append(DialogRecord(did, tr, synopsis, ct, "test"))
    return out


def gazetteer() -> Gazetteer:
    return Gazetteer(GazetteerEntry(t, p, "literal") for t, p in GAZETTEER)


def gazetteer_tsv() -> str:
    return "".join(f"{t}\t{p}\tliteral\n" for t, p in GAZETTEER)


def training_examples():
    """(text, label) pairs: transcripts, synopses and a few extra snippets."""
    ex = []
    for rec in records():
        ex.append((rec.transcript.text(), rec.reference_call_type))
        ex.append((rec.reference_synopsis, rec.reference_call_type))
    ex.extend(_EXTRA_TRAINING)
    return ex


def _candidate_text(flavour, ct, ents, rng):
    all_ents = [p for _, p in GAZETTEER]
    if flavour == "faithful":
        words, used = VOCAB[ct].split(), list(ents)
    elif flavour == "offtopic":
        other = [c for c in CALL_TYPES if c != ct][rng.randrange(2)]
        words, used = VOCAB[other].split(), list(ents[:1])
    else:
        fake = [e for e in all_ents if e not in ents]
        words, used = VOCAB[ct].split(), list(ents[:1]) + [fake[rng.randrange(len(fake))]]
    rng.shuffle(words)
    return "L'appelant " + " ".join(words[:4]) + " " + " et ".join(used) + "."


def scripted_candidates(manifests, seed=0):
    """Generator output for every manifest slot.

    The first beam candidate (the usual baseline) is off-topic for the
    dialogs with an even index, so call-type aware selection has
    something to fix.
    """
    rng = random.Random(seed)
    by_id = {d[0]: d for d in _DIALOGS}
    lines = []
    for mi, m in enumerate(manifests):
        _, ct, ents, _, _ = by_id[m.dialog_id]
        slot = 0
        for cfg in m.configs:
            for j in range(cfg.expected_candidates):
                if cfg.strategy == "beam" and j == 0:
                    flavour = "offtopic" if mi % 2 == 0 else "faithful"
                else:
                    flavour = ("faithful", "offtopic", "hallucinated")[slot % 3]
                lines.append({
                    "dialog_id": m.dialog_id,
                    "config_id": cfg.config_id,
                    "candidate_id": f"{m.dialog_id}-{cfg.config_id}-{j}",
                    "text": _candidate_text(flavour, ct, ents, rng),
                    "external_scores": {"bertscore": round(rng.uniform(0.3, 0.4), 4)},
                })
                slot += 1
    return lines


def write_toy_data(outdir, seed=0) -> dict:
    """Write corpus, gazetteer, NB training set, default-grid manifests and
    scripted candidates as files under ``outdir``; returns their paths."""
    from pathlib import Path

    from .corpus import dumps_jsonl, record_to_json
    from .genharness import GridSpec, emit_manifests, expand_grid, manifests_to_jsonl

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    recs = records()
    manifests = emit_manifests(recs, expand_grid(GridSpec.paper_defaults()))
    train = [{"id": f"t{i}", "split": "hum", "turns": [{"speaker": "customer", "text": text}], "call_type": label}
             for i, (text, label) in enumerate(training_examples())]
    files = {
        "corpus": dumps_jsonl(record_to_json(r) for r in recs),
        "gazetteer": gazetteer_tsv(),
        "train": dumps_jsonl(train),
        "manifests": manifests_to_jsonl(manifests),
        "candidates": dumps_jsonl(scripted_candidates(manifests, seed=seed)),
    }
    paths = {}
    for name, text in files.items():
        paths[name] = out / (name + (".tsv" if name == "gazetteer" else ".jsonl"))
        paths[name].write_text(text, encoding="utf-8")
    return paths
