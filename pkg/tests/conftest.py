import pytest

from faithsel.annotate import EntitySet, EntitySpan
from faithsel.classify import CallTypeDistribution
from faithsel.corpus import Transcript, Turn, SpeakerRole
from faithsel.criteria import Candidate, CandidatePool


def dist(*probs, labels=None):
    labels = labels or tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ"[: len(probs)])
    return CallTypeDistribution(tuple(labels), tuple(float(p) for p in probs))


def ents(*surfaces, type_label="location", **kw):
    return EntitySet([EntitySpan.make(s, type_label) for s in surfaces], **kw)


def transcript(*texts, role="agent"):
    return Transcript(tuple(Turn(SpeakerRole(role), t) for t in texts))


def pool(specs, dialog=None, source=None, dialog_id="d"):
    """``specs``: list of (entity surfaces, distribution) pairs."""
    cands = tuple(
        Candidate(f"c{i}", " ".join(es), "cfg", ents(*es), d) for i, (es, d) in enumerate(specs)
    )
    return CandidatePool(dialog_id, cands, dialog or dist(0.5, 0.5), source or transcript(""))


@pytest.fixture
def toy_gazetteer():
    from faithsel.annotate import Gazetteer

    return Gazetteer.from_mapping({"transport_line": ["RER B", "B"], "location": ["Gare du Nord"]})
