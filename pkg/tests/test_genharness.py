import io
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from faithsel import synthetic
from faithsel.annotate import EntitySet
from faithsel.corpus import parse_turn_markup, serialize_turn_markup
from faithsel.errors import (
    CountMismatch,
    InvalidRange,
    MalformedMarkup,
    MissingArtifact,
    MissingDistribution,
    SeparatorCollision,
    UnknownConfig,
    UnknownDialog,
)
from faithsel.genharness import (
    DecodeConfig,
    GenerationManifest,
    GridSpec,
    PromptRequest,
    Range,
    build_augmentation_prompt,
    build_conditioned_input,
    build_pools,
    default_exemplar,
    emit_manifests,
    expand_grid,
    load_manifests,
    manifests_to_jsonl,
    prompt_template,
    read_candidates,
    split_conditioned_input,
)

from conftest import dist, transcript


def test_default_grid():
    cfgs = expand_grid(GridSpec.paper_defaults())
    assert len(cfgs) == 16
    assert sum(c.expected_candidates for c in cfgs) == 21
    assert [c.top_p for c in cfgs if c.top_p is not None] == [0.70, 0.75, 0.80, 0.85, 0.90]
    assert [c.top_k for c in cfgs if c.top_k is not None] == [30, 45, 60, 75, 90]
    temps = [c.temperature for c in cfgs if c.strategy == "sample" and c.top_p is None and c.top_k is None]
    assert temps == [0.7, 0.8, 0.9, 1.0]
    assert [c.strategy for c in cfgs[-2:]] == ["greedy", "beam"]
    assert (cfgs[-1].beam_size, cfgs[-1].n_best) == (6, 6)


def test_grid_bit_stable():
    a = [c.config_id for c in expand_grid(GridSpec.paper_defaults())]
    b = [c.config_id for c in expand_grid(GridSpec.paper_defaults())]
    assert a == b
    assert len(set(a)) == 16


def test_grid_cross_product():
    cfgs = expand_grid(GridSpec.paper_defaults(mode="cross_product"))
    assert len(cfgs) == 5 * 5 * 4 + 2
    assert sum(c.expected_candidates for c in cfgs) == 100 + 1 + 6


def test_degenerate_grid():
    cfgs = expand_grid(GridSpec(temperature=Range(0.8, 0.8, 0.1, closed=True)))
    assert [(c.strategy, c.temperature) for c in cfgs] == [("sample", 0.8)]


@pytest.mark.parametrize(
    "spec",
    [
        GridSpec(top_p=Range(0.9, 0.9, 0.05)),
        GridSpec(top_p=Range(0.7, 0.9, 0)),
        GridSpec(top_p=Range(0.9, 0.7, 0.05)),
        GridSpec(top_p=Range(0.5, 1.5, 0.5, closed=True)),
        GridSpec(top_k=Range(0, 2, 1)),
        GridSpec(beam=(4, 6)),
        GridSpec(mode="zigzag"),
    ],
)
def test_invalid_grids(spec):
    with pytest.raises(InvalidRange):
        expand_grid(spec)


def brute_expected(spec):
    def vals(r):
        if r is None:
            return 0
        out, i = 0, 0
        while True:
            # integer arithmetic on hundredths
            v = round(r.lo * 100) + i * round(r.step * 100)
            hi = round(r.hi * 100)
            if v > hi or (v == hi and not r.closed):
                return out
            out += 1
            i += 1

    np_, nk, nt = vals(spec.top_p), vals(spec.top_k), vals(spec.temperature)
    if spec.mode == "independent_sweeps":
        n_cfg = np_ + nk + nt
    else:
        n_cfg = max(np_, 1) * max(nk, 1) * max(nt, 1) if (np_ or nk or nt) else 0
    total = n_cfg * spec.n_samples_per_config + int(spec.include_greedy)
    if spec.beam:
        total += spec.beam[1]
    return total


grid_st = st.builds(
    GridSpec,
    top_p=st.one_of(st.none(), st.builds(Range, st.sampled_from([0.5, 0.6, 0.7]), st.sampled_from([0.8, 0.95, 1.0]),
                                         st.sampled_from([0.05, 0.1]), st.booleans())),
    top_k=st.one_of(st.none(), st.builds(Range, st.integers(1, 20), st.integers(21, 100), st.integers(5, 30))),
    temperature=st.one_of(st.none(), st.builds(Range, st.sampled_from([0.5, 0.7]), st.sampled_from([1.0, 1.2]),
                                               st.sampled_from([0.1, 0.25]), st.just(True))),
    include_greedy=st.booleans(),
    beam=st.one_of(st.none(), st.integers(1, 8).flatmap(lambda s: st.tuples(st.just(s), st.integers(1, s)))),
    mode=st.sampled_from(["independent_sweeps", "cross_product"]),
    n_samples_per_config=st.integers(1, 4),
)


@settings(max_examples=200)
@given(grid_st)
def test_expected_candidates_bookkeeping(spec):
    cfgs = expand_grid(spec)
    assert sum(c.expected_candidates for c in cfgs) == brute_expected(spec)


def test_config_strategy_round_trip():
    for c in expand_grid(GridSpec.paper_defaults()) + [DecodeConfig("sample", top_p=0.9, seed=3, n_samples=2)]:
        assert DecodeConfig.from_strategy_json(c.strategy_json()) == c


# -- conditioned input -------------------------------------------------------------------


def test_conditioned_input():
    t = parse_turn_markup("[agent] good morning <END>")
    assert build_conditioned_input(t, "Itinerary", " <SEP> ") == "Itinerary <SEP> [agent] good morning <END>"
    assert build_conditioned_input(transcript(), "Itinerary", " <SEP> ") == "Itinerary <SEP> "
    with pytest.raises(SeparatorCollision):
        build_conditioned_input(t, "A <SEP> B", " <SEP> ")
    with pytest.raises(SeparatorCollision):
        build_conditioned_input(t, "A", "")


@given(st.sampled_from(["Itinerary", "Schedule", "Lost And Found", "x"]),
       st.lists(st.sampled_from(["bonjour", "RER", "B", "<SEP>", "oui"]), max_size=6))
def test_conditioned_input_injective(label, words):
    t = transcript(" ".join(words), "merci")
    assert split_conditioned_input(build_conditioned_input(t, label)) == (label, t)


# -- prompt -------------------------------------------------------------------------------


def test_prompt_order():
    ex_dialog, ex_summary = default_exemplar()
    target = "[agent] bonjour <END> [customer] je cherche le bus 38 <END>"
    out = build_augmentation_prompt(PromptRequest(ex_dialog, ex_summary, target))
    first_line = prompt_template().splitlines()[0]
    positions = [out.index(first_line), out.index(ex_dialog), out.index(ex_summary), out.index(target)]
    assert positions == sorted(positions)
    assert "{" not in out
    assert out == build_augmentation_prompt(PromptRequest(ex_dialog, ex_summary, target))


def test_prompt_template_is_french_with_placeholders():
    tpl = prompt_template()
    for ph in ("{EXEMPLAR_DIALOG}", "{EXEMPLAR_SUMMARY}", "{TARGET_DIALOG}"):
        assert tpl.count(ph) == 1
    assert "<END>" in tpl and "RATP" in tpl


def test_prompt_empty_target():
    ex_dialog, ex_summary = default_exemplar()
    with pytest.raises(MalformedMarkup):
        build_augmentation_prompt(PromptRequest(ex_dialog, ex_summary, ""))
    out = build_augmentation_prompt(PromptRequest(ex_dialog, ex_summary, ""), allow_empty_target=True)
    assert out.rstrip().endswith("Résumé :")


def test_prompt_bad_markup():
    with pytest.raises(MalformedMarkup):
        build_augmentation_prompt(PromptRequest("[agent] hi", "x", "[agent] a <END>"))


# -- manifests and ingestion --------------------------------------------------------------


def _two_records():
    return synthetic.records()[:2]


def test_manifests_default_grid():
    ms = emit_manifests(_two_records(), expand_grid(GridSpec.paper_defaults()))
    assert len(ms) == 2
    assert all(m.expected_candidates == 21 and len(m.configs) == 16 for m in ms)
    assert ms[0].input_text == serialize_turn_markup(_two_records()[0].transcript)


def test_manifest_json_round_trip():
    ms = emit_manifests(_two_records(), expand_grid(GridSpec.paper_defaults()))
    text = manifests_to_jsonl(ms)
    assert load_manifests(io.StringIO(text)) == ms
    assert manifests_to_jsonl(load_manifests(io.StringIO(text))) == text
    assert set(json.loads(text.splitlines()[0])) == {"dialog_id", "input", "configs", "expected_candidates"}


def test_conditioned_manifests():
    ms = emit_manifests(_two_records(), [DecodeConfig("greedy")], lambda rec: dist(0.2, 0.8, labels=("Fare", "Other")))
    assert all(m.input_text.startswith("Other <SEP> [") for m in ms)


def test_missing_distribution():
    with pytest.raises(MissingDistribution):
        emit_manifests(_two_records(), [DecodeConfig("greedy")], {"d1": dist(1.0, 0.0)})


def _cand_stream(lines):
    return io.StringIO("".join(json.dumps(x) + "\n" for x in lines))


def _setup():
    ms = emit_manifests(_two_records(), expand_grid(GridSpec.paper_defaults()))
    return ms, synthetic.scripted_candidates(ms)


def test_ingest_expected_sizes():
    ms, lines = _setup()
    grouped = read_candidates(ms, _cand_stream(lines), strict=True)
    assert [len(grouped[m.dialog_id]) for m in ms] == [21, 21]


def test_ingest_strict_count_mismatch():
    ms, lines = _setup()
    extra = dict(lines[0], candidate_id="extra")
    with pytest.raises(CountMismatch):
        read_candidates(ms, _cand_stream(lines + [extra]), strict=True)
    assert len(read_candidates(ms, _cand_stream(lines + [extra]))[ms[0].dialog_id]) == 22


def test_ingest_unknown_ids():
    ms, lines = _setup()
    with pytest.raises(UnknownDialog):
        read_candidates(ms, _cand_stream([dict(lines[0], dialog_id="nope")]))
    with pytest.raises(UnknownConfig):
        read_candidates(ms, _cand_stream([dict(lines[0], config_id="beam-size4-best4")]))


def test_ingest_order_independent():
    ms, lines = _setup()
    ref = read_candidates(ms, _cand_stream(lines))
    rng = random.Random(0)
    for _ in range(20):
        shuffled = lines[:]
        rng.shuffle(shuffled)
        assert read_candidates(ms, _cand_stream(shuffled)) == ref


def test_ingest_natural_candidate_order():
    m = GenerationManifest("d1", "", (DecodeConfig("beam", beam_size=12, n_best=12),), 12)
    lines = [{"dialog_id": "d1", "config_id": "beam-size12-best12", "candidate_id": f"d1-b{i}", "text": ""}
             for i in (10, 2, 0, 11, 1, 3, 4, 5, 6, 7, 8, 9)]
    got = [c.candidate_id for c in read_candidates([m], _cand_stream(lines))["d1"]]
    assert got == [f"d1-b{i}" for i in range(12)]


def test_build_pools_partial():
    ms, lines = _setup()
    grouped = read_candidates(ms, _cand_stream(lines))
    recs = {r.id: r for r in _two_records()}
    dd = {"d1": dist(0.5, 0.5)}
    kwargs = dict(entities=lambda line: EntitySet(), distributions=lambda line: dist(0.5, 0.5),
                  dialog_distributions=dd)
    with pytest.raises(MissingArtifact):
        build_pools(ms, grouped, recs, **kwargs)
    pools, skipped = build_pools(ms, grouped, recs, partial=True, **kwargs)
    assert [p.dialog_id for p in pools] == ["d1"] and skipped == ["d2"]
    assert len(pools[0].candidates) == 21
