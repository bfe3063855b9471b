import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from faithsel import synthetic
from faithsel.cli import build_parser, main
from faithsel.corpus import dumps_jsonl, record_to_json
from faithsel.genharness import GridSpec, emit_manifests, expand_grid, manifests_to_jsonl


@pytest.fixture
def toy(tmp_path):
    records = synthetic.records()
    (tmp_path / "corpus.jsonl").write_text(dumps_jsonl(record_to_json(r) for r in records))
    (tmp_path / "gazetteer.tsv").write_text(synthetic.gazetteer_tsv())
    train = [{"id": f"t{i}", "split": "hum", "turns": [{"speaker": "customer", "text": t}], "call_type": lab}
             for i, (t, lab) in enumerate(synthetic.training_examples())]
    (tmp_path / "train.jsonl").write_text(dumps_jsonl(train))
    ms = emit_manifests(records, expand_grid(GridSpec.paper_defaults()))
    (tmp_path / "manifests.jsonl").write_text(manifests_to_jsonl(ms))
    (tmp_path / "candidates.jsonl").write_text(dumps_jsonl(synthetic.scripted_candidates(ms)))
    assert main(["classify", "train", "--corpus", str(tmp_path / "train.jsonl"), "--out", str(tmp_path / "model.json")]) == 0
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_stats(toy, capsys):
    code, out, _ = run(capsys, "stats", "--corpus", toy / "corpus.jsonl")
    assert code == 0 and json.loads(out)["n_dialogs"] == 5
    code, out, _ = run(capsys, "stats", "--corpus", toy / "corpus.jsonl", "--format", "tsv")
    assert out.splitlines()[1].startswith("5\t")


def test_exit_codes(toy, capsys, tmp_path):
    code, _, err = run(capsys, "stats", "--corpus", tmp_path / "missing.jsonl")
    assert code == 2 and "missing.jsonl" in err
    (tmp_path / "bad.jsonl").write_text('{"split": "x", "turns": []}\n')
    assert run(capsys, "stats", "--corpus", tmp_path / "bad.jsonl")[0] == 2
    assert run(capsys, "stats", "--bogus")[0] == 1
    assert run(capsys, "stats")[0] == 1
    assert run(capsys, "select", "--corpus", toy / "corpus.jsonl", "--manifest", toy / "manifests.jsonl",
               "--candidates", toy / "candidates.jsonl", "--gazetteer", toy / "gazetteer.tsv",
               "--criterion", "nope", "--model", toy / "model.json")[0] == 1


def test_help_lists_every_flag(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0]
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for opt in action.option_strings:
                assert opt in text, (name, opt)


def _select_args(toy, criterion, *extra):
    return ["select", "--corpus", toy / "corpus.jsonl", "--manifest", toy / "manifests.jsonl",
            "--candidates", toy / "candidates.jsonl", "--gazetteer", toy / "gazetteer.tsv",
            "--model", toy / "model.json", "--criterion", criterion, "--baseline-config", "beam-size6-best6", *extra]


def test_select_and_idempotence(toy, capsys):
    out = toy / "sel.jsonl"
    assert run(capsys, *_select_args(toy, "combined", "--out", out))[0] == 0
    first = out.read_bytes()
    lines = [json.loads(x) for x in first.decode().splitlines()]
    assert [x["dialog_id"] for x in lines] == ["d1", "d2", "d3", "d4", "d5"]
    assert set(lines[0]) >= {"dialog_id", "criterion", "chosen", "scores", "tie_broken"}
    assert run(capsys, *_select_args(toy, "combined", "--out", out, "--jobs", "1"))[0] == 0
    assert out.read_bytes() == first
    assert json.loads((toy / "sel.jsonl.config.json").read_text())["criterion"] == "combined"


def test_select_baseline_first(toy, capsys):
    code, out, _ = run(capsys, *_select_args(toy, "baseline_first"))
    assert code == 0
    assert all(json.loads(x)["chosen"].endswith("beam-size6-best6-0") for x in out.splitlines())


def test_select_missing_distribution(toy, capsys):
    dists = toy / "dists.jsonl"
    assert run(capsys, "classify", "predict", "--model", toy / "model.json", "--corpus", toy / "corpus.jsonl",
               "--candidates", toy / "candidates.jsonl", "--out", dists)[0] == 0
    kept = [x for x in dists.read_text().splitlines() if '"d3"' not in x]
    dists.write_text("\n".join(kept) + "\n")
    args = ["select", "--corpus", toy / "corpus.jsonl", "--manifest", toy / "manifests.jsonl",
            "--candidates", toy / "candidates.jsonl", "--gazetteer", toy / "gazetteer.tsv",
            "--distributions", dists, "--criterion", "min_kl"]
    code, _, err = run(capsys, *args)
    assert code == 3 and "d3" in err
    code, out, err = run(capsys, *args, "--partial")
    assert code == 0 and len(out.splitlines()) == 4 and "1 skipped" in err


def test_evaluate_perfect(tmp_path, capsys):
    rec = {"id": "d1", "split": "test", "turns": [{"speaker": "agent", "text": "le RER B"}],
           "synopsis": "Le RER B part.", "call_type": "A", "source": {"kind": "manual"}}
    (tmp_path / "c.jsonl").write_text(json.dumps(rec) + "\n")
    (tmp_path / "s.jsonl").write_text(json.dumps({"dialog_id": "d1", "config_id": "x", "candidate_id": "s1",
                                                  "text": "Le RER B part."}) + "\n")
    (tmp_path / "g.tsv").write_text("transport_line\tRER B\tliteral\n")
    (tmp_path / "d.jsonl").write_text('{"inventory": ["A", "B"]}\n{"target_id": "s1", "probs": {"A": 0.9, "B": 0.1}}\n')
    code, out, _ = run(capsys, "evaluate", "--corpus", tmp_path / "c.jsonl", "--candidates", tmp_path / "s.jsonl",
                       "--gazetteer", tmp_path / "g.tsv", "--distributions", tmp_path / "d.jsonl",
                       "--out", tmp_path / "rep", "--format", "tsv")
    assert code == 0
    assert out.splitlines()[1] == "1.0000\tNA\t1.0000\t1.0000\t1.0000\t1.0000"
    rep = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert rep["aggregate"]["ct_acc"] == 1.0
    assert (tmp_path / "rep" / "report.tsv").exists() and (tmp_path / "rep" / "resolved_config.json").exists()

    (tmp_path / "d2.jsonl").write_text('{"inventory": ["X", "Y"]}\n{"target_id": "s1", "probs": {"X": 1.0, "Y": 0.0}}\n')
    code, _, err = run(capsys, "evaluate", "--corpus", tmp_path / "c.jsonl", "--candidates", tmp_path / "s.jsonl",
                       "--gazetteer", tmp_path / "g.tsv", "--distributions", tmp_path / "d2.jsonl")
    assert code == 3 and "InventoryMismatch" in err


def test_evaluate_requires_single_summary_without_selection(toy, capsys):
    code, _, err = run(capsys, "evaluate", "--corpus", toy / "corpus.jsonl", "--candidates", toy / "candidates.jsonl",
                       "--gazetteer", toy / "gazetteer.tsv", "--model", toy / "model.json")
    assert code == 2 and "--selection" in err


def test_grid_paper_defaults(toy, capsys):
    code, out, _ = run(capsys, "grid", "--paper-defaults")
    doc = json.loads(out)
    assert code == 0 and len(doc["configs"]) == 16 and doc["expected_candidates"] == 21
    code, out, _ = run(capsys, "grid", "--paper-defaults", "--corpus", toy / "corpus.jsonl")
    ms = [json.loads(x) for x in out.splitlines()]
    assert len(ms) == 5 and {m["expected_candidates"] for m in ms} == {21}
    code, out, _ = run(capsys, "grid", "--paper-defaults", "--mode", "cross_product")
    assert json.loads(out)["expected_candidates"] == 107


def test_grid_conditioned(toy, capsys):
    code, out, _ = run(capsys, "grid", "--paper-defaults", "--corpus", toy / "corpus.jsonl", "--condition",
                       "--model", toy / "model.json")
    assert code == 0
    first = json.loads(out.splitlines()[0])
    assert first["input"].startswith("Itinerary <SEP> [agent]")
    assert run(capsys, "grid", "--paper-defaults", "--corpus", toy / "corpus.jsonl", "--condition")[0] == 1


def test_prompt(tmp_path, capsys):
    (tmp_path / "d1.txt").write_text("[agent] bonjour <END> [customer] oui <END>\n")
    code, out1, _ = run(capsys, "prompt", "--target", tmp_path / "d1.txt")
    code2, out2, _ = run(capsys, "prompt", "--target", tmp_path / "d1.txt")
    assert code == code2 == 0 and out1 == out2 and "[customer] oui <END>" in out1
    (tmp_path / "bad.txt").write_text("[agent] unterminated")
    assert run(capsys, "prompt", "--target", tmp_path / "bad.txt")[0] == 2


def test_classify_train_bit_identical(toy, capsys):
    a, b = toy / "m1.json", toy / "m2.json"
    for path in (a, b):
        assert run(capsys, "classify", "train", "--corpus", toy / "train.jsonl", "--alpha", "1.0", "--out", path)[0] == 0
    assert a.read_bytes() == b.read_bytes() == (toy / "model.json").read_bytes()


def test_ingest(toy, capsys):
    code, out, _ = run(capsys, "ingest", "--manifest", toy / "manifests.jsonl", "--candidates", toy / "candidates.jsonl",
                       "--strict")
    assert code == 0 and len(out.splitlines()) == 105
    lines = (toy / "candidates.jsonl").read_text().splitlines()
    (toy / "short.jsonl").write_text("\n".join(lines[1:]) + "\n")
    assert run(capsys, "ingest", "--manifest", toy / "manifests.jsonl", "--candidates", toy / "short.jsonl",
               "--strict")[0] == 3
    assert run(capsys, "ingest", "--manifest", toy / "manifests.jsonl", "--candidates", toy / "short.jsonl")[0] == 0


def test_config_file_and_env(toy, capsys, monkeypatch):
    cfg = toy / "cfg.json"
    cfg.write_text(json.dumps({"corpus": str(toy / "corpus.jsonl"), "format": "tsv"}))
    code, out, _ = run(capsys, "stats", "--config", cfg)
    assert code == 0 and out.startswith("n_dialogs\t")
    monkeypatch.setenv("FAITHSEL_CONFIG", str(cfg))
    code, out, _ = run(capsys, "stats", "--format", "json")
    assert code == 0 and json.loads(out)["n_dialogs"] == 5


def test_wer_command(tmp_path, capsys):
    def rec(i, text, kind):
        return {"id": i, "split": "test", "turns": [{"speaker": "agent", "text": text}], "source": {"kind": kind}}

    (tmp_path / "ref.jsonl").write_text(dumps_jsonl([rec("a", "a b c", "manual"), rec("b", "x y", "manual")]))
    (tmp_path / "hyp.jsonl").write_text(dumps_jsonl([rec("a", "a B x", "asr"), rec("b", "x y", "asr")]))
    code, out, _ = run(capsys, "wer", "--corpus", tmp_path / "hyp.jsonl", "--reference", tmp_path / "ref.jsonl")
    doc = json.loads(out)
    assert code == 0 and doc["corpus_wer"] == pytest.approx(1 / 5) and doc["per_dialog"]["a"] == pytest.approx(1 / 3)


def test_annotate_remote_ner(tmp_path, capsys):
    seen = []

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            seen.append(body)
            outputs = [[{"surface": "RER  B", "type": "transport_line"}] for _ in body["inputs"]]
            data = json.dumps({"request_id": body["request_id"], "outputs": outputs}).encode()
            self.send_response(200)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *a):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        (tmp_path / "c.jsonl").write_text(dumps_jsonl(record_to_json(r) for r in synthetic.records()[:2]))
        code, out, _ = run(capsys, "annotate", "--corpus", tmp_path / "c.jsonl",
                           "--endpoint", f"http://127.0.0.1:{server.server_port}/")
    finally:
        server.shutdown()
        server.server_close()
    assert code == 0
    assert seen[0]["task"] == "ner" and len(seen[0]["inputs"]) == 2
    assert [json.loads(x)["target_id"] for x in out.splitlines()] == ["d1", "d2"]
