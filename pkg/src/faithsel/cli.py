"""Command-line entry point: ``faithsel <command> ...``.

Exit codes: 0 success, 1 usage error, 2 input/format error,
3 missing-artifact or consistency error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import annotate as ann
from . import classify as cls
from . import corpus as cp
from . import criteria as crit
from . import genharness as gh
from . import metrics as mx
from .errors import FaithselError, InventoryMismatch, MissingArtifact

log = logging.getLogger("faithsel")

CONFIG_ENV = "FAITHSEL_CONFIG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- io helpers -------------------------------------------------------------------


def write_atomic(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str, name: str = None):
    """Write ``text`` to ``--out`` (a file, or a directory when ``name`` is
    given) or to stdout, and echo the resolved config next to it."""
    if not args.out:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    target = out / name if name else out
    write_atomic(target, text)
    cfg_path = (out / "resolved_config.json") if name else out.with_name(out.name + ".config.json")
    write_atomic(cfg_path, resolved_config(args))


def resolved_config(args) -> str:
    skip = {"func", "config", "out"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return json.dumps(cfg, indent=2, sort_keys=True, default=str) + "\n"


def _open(path):
    return open(path, encoding="utf-8")


def _load_corpus(path):
    with _open(path) as fh:
        return cp.load_corpus(fh)


def _norm(args):
    return ann.NormConfig(accent_fold=getattr(args, "accent_fold", False))


def _entity_key(args):
    return ann.KEY_TEXT_TYPE if getattr(args, "type_aware_entities", False) else ann.KEY_TEXT


def _load_annotations(path, args):
    with _open(path) as fh:
        return ann.load_entity_annotations(fh, _norm(args), _entity_key(args),
                                           getattr(args, "multiset_entities", False))


def _load_gazetteer(path):
    with _open(path) as fh:
        return ann.Gazetteer.load(fh)


def _entity_source(args, annotations_path):
    """Return ``fn(target_id, text) -> EntitySet | None``."""
    if annotations_path:
        table = _load_annotations(annotations_path, args)
        return lambda tid, text: table.get(tid)
    if args.gazetteer:
        gaz = _load_gazetteer(args.gazetteer)
        norm, key, multi = _norm(args), _entity_key(args), args.multiset_entities
        return lambda tid, text: ann.extract_entities(text, gaz, norm, key, multi)
    raise UsageError("entities need --annotations or --gazetteer")


def _classifier(args):
    """Return ``(fn(target_id, text) -> distribution | None, inventory)``."""
    if args.distributions:
        with _open(args.distributions) as fh:
            table = cls.load_distributions(fh, args.inventory.split(",") if args.inventory else None)
        return (lambda tid, text: table.get(tid)), table.inventory
    if args.model:
        model = cls.NBModel.from_json(Path(args.model).read_text(encoding="utf-8"))
        if args.inventory and tuple(args.inventory.split(",")) != model.inventory:
            raise InventoryMismatch(f"model inventory {list(model.inventory)} != --inventory {args.inventory}")
        return (lambda tid, text: cls.predict_distribution(model, text)), model.inventory
    if args.endpoint:
        if not args.inventory:
            raise UsageError("--endpoint needs --inventory")
        inventory = tuple(args.inventory.split(","))
        client = cls.BackendClient(args.endpoint, max_retries=args.retries)
        return (lambda tid, text: cls.classify_remote(client, [text], inventory)[0]), inventory
    raise UsageError("call types need --distributions, --model or --endpoint")


def _pmap(args, fn, items):
    jobs = args.jobs or os.cpu_count() or 1
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# -- commands -----------------------------------------------------------------------


def cmd_stats(args):
    records = _load_corpus(args.corpus)
    st = cp.corpus_stats(records)

    def fmt(v):
        return "NA" if v is None else f"{v:.4f}"

    if args.format == "tsv":
        text = "n_dialogs\tmean_conv_len\tmean_sum_len\tn_with_synopsis\n"
        text += f"{st.n_dialogs}\t{fmt(st.mean_conv_len)}\t{fmt(st.mean_sum_len)}\t{st.n_with_synopsis}\n"
    else:
        text = json.dumps(st.__dict__, indent=2) + "\n"
    _emit(args, text)


def cmd_wer(args):
    hyp = {r.id: r for r in _load_corpus(args.corpus)}
    ref = _load_corpus(args.reference)
    rows, edits, words = [], 0, 0
    for r in sorted(ref, key=lambda r: r.id):
        if r.id not in hyp:
            if args.partial:
                continue
            raise MissingArtifact(r.id, "hypothesis transcript")
        h_tok = hyp[r.id].transcript.text().split()
        r_tok = r.transcript.text().split()
        if args.no_case_fold:
            counts = cp.edit_counts(h_tok, r_tok)
        else:
            counts = cp.edit_counts([w.casefold() for w in h_tok], [w.casefold() for w in r_tok])
        if r_tok:
            rows.append((r.id, sum(counts) / len(r_tok)))
        edits += sum(counts)
        words += len(r_tok)
    if words == 0:
        raise cp.EmptyReference("reference corpus has no words")
    doc = {"corpus_wer": edits / words, "n": len(rows), "per_dialog": dict(rows)}
    _emit(args, json.dumps(doc, indent=2) + "\n")


def cmd_annotate(args):
    gaz = _load_gazetteer(args.gazetteer) if args.gazetteer else None
    if gaz is None and not args.endpoint:
        raise UsageError("annotate needs --gazetteer or --endpoint")
    targets = []
    if args.corpus:
        for r in _load_corpus(args.corpus):
            text = r.reference_synopsis if args.field == "synopsis" else r.transcript.text()
            if text is not None:
                targets.append((r.id, text))
    if args.candidates:
        with _open(args.candidates) as fh:
            for lineno, obj in cp.iter_jsonl(fh):
                if not isinstance(obj, dict) or not isinstance(obj.get("candidate_id"), str) \
                        or not isinstance(obj.get("text"), str):
                    raise cp.SchemaViolation("candidate lines need 'candidate_id' and 'text'", lineno)
                targets.append((obj["candidate_id"], obj["text"]))
    if not args.corpus and not args.candidates:
        raise UsageError("annotate needs --corpus and/or --candidates")
    norm, key = _norm(args), _entity_key(args)
    if args.endpoint:
        client = cls.BackendClient(args.endpoint, max_retries=args.retries)
        sets = ann.extract_entities_remote(client, [t for _, t in targets], norm, key)
    else:
        sets = _pmap(args, lambda t: ann.extract_entities(t[1], gaz, norm, key), targets)
    _emit(args, cp.dumps_jsonl(ann.entity_set_to_json(tid, es) for (tid, _), es in zip(targets, sets)))


def cmd_classify(args):
    if args.action == "train":
        records = _load_corpus(args.corpus)
        labeled = []
        for r in records:
            text = r.reference_synopsis if args.field == "synopsis" else r.transcript.text()
            if text is not None and r.reference_call_type is not None:
                labeled.append((text, r.reference_call_type))
        inventory = args.inventory.split(",") if args.inventory else None
        model = cls.train_nb(labeled, args.alpha, inventory)
        _emit(args, model.to_json())
        return
    classify_fn, inventory = _classifier(args)
    targets = []
    if args.corpus:
        for r in _load_corpus(args.corpus):
            text = r.reference_synopsis if args.field == "synopsis" else r.transcript.text()
            if text is not None:
                targets.append((r.id, text))
    if args.candidates:
        with _open(args.candidates) as fh:
            for lineno, obj in cp.iter_jsonl(fh):
                if not isinstance(obj, dict) or not isinstance(obj.get("candidate_id"), str) \
                        or not isinstance(obj.get("text"), str):
                    raise cp.SchemaViolation("candidate lines need 'candidate_id' and 'text'", lineno)
                targets.append((obj["candidate_id"], obj["text"]))
    if not targets:
        raise UsageError("classify predict needs --corpus and/or --candidates")
    dists = _pmap(args, lambda t: classify_fn(*t), targets)
    missing = [tid for (tid, _), d in zip(targets, dists) if d is None]
    if missing:
        raise MissingArtifact(missing[0], "call-type distribution")
    _emit(args, cls.dump_distributions({tid: d for (tid, _), d in zip(targets, dists)}, inventory))


def _grid_spec(args):
    if args.grid_spec:
        spec = gh.GridSpec.from_json(json.loads(Path(args.grid_spec).read_text(encoding="utf-8")))
    elif args.paper_defaults:
        spec = gh.GridSpec.paper_defaults()
    else:
        raise UsageError("grid needs --paper-defaults or --grid-spec")
    overrides = {}
    if args.mode:
        overrides["mode"] = args.mode
    if args.n_samples:
        overrides["n_samples_per_config"] = args.n_samples
    if overrides:
        spec = gh.GridSpec(**{**spec.__dict__, **overrides})
    return spec


def cmd_grid(args):
    configs = gh.expand_grid(_grid_spec(args))
    if not args.corpus:
        doc = {"configs": [{"config_id": c.config_id, "strategy": c.strategy_json()} for c in configs],
               "expected_candidates": sum(c.expected_candidates for c in configs)}
        _emit(args, json.dumps(doc, indent=2) + "\n")
        return
    records = _load_corpus(args.corpus)
    conditioning = None
    if args.condition:
        classify_fn, _ = _classifier(args)
        conditioning = lambda rec: classify_fn(rec.id, rec.transcript.text())  # noqa: E731
    manifests = gh.emit_manifests(records, configs, conditioning, args.separator)
    _emit(args, gh.manifests_to_jsonl(manifests))


def cmd_prompt(args):
    if args.exemplar:
        ex_dialog = Path(args.exemplar).read_text(encoding="utf-8")
        if not args.exemplar_summary:
            raise UsageError("--exemplar needs --exemplar-summary")
        ex_summary = Path(args.exemplar_summary).read_text(encoding="utf-8")
    else:
        ex_dialog, ex_summary = gh.default_exemplar()
    template = Path(args.template).read_text(encoding="utf-8") if args.template else None
    req = gh.PromptRequest(ex_dialog, ex_summary, Path(args.target).read_text(encoding="utf-8"), template)
    _emit(args, gh.build_augmentation_prompt(req, args.allow_empty_target))


def _load_manifests(path):
    with _open(path) as fh:
        return gh.load_manifests(fh)


def cmd_ingest(args):
    manifests = _load_manifests(args.manifest)
    with _open(args.candidates) as fh:
        grouped = gh.read_candidates(manifests, fh, args.strict)
    lines = []
    for m in manifests:
        for c in grouped[m.dialog_id]:
            obj = {"dialog_id": c.dialog_id, "config_id": c.config_id, "candidate_id": c.candidate_id,
                   "text": c.text}
            if c.external_scores:
                obj["external_scores"] = c.external_scores
            lines.append(obj)
    _emit(args, cp.dumps_jsonl(lines))
    counts = {m.dialog_id: (len(grouped[m.dialog_id]), m.expected_candidates) for m in manifests}
    short = sum(1 for got, exp in counts.values() if got != exp)
    log.info("ingested %d candidates for %d dialogs (%d with unexpected counts)",
             len(lines), len(manifests), short)


def _build_pools(args):
    records = {r.id: r for r in _load_corpus(args.corpus)}
    manifests = _load_manifests(args.manifest)
    with _open(args.candidates) as fh:
        grouped = gh.read_candidates(manifests, fh, args.strict)
    entity_fn = _entity_source(args, args.annotations)
    classify_fn, _ = _classifier(args)
    pools, skipped = gh.build_pools(
        manifests, grouped, records,
        entities=lambda line: entity_fn(line.candidate_id, line.text),
        distributions=lambda line: classify_fn(line.candidate_id, line.text),
        dialog_distributions=lambda rec: classify_fn(rec.id, rec.transcript.text()),
        partial=args.partial,
    )
    return pools, skipped


def cmd_select(args):
    pools, skipped = _build_pools(args)
    results = _pmap(args, lambda p: crit.select(p, args.criterion, args.epsilon, args.baseline_config), pools)
    results.sort(key=lambda r: r.dialog_id)
    _emit(args, cp.dumps_jsonl(r.to_json() for r in results))
    ties = sum(r.tie_broken for r in results)
    degenerate = sum(r.degenerate for r in results)
    print(f"selected {len(results)} dialogs with {args.criterion}: {ties} tie-broken, "
          f"{degenerate} entity-free winners, {len(skipped)} skipped", file=sys.stderr)


def cmd_evaluate(args):
    records = {r.id: r for r in _load_corpus(args.corpus)}
    with _open(args.candidates) as fh:
        cand_lines = {}
        for lineno, obj in cp.iter_jsonl(fh):
            if not isinstance(obj, dict) or not all(isinstance(obj.get(k), str) for k in ("dialog_id", "candidate_id", "text")):
                raise cp.SchemaViolation("candidate lines need 'dialog_id', 'candidate_id' and 'text'", lineno)
            cand_lines[obj["candidate_id"]] = obj
    if args.selection:
        chosen = {}
        with _open(args.selection) as fh:
            for lineno, obj in cp.iter_jsonl(fh):
                if not isinstance(obj, dict) or not isinstance(obj.get("chosen"), str):
                    raise cp.SchemaViolation("selection lines need 'dialog_id' and 'chosen'", lineno)
                chosen[obj["dialog_id"]] = obj["chosen"]
    else:
        chosen = {}
        for cid, obj in cand_lines.items():
            if obj["dialog_id"] in chosen:
                raise cp.SchemaViolation(f"dialog {obj['dialog_id']!r} has several summaries; pass --selection")
            chosen[obj["dialog_id"]] = cid
    classify_fn, inventory = _classifier(args)
    summary_entities = _entity_source(args, args.annotations)
    reference_entities = _entity_source(args, args.reference_annotations)

    dialog_ids = sorted(chosen)
    summaries, refs, s_ents, r_ents, pred, gold, ext = {}, {}, {}, {}, {}, {}, {}

    def gather(did):
        rec, cid = records.get(did), chosen.get(did)
        line = cand_lines.get(cid) if cid else None
        out = {}
        if line is not None:
            out["summary"] = line["text"]
            out["s_ents"] = summary_entities(cid, line["text"])
            d = classify_fn(cid, line["text"])
            out["pred"] = cls.argmax_calltype(d) if d is not None else None
            if line.get("external_scores"):
                out["ext"] = line["external_scores"]
        if rec is not None:
            out["ref"] = rec.reference_synopsis
            if rec.reference_synopsis is not None:
                out["r_ents"] = reference_entities(did, rec.reference_synopsis)
            if args.reference_calltype == "dialog-classifier":
                d = classify_fn(did, rec.transcript.text())
                out["gold"] = cls.argmax_calltype(d) if d is not None else None
            else:
                out["gold"] = rec.reference_call_type
                if rec.reference_call_type is not None and rec.reference_call_type not in inventory:
                    raise InventoryMismatch(
                        f"dialog {did!r}: reference call type {rec.reference_call_type!r} "
                        f"not in classifier inventory {list(inventory)}")
        return did, out

    for did, out in _pmap(args, gather, dialog_ids):
        summaries[did] = out.get("summary")
        refs[did] = out.get("ref")
        s_ents[did] = out.get("s_ents")
        r_ents[did] = out.get("r_ents")
        pred[did] = out.get("pred")
        gold[did] = out.get("gold")
        if "ext" in out:
            ext[did] = out["ext"]
    report = mx.build_report(dialog_ids, summaries, refs, s_ents, r_ents, pred, gold, ext,
                             beta=args.beta, partial=args.partial)
    if report.excluded:
        print(f"excluded {len(report.excluded)} dialogs with missing inputs", file=sys.stderr)
    if args.out:
        _emit(args, report.to_json(), "report.json")
        _emit(args, report.to_tsv(), "report.tsv")
    if args.format == "tsv":
        row = report.table_row()
        sys.stdout.write("\t".join(row) + "\n" + "\t".join("NA" if v is None else f"{v:.4f}" for v in row.values()) + "\n")
    else:
        sys.stdout.write(json.dumps({"n": report.aggregate["n"], **report.table_row()}, indent=2) + "\n")


# -- parser ----------------------------------------------------------------------


def _add(p, *names, **kw):
    p.add_argument(*names, **kw)


def _common(p, out_help="output file (default: stdout)"):
    _add(p, "--config", help=f"JSON config file of flag values (default: ${CONFIG_ENV})")
    _add(p, "--out", help=out_help)
    _add(p, "--jobs", type=int, default=0, help="worker threads (default: available CPUs)")
    _add(p, "-v", "--verbose", action="store_true", help="log progress to stderr")


def _entity_flags(p):
    _add(p, "--gazetteer", help="gazetteer TSV (type, pattern, literal|regex)")
    _add(p, "--accent-fold", action="store_true", help="fold accents when normalizing entities")
    _add(p, "--type-aware-entities", action="store_true", help="match entities on text and type")
    _add(p, "--multiset-entities", action="store_true", help="count repeated entity mentions")


def _class_flags(p):
    _add(p, "--distributions", help="call-type distributions JSON-lines")
    _add(p, "--model", help="naive Bayes model file")
    _add(p, "--endpoint", help="remote classifier URL")
    _add(p, "--retries", type=int, default=3, help="retries for remote calls")
    _add(p, "--inventory", help="comma-separated call-type inventory")


def build_parser():
    parser = _Parser(prog="faithsel", description="Select and evaluate dialog summaries by task semantics.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("stats", help="corpus statistics")
    _common(p)
    _add(p, "--corpus")
    _add(p, "--format", choices=["json", "tsv"], default="json")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("wer", help="word error rate of ASR transcripts against manual ones")
    _common(p)
    _add(p, "--corpus", help="hypothesis (ASR) corpus")
    _add(p, "--reference", help="reference (manual) corpus")
    _add(p, "--no-case-fold", action="store_true")
    _add(p, "--partial", action="store_true", help="skip dialogs without a hypothesis")
    p.set_defaults(func=cmd_wer)

    p = sub.add_parser("annotate", help="extract entities into annotation JSON-lines")
    _common(p)
    _entity_flags(p)
    _add(p, "--corpus")
    _add(p, "--field", choices=["synopsis", "transcript"], default="synopsis")
    _add(p, "--candidates")
    _add(p, "--endpoint", help="remote NER URL")
    _add(p, "--retries", type=int, default=3)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("classify", help="train the naive Bayes classifier or predict distributions")
    _common(p)
    _class_flags(p)
    _add(p, "action", choices=["train", "predict"])
    _add(p, "--corpus")
    _add(p, "--field", choices=["transcript", "synopsis"], default="transcript")
    _add(p, "--candidates")
    _add(p, "--alpha", type=float, default=1.0, help="additive smoothing constant")
    _add(p, "--seed", type=int, help="reserved; training is deterministic")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("grid", help="expand decoding grid and emit generation manifests")
    _common(p)
    _class_flags(p)
    _add(p, "--corpus")
    _add(p, "--paper-defaults", action="store_true", help="top-p, top-k, temperature sweeps, greedy, beam 6")
    _add(p, "--grid-spec", help="grid spec JSON file")
    _add(p, "--mode", choices=["independent_sweeps", "cross_product"])
    _add(p, "--n-samples", type=int, help="samples per sampling config")
    _add(p, "--condition", action="store_true", help="prefix inputs with the predicted call type")
    _add(p, "--separator", default=gh.DEFAULT_SEPARATOR)
    _add(p, "--seed", type=int, help="reserved; expansion is deterministic")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("prompt", help="build a one-shot summarization prompt")
    _common(p)
    _add(p, "--exemplar", help="exemplar dialog markup (default: bundled)")
    _add(p, "--exemplar-summary")
    _add(p, "--target", help="target dialog markup")
    _add(p, "--template", help="template file with {EXEMPLAR_DIALOG} etc.")
    _add(p, "--allow-empty-target", action="store_true")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("ingest", help="validate and order generator output against manifests")
    _common(p)
    _add(p, "--manifest")
    _add(p, "--candidates")
    _add(p, "--strict", action="store_true", help="candidate count mismatch is an error")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("select", help="choose one candidate per dialog")
    _common(p)
    _entity_flags(p)
    _class_flags(p)
    _add(p, "--corpus")
    _add(p, "--manifest")
    _add(p, "--candidates")
    _add(p, "--annotations", help="entity annotations for candidates")
    _add(p, "--criterion", choices=list(crit.CRITERIA), default="combined")
    _add(p, "--epsilon", type=float, default=crit.DEFAULT_EPSILON)
    _add(p, "--baseline-config", help="config id whose first candidate is the baseline")
    _add(p, "--strict", action="store_true")
    _add(p, "--partial", action="store_true", help="skip dialogs with missing inputs")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score selected or fixed summaries")
    _common(p, out_help="output directory for report.json / report.tsv")
    _entity_flags(p)
    _class_flags(p)
    _add(p, "--corpus")
    _add(p, "--candidates")
    _add(p, "--selection", help="selection JSON-lines (default: one candidate per dialog)")
    _add(p, "--annotations", help="entity annotations for summaries")
    _add(p, "--reference-annotations", help="entity annotations for reference synopses")
    _add(p, "--reference-calltype", choices=["annotated", "dialog-classifier"], default="annotated")
    _add(p, "--beta", type=float, default=1.0)
    _add(p, "--partial", action="store_true")
    _add(p, "--format", choices=["json", "tsv"], default="json")
    p.set_defaults(func=cmd_evaluate)
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        return args
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise cp.SchemaViolation(f"config file {path}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise cp.SchemaViolation(f"config file {path} must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items() if k.replace("-", "_") in known})
    return parser.parse_args(argv)


REQUIRED = {
    "stats": ("corpus",),
    "wer": ("corpus", "reference"),
    "prompt": ("target",),
    "ingest": ("manifest", "candidates"),
    "select": ("corpus", "manifest", "candidates"),
    "evaluate": ("corpus", "candidates"),
}


def _check_required(args):
    missing = [n for n in REQUIRED.get(args.command, ()) if not getattr(args, n)]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _check_numbers(args):
    if getattr(args, "epsilon", 1.0) <= 0:
        raise UsageError("--epsilon must be > 0")
    if getattr(args, "beta", 1.0) <= 0:
        raise UsageError("--beta must be > 0")
    if getattr(args, "alpha", 1.0) <= 0:
        raise UsageError("--alpha must be > 0")
    if args.jobs < 0:
        raise UsageError("--jobs must be >= 0")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        _check_required(args)
        _check_numbers(args)
        args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except UsageError as exc:
        print(f"faithsel: usage error: {exc}", file=sys.stderr)
        return 1
    except FaithselError as exc:
        print(f"faithsel: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"faithsel: input error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
