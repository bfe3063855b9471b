"""End-to-end run of the command-line pipeline on the synthetic corpus."""

from __future__ import annotations

import contextlib
import io
import json
from pathlib import Path

from . import synthetic
from .cli import main
from .criteria import CRITERIA


class PipelineFailed(RuntimeError):
    pass


def _run(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
        code = main([str(a) for a in argv])
    if code != 0:
        raise PipelineFailed(f"faithsel {' '.join(map(str, argv))} exited with {code}:\n{buf.getvalue()}")


def run_pipeline(workdir, criteria=CRITERIA, baseline_config="beam-size6-best6", seed=0) -> dict:
    """Train, select with each criterion and evaluate; returns the aggregate
    block of each criterion's report."""
    work = Path(workdir)
    paths = synthetic.write_toy_data(work / "data", seed=seed)
    model = work / "model.json"
    _run("classify", "train", "--corpus", paths["train"], "--out", model)
    common = ["--corpus", paths["corpus"], "--candidates", paths["candidates"],
              "--gazetteer", paths["gazetteer"], "--model", model]
    results = {}
    for criterion in criteria:
        sel = work / f"select.{criterion}.jsonl"
        _run("select", *common, "--manifest", paths["manifests"], "--criterion", criterion,
             "--baseline-config", baseline_config, "--strict", "--out", sel)
        rep = work / f"report.{criterion}"
        _run("evaluate", *common, "--selection", sel, "--out", rep)
        results[criterion] = json.loads((rep / "report.json").read_text(encoding="utf-8"))["aggregate"]
    return results
