"""Run the whole pipeline on the synthetic corpus and print one results row
per selection criterion.

    python scripts/run_smoke.py [workdir]
"""
import argparse
import tempfile

from faithsel.smoke import run_pipeline

COLUMNS = [("ROUGE-L", "rouge_l_mean"), ("CT-Acc", "ct_acc"), ("NE-P", "ne_p_mean"),
           ("NE-R", "ne_r_mean"), ("NE-F1", "ne_f1_mean")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("workdir", nargs="?")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        results = run_pipeline(args.workdir or tmp)
    print("\t".join(["criterion"] + [c for c, _ in COLUMNS] + ["BERTScore*"]))
    for criterion, agg in results.items():
        bert = agg.get("external_means", {}).get("bertscore")
        cells = [f"{agg[k]:.4f}" for _, k in COLUMNS] + ["NA" if bert is None else f"{bert:.4f}"]
        print("\t".join([criterion] + cells))
    print("* BERTScore column averages the scripted external scores, not a computed metric.")


if __name__ == "__main__":
    main()
