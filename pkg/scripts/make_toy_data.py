"""Write the synthetic transit corpus, gazetteer, default-grid manifests and
scripted generator output into a directory.

    python scripts/make_toy_data.py out/toy
"""
import argparse

from faithsel import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    paths = synthetic.write_toy_data(args.outdir, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}\t{path}")


if __name__ == "__main__":
    main()
