"""Write a pseudo-random XYZ corpus, one structure per file.

    python3 scripts/make_corpus.py --out corpus/ --n 200 --seed 0
    python3 scripts/make_corpus.py --out mols/ --n 200 --molecules
"""
import argparse
from pathlib import Path

import numpy as np

from octok.formats import write_xyz
from octok.synthetic import CorpusConfig, random_corpus, random_molecule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-sites", type=int, default=200)
    ap.add_argument("--max-extent", type=float, default=50.0)
    ap.add_argument("--molecules", action="store_true", help="small organic-like molecules instead")
    args = ap.parse_args()

    if args.molecules:
        rng = np.random.default_rng(args.seed)
        frames = [random_molecule(rng) for _ in range(args.n)]
    else:
        cfg = CorpusConfig(n_structures=args.n, max_sites=args.max_sites, max_extent=args.max_extent,
                           seed=args.seed)
        frames = random_corpus(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, fr in enumerate(frames):
        (out / f"s{i:05d}.xyz").write_text(write_xyz([fr]))
    print(f"wrote {len(frames)} structures to {out}")


if __name__ == "__main__":
    main()
