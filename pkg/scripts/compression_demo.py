"""Token count against dense-grid size as structures grow.

Prints one row per site count: octree depth, code and atom tokens, the
per-child (uncompressed) octree count and the dense leaf count.
"""
import argparse

import numpy as np

from octok.geometry import fit_grid
from octok.synthetic import random_structure
from octok.tokenizer import serialize, token_stats


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1, 10, 18, 50, 100, 200])
    ap.add_argument("--density", type=float, default=0.1, help="sites per cubic angstrom")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'sites':>6} {'L':>3} {'code':>6} {'atom':>6} {'naive':>7} {'dense':>12} {'ratio':>9}")
    for n in args.sizes:
        extent = max(1.0, (n / args.density) ** (1 / 3))
        fr = random_structure(rng, n, extent)
        spec = fit_grid([fr])
        st = token_stats(serialize(spec, [fr]))
        print(f"{len(fr.sites):>6} {spec.L:>3} "
              f"{st.code_count:>6} {st.atom_count:>6} {st.naive_octree_equivalent:>7} "
              f"{st.dense_equivalent:>12} {st.ratio:>9.1f}")


if __name__ == "__main__":
    main()
