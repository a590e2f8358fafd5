#!/usr/bin/env python3
"""Sweep the fusion weight on a synthetic corpus and print the grid.

Shows how the optimum moves as the frame-level signal weakens: with a
strong planted signal the best weight sits near 0 (trust the frames);
with a weak one it moves toward the base model.

Usage: python scripts/alpha_sweep.py [--seed 0] [--planted-weight 0.55]
"""

import argparse
import sys

from avsrerank.experiments import SweepSpec, sweep
from avsrerank.synthetic import planted_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--planted-weight", type=float, default=0.55)
    parser.add_argument("--base-noise", type=float, default=0.6)
    parser.add_argument("--plant-rate", type=float, default=0.7)
    parser.add_argument(
        "--alphas",
        type=float,
        nargs="+",
        default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    )
    args = parser.parse_args()

    corpus = planted_corpus(
        args.seed,
        planted_weight=args.planted_weight,
        base_noise=args.base_noise,
        plant_rate=args.plant_rate,
    )
    n = max(len(e) for e in corpus.run.entries.values())
    spec = SweepSpec(alphas=args.alphas, ks=[n], metric="ap")
    result = sweep(corpus.run, corpus.store, corpus.query_embs, corpus.qrels, spec)
    sys.stdout.write(result.to_tsv())
    return 0


if __name__ == "__main__":
    sys.exit(main())
