#!/usr/bin/env python3
"""Generate a synthetic paired dataset for experiments and demos.

Targets are bright procedural scenes; sources are the same scenes
gamma-darkened, color-cast toward blue, and lightly noised — a
stand-in for night/adverse captures with a known clean reference.

Example
-------
    python3 scripts/make_toy_dataset.py out/toy --count 8 --size 128
"""

import argparse
import sys
from pathlib import Path

from patchlight.synthetic import write_toy_dataset


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("root", type=Path, help="dataset directory to create")
    parser.add_argument("--count", type=int, default=8, help="number of pairs")
    parser.add_argument("--size", type=int, default=128, help="image side length")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--condition",
        default="night",
        help="condition subdirectory name (snow, rain, fog, night, other)",
    )
    args = parser.parse_args(argv)
    write_toy_dataset(
        args.root,
        count=args.count,
        height=args.size,
        width=args.size,
        seed=args.seed,
        condition=args.condition,
    )
    print(f"wrote {args.count} pairs under {args.root / args.condition}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
