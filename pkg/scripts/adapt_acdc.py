#!/usr/bin/env python3
"""Reshape an ACDC-style download into the training layout.

The ACDC distribution stores adverse frames and their clear-weather
references in parallel trees:

    rgb_anon/<condition>/<split>/<sequence>/<frame>_rgb_anon.png
    rgb_anon/<condition>/<split>_ref/<sequence>/<frame>_rgb_ref_anon.png

This script pairs them by frame stem and copies (or symlinks) both
sides into the layout the trainer scans:

    <out>/<condition>/source/<frame>.png
    <out>/<condition>/reference/<frame>.png

Example
-------
    python3 scripts/adapt_acdc.py /data/acdc/rgb_anon out/acdc --split train --link
"""

import argparse
import shutil
import sys
from pathlib import Path

ADVERSE_SUFFIX = "_rgb_anon.png"
REFERENCE_SUFFIX = "_rgb_ref_anon.png"
CONDITIONS = ("fog", "night", "rain", "snow")


def find_pairs(root: Path, split: str):
    """Yield (condition, stem, adverse_path, reference_path) tuples."""
    for condition in CONDITIONS:
        adverse_dir = root / condition / split
        reference_dir = root / condition / f"{split}_ref"
        if not adverse_dir.is_dir():
            continue
        references = {}
        if reference_dir.is_dir():
            for path in reference_dir.rglob(f"*{REFERENCE_SUFFIX}"):
                references[path.name[: -len(REFERENCE_SUFFIX)]] = path
        for path in sorted(adverse_dir.rglob(f"*{ADVERSE_SUFFIX}")):
            stem = path.name[: -len(ADVERSE_SUFFIX)]
            reference = references.get(stem)
            if reference is not None:
                yield condition, stem, path, reference


def place(source: Path, destination: Path, link: bool) -> None:
    destination.parent.mkdir(parents=True, exist_ok=True)
    if destination.exists():
        return
    if link:
        destination.symlink_to(source.resolve())
    else:
        shutil.copyfile(source, destination)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("acdc_root", type=Path, help="the rgb_anon directory")
    parser.add_argument("out", type=Path, help="dataset root to create")
    parser.add_argument("--split", default="train", help="train, val, or test")
    parser.add_argument(
        "--link",
        action="store_true",
        help="symlink instead of copying (saves space, needs the source kept)",
    )
    parser.add_argument(
        "--limit", type=int, help="keep at most this many pairs per condition"
    )
    args = parser.parse_args(argv)

    if not args.acdc_root.is_dir():
        print(f"error: {args.acdc_root} is not a directory", file=sys.stderr)
        return 3

    counts = {}
    for condition, stem, adverse, reference in find_pairs(args.acdc_root, args.split):
        if args.limit is not None and counts.get(condition, 0) >= args.limit:
            continue
        place(adverse, args.out / condition / "source" / f"{stem}.png", args.link)
        place(reference, args.out / condition / "reference" / f"{stem}.png", args.link)
        counts[condition] = counts.get(condition, 0) + 1

    if not counts:
        print("error: no paired frames found; check the root and split", file=sys.stderr)
        return 3
    for condition in sorted(counts):
        print(f"{condition}: {counts[condition]} pair(s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
