"""Paired-image dataset loading: directory scan, manifests, batching.

The on-disk layout is one directory per capture condition, each with
``source`` (degraded) and ``reference`` (clean) subdirectories whose
files pair by stem::

    root/
      night/
        source/0001.png
        reference/0001.png
      fog/
        ...

Scanning is a pure function of the directory content: entries come out
sorted by source path, and files lacking a partner are reported rather
than silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import DataError, EmptyDatasetError, ParameterError
from .image_core import ImageBuffer, RandomState, load_image

__all__ = [
    "CONDITIONS",
    "IMAGE_SUFFIXES",
    "PairEntry",
    "PairManifest",
    "LoadedPair",
    "scan",
    "batches",
    "load_pair",
]

CONDITIONS = ("snow", "rain", "fog", "night", "other")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class PairEntry:
    """One source/reference file pair with its capture condition."""

    source_path: Path
    target_path: Path
    condition: str

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ParameterError(
                f"condition must be one of {CONDITIONS}, got {self.condition!r}"
            )


@dataclass(frozen=True)
class PairManifest:
    """Scan result: matched pairs plus every file left unmatched."""

    root: Path
    entries: tuple[PairEntry, ...]
    unmatched: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def export_index(self) -> str:
        """Plain-text index: one source<TAB>target<TAB>condition line."""
        lines = [
            f"{entry.source_path}\t{entry.target_path}\t{entry.condition}"
            for entry in self.entries
        ]
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass(frozen=True)
class LoadedPair:
    """Decoded pixel data for one manifest entry."""

    source: ImageBuffer
    target: ImageBuffer
    entry: PairEntry


def _image_files(directory: Path) -> dict[str, Path]:
    files = {}
    if directory.is_dir():
        for path in sorted(directory.iterdir()):
            if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES:
                files[path.stem] = path
    return files


def scan(root: str | Path) -> PairManifest:
    """Build a manifest from a condition-directory tree.

    Parameters
    ----------
    root : path
        Directory holding one subdirectory per condition; directory
        names outside the known conditions are kept under ``other``.

    Returns
    -------
    PairManifest
        Entries sorted by source path; sources and references without a
        same-stem partner listed in ``unmatched``.
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist or is not a directory")
    entries = []
    unmatched = []
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            continue
        condition = child.name if child.name in CONDITIONS else "other"
        sources = _image_files(child / "source")
        references = _image_files(child / "reference")
        for stem, source_path in sources.items():
            if stem in references:
                entries.append(
                    PairEntry(
                        source_path=source_path,
                        target_path=references[stem],
                        condition=condition,
                    )
                )
            else:
                unmatched.append(source_path)
        for stem, reference_path in references.items():
            if stem not in sources:
                unmatched.append(reference_path)
    if not entries:
        raise EmptyDatasetError(f"no source/reference pairs found under {root}")
    entries.sort(key=lambda entry: str(entry.source_path))
    unmatched.sort()
    return PairManifest(root=root, entries=tuple(entries), unmatched=tuple(unmatched))


def batches(
    manifest: PairManifest, batch_size: int, rng: RandomState
) -> list[list[PairEntry]]:
    """One epoch of entry batches in a seed-determined shuffled order.

    Every entry appears exactly once; the final batch keeps whatever
    remainder is left when ``batch_size`` does not divide the dataset.
    """
    if batch_size < 1:
        raise ParameterError(f"batch_size must be at least 1, got {batch_size}")
    order = rng.permutation(len(manifest.entries))
    shuffled = [manifest.entries[k] for k in order]
    return [
        shuffled[start : start + batch_size]
        for start in range(0, len(shuffled), batch_size)
    ]


def _upscale_to_min_side(image: ImageBuffer, min_side: int) -> ImageBuffer:
    """Bicubic upscale preserving aspect so the short side reaches min_side."""
    short = min(image.height, image.width)
    if short >= min_side:
        return image
    scale = min_side / short
    new_h = max(min_side, round(image.height * scale))
    new_w = max(min_side, round(image.width * scale))
    tensor = torch.from_numpy(np.ascontiguousarray(np.moveaxis(image.data, 2, 0)[np.newaxis]))
    resized = torch.nn.functional.interpolate(
        tensor, size=(new_h, new_w), mode="bicubic", align_corners=False
    )
    arr = np.clip(np.moveaxis(resized[0].numpy(), 0, 2), 0.0, 1.0)
    return ImageBuffer(arr)


def load_pair(entry: PairEntry, min_side: int | None = None) -> LoadedPair:
    """Decode one entry's images, upscaling any image below ``min_side``.

    Untouched images pass through bit-exactly; only images whose short
    side falls below ``min_side`` are bicubically enlarged (aspect
    preserved, values clipped back to [0, 1]).
    """
    source = load_image(entry.source_path)
    target = load_image(entry.target_path)
    if min_side is not None:
        source = _upscale_to_min_side(source, min_side)
        target = _upscale_to_min_side(target, min_side)
    return LoadedPair(source=source, target=target, entry=entry)
