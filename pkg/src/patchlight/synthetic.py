"""Procedural paired images for tests and toy training runs.

Targets are bright synthetic scenes with structure at three scales — a
smooth background gradient, a handful of solid shapes, and a fine
sinusoidal texture.  Sources are the same scenes pushed through a fixed
degradation: gamma darkening, a cold blue cast, and sensor-style
Gaussian noise.  The degradation is global and invertible-in-mean, so a
small residual model can genuinely undo it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .image_core import ImageBuffer, RandomState, save_image

__all__ = [
    "GAMMA",
    "COLOR_CAST",
    "NOISE_SIGMA",
    "procedural_scene",
    "degrade",
    "toy_pairs",
    "write_toy_dataset",
]

GAMMA = 2.5
COLOR_CAST = (0.7, 0.85, 1.0)
NOISE_SIGMA = 0.02


def procedural_scene(height: int, width: int, rng: RandomState) -> ImageBuffer:
    """Bright multi-scale scene: gradient + shapes + fine texture."""
    ys = np.linspace(0.0, 1.0, height)[:, None, None]
    top = rng.uniform(0.55, 0.9, size=3)
    bottom = rng.uniform(0.35, 0.7, size=3)
    canvas = top * (1.0 - ys) + bottom * ys
    canvas = np.broadcast_to(canvas, (height, width, 3)).copy()

    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(int(rng.integers(4, 8))):
        color = rng.uniform(0.25, 0.95, size=3)
        cy = float(rng.uniform(0, height))
        cx = float(rng.uniform(0, width))
        if rng.uniform(0.0, 1.0) < 0.5:
            radius = float(rng.uniform(0.08, 0.22)) * min(height, width)
            inside = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
        else:
            half_h = float(rng.uniform(0.06, 0.2)) * height
            half_w = float(rng.uniform(0.06, 0.2)) * width
            inside = (np.abs(yy - cy) <= half_h) & (np.abs(xx - cx) <= half_w)
        canvas[inside] = 0.7 * color + 0.3 * canvas[inside]

    fy = float(rng.uniform(0.15, 0.45))
    fx = float(rng.uniform(0.15, 0.45))
    phase = float(rng.uniform(0.0, 2 * np.pi))
    texture = 0.04 * np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
    canvas += texture[:, :, None]
    return ImageBuffer(np.clip(canvas, 0.0, 1.0))


def degrade(image: ImageBuffer, rng: RandomState) -> ImageBuffer:
    """Adverse-condition counterpart: darken, cool the colors, add noise."""
    dark = image.data**GAMMA
    cast = dark * np.asarray(COLOR_CAST)[None, None, :]
    noisy = cast + rng.normal(0.0, NOISE_SIGMA, size=cast.shape)
    return ImageBuffer(np.clip(noisy, 0.0, 1.0))


def toy_pairs(
    count: int = 8, height: int = 128, width: int = 128, seed: int = 0
) -> list[tuple[ImageBuffer, ImageBuffer]]:
    """(source, target) pairs: degraded scenes and their clean originals."""
    rng = RandomState(seed)
    pairs = []
    for _ in range(count):
        target = procedural_scene(height, width, rng)
        source = degrade(target, rng)
        pairs.append((source, target))
    return pairs


def write_toy_dataset(
    root: str | Path,
    count: int = 8,
    height: int = 128,
    width: int = 128,
    seed: int = 0,
    condition: str = "night",
) -> Path:
    """Materialize a toy dataset in the on-disk pairing layout.

    Creates ``root/<condition>/source/pair###.png`` and matching
    ``root/<condition>/reference/pair###.png`` files, returning the
    root path.
    """
    root = Path(root)
    source_dir = root / condition / "source"
    reference_dir = root / condition / "reference"
    source_dir.mkdir(parents=True, exist_ok=True)
    reference_dir.mkdir(parents=True, exist_ok=True)
    for k, (source, target) in enumerate(toy_pairs(count, height, width, seed)):
        save_image(source, source_dir / f"pair{k:03d}.png")
        save_image(target, reference_dir / f"pair{k:03d}.png")
    return root
