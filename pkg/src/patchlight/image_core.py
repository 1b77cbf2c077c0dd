"""Core image, patch-geometry, and random-state types.

Images are H x W x C float64 arrays with values confined to a closed
range, [0, 1] for pictures and [-1, 1] for enhancement masks.  All
operations are pure: inputs are never mutated, and buffers expose
read-only views so accidental writes fail loudly.  A ``RandomState``
is the only stateful object; each instance must stay confined to one
thread of control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BoundsError, DataError, ParameterError

__all__ = [
    "PatchRegion",
    "ImageBuffer",
    "RandomState",
    "crop",
    "center_crop_region",
    "random_region",
    "compose_regions",
    "load_image",
    "save_image",
]


@dataclass(frozen=True)
class PatchRegion:
    """Rectangle (top, left, height, width) inside some parent image.

    Bounds against a concrete parent are validated at the use site
    (``crop``), not here, so regions can be built before their parent
    is known.
    """

    top: int
    left: int
    height: int
    width: int

    def __post_init__(self):
        if self.top < 0 or self.left < 0:
            raise ParameterError(
                f"region origin must be non-negative, got ({self.top}, {self.left})"
            )
        if self.height < 1 or self.width < 1:
            raise ParameterError(
                f"region sides must be at least 1, got {self.height}x{self.width}"
            )

    @property
    def bottom(self) -> int:
        return self.top + self.height

    @property
    def right(self) -> int:
        return self.left + self.width

    @property
    def area(self) -> int:
        return self.height * self.width

    def contains(self, other: "PatchRegion") -> bool:
        """True when ``other`` lies fully inside this region (same frame)."""
        return (
            other.top >= self.top
            and other.left >= self.left
            and other.bottom <= self.bottom
            and other.right <= self.right
        )

    def shifted(self, dy: int, dx: int) -> "PatchRegion":
        return PatchRegion(self.top + dy, self.left + dx, self.height, self.width)


class ImageBuffer:
    """H x W x C float image with every value inside a closed range.

    ``channels`` is 3 for RGB and 1 for scalar maps.  Data is stored as
    a read-only float64 array; construct a new buffer to change pixels.
    """

    def __init__(self, data, low: float = 0.0, high: float = 1.0):
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ParameterError(f"image data must be HxW or HxWxC, got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ParameterError(f"image must be at least 1x1, got {h}x{w}")
        if c not in (1, 3):
            raise ParameterError(f"images must have 1 or 3 channels, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("image values must be finite")
        if arr.size and (arr.min() < low or arr.max() > high):
            raise ParameterError(
                f"image values must lie in [{low}, {high}], "
                f"got range [{arr.min()}, {arr.max()}]"
            )
        arr.flags.writeable = False
        self._data = arr
        self._low = float(low)
        self._high = float(high)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def channels(self) -> int:
        return self._data.shape[2]

    @property
    def low(self) -> float:
        return self._low

    @property
    def high(self) -> float:
        return self._high

    def full_region(self) -> PatchRegion:
        return PatchRegion(0, 0, self.height, self.width)

    def __repr__(self):
        return (
            f"ImageBuffer({self.height}x{self.width}x{self.channels}, "
            f"range=[{self._low}, {self._high}])"
        )


class RandomState:
    """Seeded random source; identical seeds give identical draw sequences.

    Each instance is confined to one thread of control.  ``stream``
    derives independent sequences from one seed (crop sampling, data
    shuffling, and parameter init never share a stream).
    """

    algorithm = "pcg64"

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def derive(self, stream: int) -> "RandomState":
        """Fresh state on an independent stream of the same seed."""
        return RandomState(self.seed, stream)

    def integers(self, low: int, high: int) -> int:
        """One integer drawn uniformly from [low, high)."""
        return int(self._gen.integers(low, high))

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float, scale: float, size=None):
        return self._gen.normal(loc, scale, size)

    def get_state(self) -> dict:
        """Snapshot of the generator state, exact enough to resume bit-for-bit."""
        return {
            "seed": self.seed,
            "stream": self.stream,
            "algorithm": self.algorithm,
            "bit_generator": self._gen.bit_generator.state,
        }

    def set_state(self, state: dict) -> None:
        if state.get("algorithm") != self.algorithm:
            raise ParameterError(
                f"cannot restore {state.get('algorithm')!r} state into {self.algorithm}"
            )
        self.seed = int(state["seed"])
        self.stream = int(state["stream"])
        self._gen.bit_generator.state = state["bit_generator"]

    @classmethod
    def from_state(cls, state: dict) -> "RandomState":
        rng = cls(state["seed"], state.get("stream", 0))
        rng.set_state(state)
        return rng


def crop(image: ImageBuffer, region: PatchRegion) -> ImageBuffer:
    """Copy the pixels under ``region`` out of ``image``.

    The region must lie fully inside the image; violations name the
    offending edge.  Values are copied bit-exactly.
    """
    if region.bottom > image.height:
        raise BoundsError(
            f"region bottom ({region.bottom}) exceeds image height ({image.height})"
        )
    if region.right > image.width:
        raise BoundsError(
            f"region right ({region.right}) exceeds image width ({image.width})"
        )
    block = image.data[region.top : region.bottom, region.left : region.right, :]
    return ImageBuffer(block, low=image.low, high=image.high)


def center_crop_region(parent: PatchRegion, fraction: float) -> PatchRegion:
    """Centered sub-region covering ``fraction`` of the parent's area.

    Side lengths scale by sqrt(fraction), rounded down and clamped to at
    least 1.  Leftover margin is split evenly with the floor going to the
    top/left offset, so any odd pixel lands on the bottom/right.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must be in (0, 1], got {fraction}")
    scale = math.sqrt(fraction)
    child_h = max(1, int(parent.height * scale))
    child_w = max(1, int(parent.width * scale))
    off_y = (parent.height - child_h) // 2
    off_x = (parent.width - child_w) // 2
    return PatchRegion(parent.top + off_y, parent.left + off_x, child_h, child_w)


def random_region(
    image_h: int, image_w: int, patch_h: int, patch_w: int, rng: RandomState
) -> PatchRegion:
    """Uniformly placed patch_h x patch_w region inside an image_h x image_w frame."""
    if patch_h > image_h or patch_w > image_w:
        raise ParameterError(
            f"patch {patch_h}x{patch_w} does not fit in image {image_h}x{image_w}"
        )
    top = rng.integers(0, image_h - patch_h + 1)
    left = rng.integers(0, image_w - patch_w + 1)
    return PatchRegion(top, left, patch_h, patch_w)


def compose_regions(outer: PatchRegion, inner: PatchRegion) -> PatchRegion:
    """Express ``inner`` (given relative to ``outer``) in the outer's parent frame."""
    if inner.bottom > outer.height or inner.right > outer.width:
        raise BoundsError(
            f"inner region {inner} does not fit inside {outer.height}x{outer.width}"
        )
    return PatchRegion(
        outer.top + inner.top, outer.left + inner.left, inner.height, inner.width
    )


def load_image(path) -> ImageBuffer:
    """Load a PNG or JPEG as RGB (or grayscale) normalized to [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"image file not found: {path}")
    try:
        with Image.open(path) as img:
            mode = "L" if img.mode in ("L", "I;16", "1") else "RGB"
            arr = np.asarray(img.convert(mode), dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise DataError(f"cannot decode image: {path}") from exc
    return ImageBuffer(arr / 255.0)


def save_image(image: ImageBuffer, path) -> None:
    """Write as 8-bit PNG/JPEG: clamp to [0, 1] then quantize round-half-up."""
    path = Path(path)
    arr = np.clip(image.data, 0.0, 1.0)
    quantized = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    if image.channels == 1:
        pil = Image.fromarray(quantized[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(quantized, mode="RGB")
    path.parent.mkdir(parents=True, exist_ok=True)
    pil.save(path)
