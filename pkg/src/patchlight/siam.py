"""Illumination-derived attention maps and their multi-scale pyramid.

Per-pixel illumination is the maximum over the RGB channels.  The naive
attention weight is its complement, so dark pixels score high; the
scaled variant bends that ramp upward, keeping strong weight on
mid-bright pixels that still need enhancement while leaving saturated
ones alone.  A pyramid of mean-pooled copies feeds the multi-resolution
stages of the enhancement network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .image_core import ImageBuffer

__all__ = [
    "AttentionMap",
    "AttentionPyramid",
    "illumination",
    "naive_attention",
    "scaled_attention",
    "attention_from_image",
    "build_pyramid",
]

_KINDS = ("illumination", "naive", "scaled")


class AttentionMap:
    """H x W float64 weight map in [0, 1] tagged with how it was derived."""

    def __init__(self, data, kind: str):
        if kind not in _KINDS:
            raise ParameterError(f"kind must be one of {_KINDS}, got {kind!r}")
        arr = np.array(data, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ParameterError(f"attention map must be HxW, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("attention values must be finite")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ParameterError(
                f"attention values must lie in [0, 1], got "
                f"[{arr.min()}, {arr.max()}]"
            )
        arr.flags.writeable = False
        self.data = arr
        self.kind = kind

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"AttentionMap({self.height}x{self.width}, kind={self.kind!r})"


@dataclass(frozen=True)
class AttentionPyramid:
    """Attention at descending resolutions, finest first.

    Level k has dimensions ceil(H / 2**k) x ceil(W / 2**k) where H x W
    is the level-0 map; one level feeds each resolution stage of the
    generator.
    """

    levels: tuple[AttentionMap, ...]

    def __post_init__(self):
        if not self.levels:
            raise ParameterError("a pyramid needs at least one level")
        base = self.levels[0]
        for k, level in enumerate(self.levels):
            want = (-(-base.height // 2**k), -(-base.width // 2**k))
            if (level.height, level.width) != want:
                raise ParameterError(
                    f"pyramid level {k} must be {want[0]}x{want[1]}, "
                    f"got {level.height}x{level.width}"
                )
            if level.kind != base.kind:
                raise ParameterError("pyramid levels must share one kind")

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, k: int) -> AttentionMap:
        return self.levels[k]


def illumination(image: ImageBuffer) -> AttentionMap:
    """Per-pixel brightness: the channel-wise maximum of the RGB values."""
    if image.channels != 3:
        raise ParameterError(
            f"illumination is defined on RGB images, got {image.channels} channel(s)"
        )
    if image.low != 0.0 or image.high != 1.0:
        raise ParameterError("illumination expects a [0, 1] image")
    return AttentionMap(image.data.max(axis=2), kind="illumination")


def naive_attention(illum: AttentionMap) -> AttentionMap:
    """Complement of illumination: weight 1 on black pixels, 0 on white."""
    if illum.kind != "illumination":
        raise ParameterError(f"expected an illumination map, got {illum.kind!r}")
    return AttentionMap(1.0 - illum.data, kind="naive")


def scaled_attention(illum: AttentionMap) -> AttentionMap:
    """Upward-bent attention ramp: -a*(a - 2) for naive attention a.

    Equal to the naive weight at both extremes but strictly larger in
    between, so moderately lit pixels keep more enhancement pressure.
    """
    if illum.kind != "illumination":
        raise ParameterError(f"expected an illumination map, got {illum.kind!r}")
    att = 1.0 - illum.data
    return AttentionMap(-att * (att - 2.0), kind="scaled")


def attention_from_image(image: ImageBuffer, mode: str = "scaled") -> AttentionMap:
    """Attention map of the requested kind straight from an RGB image."""
    illum = illumination(image)
    if mode == "illumination":
        return illum
    if mode == "naive":
        return naive_attention(illum)
    if mode == "scaled":
        return scaled_attention(illum)
    raise ParameterError(f"mode must be one of {_KINDS}, got {mode!r}")


def _halve(arr: np.ndarray) -> np.ndarray:
    """2x2 mean pool with edge replication when a side is odd."""
    h, w = arr.shape
    if h % 2:
        arr = np.concatenate([arr, arr[-1:, :]], axis=0)
    if w % 2:
        arr = np.concatenate([arr, arr[:, -1:]], axis=1)
    h2, w2 = arr.shape[0] // 2, arr.shape[1] // 2
    return arr.reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def build_pyramid(attention: AttentionMap, levels: int) -> AttentionPyramid:
    """Pyramid of ``levels`` maps: the input plus successive halvings.

    Level 0 is the input map itself; each further level is the 2x2 mean
    pool of the one before, with odd sides pooling a replicated edge row
    or column so no pixel is dropped.
    """
    if levels < 1:
        raise ParameterError(f"levels must be at least 1, got {levels}")
    maps = [attention]
    arr = attention.data
    for _ in range(levels - 1):
        arr = _halve(arr)
        maps.append(AttentionMap(arr, kind=attention.kind))
    return AttentionPyramid(levels=tuple(maps))
