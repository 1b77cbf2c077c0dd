"""Ranked window pairing: align a reference patch with its best source window.

Random crops at the same coordinates in a source/reference image pair
stop corresponding the moment the cameras move, so instead of trusting
coordinates, a window slides over a search area of the source scene and
the placement whose pixels differ least from the reference patch (sum
of absolute RGB differences) wins.  Critics then compare the reference
patch against the *generated* pixels at that matched placement.

Geometry: the search area is centered on the anchor (the coordinates
the reference patch was cut from), shrunk to the scene when larger and
slid back inside when it overhangs.  Candidate windows start at the
area origin and advance by ``stride``; ties go to the smallest top,
then the smallest left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError
from .image_core import ImageBuffer, PatchRegion, crop

__all__ = [
    "SearchSpec",
    "MatchResult",
    "pairing_score",
    "find_best_match",
    "map_to_generated",
]

DEFAULT_AREA_SCALE = 1.5
DEFAULT_STRIDE = 4


@dataclass(frozen=True)
class SearchSpec:
    """Search-area dimensions, window side, and scan stride, all in pixels."""

    area_height: int
    area_width: int
    window: int
    stride: int = DEFAULT_STRIDE

    def __post_init__(self):
        if self.window < 1:
            raise GeometryError(f"window must be positive, got {self.window}")
        if self.area_height < self.window or self.area_width < self.window:
            raise GeometryError(
                f"search area {self.area_height}x{self.area_width} cannot hold "
                f"a {self.window}x{self.window} window"
            )
        if self.stride < 1:
            raise GeometryError(f"stride must be positive, got {self.stride}")

    @classmethod
    def for_window(
        cls,
        window: int,
        area_scale: float = DEFAULT_AREA_SCALE,
        stride: int = DEFAULT_STRIDE,
    ) -> "SearchSpec":
        """Square search area ``area_scale`` times the window side (floored)."""
        if area_scale < 1.0:
            raise GeometryError(f"area_scale must be at least 1, got {area_scale}")
        side = int(window * area_scale)
        return cls(area_height=side, area_width=side, window=window, stride=stride)


@dataclass(frozen=True)
class MatchResult:
    """Best window placement for one reference patch.

    ``best_region`` and ``area`` are in scene coordinates; ``all_scores``
    holds the full candidate grid (row-major over stride steps) when the
    search was asked to keep it.
    """

    best_region: PatchRegion
    score: float
    area: PatchRegion
    all_scores: np.ndarray | None = None


def pairing_score(candidate: ImageBuffer, target: ImageBuffer) -> float:
    """L1 distance: sum of absolute differences over all pixels and channels.

    Zero exactly when the two buffers are pixel-identical.
    """
    if (candidate.height, candidate.width, candidate.channels) != (
        target.height,
        target.width,
        target.channels,
    ):
        raise ParameterError(
            f"candidate {candidate.height}x{candidate.width}x{candidate.channels} "
            f"and target {target.height}x{target.width}x{target.channels} differ"
        )
    return float(np.abs(candidate.data - target.data).sum())


def _effective_area(
    scene: ImageBuffer, anchor: PatchRegion, spec: SearchSpec
) -> PatchRegion:
    eff_h = min(spec.area_height, scene.height)
    eff_w = min(spec.area_width, scene.width)
    top = anchor.top - (eff_h - spec.window) // 2
    top = max(0, min(top, scene.height - eff_h))
    left = anchor.left - (eff_w - spec.window) // 2
    left = max(0, min(left, scene.width - eff_w))
    return PatchRegion(top, left, eff_h, eff_w)


def find_best_match(
    scene: ImageBuffer,
    patch: ImageBuffer,
    anchor: PatchRegion,
    spec: SearchSpec,
    keep_scores: bool = False,
) -> MatchResult:
    """Scan the search area of ``scene`` for the window most like ``patch``.

    ``anchor`` is the window-sized region the patch nominally came from
    and centers the search area.  Returns the winning placement, its
    score, and the area that was scanned.
    """
    win = spec.window
    if patch.height != win or patch.width != win:
        raise ParameterError(
            f"patch is {patch.height}x{patch.width} but the search window is {win}"
        )
    if anchor.height != win or anchor.width != win:
        raise ParameterError(
            f"anchor is {anchor.height}x{anchor.width} but the search window is {win}"
        )
    if win > scene.height or win > scene.width:
        raise GeometryError(
            f"window {win} does not fit in scene {scene.height}x{scene.width}"
        )
    if not scene.full_region().contains(anchor):
        raise GeometryError(f"anchor {anchor} lies outside the scene")
    area = _effective_area(scene, anchor, spec)
    block = scene.data[area.top : area.bottom, area.left : area.right, :]
    windows = np.lib.stride_tricks.sliding_window_view(block, (win, win), axis=(0, 1))
    windows = windows[:: spec.stride, :: spec.stride]
    # windows: (rows, cols, C, win, win); patch to (C, win, win) to match.
    target = np.moveaxis(patch.data, 2, 0)
    scores = np.abs(windows - target).sum(axis=(2, 3, 4))
    flat_index = int(np.argmin(scores))  # row-major: smallest top, then left
    i, j = divmod(flat_index, scores.shape[1])
    region = PatchRegion(
        area.top + i * spec.stride, area.left + j * spec.stride, win, win
    )
    return MatchResult(
        best_region=region,
        score=float(scores[i, j]),
        area=area,
        all_scores=scores if keep_scores else None,
    )


def map_to_generated(match: MatchResult, generated_scene: ImageBuffer) -> ImageBuffer:
    """Cut the matched window out of the generated version of the scene."""
    return crop(generated_scene, match.best_region)
