"""Three-level patch geometry: scene, objects, textures.

One square scene crop is taken at the same coordinates in the source
and reference images.  Inside it, several object windows are placed at
random, each covering a quarter of the scene's area; the central
quarter of every object is its texture window.  Regions come in
source/target pairs: reference-side regions are fixed once sampled,
while source-side object regions start at the same coordinates and may
later be relocated by window pairing (textures follow their objects).
Object and texture regions are scene-local so they apply equally to the
source, reference, and generated scenes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError
from .image_core import (
    ImageBuffer,
    PatchRegion,
    RandomState,
    center_crop_region,
    crop,
    random_region,
)

__all__ = [
    "HierarchySpec",
    "RegionPair",
    "PatchPairSet",
    "sample_hierarchy",
    "crop_levels",
]


@dataclass(frozen=True)
class HierarchySpec:
    """Geometry of one sampled hierarchy.

    ``object_fraction`` and ``texture_fraction`` are area fractions of
    the enclosing level; side lengths scale by their square roots.  The
    scene side must be divisible by 4 so both derived sides are whole
    pixels under the default quarter-area fractions.
    """

    scene_size: int = 64
    objects_per_scene: int = 4
    object_fraction: float = 0.25
    texture_fraction: float = 0.25

    def __post_init__(self):
        if self.scene_size < 4 or self.scene_size % 4 != 0:
            raise GeometryError(
                f"scene_size must be a positive multiple of 4, got {self.scene_size}"
            )
        if self.objects_per_scene < 1:
            raise GeometryError(
                f"objects_per_scene must be at least 1, got {self.objects_per_scene}"
            )
        for name in ("object_fraction", "texture_fraction"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise GeometryError(f"{name} must be in (0, 1], got {value}")

    @property
    def object_size(self) -> int:
        return max(1, int(self.scene_size * math.sqrt(self.object_fraction)))

    @property
    def texture_size(self) -> int:
        return max(1, int(self.object_size * math.sqrt(self.texture_fraction)))


@dataclass(frozen=True)
class RegionPair:
    """A source-side region and its reference-side counterpart."""

    source: PatchRegion
    target: PatchRegion


@dataclass(frozen=True)
class PatchPairSet:
    """Sampled regions for one training pair.

    The scene regions are in image coordinates and always identical on
    both sides; object and texture pairs are scene-local, with the
    source side free to move during pairing refinement.
    """

    scene_source: PatchRegion
    scene_target: PatchRegion
    objects: tuple[RegionPair, ...]
    textures: tuple[RegionPair, ...]

    def __post_init__(self):
        if self.scene_source != self.scene_target:
            raise GeometryError(
                "scene regions must share coordinates on both sides, got "
                f"{self.scene_source} vs {self.scene_target}"
            )
        if len(self.objects) != len(self.textures):
            raise GeometryError(
                f"{len(self.objects)} objects but {len(self.textures)} textures"
            )
        frame = PatchRegion(0, 0, self.scene_source.height, self.scene_source.width)
        for pair in self.objects:
            for region in (pair.source, pair.target):
                if not frame.contains(region):
                    raise GeometryError(f"object {region} lies outside the scene")
        for obj, tex in zip(self.objects, self.textures):
            for o, t in ((obj.source, tex.source), (obj.target, tex.target)):
                if not o.contains(t):
                    raise GeometryError(f"texture {t} lies outside its object {o}")

    def with_source_objects(
        self, regions, texture_fraction: float
    ) -> "PatchPairSet":
        """Relocate the source-side object regions; textures re-derive."""
        regions = tuple(regions)
        if len(regions) != len(self.objects):
            raise GeometryError(
                f"expected {len(self.objects)} regions, got {len(regions)}"
            )
        objects = tuple(
            RegionPair(source=src, target=pair.target)
            for src, pair in zip(regions, self.objects)
        )
        textures = tuple(
            RegionPair(
                source=center_crop_region(pair.source, texture_fraction),
                target=tex.target,
            )
            for pair, tex in zip(objects, self.textures)
        )
        return PatchPairSet(
            scene_source=self.scene_source,
            scene_target=self.scene_target,
            objects=objects,
            textures=textures,
        )


def sample_hierarchy(
    image_height: int, image_width: int, spec: HierarchySpec, rng: RandomState
) -> PatchPairSet:
    """Draw one scene placement and its object/texture window pairs.

    Reference-side object locations are sampled; the source side starts
    at the same coordinates until pairing refinement moves it.
    """
    if spec.scene_size > image_height or spec.scene_size > image_width:
        raise GeometryError(
            f"scene of {spec.scene_size} does not fit in a "
            f"{image_height}x{image_width} image"
        )
    scene = random_region(
        image_height, image_width, spec.scene_size, spec.scene_size, rng
    )
    side = spec.object_size
    objects = tuple(
        RegionPair(source=region, target=region)
        for region in (
            random_region(spec.scene_size, spec.scene_size, side, side, rng)
            for _ in range(spec.objects_per_scene)
        )
    )
    textures = tuple(
        RegionPair(
            source=center_crop_region(pair.source, spec.texture_fraction),
            target=center_crop_region(pair.target, spec.texture_fraction),
        )
        for pair in objects
    )
    return PatchPairSet(
        scene_source=scene, scene_target=scene, objects=objects, textures=textures
    )


def crop_levels(image: ImageBuffer, pairs: PatchPairSet, side: str):
    """Cut one side's scene, object, and texture pixels out of an image.

    ``side`` selects which regions to honor: "source" or "target".
    Returns ``(scene, objects, textures)`` with the latter two in
    hierarchy order.
    """
    if side not in ("source", "target"):
        raise GeometryError(f'side must be "source" or "target", got {side!r}')
    scene_region = pairs.scene_source if side == "source" else pairs.scene_target
    scene = crop(image, scene_region)
    objects = [crop(scene, getattr(pair, side)) for pair in pairs.objects]
    textures = [crop(scene, getattr(pair, side)) for pair in pairs.textures]
    return scene, objects, textures
