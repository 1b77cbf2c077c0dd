"""Adversarial objectives for the scene, object, and texture critics.

The scene critic is trained relativistically: each logit is judged
against the mean logit of the opposite population before the usual
least-squares targets are applied.  Object and texture critics use
plain least-squares targets (real -> 1, fake -> 0).  A weighted sum of
all six generator/critic terms serves as the monitoring objective;
optimization itself alternates critic and generator updates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import math

import torch

from .errors import NumericError, ParameterError

__all__ = [
    "relativistic_pair",
    "scene_losses",
    "lsgan_losses",
    "total_loss",
    "scene_discriminator_loss",
    "scene_generator_loss",
    "patch_discriminator_loss",
    "patch_generator_loss",
    "LossWeights",
    "LossReport",
    "ensure_finite",
]

LEVELS = ("scene", "object", "texture")
PART_NAMES = (
    "scene_g",
    "scene_d",
    "object_g",
    "object_d",
    "texture_g",
    "texture_d",
)


def _require_nonempty(logits: torch.Tensor, label: str) -> torch.Tensor:
    if logits.numel() == 0:
        raise ParameterError(f"{label} logit batch is empty")
    return logits


def relativistic_pair(primary: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
    """Each primary logit relative to the mean logit of the other population."""
    _require_nonempty(primary, "primary")
    _require_nonempty(reference, "reference")
    return primary - reference.mean()


def scene_discriminator_loss(
    real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> torch.Tensor:
    """Relativistic least-squares critic loss: real above fake by 1."""
    real_rel = relativistic_pair(real_logits, fake_logits)
    fake_rel = relativistic_pair(fake_logits, real_logits)
    return ((real_rel - 1.0) ** 2).mean() + (fake_rel**2).mean()


def scene_generator_loss(
    real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> torch.Tensor:
    """Relativistic least-squares generator loss: roles of real/fake swapped."""
    real_rel = relativistic_pair(real_logits, fake_logits)
    fake_rel = relativistic_pair(fake_logits, real_logits)
    return ((fake_rel - 1.0) ** 2).mean() + (real_rel**2).mean()


def scene_losses(
    real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Relativistic critic and generator losses for scene-level logits.

    Parameters
    ----------
    real_logits, fake_logits : torch.Tensor
        Logit grids of the critic on target-domain and enhanced scenes.

    Returns
    -------
    tuple of torch.Tensor
        ``(critic_loss, generator_loss)``.
    """
    return (
        scene_discriminator_loss(real_logits, fake_logits),
        scene_generator_loss(real_logits, fake_logits),
    )


def patch_discriminator_loss(
    real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> torch.Tensor:
    """Least-squares critic loss: real logits to 1, fake logits to 0."""
    _require_nonempty(real_logits, "real")
    _require_nonempty(fake_logits, "fake")
    return ((real_logits - 1.0) ** 2).mean() + (fake_logits**2).mean()


def patch_generator_loss(fake_logits: torch.Tensor) -> torch.Tensor:
    """Least-squares generator loss: fake logits pushed to 1."""
    _require_nonempty(fake_logits, "fake")
    return ((fake_logits - 1.0) ** 2).mean()


def lsgan_losses(
    level: str, real_logits: torch.Tensor, fake_logits: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Least-squares critic and generator losses for object/texture logits.

    Parameters
    ----------
    level : str
        Either ``"object"`` or ``"texture"``; scene logits take the
        relativistic path instead.
    real_logits, fake_logits : torch.Tensor
        Logit grids on matched target and enhanced patches.

    Returns
    -------
    tuple of torch.Tensor
        ``(critic_loss, generator_loss)``; the generator loss depends
        only on the fake logits.
    """
    if level not in ("object", "texture"):
        raise ParameterError(
            f"least-squares losses apply to levels 'object' and 'texture', got {level!r}"
        )
    return (
        patch_discriminator_loss(real_logits, fake_logits),
        patch_generator_loss(fake_logits),
    )


@dataclass(frozen=True)
class LossWeights:
    """Per-level weights in the combined objective; zero disables a level."""

    scene: float = 1.0
    object: float = 1.0
    texture: float = 1.0

    def __post_init__(self):
        for name in LEVELS:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ParameterError(
                    f"loss weight {name} must be finite and non-negative, got {value}"
                )

    def active_levels(self) -> tuple[str, ...]:
        return tuple(name for name in LEVELS if getattr(self, name) > 0.0)


@dataclass(frozen=True)
class LossReport:
    """All six loss terms from one training step plus the weighted total."""

    scene_g: float
    scene_d: float
    object_g: float
    object_d: float
    texture_g: float
    texture_d: float
    total: float

    @classmethod
    def build(
        cls,
        scene_g: float,
        scene_d: float,
        object_g: float,
        object_d: float,
        texture_g: float,
        texture_d: float,
        weights: LossWeights,
    ) -> "LossReport":
        parts = {
            "scene_g": float(scene_g),
            "scene_d": float(scene_d),
            "object_g": float(object_g),
            "object_d": float(object_d),
            "texture_g": float(texture_g),
            "texture_d": float(texture_d),
        }
        return cls(total=total_loss(parts, weights), **parts)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in PART_NAMES + ("total",)}


def total_loss(
    parts: Union["LossReport", Mapping[str, float]], weights: LossWeights
) -> float:
    """Weighted sum of all six loss terms; the monitoring objective.

    Parameters
    ----------
    parts : LossReport or mapping
        The six per-level generator/critic terms, keyed ``scene_g``,
        ``scene_d``, ``object_g``, ``object_d``, ``texture_g``,
        ``texture_d``.
    weights : LossWeights
        Per-level weights multiplying the (generator + critic) sum.

    Returns
    -------
    float
        ``sum(weight_level * (generator_level + critic_level))``.
    """
    if isinstance(parts, LossReport):
        values = parts.as_dict()
    else:
        values = dict(parts)
    missing = [name for name in PART_NAMES if name not in values]
    if missing:
        raise ParameterError(f"loss parts missing entries: {', '.join(missing)}")
    total = 0.0
    for level in LEVELS:
        for suffix in ("_g", "_d"):
            value = float(values[level + suffix])
            if not math.isfinite(value):
                raise NumericError(
                    f"loss part {level + suffix} ({level} level) is not finite"
                )
            total += getattr(weights, level) * value
    return total


def ensure_finite(value: torch.Tensor, label: str) -> torch.Tensor:
    """Pass the tensor through, raising if any entry is NaN or infinite."""
    if not bool(torch.isfinite(value).all()):
        raise NumericError(f"{label} contains non-finite values")
    return value
