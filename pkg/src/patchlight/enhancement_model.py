"""Enhancement network and patch critics.

The generator predicts a residual mask: the enhanced image is the input
plus the mask, so a zero mask is an exact identity.  The output head is
zero-initialized, making the untrained network the identity by
construction.  Attention maps gate the feature pyramid — each encoder
scale is multiplied by the matching pyramid level, and the final mask
is gated by the full-resolution map, so well-lit pixels receive little
enhancement pressure.

Critics are plain stride-2 convolution stacks emitting a grid of
per-window logits; one critic instance is trained per hierarchy level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ConfigError, ParameterError
from .image_core import ImageBuffer
from .siam import AttentionPyramid, attention_from_image, build_pyramid

__all__ = [
    "GeneratorConfig",
    "DiscriminatorConfig",
    "MaskGenerator",
    "PatchCritic",
    "CRITIC_LEVELS",
    "build_generator",
    "build_critics",
    "count_parameters",
    "image_to_tensor",
    "batch_to_tensor",
    "mask_to_image",
    "attention_tensors",
    "generate_mask",
    "enhance",
    "critic_forward",
    "enhance_with_model",
]


@dataclass(frozen=True)
class GeneratorConfig:
    """Width, pyramid depth, and activation slope of the mask generator."""

    base_channels: int = 16
    depth: int = 3
    negative_slope: float = 0.2

    def __post_init__(self):
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be positive, got {self.base_channels}")
        if self.depth < 1:
            raise ConfigError(f"depth must be at least 1, got {self.depth}")
        if not 0.0 <= self.negative_slope < 1.0:
            raise ConfigError(
                f"negative_slope must be in [0, 1), got {self.negative_slope}"
            )


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Width and downsampling depth of each patch critic."""

    base_channels: int = 16
    layers: int = 4
    negative_slope: float = 0.2

    def __post_init__(self):
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be positive, got {self.base_channels}")
        if self.layers < 1:
            raise ConfigError(f"layers must be at least 1, got {self.layers}")

    @property
    def min_input_side(self) -> int:
        return 2**self.layers


def _init_conv(module: nn.Module) -> None:
    if isinstance(module, nn.Conv2d):
        nn.init.normal_(module.weight, 0.0, 0.02)
        nn.init.zeros_(module.bias)


class MaskGenerator(nn.Module):
    """U-shaped residual-mask network gated by an attention pyramid.

    ``forward`` takes a (B, 3, H, W) image tensor and a list of
    ``depth`` attention tensors, level k shaped
    (B, 1, ceil(H / 2**k), ceil(W / 2**k)).  It returns a (B, 3, H, W)
    mask in (-1, 1).  Arbitrary H and W are handled by replicate-padding
    to the internal grid and cropping the result back.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        widths = [config.base_channels * 2**k for k in range(config.depth)]
        self.stem = nn.Conv2d(3, widths[0], 3, padding=1)
        self.encoders = nn.ModuleList(
            nn.Conv2d(widths[k - 1], widths[k], 4, stride=2, padding=1)
            for k in range(1, config.depth)
        )
        self.body = nn.Conv2d(widths[-1], widths[-1], 3, padding=1)
        self.decoders = nn.ModuleList(
            nn.Conv2d(widths[k + 1] + widths[k], widths[k], 3, padding=1)
            for k in reversed(range(config.depth - 1))
        )
        self.head = nn.Conv2d(widths[0], 3, 3, padding=1)
        self.act = nn.LeakyReLU(config.negative_slope)
        self.apply(_init_conv)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, image: torch.Tensor, attention: list[torch.Tensor]) -> torch.Tensor:
        depth = self.config.depth
        if image.ndim != 4 or image.shape[1] != 3:
            raise ParameterError(
                f"expected a (B, 3, H, W) image tensor, got {tuple(image.shape)}"
            )
        if len(attention) != depth:
            raise ConfigError(
                f"attention pyramid has {len(attention)} levels but the "
                f"generator is configured for depth {depth}"
            )
        height, width = image.shape[-2:]
        unit = 2 ** (depth - 1)
        pad_h = (-height) % unit
        pad_w = (-width) % unit
        x = image
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="replicate")
        gates = []
        for k, att in enumerate(attention):
            want = (math.ceil(height / 2**k), math.ceil(width / 2**k))
            if att.ndim != 4 or att.shape[1] != 1 or att.shape[-2:] != want:
                raise ConfigError(
                    f"attention level {k} must be (B, 1, {want[0]}, {want[1]}), "
                    f"got {tuple(att.shape)}"
                )
            grid = (x.shape[-2] // 2**k, x.shape[-1] // 2**k)
            gap_h = grid[0] - att.shape[-2]
            gap_w = grid[1] - att.shape[-1]
            if gap_h or gap_w:
                att = F.pad(att, (0, gap_w, 0, gap_h), mode="replicate")
            gates.append(att)

        feats = self.act(self.stem(x)) * gates[0]
        skips = [feats]
        for k, encoder in enumerate(self.encoders, start=1):
            feats = self.act(encoder(feats)) * gates[k]
            skips.append(feats)
        feats = self.act(self.body(feats))
        for k, decoder in enumerate(self.decoders):
            feats = F.interpolate(feats, scale_factor=2, mode="nearest")
            feats = self.act(decoder(torch.cat([feats, skips[depth - 2 - k]], dim=1)))
        mask = torch.tanh(self.head(feats)) * gates[0]
        return mask[..., :height, :width]


class PatchCritic(nn.Module):
    """Stride-2 convolution ladder scoring overlapping windows of its input.

    Output is a (B, 1, H', W') logit grid; each stride-2 layer halves
    the spatial size, so a 64x64 input with four layers yields 4x4.
    """

    def __init__(self, config: DiscriminatorConfig):
        super().__init__()
        self.config = config
        layers = []
        in_ch = 3
        for k in range(config.layers):
            out_ch = config.base_channels * 2 ** min(k, 3)
            layers.append(nn.Conv2d(in_ch, out_ch, 4, stride=2, padding=1))
            layers.append(nn.LeakyReLU(config.negative_slope))
            in_ch = out_ch
        self.features = nn.Sequential(*layers)
        self.head = nn.Conv2d(in_ch, 1, 3, padding=1)
        self.apply(_init_conv)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        if image.ndim != 4 or image.shape[1] != 3:
            raise ParameterError(
                f"expected a (B, 3, H, W) tensor, got {tuple(image.shape)}"
            )
        minimum = self.config.min_input_side
        if image.shape[-2] < minimum or image.shape[-1] < minimum:
            raise ConfigError(
                f"critic input {image.shape[-2]}x{image.shape[-1]} is below the "
                f"{minimum}x{minimum} minimum for {self.config.layers} layers"
            )
        return self.head(self.features(image))


CRITIC_LEVELS = ("scene", "object", "texture")


def build_generator(config: GeneratorConfig, seed: int) -> MaskGenerator:
    """Construct a generator with seed-determined initial weights."""
    torch.manual_seed(seed)
    return MaskGenerator(config)


def build_critics(config: DiscriminatorConfig, seed: int) -> dict[str, PatchCritic]:
    """One critic per hierarchy level, each with its own initial weights."""
    critics = {}
    for offset, level in enumerate(CRITIC_LEVELS):
        torch.manual_seed(seed + 1 + offset)
        critics[level] = PatchCritic(config)
    return critics


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def image_to_tensor(image: ImageBuffer) -> torch.Tensor:
    """(1, C, H, W) float32 tensor view of an image buffer."""
    arr = np.moveaxis(image.data, 2, 0)[np.newaxis]
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))


def batch_to_tensor(images: Sequence[ImageBuffer]) -> torch.Tensor:
    """(B, C, H, W) float32 tensor from equally sized image buffers."""
    if len(images) == 0:
        raise ParameterError("image batch is empty")
    shape = images[0].data.shape
    for image in images[1:]:
        if image.data.shape != shape:
            raise ParameterError(
                f"batch images differ in shape: {shape} vs {image.data.shape}"
            )
    arr = np.stack([np.moveaxis(image.data, 2, 0) for image in images])
    return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32))


def mask_to_image(mask: torch.Tensor) -> ImageBuffer:
    """Single-sample mask tensor back to a float64 buffer in [-1, 1]."""
    arr = mask.detach().cpu().numpy()[0]
    arr = np.moveaxis(arr, 0, 2).astype(np.float64)
    return ImageBuffer(arr, low=-1.0, high=1.0)


def pyramid_to_tensors(
    pyramid: AttentionPyramid, dtype: torch.dtype = torch.float32
) -> list[torch.Tensor]:
    """Pyramid levels as (1, 1, h, w) tensors, full resolution first."""
    return [
        torch.from_numpy(level.data[np.newaxis, np.newaxis].copy()).to(dtype)
        for level in pyramid
    ]


def attention_tensors(
    image: ImageBuffer, depth: int, mode: str, dtype: torch.dtype = torch.float32
) -> list[torch.Tensor]:
    """Attention pyramid for one image as (1, 1, h, w) tensors."""
    pyramid = build_pyramid(attention_from_image(image, mode), depth)
    return pyramid_to_tensors(pyramid, dtype)


def generate_mask(
    source: ImageBuffer, pyramid: AttentionPyramid, model: MaskGenerator
) -> ImageBuffer:
    """Residual mask for one image, as a [-1, 1] buffer.

    Parameters
    ----------
    source : ImageBuffer
        RGB image the mask is predicted for.
    pyramid : AttentionPyramid
        Attention stack whose level count equals the generator depth and
        whose base level matches the source dimensions.
    model : MaskGenerator
        The network holding the parameters.
    """
    if source.channels != 3:
        raise ParameterError(
            f"mask generation needs an RGB source, got {source.channels} channel(s)"
        )
    if len(pyramid) != model.config.depth:
        raise ConfigError(
            f"attention pyramid has {len(pyramid)} levels but the "
            f"generator is configured for depth {model.config.depth}"
        )
    model.eval()
    with torch.no_grad():
        mask = model(image_to_tensor(source), pyramid_to_tensors(pyramid))
    return mask_to_image(mask)


def enhance(source: ImageBuffer, mask: ImageBuffer) -> ImageBuffer:
    """Enhanced image: source plus mask, clipped to [0, 1].

    The addition happens in float64 on the original pixels, so a zero
    mask reproduces the source bit for bit.
    """
    if mask.data.shape != source.data.shape:
        raise ParameterError(
            f"mask shape {mask.data.shape} does not match "
            f"source shape {source.data.shape}"
        )
    out = np.clip(source.data + mask.data, 0.0, 1.0)
    return ImageBuffer(out)


def critic_forward(
    level: str,
    patch: ImageBuffer | Sequence[ImageBuffer] | torch.Tensor,
    critics: dict[str, PatchCritic],
) -> torch.Tensor:
    """Logit grid(s) of the given level's critic on one patch or a batch.

    Parameters
    ----------
    level : str
        One of ``"scene"``, ``"object"``, ``"texture"``.
    patch : ImageBuffer, sequence of ImageBuffer, or torch.Tensor
        A single patch, an ordered batch of equally sized patches, or a
        ready (B, 3, H, W) tensor (kept differentiable).
    critics : dict
        Level-keyed critic networks as built by ``build_critics``.

    Returns
    -------
    torch.Tensor
        (B, 1, H', W') logit grid batch, order-preserving.
    """
    if level not in CRITIC_LEVELS:
        raise ParameterError(
            f"unknown critic level {level!r}; expected one of {CRITIC_LEVELS}"
        )
    if level not in critics:
        raise ConfigError(f"no critic built for level {level!r}")
    if isinstance(patch, torch.Tensor):
        return critics[level](patch)
    if isinstance(patch, ImageBuffer):
        batch = image_to_tensor(patch)
    else:
        batch = batch_to_tensor(patch)
    critic = critics[level]
    critic.eval()
    with torch.no_grad():
        return critic(batch)


def enhance_with_model(
    model: MaskGenerator, image: ImageBuffer, mode: str = "scaled"
) -> ImageBuffer:
    """End-to-end single-image enhancement: pyramid, mask, residual add."""
    pyramid = build_pyramid(attention_from_image(image, mode), model.config.depth)
    return enhance(image, generate_mask(image, pyramid, model))
