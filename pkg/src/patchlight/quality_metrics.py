"""Full-reference quality metrics: structural similarity and PSNR.

Structural similarity follows the classic windowed formulation: an
11-tap Gaussian window (sigma 1.5) slides over the luma plane, local
means, variances, and covariance are combined with the usual
stabilizers C1 = 0.01^2 and C2 = 0.03^2 for unit data range, and the
resulting map is averaged.  Only window positions fully inside the
image contribute.  Moments are population moments (no Bessel
correction).  PSNR is computed jointly over all pixels and channels
and capped at 100 dB so identical images stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .image_core import ImageBuffer

__all__ = [
    "luma",
    "ssim",
    "psnr",
    "MetricRow",
    "MetricReport",
    "evaluate_pairs",
    "WINDOW_SIZE",
    "WINDOW_SIGMA",
]

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5

_C1 = 0.01**2
_C2 = 0.03**2

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_PSNR_CAP = 100.0


def luma(image: ImageBuffer) -> np.ndarray:
    """H x W luma plane: Rec. 601 weights for RGB, identity for grayscale."""
    if image.channels == 1:
        return image.data[:, :, 0]
    return image.data @ _LUMA_WEIGHTS


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _filter_valid(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation of a 2-D plane with a 1-D kernel."""
    size = kernel.shape[0]
    rows = np.lib.stride_tricks.sliding_window_view(plane, size, axis=0)
    rows = rows @ kernel
    cols = np.lib.stride_tricks.sliding_window_view(rows, size, axis=1)
    return cols @ kernel


def _check_pair(a: ImageBuffer, b: ImageBuffer) -> None:
    if (a.height, a.width, a.channels) != (b.height, b.width, b.channels):
        raise ParameterError(
            f"images must have identical shape, got "
            f"{a.height}x{a.width}x{a.channels} vs {b.height}x{b.width}x{b.channels}"
        )


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean structural similarity between two same-shaped images.

    Returns a value in [-1, 1]; 1.0 exactly when the images are
    bit-identical.
    """
    _check_pair(a, b)
    if a.height < WINDOW_SIZE or a.width < WINDOW_SIZE:
        raise ParameterError(
            f"images must be at least {WINDOW_SIZE}x{WINDOW_SIZE} for ssim, "
            f"got {a.height}x{a.width}"
        )
    x = luma(a)
    y = luma(b)
    kernel = _gaussian_window(WINDOW_SIZE, WINDOW_SIGMA)
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    var_x = _filter_valid(x * x, kernel) - mu_x**2
    var_y = _filter_valid(y * y, kernel) - mu_y**2
    cov = _filter_valid(x * y, kernel) - mu_x * mu_y
    numerator = (2.0 * mu_x * mu_y + _C1) * (2.0 * cov + _C2)
    denominator = (mu_x**2 + mu_y**2 + _C1) * (var_x + var_y + _C2)
    return float(np.mean(numerator / denominator))


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio in dB for unit data range, capped at 100."""
    _check_pair(a, b)
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return _PSNR_CAP
    return min(_PSNR_CAP, float(10.0 * np.log10(1.0 / mse)))


@dataclass(frozen=True)
class MetricRow:
    """Metrics of one image against its reference."""

    name: str
    ssim: float
    psnr: float


@dataclass(frozen=True)
class MetricReport:
    """Per-image metric rows plus their aggregate means."""

    rows: tuple[MetricRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ParameterError("a metric report needs at least one row")

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([row.ssim for row in self.rows]))

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([row.psnr for row in self.rows]))

    def to_csv(self) -> str:
        """Machine-readable form: one line per image plus a mean line."""
        lines = ["name,ssim,psnr"]
        for row in self.rows:
            lines.append(f"{row.name},{row.ssim:.6f},{row.psnr:.4f}")
        lines.append(f"mean,{self.mean_ssim:.6f},{self.mean_psnr:.4f}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        """Human-readable aligned table with a separated mean row."""
        width = max(len("image"), max(len(row.name) for row in self.rows), len("mean"))
        lines = [f"{'image':<{width}}  {'ssim':>8}  {'psnr (dB)':>10}"]
        for row in self.rows:
            lines.append(f"{row.name:<{width}}  {row.ssim:>8.4f}  {row.psnr:>10.2f}")
        lines.append("-" * (width + 22))
        lines.append(f"{'mean':<{width}}  {self.mean_ssim:>8.4f}  {self.mean_psnr:>10.2f}")
        return "\n".join(lines) + "\n"


def evaluate_pairs(
    pairs: Sequence[tuple[str, ImageBuffer, ImageBuffer]]
) -> MetricReport:
    """Metric report over (name, image, reference) triples."""
    if not pairs:
        raise ParameterError("no image pairs to evaluate")
    rows = tuple(
        MetricRow(name=name, ssim=ssim(image, reference), psnr=psnr(image, reference))
        for name, image, reference in pairs
    )
    return MetricReport(rows=rows)
