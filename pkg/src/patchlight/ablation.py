"""Component ablation ladder for the enhancement pipeline.

Five variants retrain the model from the same seed with components
enabled incrementally: scene critic only, then the object critic, then
the texture critic, then ranked-window pairing instead of same-location
pairing, and finally scaled illumination attention instead of naive
attention.  Each variant reports the mean structural similarity (and
peak signal-to-noise ratio) of its enhanced outputs against the paired
references.

A variant that fails still leaves a row in the table — annotated with
the error — so a partial ladder remains reportable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .adversarial_losses import LossWeights
from .dataset_ingest import PairManifest, load_pair
from .enhancement_model import enhance_with_model
from .quality_metrics import psnr, ssim
from .trainer import TrainConfig, TrainState, run

__all__ = [
    "VARIANTS",
    "AblationVariant",
    "AblationResult",
    "variant_config",
    "run_ablation",
    "ablation_table",
]


@dataclass(frozen=True)
class AblationVariant:
    """One rung of the ladder: a name and the settings it switches on."""

    name: str
    description: str
    weights: LossWeights
    attention_mode: str
    pairing_mode: str


VARIANTS: tuple[AblationVariant, ...] = (
    AblationVariant(
        name="scene-critic",
        description="scene critic only, naive attention, same-location pairing",
        weights=LossWeights(scene=1.0, object=0.0, texture=0.0),
        attention_mode="naive",
        pairing_mode="fixed",
    ),
    AblationVariant(
        name="+object-critic",
        description="adds the object-level critic",
        weights=LossWeights(scene=1.0, object=1.0, texture=0.0),
        attention_mode="naive",
        pairing_mode="fixed",
    ),
    AblationVariant(
        name="+texture-critic",
        description="adds the texture-level critic",
        weights=LossWeights(scene=1.0, object=1.0, texture=1.0),
        attention_mode="naive",
        pairing_mode="fixed",
    ),
    AblationVariant(
        name="+window-pairing",
        description="object patches aligned by ranked window search",
        weights=LossWeights(scene=1.0, object=1.0, texture=1.0),
        attention_mode="naive",
        pairing_mode="rawp",
    ),
    AblationVariant(
        name="+scaled-attention",
        description="scaled illumination attention (full model)",
        weights=LossWeights(scene=1.0, object=1.0, texture=1.0),
        attention_mode="scaled",
        pairing_mode="rawp",
    ),
)


@dataclass(frozen=True)
class AblationResult:
    """Outcome of one variant: metrics on success, the error otherwise."""

    name: str
    description: str
    ssim: float | None = None
    psnr: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def variant_config(base: TrainConfig, variant: AblationVariant) -> TrainConfig:
    """The base configuration with the variant's switches applied."""
    values = {name: getattr(base, name) for name in base.__dataclass_fields__}
    values.update(
        weights=variant.weights,
        attention_mode=variant.attention_mode,
        pairing_mode=variant.pairing_mode,
    )
    return TrainConfig(**values)


def _evaluate(state: TrainState, manifest: PairManifest, config: TrainConfig):
    ssim_values = []
    psnr_values = []
    for entry in manifest.entries:
        pair = load_pair(entry, min_side=config.hierarchy.scene_size)
        enhanced = enhance_with_model(
            state.generator, pair.source, mode=config.attention_mode
        )
        ssim_values.append(ssim(enhanced, pair.target))
        psnr_values.append(psnr(enhanced, pair.target))
    return float(np.mean(ssim_values)), float(np.mean(psnr_values))


def run_ablation(
    base: TrainConfig,
    manifest: PairManifest,
    progress: Callable[[str, str], None] | None = None,
) -> list[AblationResult]:
    """Train and score every ladder variant from the shared seed.

    Parameters
    ----------
    base : TrainConfig
        Shared settings (steps, seed, sizes); each variant overrides
        only its component switches.
    manifest : PairManifest
        Dataset used both for training and for the paired evaluation.
    progress : callable, optional
        Called with ``(variant_name, phase)`` where phase is ``"train"``
        or ``"done"``.

    Returns
    -------
    list of AblationResult
        One row per variant, in ladder order; failed variants carry
        ``error`` instead of metrics.
    """
    results = []
    for variant in VARIANTS:
        config = variant_config(base, variant)
        if progress is not None:
            progress(variant.name, "train")
        try:
            state, _ = run(config, manifest)
            mean_ssim, mean_psnr = _evaluate(state, manifest, config)
            result = AblationResult(
                name=variant.name,
                description=variant.description,
                ssim=mean_ssim,
                psnr=mean_psnr,
            )
        except Exception as exc:  # keep the ladder going; annotate the rung
            result = AblationResult(
                name=variant.name,
                description=variant.description,
                error=f"{type(exc).__name__}: {exc}",
            )
        results.append(result)
        if progress is not None:
            progress(variant.name, "done")
    return results


def ablation_table(results: Sequence[AblationResult]) -> str:
    """Human-readable comparison table, one row per variant.

    Failed variants show the error in place of their metrics; if any
    variant failed, a trailing note marks the table as partial.
    """
    name_width = max(len("variant"), max(len(r.name) for r in results))
    desc_width = max(len("components"), max(len(r.description) for r in results))
    header = (
        f"{'variant':<{name_width}}  {'components':<{desc_width}}  "
        f"{'ssim':>8}  {'psnr_db':>8}"
    )
    lines = [header, "-" * len(header)]
    failures = 0
    for r in results:
        if r.ok:
            lines.append(
                f"{r.name:<{name_width}}  {r.description:<{desc_width}}  "
                f"{r.ssim:>8.4f}  {r.psnr:>8.2f}"
            )
        else:
            failures += 1
            lines.append(
                f"{r.name:<{name_width}}  {r.description:<{desc_width}}  "
                f"FAILED: {r.error}"
            )
    if failures:
        lines.append(
            f"note: partial table; {failures} of {len(results)} variant(s) failed"
        )
    return "\n".join(lines) + "\n"
