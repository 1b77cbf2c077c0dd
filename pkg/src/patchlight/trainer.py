"""Alternating adversarial training over the three-level patch hierarchy.

Each step crops one scene pair per batch item from the roughly aligned
source/target images, builds the illumination-attention pyramid from
the source scene, predicts the residual mask, and forms the enhanced
scene.  Target-side object patches are matched back into the source
scene by ranked window pairing, the matches are lifted into the
enhanced scene, and texture patches are center crops of the object
pairs.  The three critics score their level's real/enhanced patches;
one critic update runs first, then one generator update against the
refreshed critics.

Matching is pure selection: gradients flow through the chosen enhanced
pixels, never through the ranking.  Critics see the unclamped enhanced
scene so saturated pixels keep their gradients; clamping happens only
when images are written out.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .adversarial_losses import (
    LossReport,
    LossWeights,
    ensure_finite,
    patch_discriminator_loss,
    patch_generator_loss,
    scene_discriminator_loss,
    scene_generator_loss,
)
from .dataset_ingest import LoadedPair, PairEntry, PairManifest, batches, load_pair
from .enhancement_model import (
    CRITIC_LEVELS,
    DiscriminatorConfig,
    GeneratorConfig,
    MaskGenerator,
    PatchCritic,
    build_critics,
    build_generator,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    EmptyDatasetError,
    ParameterError,
)
from .image_core import ImageBuffer, PatchRegion, RandomState, crop
from .patch_hierarchy import HierarchySpec, sample_hierarchy
from .rawp import SearchSpec, find_best_match
from .siam import attention_from_image, build_pyramid

__all__ = [
    "SearchSettings",
    "TrainConfig",
    "TrainState",
    "init_state",
    "train_step",
    "run",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_FORMAT_VERSION",
]

CHECKPOINT_FORMAT_VERSION = 1

ATTENTION_MODES = ("scaled", "naive")
PAIRING_MODES = ("rawp", "fixed")

# Run-length and cadence knobs may differ between a checkpoint and the
# resuming run; everything else defines the experiment and must match.
_RESUMABLE_FIELDS = ("steps", "checkpoint_every")


@dataclass(frozen=True)
class SearchSettings:
    """Window-pairing geometry relative to the object patch size."""

    area_scale: float = 1.5
    stride: int = 4

    def __post_init__(self):
        if self.area_scale < 1.0:
            raise ConfigError(f"area_scale must be at least 1, got {self.area_scale}")
        if self.stride < 1:
            raise ConfigError(f"stride must be at least 1, got {self.stride}")

    def for_object(self, object_size: int) -> SearchSpec:
        return SearchSpec.for_window(
            object_size, area_scale=self.area_scale, stride=self.stride
        )


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs, serializable to and from JSON."""

    steps: int = 500
    batch_size: int = 4
    generator_lr: float = 1e-4
    critic_lr: float = 1e-4
    betas: tuple[float, float] = (0.5, 0.999)
    weights: LossWeights = field(default_factory=LossWeights)
    hierarchy: HierarchySpec = field(default_factory=HierarchySpec)
    search: SearchSettings = field(default_factory=SearchSettings)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    critic: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    seed: int = 0
    checkpoint_every: int = 100
    attention_mode: str = "scaled"
    pairing_mode: str = "rawp"

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigError(f"steps must be non-negative, got {self.steps}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        for name in ("generator_lr", "critic_lr"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise ConfigError(f"{name} must be non-negative, got {value}")
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            raise ConfigError(f"betas must be two values in [0, 1), got {self.betas}")
        if self.checkpoint_every < 1:
            raise ConfigError(
                f"checkpoint_every must be at least 1, got {self.checkpoint_every}"
            )
        if self.attention_mode not in ATTENTION_MODES:
            raise ConfigError(
                f"attention_mode must be one of {ATTENTION_MODES}, "
                f"got {self.attention_mode!r}"
            )
        if self.pairing_mode not in PAIRING_MODES:
            raise ConfigError(
                f"pairing_mode must be one of {PAIRING_MODES}, "
                f"got {self.pairing_mode!r}"
            )
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
        sections = {
            "weights": LossWeights,
            "hierarchy": HierarchySpec,
            "search": SearchSettings,
            "generator": GeneratorConfig,
            "critic": DiscriminatorConfig,
        }
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                section_cls = sections[key]
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be an object")
                section_known = {f.name for f in dataclasses.fields(section_cls)}
                section_unknown = set(value) - section_known
                if section_unknown:
                    raise ConfigError(
                        f"unknown config key(s) in {key!r}: "
                        f"{', '.join(sorted(section_unknown))}"
                    )
                try:
                    kwargs[key] = section_cls(**value)
                except TypeError as exc:
                    raise ConfigError(f"bad config section {key!r}: {exc}") from exc
            elif key == "betas":
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        return cls.from_json(path.read_text())


@dataclass
class TrainState:
    """Everything that evolves during training; checkpointable."""

    generator: MaskGenerator
    critics: dict[str, PatchCritic]
    generator_opt: torch.optim.Adam
    critic_opt: torch.optim.Adam
    step: int
    rng: RandomState


def init_state(config: TrainConfig) -> TrainState:
    """Fresh training state with seed-determined initial weights."""
    generator = build_generator(config.generator, config.seed)
    critics = build_critics(config.critic, config.seed)
    generator_opt = torch.optim.Adam(
        generator.parameters(), lr=config.generator_lr, betas=config.betas
    )
    critic_params = []
    for level in CRITIC_LEVELS:
        critic_params.extend(critics[level].parameters())
    critic_opt = torch.optim.Adam(
        critic_params, lr=config.critic_lr, betas=config.betas
    )
    return TrainState(
        generator=generator,
        critics=critics,
        generator_opt=generator_opt,
        critic_opt=critic_opt,
        step=0,
        rng=RandomState(config.seed),
    )


def _pair_label(pair: LoadedPair) -> str:
    if pair.entry is not None:
        return str(pair.entry.source_path)
    return "<in-memory pair>"


def _check_batch(batch: Sequence[LoadedPair], scene: int) -> None:
    if len(batch) == 0:
        raise ParameterError("training batch is empty")
    for pair in batch:
        for name, image in (("source", pair.source), ("target", pair.target)):
            if image.channels != 3:
                raise DataError(
                    f"{name} image {_pair_label(pair)} must be RGB, "
                    f"got {image.channels} channel(s)"
                )
            if image.height < scene or image.width < scene:
                raise DataError(
                    f"{name} image {_pair_label(pair)} is "
                    f"{image.height}x{image.width}, smaller than the "
                    f"{scene}x{scene} scene patch"
                )


def _scene_to_tensor(image: ImageBuffer) -> torch.Tensor:
    arr = np.ascontiguousarray(np.moveaxis(image.data, 2, 0), dtype=np.float32)
    return torch.from_numpy(arr)


def _slice_regions(
    scenes: torch.Tensor, regions_per_item: Sequence[Sequence[PatchRegion]]
) -> torch.Tensor:
    """Stack in-scene crops from a (B, 3, S, S) tensor, order-preserving."""
    slices = []
    for item, regions in enumerate(regions_per_item):
        for region in regions:
            slices.append(
                scenes[item, :, region.top : region.bottom, region.left : region.right]
            )
    return torch.stack(slices)


def train_step(
    state: TrainState, batch: Sequence[LoadedPair], config: TrainConfig
) -> tuple[TrainState, LossReport]:
    """One alternating update (critics first, then generator).

    Parameters
    ----------
    state : TrainState
        Advanced in place and returned.
    batch : sequence of LoadedPair
        Roughly aligned source/target images, each at least
        ``scene_size`` on both sides.
    config : TrainConfig
        Hyperparameters and pairing/attention modes.

    Returns
    -------
    tuple
        ``(state, report)`` where the report carries all six loss parts
        and their weighted total.
    """
    hierarchy = config.hierarchy
    _check_batch(batch, hierarchy.scene_size)
    weights = config.weights
    search_spec = config.search.for_object(hierarchy.object_size)

    source_scenes = []
    target_scenes = []
    pyramids = []
    object_regions = []  # per item: source-side regions after pairing
    texture_regions = []
    target_object_regions = []
    target_texture_regions = []
    for pair in batch:
        pairs = sample_hierarchy(
            pair.source.height, pair.source.width, hierarchy, state.rng
        )
        source_scene = crop(pair.source, pairs.scene_source)
        target_scene = crop(pair.target, pairs.scene_target)
        if config.pairing_mode == "rawp":
            matched = []
            for obj in pairs.objects:
                target_patch = crop(target_scene, obj.target)
                match = find_best_match(
                    source_scene, target_patch, obj.source, search_spec
                )
                matched.append(match.best_region)
            pairs = pairs.with_source_objects(matched, hierarchy.texture_fraction)
        source_scenes.append(source_scene)
        target_scenes.append(target_scene)
        pyramids.append(
            build_pyramid(
                attention_from_image(source_scene, config.attention_mode),
                config.generator.depth,
            )
        )
        object_regions.append([rp.source for rp in pairs.objects])
        texture_regions.append([rp.source for rp in pairs.textures])
        target_object_regions.append([rp.target for rp in pairs.objects])
        target_texture_regions.append([rp.target for rp in pairs.textures])

    source_batch = torch.stack([_scene_to_tensor(s) for s in source_scenes])
    target_batch = torch.stack([_scene_to_tensor(t) for t in target_scenes])
    attention_batch = [
        torch.stack(
            [
                torch.from_numpy(pyr[k].data[np.newaxis].copy()).float()
                for pyr in pyramids
            ]
        )
        for k in range(config.generator.depth)
    ]

    state.generator.train()
    for critic in state.critics.values():
        critic.train()

    mask = state.generator(source_batch, attention_batch)
    enhanced = source_batch + mask  # unclamped: critics keep their gradients

    fake_objects = _slice_regions(enhanced, object_regions)
    real_objects = _slice_regions(target_batch, target_object_regions)
    fake_textures = _slice_regions(enhanced, texture_regions)
    real_textures = _slice_regions(target_batch, target_texture_regions)

    # Critic update: the generator output is detached, so no generator
    # gradients exist to leak across.
    state.critic_opt.zero_grad()
    critic_parts = {}
    critic_total = source_batch.new_zeros(())
    if weights.scene > 0.0:
        real_logits = state.critics["scene"](target_batch)
        fake_logits = state.critics["scene"](enhanced.detach())
        critic_parts["scene"] = scene_discriminator_loss(real_logits, fake_logits)
        critic_total = critic_total + weights.scene * critic_parts["scene"]
    if weights.object > 0.0:
        real_logits = state.critics["object"](real_objects)
        fake_logits = state.critics["object"](fake_objects.detach())
        critic_parts["object"] = patch_discriminator_loss(real_logits, fake_logits)
        critic_total = critic_total + weights.object * critic_parts["object"]
    if weights.texture > 0.0:
        real_logits = state.critics["texture"](real_textures)
        fake_logits = state.critics["texture"](fake_textures.detach())
        critic_parts["texture"] = patch_discriminator_loss(real_logits, fake_logits)
        critic_total = critic_total + weights.texture * critic_parts["texture"]
    if critic_parts:
        ensure_finite(critic_total, "critic objective")
        critic_total.backward()
        state.critic_opt.step()

    # Generator update against the refreshed critics.
    state.generator_opt.zero_grad()
    generator_parts = {}
    generator_total = source_batch.new_zeros(())
    if weights.scene > 0.0:
        with torch.no_grad():
            real_logits = state.critics["scene"](target_batch)
        fake_logits = state.critics["scene"](enhanced)
        generator_parts["scene"] = scene_generator_loss(real_logits, fake_logits)
        generator_total = generator_total + weights.scene * generator_parts["scene"]
    if weights.object > 0.0:
        generator_parts["object"] = patch_generator_loss(
            state.critics["object"](fake_objects)
        )
        generator_total = generator_total + weights.object * generator_parts["object"]
    if weights.texture > 0.0:
        generator_parts["texture"] = patch_generator_loss(
            state.critics["texture"](fake_textures)
        )
        generator_total = (
            generator_total + weights.texture * generator_parts["texture"]
        )
    if generator_parts:
        ensure_finite(generator_total, "generator objective")
        generator_total.backward()
        state.generator_opt.step()

    report = LossReport.build(
        scene_g=generator_parts["scene"].item() if "scene" in generator_parts else 0.0,
        scene_d=critic_parts["scene"].item() if "scene" in critic_parts else 0.0,
        object_g=(
            generator_parts["object"].item() if "object" in generator_parts else 0.0
        ),
        object_d=critic_parts["object"].item() if "object" in critic_parts else 0.0,
        texture_g=(
            generator_parts["texture"].item() if "texture" in generator_parts else 0.0
        ),
        texture_d=(
            critic_parts["texture"].item() if "texture" in critic_parts else 0.0
        ),
        weights=weights,
    )
    state.step += 1
    return state, report


def save_checkpoint(state: TrainState, config: TrainConfig, path: str | Path) -> Path:
    """Write a versioned, exactly-restorable snapshot of the run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": config.to_dict(),
        "step": state.step,
        "generator": state.generator.state_dict(),
        "critics": {level: c.state_dict() for level, c in state.critics.items()},
        "generator_opt": state.generator_opt.state_dict(),
        "critic_opt": state.critic_opt.state_dict(),
        "rng": state.rng.get_state(),
    }
    torch.save(payload, path)
    return path


def _config_diff(stored: dict, requested: dict) -> list[str]:
    diffs = []
    for key in sorted(set(stored) | set(requested)):
        if key in _RESUMABLE_FIELDS:
            continue
        a = stored.get(key, "<missing>")
        b = requested.get(key, "<missing>")
        if a != b:
            diffs.append(f"{key}: checkpoint={a!r} requested={b!r}")
    return diffs


def load_checkpoint(
    path: str | Path, config: TrainConfig | None = None
) -> tuple[TrainState, TrainConfig]:
    """Restore a snapshot, refusing on any config mismatch.

    Parameters
    ----------
    path : path
        Checkpoint file written by ``save_checkpoint``.
    config : TrainConfig, optional
        The configuration of the resuming run.  Run-length fields
        (``steps``, ``checkpoint_every``) may differ; everything else
        must match the stored echo exactly.  When omitted, the stored
        configuration is used as-is.

    Returns
    -------
    tuple
        ``(state, stored_config)``.
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"checkpoint {path} cannot be read: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"checkpoint {path} has no format marker")
    if payload["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has format version {payload['format_version']}, "
            f"expected {CHECKPOINT_FORMAT_VERSION}"
        )
    stored_config = TrainConfig.from_dict(payload["config"])
    if config is not None:
        diffs = _config_diff(stored_config.to_dict(), config.to_dict())
        if diffs:
            raise CheckpointError(
                "checkpoint configuration does not match the requested run:\n  "
                + "\n  ".join(diffs)
            )
    state = init_state(stored_config)
    try:
        state.generator.load_state_dict(payload["generator"])
        for level in CRITIC_LEVELS:
            state.critics[level].load_state_dict(payload["critics"][level])
        state.generator_opt.load_state_dict(payload["generator_opt"])
        state.critic_opt.load_state_dict(payload["critic_opt"])
        state.rng = RandomState.from_state(payload["rng"])
        state.step = int(payload["step"])
    except (KeyError, RuntimeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint {path} is incomplete: {exc}") from exc
    return state, stored_config


def _batch_stream(manifest: PairManifest, batch_size: int, seed: int):
    """Endless deterministic stream of entry batches, epoch by epoch."""
    epoch = 0
    while True:
        rng = RandomState(seed).derive(epoch)
        yield from batches(manifest, batch_size, rng)
        epoch += 1


def run(
    config: TrainConfig,
    manifest: PairManifest,
    resume: str | Path | None = None,
    checkpoint_dir: str | Path | None = None,
    log_path: str | Path | None = None,
    progress: Callable[[int, LossReport], None] | None = None,
) -> tuple[TrainState, list[LossReport]]:
    """Full training run with cadence checkpoints and a JSONL loss log.

    Parameters
    ----------
    config : TrainConfig
        Run settings; ``config.steps`` is the target TOTAL step count,
        so resuming a checkpoint at step k trains ``steps - k`` more.
    manifest : PairManifest
        Non-empty dataset to stream batches from.
    resume : path, optional
        Checkpoint to restore; its configuration must match.
    checkpoint_dir : path, optional
        Where to write ``checkpoint_step******.pt`` files every
        ``checkpoint_every`` steps and at the final step.
    log_path : path, optional
        JSONL file receiving one record per step (appended on resume).
    progress : callable, optional
        Called with ``(step, report)`` after every step.

    Returns
    -------
    tuple
        ``(state, reports)`` with one report per step executed in this
        call.
    """
    if len(manifest.entries) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if resume is not None:
        state, _ = load_checkpoint(resume, config)
        if state.step > config.steps:
            raise ConfigError(
                f"checkpoint is already at step {state.step}, beyond the "
                f"requested {config.steps} total steps"
            )
    else:
        state = init_state(config)

    stream = _batch_stream(manifest, config.batch_size, config.seed)
    for _ in range(state.step):
        next(stream)

    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    log_file = None
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_file = open(log_path, "a" if resume is not None else "w")

    cache: dict[PairEntry, LoadedPair] = {}

    def load(entry):
        if entry not in cache:
            cache[entry] = load_pair(entry, min_side=config.hierarchy.scene_size)
        return cache[entry]

    reports = []
    try:
        while state.step < config.steps:
            entries = next(stream)
            batch = [load(entry) for entry in entries]
            state, report = train_step(state, batch, config)
            reports.append(report)
            if log_file is not None:
                record = {"step": state.step, **report.as_dict()}
                log_file.write(json.dumps(record) + "\n")
                log_file.flush()
            if progress is not None:
                progress(state.step, report)
            if checkpoint_dir is not None and (
                state.step % config.checkpoint_every == 0
                or state.step == config.steps
            ):
                save_checkpoint(
                    state,
                    config,
                    checkpoint_dir / f"checkpoint_step{state.step:06d}.pt",
                )
    finally:
        if log_file is not None:
            log_file.close()
    return state, reports
