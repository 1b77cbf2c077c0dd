"""Command-line entry point.

Subcommands
-----------
train
    Train on a paired dataset directory, writing checkpoints, a JSONL
    loss log, and a config echo into the output directory.
enhance
    Apply a trained checkpoint to an image or a directory of images,
    writing one enhanced PNG per input; with ``--references``, also
    score the outputs against paired reference images.
attention
    Write the illumination map and both attention variants of each
    input as grayscale PNGs (``<stem>.illum.png``, ``<stem>.naive.png``,
    ``<stem>.scaled.png``).
rawp
    Match one patch into a scene by ranked window pairing; writes a
    candidate-score heatmap and the matched crop.
evaluate
    Score two directories of images paired by filename stem, printing a
    metric table and optionally writing a CSV.
ablate
    Train the five-rung component ladder and report per-variant
    metrics.

Exit codes: 0 success, 2 usage, 3 data, 4 configuration, 5 numeric.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .ablation import ablation_table, run_ablation
from .dataset_ingest import _image_files, scan
from .errors import DataError, ParameterError, PatchlightError
from .image_core import ImageBuffer, PatchRegion, crop, load_image, save_image
from .quality_metrics import evaluate_pairs
from .rawp import SearchSpec, find_best_match
from .siam import attention_from_image, illumination
from .enhancement_model import enhance_with_model
from .trainer import TrainConfig, load_checkpoint, run, save_checkpoint

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchlight",
        description="Residual image enhancement with hierarchical patch critics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, *, config=False, seed=False, out=False, checkpoint=False, steps=False):
        if config:
            p.add_argument("--config", type=Path, help="JSON training configuration")
        if seed:
            p.add_argument("--seed", type=int, help="override the configured seed")
        if steps:
            p.add_argument("--steps", type=int, help="override the configured step count")
        if checkpoint:
            p.add_argument("--checkpoint", type=Path, help="checkpoint file")
        if out:
            p.add_argument(
                "--out", type=Path, default=Path("."), help="output directory"
            )
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("train", help="train on a paired dataset directory")
    p.add_argument("dataset", type=Path, help="root with <condition>/source|reference")
    common(p, config=True, seed=True, out=True, checkpoint=True, steps=True)

    p = sub.add_parser("enhance", help="apply a checkpoint to images")
    p.add_argument("input", type=Path, help="image file or directory")
    p.add_argument(
        "--references",
        type=Path,
        help="directory of reference images paired by stem; adds a metric report",
    )
    common(p, out=True, checkpoint=True)

    p = sub.add_parser("attention", help="write illumination and attention maps")
    p.add_argument("input", type=Path, help="image file or directory")
    common(p, out=True)

    p = sub.add_parser("rawp", help="match a patch into a scene by window pairing")
    p.add_argument("scene", type=Path, help="scene image")
    p.add_argument("patch", type=Path, help="square patch image to place")
    p.add_argument(
        "--anchor",
        required=True,
        help="TOP,LEFT corner the patch nominally came from",
    )
    common(p, out=True)

    p = sub.add_parser("evaluate", help="score images against references by stem")
    p.add_argument("outputs", type=Path, help="directory of images to score")
    p.add_argument("references", type=Path, help="directory of reference images")
    common(p, out=True)

    p = sub.add_parser("ablate", help="train the component ladder and report metrics")
    p.add_argument("dataset", type=Path, help="root with <condition>/source|reference")
    common(p, config=True, seed=True, out=True, steps=True)

    return parser


def _load_config(args) -> TrainConfig:
    config = (
        TrainConfig.from_file(args.config)
        if getattr(args, "config", None) is not None
        else TrainConfig()
    )
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        overrides["steps"] = args.steps
    if overrides:
        values = {name: getattr(config, name) for name in config.__dataclass_fields__}
        values.update(overrides)
        config = TrainConfig(**values)
    return config


def _input_images(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(_image_files(path).values())
        if not files:
            raise DataError(f"no images found in {path}")
        return files
    if path.is_file():
        return [path]
    raise DataError(f"input {path} does not exist")


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _cmd_train(args) -> int:
    config = _load_config(args)
    manifest = scan(args.dataset)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json())
    _say(args, f"{len(manifest)} pair(s) from {args.dataset}")

    def progress(step, report):
        if not args.quiet and (step % 10 == 0 or step == config.steps):
            _say(args, f"step {step}/{config.steps}  total {report.total:.4f}")

    state, _ = run(
        config,
        manifest,
        resume=args.checkpoint,
        checkpoint_dir=out / "checkpoints",
        log_path=out / "loss.jsonl",
        progress=progress,
    )
    if config.steps == 0:
        save_checkpoint(state, config, out / "checkpoints" / "checkpoint_step000000.pt")
    _say(args, f"finished at step {state.step}; artifacts in {out}")
    return 0


def _cmd_enhance(args) -> int:
    if args.checkpoint is None:
        raise ParameterError("enhance requires --checkpoint")
    state, config = load_checkpoint(args.checkpoint)
    inputs = _input_images(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    written = []
    for path in inputs:
        image = load_image(path)
        enhanced = enhance_with_model(
            state.generator, image, mode=config.attention_mode
        )
        target = args.out / f"{path.stem}.png"
        save_image(enhanced, target)
        written.append((path.stem, enhanced))
        _say(args, f"enhanced {path.name} -> {target}")
    if args.references is not None:
        if not args.references.is_dir():
            raise DataError(f"references directory {args.references} does not exist")
        references = _image_files(args.references)
        triples = [
            (stem, enhanced, load_image(references[stem]))
            for stem, enhanced in written
            if stem in references
        ]
        if not triples:
            raise DataError(
                f"no reference in {args.references} shares a stem with the inputs"
            )
        report = evaluate_pairs(triples)
        (args.out / "metrics.csv").write_text(report.to_csv())
        _say(args, report.to_table())
    return 0


def _cmd_attention(args) -> int:
    inputs = _input_images(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in inputs:
        image = load_image(path)
        if image.channels != 3:
            raise DataError(f"attention maps need an RGB image: {path}")
        maps = {
            "illum": illumination(image),
            "naive": attention_from_image(image, "naive"),
            "scaled": attention_from_image(image, "scaled"),
        }
        for suffix, attention in maps.items():
            target = args.out / f"{path.stem}.{suffix}.png"
            save_image(ImageBuffer(attention.data[:, :, np.newaxis]), target)
            _say(args, f"wrote {target}")
    return 0


def _parse_anchor(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ParameterError(f"anchor must be TOP,LEFT, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ParameterError(f"anchor must be two integers, got {text!r}") from exc


def _cmd_rawp(args) -> int:
    scene = load_image(args.scene)
    patch = load_image(args.patch)
    if patch.height != patch.width:
        raise ParameterError(
            f"patch must be square, got {patch.height}x{patch.width}"
        )
    top, left = _parse_anchor(args.anchor)
    window = patch.height
    anchor = PatchRegion(top, left, window, window)
    spec = SearchSpec.for_window(window)
    match = find_best_match(scene, patch, anchor, spec, keep_scores=True)
    args.out.mkdir(parents=True, exist_ok=True)

    scores = match.all_scores
    span = float(scores.max() - scores.min())
    heat = (scores - scores.min()) / span if span > 0 else np.zeros_like(scores)
    heat_path = args.out / f"{args.scene.stem}.scores.png"
    save_image(ImageBuffer(heat[:, :, np.newaxis]), heat_path)
    crop_path = args.out / f"{args.scene.stem}.match.png"
    save_image(crop(scene, match.best_region), crop_path)
    best = match.best_region
    _say(
        args,
        f"best window at ({best.top}, {best.left}) score {match.score:.6f}; "
        f"wrote {heat_path} and {crop_path}",
    )
    return 0


def _cmd_evaluate(args) -> int:
    outputs = _image_files(args.outputs) if args.outputs.is_dir() else None
    references = _image_files(args.references) if args.references.is_dir() else None
    if outputs is None:
        raise DataError(f"outputs directory {args.outputs} does not exist")
    if references is None:
        raise DataError(f"references directory {args.references} does not exist")
    stems = sorted(set(outputs) & set(references))
    if not stems:
        raise DataError("no filename stems are shared between the two directories")
    skipped = sorted(set(outputs) ^ set(references))
    if skipped and not args.quiet:
        print(f"ignoring {len(skipped)} unpaired file(s)", file=sys.stderr)
    triples = [
        (stem, load_image(outputs[stem]), load_image(references[stem]))
        for stem in stems
    ]
    report = evaluate_pairs(triples)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "metrics.csv").write_text(report.to_csv())
    if not args.quiet:
        print(report.to_table())
    return 0


def _cmd_ablate(args) -> int:
    config = _load_config(args)
    manifest = scan(args.dataset)

    def progress(name, phase):
        if phase == "train":
            _say(args, f"training variant {name} ...")

    results = run_ablation(config, manifest, progress=progress)
    table = ablation_table(results)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "ablation.txt").write_text(table)
    csv_lines = ["variant,ssim,psnr,error"]
    for r in results:
        if r.ok:
            csv_lines.append(f"{r.name},{r.ssim:.6f},{r.psnr:.4f},")
        else:
            csv_lines.append(f"{r.name},,,{r.error}")
    (args.out / "ablation.csv").write_text("\n".join(csv_lines) + "\n")
    if not args.quiet:
        print(table)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "enhance": _cmd_enhance,
    "attention": _cmd_attention,
    "rawp": _cmd_rawp,
    "evaluate": _cmd_evaluate,
    "ablate": _cmd_ablate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except PatchlightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
