"""``ice-seg`` command line entry point.

Exit status: 0 on success, 1 on usage errors (bad flags, missing inputs),
2 on data errors (unreadable or inconsistent files).  Progress goes to
stderr; results only to the files under each command's declared output.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

from . import ablation
from .augment import AugmentParams, Patch, augment_image
from .baseline import TrainConfig, load_params, predict, predict_tiled, save_params, train
from .concentration import ALL_CLASS_SETS, conc_vector, frame_mae, median_mae, temporal_consistency
from .core import (
    DEFAULT_ENCODING, ConfusionMatrix, MaskEncoding, confusion, list_images,
    matched_pairs, read_image, read_mask, write_image, write_mask,
)
from .errors import IceSegError
from .metrics import Direction, compare, compute_metrics
from .synth import SceneSpec, generate_scene, generate_sequence
from .tiling import TileLayout, stitch, tile

log = logging.getLogger("riverice")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- small helpers ----------------------------------------------------------

def _write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _pct(value: float) -> str:
    return "" if math.isnan(value) else f"{100.0 * value:.2f}"


def _raw(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def _counts(text: str) -> list[int]:
    try:
        counts = [int(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError("counts must be positive integers")
    return counts


def _existing_dir(text: str) -> Path:
    path = Path(text)
    if not path.is_dir():
        raise argparse.ArgumentTypeError(f"no such directory: {text}")
    return path


def _existing_file(text: str) -> Path:
    path = Path(text)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return path


def _encoding(text: str) -> MaskEncoding:
    try:
        return MaskEncoding.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(args, default: int = 0) -> int:
    return default if args.seed is None else args.seed


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _map(func, items, jobs):
    return ablation._map(func, items, jobs)


def _load_labelled(image_dir: Path, mask_dir: Path, encoding) -> list[ablation.LabelledImage]:
    items = []
    for img_path, mask_path in matched_pairs(image_dir, mask_dir):
        image, mask = read_image(img_path), read_mask(mask_path, encoding)
        if image.shape[:2] != mask.shape:
            raise IceSegError(f"{img_path.name}: image and mask sizes differ")
        items.append(ablation.LabelledImage(img_path.stem, image, mask))
    return items


def _augment_params(args) -> AugmentParams:
    try:
        return AugmentParams(
            patch_size=args.patch_size, stride_frac_min=args.stride_min, stride_frac_max=args.stride_max,
            rotation_min=args.rotation_min, rotation_max=args.rotation_max, rotation_bands=args.bands,
            angles_per_band=args.angles_per_band, flips=not args.no_flips, seed=_seed(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _train_config(args) -> TrainConfig:
    config = TrainConfig.from_file(args.config) if getattr(args, "config", None) else TrainConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


# -- subcommands ------------------------------------------------------------

def cmd_synth(args) -> None:
    try:
        spec = SceneSpec(
            height=args.height, width=args.width, n_frazil_pans=args.frazil_pans,
            n_anchor_pans=args.anchor_pans, radius_range=(args.radius_min, args.radius_max),
            noise_std=args.noise_std, drift=args.drift, seed=_seed(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    images, masks = _out_dir(args.out / "images"), _out_dir(args.out / "masks")
    if args.frames:
        frames = generate_sequence(spec, args.frames)
        named = [(f"frame_{t:04d}", frame) for t, frame in enumerate(frames)]
    else:
        named = [(f"scene_{i:03d}", generate_scene(spec, i)) for i in range(args.count)]
    for name, (image, mask) in named:
        write_image(images / f"{name}.png", image)
        write_mask(masks / f"{name}.png", mask, args.encoding)
    log.info("wrote %d synthetic frames to %s", len(named), args.out)


def _write_patch(image_dir: Path, mask_dir: Path, patch: Patch, encoding) -> None:
    write_image(image_dir / f"{patch.name}.png", patch.image)
    write_mask(mask_dir / f"{patch.name}.png", patch.labels, encoding)


def cmd_augment(args) -> None:
    params = _augment_params(args)
    items = _load_labelled(args.images, args.masks, args.encoding)
    image_dir, mask_dir = _out_dir(args.out / "images"), _out_dir(args.out / "masks")
    rows = [["patch", "source", "row", "col", "angle", "flip"]]
    for item in items:
        patches = augment_image(item.image, item.mask, params, item.name)
        _map(lambda p: _write_patch(image_dir, mask_dir, p, args.encoding), patches, args.jobs)
        for p in patches:
            rows.append([f"{p.name}.png", p.source, p.row, p.col, "" if p.angle is None else repr(p.angle), p.flip])
        log.info("%s: %d patches", item.name, len(patches))
    _write_csv(args.out / "manifest.csv", rows)


def cmd_tile(args) -> None:
    tile_dir = _out_dir(args.out / "tiles")
    rows = [["tile", "source", "frame_height", "frame_width", "patch_size", "row", "col"]]
    for path in list_images(args.images):
        tiles, layout = tile(read_image(path), args.patch_size)
        for idx, (piece, (r, c)) in enumerate(zip(tiles, layout.origins)):
            name = f"{path.stem}_{idx:04d}.png"
            write_image(tile_dir / name, piece)
            rows.append([name, path.stem, layout.frame_height, layout.frame_width, layout.patch_size, r, c])
    _write_csv(args.out / "manifest.csv", rows)


def cmd_stitch(args) -> None:
    groups = defaultdict(list)
    try:
        for row in _read_csv(args.manifest):
            groups[row["source"]].append(row)
    except KeyError as exc:
        raise IceSegError(f"manifest lacks column {exc}")
    out = _out_dir(args.out)
    for source, rows in sorted(groups.items()):
        first = rows[0]
        layout = TileLayout(int(first["frame_height"]), int(first["frame_width"]), int(first["patch_size"]))
        rows.sort(key=lambda r: (int(r["row"]), int(r["col"])))
        if [(int(r["row"]), int(r["col"])) for r in rows] != layout.origins:
            raise IceSegError(f"{source}: manifest tiles do not match the layout")
        masks = [read_mask(args.masks / r["tile"], args.encoding) for r in rows]
        write_mask(out / f"{source}.png", stitch(masks, layout), args.encoding)


def cmd_predict(args) -> None:
    params = load_params(args.params)
    out = _out_dir(args.out)
    paths = list_images(args.images)

    def run(path):
        image = read_image(path)
        mask = predict_tiled(params, image, args.patch_size) if args.patch_size else predict(params, image)
        write_mask(out / f"{path.stem}.png", mask, args.encoding)

    _map(run, paths, args.jobs)
    log.info("predicted %d images", len(paths))


def _scores(cm: ConfusionMatrix, classes: str):
    return compute_metrics(cm.collapse_ice() if classes == "ice" else cm)


def cmd_eval(args) -> None:
    pairs = matched_pairs(args.gt, args.pred)
    out = _out_dir(args.out)
    total = ConfusionMatrix.zeros()
    per_frame, header = [], None
    for gt_path, pred_path in pairs:
        cm = confusion(read_mask(gt_path, args.encoding), read_mask(pred_path, args.encoding))
        total = total + cm
        values = _scores(cm, args.classes).as_dict()
        if header is None:
            header = ["frame"] + [col for k in values for col in (f"{k}_pct", k)]
        per_frame.append([gt_path.stem] + [v for k in values for v in (_pct(values[k]), _raw(values[k]))])
    _write_csv(out / "per_frame.csv", [header] + per_frame)
    aggregate = _scores(total, args.classes).as_dict()
    _write_csv(out / "aggregate.csv",
               [["metric", "percent", "fraction"]] + [[k, _pct(v), _raw(v)] for k, v in aggregate.items()])
    log.info("pixel accuracy %.2f%% over %d frames", 100 * aggregate["pix_acc"], len(pairs))


def _summary_values(path: Path) -> dict[str, float]:
    values = {}
    for row in _read_csv(path):
        if "metric" not in row:
            raise IceSegError(f"{path}: no 'metric' column")
        if row.get("fraction"):
            values[row["metric"]] = 100.0 * float(row["fraction"])
        elif row.get("percent"):
            values[row["metric"]] = float(row["percent"])
    return values


def cmd_compare(args) -> None:
    direction = Direction.DECREASE_BETTER if args.decrease_better else Direction.INCREASE_BETTER
    report = compare(_summary_values(args.baseline), _summary_values(args.model), direction)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(args.out, report.rows())


def cmd_conc(args) -> None:
    out = _out_dir(args.out)
    names = [cs.value for cs in ALL_CLASS_SETS]
    maes = {cs: [] for cs in ALL_CLASS_SETS}
    rows = [["frame"] + [f"mae_{n}" for n in names]]
    for gt_path, pred_path in matched_pairs(args.gt, args.pred):
        gt, pred = read_mask(gt_path, args.encoding), read_mask(pred_path, args.encoding)
        row = [gt_path.stem]
        for cs in ALL_CLASS_SETS:
            value = frame_mae(conc_vector(gt, cs), conc_vector(pred, cs))
            maes[cs].append(value)
            row.append(f"{value:.2f}")
        rows.append(row)
    _write_csv(out / "per_frame_mae.csv", rows)
    _write_csv(out / "summary.csv", [["metric", "percent"]] +
               [[f"median_mae_{cs.value}", f"{median_mae(maes[cs]):.2f}"] for cs in ALL_CLASS_SETS])


def _frame_list(args) -> list[Path]:
    if args.list is None:
        return list_images(args.masks)
    names = [line.strip() for line in args.list.read_text(encoding="utf-8").splitlines() if line.strip()]
    paths = [args.masks / n for n in names]
    missing = [p.name for p in paths if not p.is_file()]
    if missing:
        raise IceSegError(f"frames listed but missing: {', '.join(missing[:5])}")
    return paths


def cmd_vidconsist(args) -> None:
    paths = _frame_list(args)
    masks = [read_mask(p, args.encoding) for p in paths]
    result = temporal_consistency(masks)
    out = _out_dir(args.out)
    names = [cs.value for cs in ALL_CLASS_SETS]
    rows = [["pair", "frame_a", "frame_b"] + [f"diff_{n}" for n in names]]
    for i in range(len(paths) - 1):
        rows.append([i, paths[i].stem, paths[i + 1].stem] +
                    [f"{result.pair_differences[cs][i]:.2f}" for cs in ALL_CLASS_SETS])
    _write_csv(out / "pairs.csv", rows)
    _write_csv(out / "summary.csv", [["metric", "percent"]] +
               [[f"mean_conc_diff_{cs.value}", f"{result[cs]:.2f}"] for cs in ALL_CLASS_SETS])
    if args.plot_data:
        plot = [["frame_index"] + names]
        for i in range(len(paths) - 1):
            plot.append([i + 1] + [repr(float(result.pair_differences[cs][i])) for cs in ALL_CLASS_SETS])
        _write_csv(out / "plot_data.csv", plot)


def _load_patches(manifest: Path, encoding) -> list[Patch]:
    root = manifest.parent
    patches = []
    for row in _read_csv(manifest):
        try:
            name = row["patch"]
            angle = float(row["angle"]) if row["angle"] else None
            patches.append(Patch(read_image(root / "images" / name), read_mask(root / "masks" / name, encoding),
                                 row["source"], int(row["row"]), int(row["col"]), angle, row["flip"]))
        except KeyError as exc:
            raise IceSegError(f"manifest lacks column {exc}")
    return patches


def cmd_train(args) -> None:
    config = _train_config(args)
    patches = _load_patches(args.manifest, args.encoding)
    params = train(patches, config)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_params(args.out, params)
    if params.loss_history:
        log.info("final epoch loss %.6f", params.loss_history[-1])


def _report_rows(results, count_label: str):
    keys = list(results[0].record())
    rows = [[count_label] + keys[1:]]
    for res in results:
        rec = res.record()
        rows.append([rec["count"], rec["n_images"]] + [
            "" if math.isnan(rec[k]) else f"{rec[k]:.2f}" for k in keys[2:]])
    return rows


def cmd_ablate(args) -> None:
    config = _train_config(args)
    augment = _augment_params(args)
    pool = _load_labelled(args.train_images, args.train_masks, args.encoding)
    test = _load_labelled(args.test_images, args.test_masks, args.encoding)
    out = _out_dir(args.out)
    if args.kind == "images":
        results = ablation.ablate_images(pool, test, args.counts, config, augment, _seed(args), args.jobs)
        for res in results:
            save_params(out / f"model_{res.count}.istb", res.params)
            (out / f"subset_{res.count}.txt").write_text("\n".join(res.images) + "\n", encoding="utf-8")
        _write_csv(out / "report.csv", _report_rows(results, "n_train_images"))
    else:
        results = ablation.ablate_pixels(pool, test, args.counts, config, augment, args.jobs)
        _write_csv(out / "report.csv", _report_rows(results, "pixels_per_class"))
    for res in results:
        log.info("%s=%d: pix_acc %.2f%% mean_iou %.2f%%", args.kind, res.count,
                 100 * res.metrics.pix_acc, 100 * res.metrics.mean_iou)


# -- parser -----------------------------------------------------------------

def _global_flags(parser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None), help="random seed")
    parser.add_argument("--encoding", type=_encoding, default=default(DEFAULT_ENCODING),
                        help="mask gray levels, e.g. water=0,anchor=128,frazil=255,void=64")
    parser.add_argument("--jobs", type=int, default=default(1), help="worker threads")
    parser.add_argument("-q", "--quiet", action="store_true", default=default(False),
                        help="only report errors")


def _augment_flags(parser) -> None:
    parser.add_argument("--patch-size", type=int, required=True)
    parser.add_argument("--stride-min", type=float, default=0.10)
    parser.add_argument("--stride-max", type=float, default=0.40)
    parser.add_argument("--rotation-min", type=float, default=15.0)
    parser.add_argument("--rotation-max", type=float, default=345.0)
    parser.add_argument("--bands", type=int, default=4)
    parser.add_argument("--angles-per-band", type=int, default=1)
    parser.add_argument("--no-flips", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ice-seg", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate synthetic scenes or a frame sequence")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--frames", type=int, default=0, help="write one drifting sequence of this many frames")
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--frazil-pans", type=int, default=10)
    p.add_argument("--anchor-pans", type=int, default=8)
    p.add_argument("--radius-min", type=float, default=15.0)
    p.add_argument("--radius-max", type=float, default=50.0)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--drift", type=float, default=0.0)

    p = add("augment", cmd_augment, "write augmented training patches and a manifest")
    p.add_argument("--images", type=_existing_dir, required=True)
    p.add_argument("--masks", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)
    _augment_flags(p)

    p = add("tile", cmd_tile, "cut frames into K x K tiles for prediction")
    p.add_argument("--images", type=_existing_dir, required=True)
    p.add_argument("--patch-size", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("stitch", cmd_stitch, "reassemble per-tile masks into full frames")
    p.add_argument("--manifest", type=_existing_file, required=True)
    p.add_argument("--masks", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("eval", cmd_eval, "segmentation metrics for matched mask directories")
    p.add_argument("--gt", type=_existing_dir, required=True)
    p.add_argument("--pred", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--classes", choices=("all", "ice"), default="all",
                   help="'ice' scores water against merged anchor+frazil")

    p = add("compare", cmd_compare, "relative change of a model against a baseline")
    p.add_argument("--baseline", type=_existing_file, required=True)
    p.add_argument("--model", type=_existing_file, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--decrease-better", action="store_true", help="report relative decrease (errors)")

    p = add("conc", cmd_conc, "ice concentration MAE per frame and its median")
    p.add_argument("--gt", type=_existing_dir, required=True)
    p.add_argument("--pred", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("vidconsist", cmd_vidconsist, "mean ice concentration difference over a frame sequence")
    p.add_argument("--masks", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--list", type=_existing_file, help="frame order file, one mask name per line")
    p.add_argument("--plot-data", action="store_true")

    p = add("train", cmd_train, "train the per-pixel baseline on an augmented patch set")
    p.add_argument("--manifest", type=_existing_file, required=True)
    p.add_argument("--config", type=_existing_file)
    p.add_argument("--out", type=Path, required=True)

    p = add("predict", cmd_predict, "predict masks with a trained baseline")
    p.add_argument("--params", type=_existing_file, required=True)
    p.add_argument("--images", type=_existing_dir, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--patch-size", type=int, default=0, help="predict K x K tiles and stitch them")

    p = add("ablate", cmd_ablate, "training-image or labelled-pixel ablation")
    p.add_argument("kind", choices=("images", "pixels"))
    p.add_argument("--counts", type=_counts, required=True)
    p.add_argument("--train-images", type=_existing_dir, required=True)
    p.add_argument("--train-masks", type=_existing_dir, required=True)
    p.add_argument("--test-images", type=_existing_dir, required=True)
    p.add_argument("--test-masks", type=_existing_dir, required=True)
    p.add_argument("--config", type=_existing_file)
    p.add_argument("--out", type=Path, required=True)
    _augment_flags(p)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s")
        log.setLevel(logging.WARNING if args.quiet else logging.INFO)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IceSegError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())
