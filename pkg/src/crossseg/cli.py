"""Command-line entry point wiring the toolkit into batch workflows.

Exit codes: 0 success, 2 usage/validation failure, 1 runtime failure.
Diagnostics go to stderr; data only to the requested output paths.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset_io
from .branching import (calibrate_thresholds, load_thresholds, relative_size,
                        save_thresholds)
from .errors import CrossSegError, InsufficientData
from .geometry import shrink_cross
from .losses import dice_coefficient
from .multicat import combine_pseudo_masks
from .pseudo_mask import MaskOp, SigmaSpec, rasterize_pseudo_mask, relative_errors

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _sigma_arg(text: str) -> SigmaSpec:
    try:
        return SigmaSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _op_arg(text: str) -> MaskOp:
    try:
        return MaskOp.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _annotation_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.glob("*.json"))


def _genmask_one(path_str: str, sigma_ratio: float, op_name: str,
                 shrink: float):
    """Worker for one annotation file; returns per-category mask grids."""
    doc = dataset_io.load_annotation(path_str)
    sigma = SigmaSpec(sigma_ratio)
    op = MaskOp.parse(op_name)
    masks = []
    for entry in doc.entries:
        cross = entry.cross
        if shrink > 0.0:
            cross = shrink_cross(cross, shrink)
        grid = rasterize_pseudo_mask(cross, sigma, op, doc.width, doc.height)
        masks.append((entry.category, grid))
    return Path(path_str).stem, masks


def cmd_genmask(args) -> int:
    ann_dir = Path(args.annotations)
    files = _annotation_files(ann_dir)
    if not files:
        _log(f"no annotations found in {ann_dir}")
        return EXIT_VALIDATION
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    work = [(str(p), args.sigma_ratio.ratio, args.op.value, args.shrink)
            for p in files]
    failures = 0
    results = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_genmask_one, *w) for w in work]
            for path, fut in zip(files, futures):
                try:
                    results.append(fut.result())
                except CrossSegError as exc:
                    _log(f"{path}: {exc}")
                    failures += 1
    else:
        for w, path in zip(work, files):
            try:
                results.append(_genmask_one(*w))
            except CrossSegError as exc:
                _log(f"{path}: {exc}")
                failures += 1

    summary = {"images": 0, "masks": 0, "per_category": {},
               "op": args.op.value,
               "sigma_ratio": ("inf" if args.sigma_ratio.is_infinite
                               else args.sigma_ratio.ratio),
               "shrink": args.shrink}
    per_cat: dict[int, list] = {}
    for stem, masks in sorted(results):
        summary["images"] += 1
        for cat, grid in masks:
            dataset_io.write_mask(grid, out_dir / f"{stem}_cat{cat}.png")
            summary["masks"] += 1
            per_cat.setdefault(cat, []).append(
                (grid.positive_count, relative_size(grid)))
        if args.combine and masks:
            dataset_io.write_mask(combine_pseudo_masks(masks),
                                  out_dir / f"{stem}_labels.png")
    for cat, rows in sorted(per_cat.items()):
        summary["per_category"][str(cat)] = {
            "count": len(rows),
            "mean_area_px": float(np.mean([r[0] for r in rows])),
            "mean_relative_size": float(np.mean([r[1] for r in rows])),
        }
    dataset_io.atomic_write_bytes(
        dataset_io.canonical_json_bytes(summary), out_dir / "summary.json")
    if failures:
        _log(f"{failures} of {len(files)} annotation files failed")
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_calibrate(args) -> int:
    masks_dir = Path(args.masks)
    sizes: dict[int, list[float]] = {}
    for path in sorted(masks_dir.glob("*_cat*.png")):
        cat = int(path.stem.rsplit("_cat", 1)[1])
        grid = dataset_io.read_mask(path)
        sizes.setdefault(cat, []).append(relative_size(grid))
    if not sizes:
        _log(f"no *_cat*.png masks found in {masks_dir}")
        return EXIT_VALIDATION
    thresholds = {}
    for cat, values in sorted(sizes.items()):
        try:
            thresholds[cat] = calibrate_thresholds(values)
        except InsufficientData as exc:
            _log(f"category {cat}: {exc}")
            return EXIT_VALIDATION
    save_thresholds(thresholds, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    pred_files = sorted(pred_dir.glob("*.png"))
    if not pred_files:
        _log(f"no predictions found in {pred_dir}")
        return EXIT_VALIDATION
    per_image = []
    pairs = []
    for pred_path in pred_files:
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            _log(f"missing ground truth for {pred_path.name}")
            return EXIT_VALIDATION
        pred = dataset_io.read_mask(pred_path).weights > 0.5
        gt = dataset_io.read_mask(gt_path).weights > 0.5
        dice = dice_coefficient(pred, gt)
        per_image.append({"id": pred_path.name, "dice": dice})
        pairs.append(dice)
    report = {"per_image": per_image,
              "mdice": float(np.mean(pairs)),
              "count": len(pairs)}
    dataset_io.atomic_write_bytes(
        dataset_io.canonical_json_bytes(report), args.report)
    return EXIT_OK


def cmd_stats(args) -> int:
    manifest = dataset_io.load_manifest(args.manifest)
    report = dataset_io.annotation_stats(
        manifest, Path(args.manifest).parent, with_gt=args.gt)
    dataset_io.atomic_write_bytes(
        dataset_io.canonical_json_bytes(report.to_json()), args.report)
    return EXIT_OK


def cmd_simulate_shrink(args) -> int:
    files = _annotation_files(Path(args.annotations))
    if not files:
        _log(f"no annotations found in {args.annotations}")
        return EXIT_VALIDATION
    rates = [float(r) for r in args.rates.split(",")]
    for rate in rates:
        if not (0.0 <= rate < 1.0):
            _log(f"shrink rate {rate} outside [0, 1)")
            return EXIT_VALIDATION

    sigma = args.sigma_ratio
    rows = []
    for rate in rates:
        ratios, e_ps, e_ns = [], [], []
        for path in files:
            doc = dataset_io.load_annotation(path)
            for entry in doc.entries:
                base = rasterize_pseudo_mask(entry.cross, sigma, args.op,
                                             doc.width, doc.height)
                if base.positive_count == 0:
                    continue
                shrunk = rasterize_pseudo_mask(
                    shrink_cross(entry.cross, rate), sigma, args.op,
                    doc.width, doc.height)
                ratios.append(shrunk.positive_count / base.positive_count)
                if args.gt:
                    gt_path = Path(args.gt) / f"{path.stem}_cat{entry.category}.png"
                    if gt_path.exists():
                        e_p, e_n = relative_errors(
                            shrunk, dataset_io.read_mask(gt_path))
                        e_ps.append(e_p)
                        e_ns.append(e_n)
        row = {"rate": rate, "mean_area_ratio": float(np.mean(ratios))}
        if e_ps:
            row["e_p"] = float(np.mean(e_ps))
            row["e_n"] = float(np.mean(e_ns))
        rows.append(row)
    dataset_io.atomic_write_bytes(
        dataset_io.canonical_json_bytes({"rates": rows}), args.report)
    return EXIT_OK


def cmd_train_toy(args) -> int:
    from .toy import pipeline
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _log(f"cannot read config: {exc}")
        return EXIT_VALIDATION
    report = pipeline.run_from_config(config, Path(args.out))
    _log(f"stage1 loss {report['stage1']['initial']:.4f} -> "
         f"{report['stage1']['final']:.4f}; "
         f"test mdice {report['metrics']['mdice']:.4f}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(Path(args.root), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossseg",
        description="Cross-shape scribble pseudo-mask toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("genmask", help="rasterize pseudo masks from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--op", type=_op_arg, default=MaskOp.MULTIPLY)
    p.add_argument("--sigma-ratio", type=_sigma_arg, default=SigmaSpec.infinite())
    p.add_argument("--shrink", type=float, default=0.0)
    p.add_argument("--combine", action="store_true",
                   help="also write combined label maps")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_genmask)

    p = sub.add_parser("calibrate", help="fit branch thresholds from masks")
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="mean Dice of predictions vs ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="scribble annotation-rate statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--gt", action="store_true",
                   help="use ground-truth masks from the manifest")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simulate-shrink",
                       help="area (and error) table under shrink rates")
    p.add_argument("--annotations", required=True)
    p.add_argument("--rates", required=True, help="comma-separated, e.g. 0.1,0.3,0.5")
    p.add_argument("--report", required=True)
    p.add_argument("--op", type=_op_arg, default=MaskOp.MULTIPLY)
    p.add_argument("--sigma-ratio", type=_sigma_arg, default=SigmaSpec.infinite())
    p.add_argument("--gt", default=None,
                   help="directory of full masks named <stem>_cat<k>.png")
    p.set_defaults(func=cmd_simulate_shrink)

    p = sub.add_parser("train-toy", help="run the two-stage toy training")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--root", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", default=None, help="static UI directory to mount")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CrossSegError as exc:
        _log(str(exc))
        return EXIT_VALIDATION
    except OSError as exc:
        _log(str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
