"""Annotation documents, mask files, dataset manifests and scribble stats.

Annotations are JSON (schema shipped with the package); masks are 8-bit
grayscale PNGs with soft weights quantized to round(255*w); label maps are
8-bit PNGs holding raw category indices.  All writes are atomic (temp file
in the target directory, then rename).
"""
from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from PIL import Image

from .errors import (BoundsError, CrossSegError, GeometryError, IoError,
                     MissingGt, SchemaError, UnsupportedBitDepth)
from .geometry import CrossScribble, Point2, Segment, build_cross
from .multicat import LabelMap
from .pseudo_mask import MaskGrid, MaskOp, SigmaSpec, rasterize_pseudo_mask

SCHEMA_VERSION = 1
RAW_MAGIC = b"XMSK"

with resources.files("crossseg.schemas").joinpath(
        "annotation.schema.json").open("r") as _fh:
    ANNOTATION_SCHEMA = json.load(_fh)
_VALIDATOR = jsonschema.Draft202012Validator(ANNOTATION_SCHEMA)


@dataclass(frozen=True)
class AnnotationEntry:
    category: int
    seg_ab: Segment
    seg_cd: Segment
    direction_deg: float | None
    cross: CrossScribble


@dataclass(frozen=True)
class AnnotationDoc:
    image_ref: str
    width: int
    height: int
    entries: tuple[AnnotationEntry, ...]
    background: Segment | None = None
    multi_instance: bool = False


def _seg_to_json(seg: Segment) -> list:
    return [[seg.a.x, seg.a.y], [seg.b.x, seg.b.y]]


def _seg_from_json(data) -> Segment:
    (ax, ay), (bx, by) = data
    return Segment(Point2(float(ax), float(ay)), Point2(float(bx), float(by)))


def _check_bounds(seg: Segment, width, height, what: str):
    for p in (seg.a, seg.b):
        if not (0.0 <= p.x <= width and 0.0 <= p.y <= height):
            raise BoundsError(
                f"{what}: endpoint ({p.x}, {p.y}) outside "
                f"[0,{width}]x[0,{height}]")


def parse_annotation(data: dict, source: str = "<memory>") -> AnnotationDoc:
    """Validate a raw JSON object and build the annotation document.

    Structural problems raise :class:`SchemaError`; endpoints outside the
    image raise :class:`BoundsError` naming the entry; crosses that fail
    geometric validation raise :class:`GeometryError`.
    """
    err = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(data))
    if err is not None:
        raise SchemaError(f"{source}: {err.message} at "
                          f"/{'/'.join(str(p) for p in err.absolute_path)}")

    width = data["width"]
    height = data["height"]
    entries = []
    seen = set()
    for i, raw in enumerate(data["entries"]):
        cat = raw["category"]
        what = f"{source}: entry {i} (category {cat})"
        if cat in seen and not data.get("multi_instance", False):
            raise SchemaError(f"{what}: duplicate category without "
                              "multi_instance flag")
        seen.add(cat)
        seg_ab = _seg_from_json(raw["cross"]["seg_ab"])
        seg_cd = _seg_from_json(raw["cross"]["seg_cd"])
        _check_bounds(seg_ab, width, height, what)
        _check_bounds(seg_cd, width, height, what)
        direction = raw.get("direction_deg")
        try:
            cross = build_cross(seg_ab, seg_cd, direction_override=direction)
        except CrossSegError as exc:
            raise GeometryError(f"{what}: {exc}") from exc
        entries.append(AnnotationEntry(category=cat, seg_ab=seg_ab,
                                       seg_cd=seg_cd, direction_deg=direction,
                                       cross=cross))
    background = None
    if "background" in data:
        background = _seg_from_json(data["background"]["seg"])
        _check_bounds(background, width, height, f"{source}: background")
        if background.length == 0.0:
            raise GeometryError(f"{source}: background segment has zero length")
    return AnnotationDoc(image_ref=data["image_ref"], width=width,
                         height=height, entries=tuple(entries),
                         background=background,
                         multi_instance=bool(data.get("multi_instance", False)))


def annotation_to_json(doc: AnnotationDoc) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "image_ref": doc.image_ref,
        "width": doc.width,
        "height": doc.height,
        "entries": [],
    }
    if doc.multi_instance:
        out["multi_instance"] = True
    for e in doc.entries:
        entry = {"category": e.category,
                 "cross": {"seg_ab": _seg_to_json(e.seg_ab),
                           "seg_cd": _seg_to_json(e.seg_cd)}}
        if e.direction_deg is not None:
            entry["direction_deg"] = e.direction_deg
        out["entries"].append(entry)
    if doc.background is not None:
        out["background"] = {"seg": _seg_to_json(doc.background)}
    return out


def canonical_json_bytes(data: dict) -> bytes:
    return (json.dumps(data, indent=2, sort_keys=True) + "\n").encode()


def atomic_write_bytes(payload: bytes, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_annotation(path) -> AnnotationDoc:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return parse_annotation(data, source=str(path))


def save_annotation(doc: AnnotationDoc, path) -> None:
    atomic_write_bytes(canonical_json_bytes(annotation_to_json(doc)), path)


# --- mask files ---

def mask_to_png_bytes(grid) -> bytes:
    """Deterministic PNG encoding shared by the CLI and the preview service."""
    if isinstance(grid, LabelMap):
        arr = grid.labels
        if arr.max(initial=0) > 255 or arr.min(initial=0) < 0:
            raise IoError("label map does not fit 8-bit PNG")
        img = Image.fromarray(arr.astype(np.uint8), mode="L")
    elif isinstance(grid, MaskGrid):
        quant = np.rint(255.0 * np.clip(grid.weights, 0.0, 1.0))
        img = Image.fromarray(quant.astype(np.uint8), mode="L")
    else:
        raise TypeError(f"cannot encode {type(grid).__name__}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_mask(grid, path) -> None:
    atomic_write_bytes(mask_to_png_bytes(grid), path)


def _read_gray(path) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if img.mode != "L":
        raise UnsupportedBitDepth(
            f"{path}: expected 8-bit grayscale, got mode {img.mode}")
    return np.asarray(img)


def read_mask(path) -> MaskGrid:
    """Inverse of write_mask for weight grids: w = v / 255."""
    return MaskGrid.from_array(_read_gray(path).astype(np.float64) / 255.0)


def read_label_map(path) -> LabelMap:
    return LabelMap.from_array(_read_gray(path))


def write_mask_raw(grid: MaskGrid, path) -> None:
    """Lossless export: 8-byte header (magic, H, W) + float32 LE stream."""
    if grid.height > 0xFFFF or grid.width > 0xFFFF:
        raise IoError("grid too large for raw header")
    header = RAW_MAGIC + struct.pack("<HH", grid.height, grid.width)
    payload = grid.weights.astype("<f4").tobytes()
    atomic_write_bytes(header + payload, path)


def read_mask_raw(path) -> MaskGrid:
    blob = Path(path).read_bytes()
    if len(blob) < 8 or blob[:4] != RAW_MAGIC:
        raise IoError(f"{path}: missing raw-mask magic")
    h, w = struct.unpack("<HH", blob[4:8])
    data = np.frombuffer(blob[8:], dtype="<f4")
    if data.size != h * w:
        raise IoError(f"{path}: payload is {data.size} floats, header says {h}x{w}")
    return MaskGrid.from_array(data.reshape(h, w).astype(np.float64))


# --- manifests ---

@dataclass(frozen=True)
class ManifestItem:
    image_ref: str
    annotation_ref: str
    gt_mask_ref: str | None = None
    split: str = "train"


@dataclass(frozen=True)
class DatasetManifest:
    items: tuple[ManifestItem, ...] = field(default_factory=tuple)

    def for_split(self, split: str) -> list[ManifestItem]:
        return [i for i in self.items if i.split == split]


def load_manifest(path, check_refs: bool = True) -> DatasetManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not isinstance(data, dict) or "items" not in data:
        raise SchemaError(f"{path}: manifest needs an 'items' list")
    items = []
    seen = set()
    for i, raw in enumerate(data["items"]):
        for req in ("image_ref", "annotation_ref"):
            if req not in raw:
                raise SchemaError(f"{path}: item {i} missing {req}")
        if raw["image_ref"] in seen:
            raise SchemaError(f"{path}: duplicate image_ref {raw['image_ref']}")
        seen.add(raw["image_ref"])
        split = raw.get("split", "train")
        if split not in ("train", "val", "test"):
            raise SchemaError(f"{path}: item {i} has unknown split {split!r}")
        item = ManifestItem(image_ref=raw["image_ref"],
                            annotation_ref=raw["annotation_ref"],
                            gt_mask_ref=raw.get("gt_mask_ref"),
                            split=split)
        if check_refs:
            base = path.parent
            for ref in (item.annotation_ref, item.gt_mask_ref):
                if ref is not None and not (base / ref).exists():
                    raise SchemaError(f"{path}: item {i} ref {ref} not found")
        items.append(item)
    return DatasetManifest(items=tuple(items))


def save_manifest(manifest: DatasetManifest, path) -> None:
    data = {"items": []}
    for item in manifest.items:
        row = {"image_ref": item.image_ref,
               "annotation_ref": item.annotation_ref,
               "split": item.split}
        if item.gt_mask_ref is not None:
            row["gt_mask_ref"] = item.gt_mask_ref
        data["items"].append(row)
    atomic_write_bytes(canonical_json_bytes(data), path)


# --- scribble statistics ---

def bresenham_line(x0: int, y0: int, x1: int, y1: int):
    """Integer pixel coordinates of a 1-px-wide line from (x0,y0) to (x1,y1)."""
    points = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        points.append((x, y))
        if x == x1 and y == y1:
            return points
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy


def scribble_pixels(seg: Segment, width: int, height: int) -> set:
    """Pixels covered by a width-1 rasterization of the segment."""
    def to_px(p: Point2):
        return (min(max(int(p.x), 0), width - 1),
                min(max(int(p.y), 0), height - 1))

    x0, y0 = to_px(seg.a)
    x1, y1 = to_px(seg.b)
    return set(bresenham_line(x0, y0, x1, y1))


@dataclass
class ImageStats:
    image_ref: str
    fg_rate: float
    bg_rate: float | None
    coverage: float | None


@dataclass
class StatsReport:
    per_image: list
    fg_rate_mean: float
    bg_rate_mean: float | None
    coverage_mean: float | None
    coverage_hist: list | None
    denominator: str
    count: int

    def to_json(self) -> dict:
        per_image = []
        for s in self.per_image:
            row = {"id": s.image_ref, "fg_rate": s.fg_rate}
            if s.bg_rate is not None:
                row["bg_rate"] = s.bg_rate
            if s.coverage is not None:
                row["coverage"] = s.coverage
            per_image.append(row)
        out = {"per_image": per_image, "count": self.count,
               "denominator": self.denominator,
               "aggregate": {"fg_rate_mean": self.fg_rate_mean}}
        if self.bg_rate_mean is not None:
            out["aggregate"]["bg_rate_mean"] = self.bg_rate_mean
        if self.coverage_mean is not None:
            out["aggregate"]["coverage_mean"] = self.coverage_mean
            out["aggregate"]["coverage_hist"] = {
                "bin_width": 0.01, "counts": self.coverage_hist}
        return out


def annotation_stats(manifest: DatasetManifest, base_dir,
                     with_gt: bool = False,
                     sigma: SigmaSpec | None = None,
                     op: MaskOp = MaskOp.MULTIPLY) -> StatsReport:
    """Scribble annotated-rates plus, with ground truth, pseudo-mask
    foreground coverage.

    Rates follow the binary foreground/background framing: the foreground
    pixel count comes from the GT mask when available, otherwise from the
    image's own pseudo masks (reported in ``denominator``).  Coverage is
    the fraction of GT-positive pixels inside the combined pseudo mask.
    """
    if sigma is None:
        sigma = SigmaSpec.infinite()
    base_dir = Path(base_dir)
    per_image = []
    for item in manifest.items:
        if with_gt and item.gt_mask_ref is None:
            raise MissingGt(f"{item.image_ref}: no gt_mask_ref in manifest")
        doc = load_annotation(base_dir / item.annotation_ref)

        fg_scribble = set()
        pseudo_union = np.zeros((doc.height, doc.width), dtype=bool)
        for e in doc.entries:
            fg_scribble |= scribble_pixels(e.seg_ab, doc.width, doc.height)
            fg_scribble |= scribble_pixels(e.seg_cd, doc.width, doc.height)
            mask = rasterize_pseudo_mask(e.cross, sigma, op,
                                         doc.width, doc.height)
            pseudo_union |= mask.positive

        gt = None
        if with_gt:
            gt = read_mask(base_dir / item.gt_mask_ref).weights > 0.0
            if gt.shape != (doc.height, doc.width):
                raise MissingGt(
                    f"{item.image_ref}: gt shape {gt.shape} does not match "
                    f"annotation {doc.height}x{doc.width}")
            fg_area = int(gt.sum())
            bg_area = gt.size - fg_area
        else:
            fg_area = int(pseudo_union.sum())
            bg_area = pseudo_union.size - fg_area

        fg_rate = len(fg_scribble) / fg_area if fg_area else 0.0
        bg_rate = None
        if doc.background is not None and bg_area:
            bg_px = scribble_pixels(doc.background, doc.width, doc.height)
            bg_rate = len(bg_px) / bg_area
        coverage = None
        if with_gt and fg_area:
            coverage = float((pseudo_union & gt).sum() / fg_area)
        per_image.append(ImageStats(image_ref=item.image_ref, fg_rate=fg_rate,
                                    bg_rate=bg_rate, coverage=coverage))

    fg_mean = float(np.mean([s.fg_rate for s in per_image])) if per_image else 0.0
    bg_vals = [s.bg_rate for s in per_image if s.bg_rate is not None]
    bg_mean = float(np.mean(bg_vals)) if bg_vals else None
    cov_vals = [s.coverage for s in per_image if s.coverage is not None]
    cov_mean = float(np.mean(cov_vals)) if cov_vals else None
    cov_hist = None
    if cov_vals:
        edges = np.arange(0.0, 1.01 + 1e-9, 0.01)
        cov_hist = np.histogram(np.clip(cov_vals, 0, 1), bins=edges)[0].tolist()
    return StatsReport(per_image=per_image, fg_rate_mean=fg_mean,
                       bg_rate_mean=bg_mean, coverage_mean=cov_mean,
                       coverage_hist=cov_hist,
                       denominator="gt" if with_gt else "pseudo",
                       count=len(per_image))
