"""HTTP/JSON facade for the annotation UI: image listing, live pseudo-mask
preview, annotation persistence with optimistic concurrency.

Previews are pure: the same request body always yields the same PNG.
Annotation saves are atomic and guarded by a per-image version counter
kept in memory for the service's lifetime.
"""
from __future__ import annotations

import base64
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from . import dataset_io
from .branching import load_thresholds, select_branch
from .errors import BoundsError, CrossSegError, GeometryError, SchemaError
from .geometry import Point2, Segment, build_cross
from .pseudo_mask import MaskOp, SigmaSpec, rasterize_pseudo_mask

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}
ANNOTATION_SUBDIR = "annotations"
THRESHOLDS_FILE = "thresholds.json"


class CrossBody(BaseModel):
    seg_ab: list[list[float]] = Field(min_length=2, max_length=2)
    seg_cd: list[list[float]] = Field(min_length=2, max_length=2)
    direction_deg: float | None = None


class PreviewRequest(BaseModel):
    cross: CrossBody
    sigma_ratio: float | str = "inf"
    op: str = "mul"
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    category: int = 1
    shrink: float = 0.0


class SaveRequest(BaseModel):
    doc: dict[str, Any]
    base_version: int = 0


class SessionState:
    """Root directory plus per-image annotation version counters."""

    def __init__(self, root: Path):
        self.root = root
        self.versions: dict[str, int] = {}
        self.lock = threading.Lock()

    def annotation_path(self, image_id: str) -> Path:
        path = (self.root / ANNOTATION_SUBDIR / image_id).with_suffix(".json")
        resolved = path.resolve()
        if not str(resolved).startswith(str((self.root / ANNOTATION_SUBDIR).resolve())):
            raise HTTPException(status_code=422, detail="invalid image id")
        return path


def _segment(points: list[list[float]]) -> Segment:
    return Segment(Point2(float(points[0][0]), float(points[0][1])),
                   Point2(float(points[1][0]), float(points[1][1])))


def create_app(root: Path, ui_dir: str | None = None) -> FastAPI:
    root = Path(root)
    state = SessionState(root)
    app = FastAPI(title="crossseg annotation service", version="1.0.0",
                  description="Image listing, pseudo-mask preview and "
                              "annotation persistence for the scribble UI.")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    def thresholds_for(category: int):
        path = root / THRESHOLDS_FILE
        if not path.exists():
            return None
        table = load_thresholds(path)
        if category in table:
            return table[category]
        if len(table) == 1:
            return next(iter(table.values()))
        return None

    @app.get("/api/images")
    def list_images() -> list[dict]:
        if not root.is_dir():
            raise HTTPException(status_code=500, detail=f"unreadable root {root}")
        out = []
        for path in sorted(root.rglob("*")):
            if path.suffix.lower() not in IMAGE_SUFFIXES:
                continue
            if ANNOTATION_SUBDIR in path.relative_to(root).parts:
                continue
            try:
                with Image.open(path) as img:
                    width, height = img.size
            except OSError:
                continue
            out.append({"id": str(path.relative_to(root)),
                        "width": width, "height": height})
        return out

    @app.get("/api/images/{image_id:path}")
    def get_image(image_id: str):
        path = root / image_id
        if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
            raise HTTPException(status_code=404, detail=f"no image {image_id}")
        return FileResponse(path)

    @app.post("/api/preview")
    def preview(req: PreviewRequest) -> dict:
        try:
            sigma = SigmaSpec.parse(str(req.sigma_ratio))
            op = MaskOp.parse(req.op)
            cross = build_cross(_segment(req.cross.seg_ab),
                                _segment(req.cross.seg_cd),
                                direction_override=req.cross.direction_deg)
            if req.shrink > 0.0:
                from .geometry import shrink_cross
                cross = shrink_cross(cross, req.shrink)
            grid = rasterize_pseudo_mask(cross, sigma, op,
                                         req.width, req.height)
        except (CrossSegError, ValueError) as exc:
            raise HTTPException(
                status_code=422,
                detail=f"{type(exc).__name__}: {exc}") from exc
        area = grid.positive_count
        rel = area / (req.width * req.height)
        payload = {
            "mask_png_base64": base64.b64encode(
                dataset_io.mask_to_png_bytes(grid)).decode("ascii"),
            "area_px": area,
            "relative_size": rel,
        }
        thr = thresholds_for(req.category)
        if thr is not None:
            payload["branch_index"] = select_branch(rel, thr)
        return payload

    @app.get("/api/annotations/{image_id:path}")
    def get_annotation(image_id: str) -> dict:
        path = state.annotation_path(image_id)
        if not path.exists():
            raise HTTPException(status_code=404,
                                detail=f"no annotation for {image_id}")
        doc = dataset_io.load_annotation(path)
        version = state.versions.get(image_id, 0)
        return {"doc": dataset_io.annotation_to_json(doc), "version": version}

    @app.post("/api/annotations/{image_id:path}")
    def save_annotation_endpoint(image_id: str, req: SaveRequest) -> dict:
        try:
            doc = dataset_io.parse_annotation(req.doc, source=image_id)
        except (SchemaError, BoundsError, GeometryError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        with state.lock:
            current = state.versions.get(image_id, 0)
            if req.base_version != current:
                raise HTTPException(
                    status_code=409,
                    detail=f"version conflict: have {current}, "
                           f"got base {req.base_version}")
            dataset_io.save_annotation(doc, state.annotation_path(image_id))
            state.versions[image_id] = current + 1
            return {"version": state.versions[image_id]}

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
