"""Seeded synthetic corpus generation: one bright shape per image plus a
cross scribble placed the way an annotator would (roughly through the
middle, arms a little short of the true extents).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import CrossScribble, Point2, Segment, build_cross
from ..pseudo_mask import MaskGrid, MaskOp, SigmaSpec, rasterize_pseudo_mask

BG_LEVEL = 0.25
FG_LEVEL = 0.75


@dataclass(frozen=True)
class SyntheticSpec:
    size: int = 64
    family: str = "mixed"             # "rect" | "ellipse" | "mixed"
    area_range: tuple = (0.01, 0.25)  # relative target area
    noise: float = 0.08
    seed: int = 0


@dataclass
class Sample:
    image: np.ndarray
    gt: np.ndarray            # bool (H, W)
    cross: CrossScribble
    pseudo: MaskGrid
    r_z: float = field(default=0.0)


def _shape_mask(size, kind, cx, cy, half_w, half_h, phi):
    cols = np.arange(size) + 0.5 - cx
    rows = np.arange(size) + 0.5 - cy
    x = cols[None, :]
    y = rows[:, None]
    if kind == "rect":
        return (np.abs(x) <= half_w) & (np.abs(y) <= half_h)
    xr = x * math.cos(phi) + y * math.sin(phi)
    yr = -x * math.sin(phi) + y * math.cos(phi)
    return (xr / half_w) ** 2 + (yr / half_h) ** 2 <= 1.0


def _clip_arm(cx, cy, dx, dy, length, size):
    """Longest arm <= length from (cx, cy) along (dx, dy) staying in bounds."""
    limit = length
    for c, d in ((cx, dx), (cy, dy)):
        if d > 1e-12:
            limit = min(limit, (size - 0.5 - c) / d)
        elif d < -1e-12:
            limit = min(limit, (c - 0.5) / -d)
    return max(limit, 0.6)


def _make_cross(rng, size, cx, cy, half_w, half_h, phi) -> CrossScribble:
    # annotator-style roughness: center jitter, slightly short arms,
    # near-perpendicular tilt jitter
    jx = cx + rng.uniform(-0.15, 0.15) * half_w
    jy = cy + rng.uniform(-0.15, 0.15) * half_h
    a_long = phi + math.radians(rng.uniform(-4, 4))
    a_short = phi + math.pi / 2 + math.radians(rng.uniform(-8, 8))
    covers = rng.uniform(0.75, 0.95, size=4)
    arms = [max(0.8, half_w * covers[0]), max(0.8, half_w * covers[1]),
            max(0.8, half_h * covers[2]), max(0.8, half_h * covers[3])]
    dirs = [(math.cos(a_long), math.sin(a_long)),
            (-math.cos(a_long), -math.sin(a_long)),
            (math.cos(a_short), math.sin(a_short)),
            (-math.cos(a_short), -math.sin(a_short))]
    pts = []
    for (dx, dy), arm in zip(dirs, arms):
        arm = _clip_arm(jx, jy, dx, dy, arm, size)
        pts.append(Point2(jx + arm * dx, jy + arm * dy))
    return build_cross(Segment(pts[0], pts[1]), Segment(pts[2], pts[3]))


def generate_corpus(spec: SyntheticSpec, count: int,
                    sigma: SigmaSpec | None = None,
                    op: MaskOp = MaskOp.MULTIPLY) -> list[Sample]:
    """Deterministic list of samples for the given spec and count."""
    if sigma is None:
        sigma = SigmaSpec.infinite()
    rng = np.random.default_rng(spec.seed)
    size = spec.size
    lo, hi = spec.area_range
    # tiny / medium / huge clusters over the log range, sampled evenly so
    # every size regime is well represented
    edges = np.exp(np.linspace(math.log(lo), math.log(hi), 4))
    samples = []
    while len(samples) < count:
        kind = spec.family
        if kind == "mixed":
            kind = "rect" if rng.random() < 0.5 else "ellipse"
        bucket = rng.integers(0, 3)
        rel_area = math.exp(rng.uniform(math.log(edges[bucket]),
                                        math.log(edges[bucket + 1])))
        area_px = rel_area * size * size
        aspect = rng.uniform(0.6, 1.7)
        if kind == "rect":
            half_w = math.sqrt(area_px * aspect) / 2.0
            half_h = area_px / (4.0 * half_w)
            phi = 0.0
        else:
            half_w = math.sqrt(area_px * aspect / math.pi)
            half_h = area_px / (math.pi * half_w)
            phi = rng.uniform(0, math.pi)
        half_w = max(half_w, 1.2)
        half_h = max(half_h, 1.2)
        reach = math.hypot(half_w, half_h)
        if 2 * reach > size - 4:
            continue
        cx = rng.uniform(reach + 1, size - reach - 1)
        cy = rng.uniform(reach + 1, size - reach - 1)
        gt = _shape_mask(size, kind, cx, cy, half_w, half_h, phi)
        if not gt.any():
            continue

        image = np.where(gt, FG_LEVEL, BG_LEVEL) \
            + rng.normal(scale=spec.noise, size=(size, size))
        image = np.clip(image, 0.0, 1.0)

        cross = _make_cross(rng, size, cx, cy, half_w, half_h, phi)
        pseudo = rasterize_pseudo_mask(cross, sigma, op, size, size)
        grow = 1.0
        while pseudo.positive_count == 0 and grow < 4.0:
            # sub-pixel parallelogram missed every center: widen the cross
            grow *= 1.5
            cross = _make_cross(rng, size, cx, cy,
                                half_w * grow, half_h * grow, phi)
            pseudo = rasterize_pseudo_mask(cross, sigma, op, size, size)
        if pseudo.positive_count == 0:
            continue
        r_z = pseudo.positive_count / (size * size)
        samples.append(Sample(image=image, gt=gt, cross=cross,
                              pseudo=pseudo, r_z=r_z))
    return samples
