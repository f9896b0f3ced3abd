"""Pseudo-mask generation from cross scribbles.

The mask lives on the cross's outer parallelogram.  A pixel center is
mapped into the skewed arm frame {unit(D-O), unit(A-O)} (rotated when a
direction override is present); it is inside when x in [-|OC|, |OD|] and
y in [-|OB|, |OA|].  Inside pixels get a weight from one of three
operators on the two per-axis Gaussians; sigma is resolved per arm as
ratio * arm length, with ratio = inf collapsing every operator to a flat
binary mask.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, EmptyMask
from .geometry import CrossScribble


class MaskOp(Enum):
    MULTIPLY = "mul"
    ADD = "add"
    MAX = "max"

    @classmethod
    def parse(cls, name: str) -> "MaskOp":
        aliases = {"mul": cls.MULTIPLY, "multiply": cls.MULTIPLY, "x": cls.MULTIPLY,
                   "add": cls.ADD, "+": cls.ADD,
                   "max": cls.MAX}
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ValueError(f"unknown mask operator {name!r}") from None


@dataclass(frozen=True)
class SigmaSpec:
    """Sigma as a ratio of the arm length: sigma_arm = ratio * |arm|."""
    ratio: float

    def __post_init__(self):
        if not (self.ratio > 0.0):
            raise ValueError(f"sigma ratio must be positive, got {self.ratio}")

    @classmethod
    def infinite(cls) -> "SigmaSpec":
        return cls(math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.ratio)

    @classmethod
    def parse(cls, text: str) -> "SigmaSpec":
        if text.lower() in ("inf", "infinity"):
            return cls.infinite()
        return cls(float(text))


@dataclass(frozen=True)
class MaskGrid:
    """H x W grid of weights in [0, 1] matching the source image."""
    width: int
    height: int
    weights: np.ndarray

    @classmethod
    def from_array(cls, weights: np.ndarray) -> "MaskGrid":
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise DimensionMismatch(f"mask grid must be 2-D, got {weights.shape}")
        h, w = weights.shape
        return cls(width=w, height=h, weights=weights)

    @property
    def positive(self) -> np.ndarray:
        return self.weights > 0.0

    @property
    def positive_count(self) -> int:
        return int(np.count_nonzero(self.weights > 0.0))


def _combine(gx, gy, op: MaskOp):
    if op is MaskOp.MULTIPLY:
        return gx * gy
    if op is MaskOp.ADD:
        return (gx + gy) / 2.0
    return np.maximum(gx, gy)


def initial_weight(x: float, y: float, sigma_x: float, sigma_y: float,
                   op: MaskOp) -> float:
    """Weight at arm-frame position (x, y).

    multiply: exp(-(x^2/sx^2 + y^2/sy^2)); add: mean of the two axis
    Gaussians; max: the larger one.  Infinite sigma makes the axis term 1.
    """
    gx = math.exp(-(x * x) / (sigma_x * sigma_x))
    gy = math.exp(-(y * y) / (sigma_y * sigma_y))
    return float(_combine(gx, gy, op))


def rasterize_pseudo_mask(cross: CrossScribble, sigma: SigmaSpec, op: MaskOp,
                          width: int, height: int) -> MaskGrid:
    """Rasterize the weighted parallelogram mask onto a width x height grid.

    Pixel centers sit at (col + 0.5, row + 0.5).  Portions of the
    parallelogram outside the image are clipped; membership tests the
    closed parallelogram with no anti-aliasing.
    """
    if width < 1 or height < 1:
        raise DimensionMismatch(f"grid {width}x{height} is empty")
    o = cross.origin
    ux, uy = _basis_x(cross)
    vx, vy = cross.direction

    det = ux * vy - uy * vx
    # det = +/- sin(theta), bounded away from 0 by cross validation
    inv00, inv01 = vy / det, -vx / det
    inv10, inv11 = -uy / det, ux / det

    cols = np.arange(width, dtype=np.float64) + 0.5 - o.x
    rows = np.arange(height, dtype=np.float64) + 0.5 - o.y
    x = inv00 * cols[None, :] + inv01 * rows[:, None]
    y = inv10 * cols[None, :] + inv11 * rows[:, None]

    inside = ((x >= -cross.arm_oc) & (x <= cross.arm_od) &
              (y >= -cross.arm_ob) & (y <= cross.arm_oa))

    if sigma.is_infinite:
        weights = inside.astype(np.float64)
    else:
        sx = np.where(x >= 0.0, sigma.ratio * cross.arm_od,
                      sigma.ratio * cross.arm_oc)
        sy = np.where(y >= 0.0, sigma.ratio * cross.arm_oa,
                      sigma.ratio * cross.arm_ob)
        gx = np.exp(-(x / sx) ** 2)
        gy = np.exp(-(y / sy) ** 2)
        weights = _combine(gx, gy, op) * inside

    return MaskGrid(width=width, height=height, weights=weights)


def _basis_x(cross: CrossScribble) -> tuple[float, float]:
    """Unit x-axis of the arm frame (towards D), rotated with the override.

    The y-axis is ``cross.direction``; the x-axis keeps the original angle
    between the segments, i.e. both default axes are rotated rigidly by the
    rotation taking unit(A-O) onto the direction vector.
    """
    o = cross.origin
    ax, ay = cross.seg_ab.a.x - o.x, cross.seg_ab.a.y - o.y
    dx, dy = cross.seg_cd.b.x - o.x, cross.seg_cd.b.y - o.y
    an = math.hypot(ax, ay)
    dn = math.hypot(dx, dy)
    v0x, v0y = ax / an, ay / an
    u0x, u0y = dx / dn, dy / dn
    # rotation taking (v0x, v0y) onto direction
    tx, ty = cross.direction
    cos_r = v0x * tx + v0y * ty
    sin_r = v0x * ty - v0y * tx
    return cos_r * u0x - sin_r * u0y, sin_r * u0x + cos_r * u0y


def relative_errors(pseudo: MaskGrid, gt_full: MaskGrid) -> tuple[float, float]:
    """Relative positive/negative pixel errors between pseudo and full mask.

    With M the binarized pseudo mask and Mf the binary full mask:
    e_p = sum((Mf - M) * M) / sum(M) counts false positives inside the
    pseudo mask (non-positive by construction; the magnitude is returned),
    e_n = sum((Mf - M) * (I - M)) / sum(I - M) counts missed positives
    outside it.
    """
    if pseudo.weights.shape != gt_full.weights.shape:
        raise DimensionMismatch(
            f"pseudo {pseudo.weights.shape} vs gt {gt_full.weights.shape}")
    m = (pseudo.weights > 0.0).astype(np.float64)
    mf = (gt_full.weights > 0.0).astype(np.float64)
    n_pos = m.sum()
    n_neg = (1.0 - m).sum()
    if n_pos == 0.0:
        raise EmptyMask("pseudo mask has no positive pixel")
    if n_neg == 0.0:
        raise EmptyMask("pseudo mask covers the whole grid")
    e_p = float((((mf - m) * m).sum()) / n_pos)
    e_n = float((((mf - m) * (1.0 - m)).sum()) / n_neg)
    return abs(e_p), e_n
