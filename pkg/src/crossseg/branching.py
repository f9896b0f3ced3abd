"""Relative size, branch selection thresholds and the size-aware loss.

The relative size of a pseudo mask (positive fraction of the grid) picks
one of three branches via two thresholds, and scales the extra loss placed
on the mask support through the coefficient alpha = min(1/size, coe).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InsufficientData, NonFiniteLoss
from .pseudo_mask import MaskGrid


@dataclass(frozen=True)
class BranchThresholds:
    thr1: float
    thr2: float

    def __post_init__(self):
        if not (0.0 < self.thr1 < self.thr2 < 1.0):
            raise ValueError(
                f"thresholds must satisfy 0 < thr1 < thr2 < 1, "
                f"got ({self.thr1}, {self.thr2})")


@dataclass(frozen=True)
class SizeAwareConfig:
    coe: float = 10.0
    n_branches: int = 3

    def __post_init__(self):
        if self.coe < 1.0:
            raise ValueError(f"coe must be >= 1, got {self.coe}")
        if self.n_branches < 1:
            raise ValueError(f"need at least one branch, got {self.n_branches}")


def relative_size(mask: MaskGrid) -> float:
    """Positive-pixel fraction of the grid."""
    return mask.positive_count / (mask.width * mask.height)


def select_branch(r_z: float, thr: BranchThresholds) -> int:
    """Branch index in {1, 2, 3}: 1 for small, 2 for medium, 3 for large."""
    if r_z <= thr.thr1:
        return 1
    if r_z <= thr.thr2:
        return 2
    return 3


def calibrate_thresholds(sizes: list[float]) -> BranchThresholds:
    """Thresholds that split the non-zero sizes into three equal tertiles.

    Zeros are dropped, the rest sorted ascending; thr1 and thr2 are the
    values closing the first and second tertile (1-based indices m//3 and
    2m//3).  Needs at least 3 distinct non-zero sizes producing strictly
    increasing boundaries, otherwise :class:`InsufficientData` is raised.
    """
    nonzero = sorted(s for s in sizes if s > 0.0)
    m = len(nonzero)
    if len(set(nonzero)) < 3:
        raise InsufficientData(
            f"need >= 3 distinct non-zero sizes, got {len(set(nonzero))}")
    thr1 = nonzero[m // 3 - 1]
    thr2 = nonzero[2 * m // 3 - 1]
    if not thr1 < thr2:
        raise InsufficientData(
            f"tertile boundaries coincide at {thr1}; sizes too concentrated")
    return BranchThresholds(thr1=thr1, thr2=thr2)


def coefficient_alpha(r_z: float, coe: float) -> float:
    """alpha = min(1/r_z, coe); an empty mask clamps straight to coe."""
    if r_z <= 0.0:
        return coe
    return min(1.0 / r_z, coe)


def coefficient_mask(pseudo: MaskGrid, alpha: float) -> np.ndarray:
    """(alpha - 1) on the pseudo-mask support, 0 elsewhere."""
    if alpha < 1.0:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    return np.where(pseudo.weights > 0.0, alpha - 1.0, 0.0)


def size_aware_loss(loss_grid: np.ndarray, coeff: np.ndarray) -> float:
    """sum(per-pixel loss * coefficient mask) / total pixel count."""
    loss_grid = np.asarray(loss_grid, dtype=np.float64)
    coeff = np.asarray(coeff, dtype=np.float64)
    if loss_grid.shape != coeff.shape:
        raise DimensionMismatch(
            f"loss grid {loss_grid.shape} vs coefficient mask {coeff.shape}")
    return float((loss_grid * coeff).sum() / loss_grid.size)


def segmentation_total_loss(l_sa: float, l1: float, l2: float, l3: float) -> float:
    """Total first-stage loss: size-aware term plus the three branch losses."""
    total = l_sa + l1 + l2 + l3
    if not math.isfinite(total):
        raise NonFiniteLoss(
            f"non-finite loss: l_sa={l_sa}, l1={l1}, l2={l2}, l3={l3}")
    return total


def save_thresholds(per_category: dict[int, BranchThresholds], path) -> None:
    """Persist per-category thresholds as {category_id: {thr1, thr2}}."""
    doc = {str(cat): {"thr1": thr.thr1, "thr2": thr.thr2}
           for cat, thr in sorted(per_category.items())}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_thresholds(path) -> dict[int, BranchThresholds]:
    doc = json.loads(Path(path).read_text())
    return {int(cat): BranchThresholds(thr1=v["thr1"], thr2=v["thr2"])
            for cat, v in doc.items()}
