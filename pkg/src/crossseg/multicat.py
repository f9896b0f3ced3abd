"""Combining per-category pseudo masks into one non-overlapping label map.

Overlaps between category masks are resolved with two rules: a mask whose
positive set is entirely enclosed in another's keeps the overlap (inner
category wins); otherwise the overlap goes to the category with the larger
positive area.  Ties fall to the lower category id so builds stay
deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DuplicateCategory
from .pseudo_mask import MaskGrid


@dataclass(frozen=True)
class LabelMap:
    """H x W small-integer labels, 0 = background."""
    width: int
    height: int
    labels: np.ndarray

    @classmethod
    def from_array(cls, labels: np.ndarray) -> "LabelMap":
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise DimensionMismatch(f"label map must be 2-D, got {labels.shape}")
        h, w = labels.shape
        return cls(width=w, height=h, labels=labels.astype(np.int32))


def containment(inner: MaskGrid, outer: MaskGrid) -> bool:
    """True iff every positive pixel of ``inner`` is positive in ``outer``."""
    if inner.weights.shape != outer.weights.shape:
        raise DimensionMismatch(
            f"inner {inner.weights.shape} vs outer {outer.weights.shape}")
    return bool(np.all(outer.positive[inner.positive]))


def _pairwise_winner(c1: int, c2: int, pos: dict, area: dict) -> int:
    in12 = not np.any(pos[c1] & ~pos[c2])
    in21 = not np.any(pos[c2] & ~pos[c1])
    if in12 and in21:
        return min(c1, c2)
    if in12:
        return c1
    if in21:
        return c2
    if area[c1] != area[c2]:
        return c1 if area[c1] > area[c2] else c2
    return min(c1, c2)


def combine_pseudo_masks(masks: list[tuple[int, MaskGrid]]) -> LabelMap:
    """Resolve inter-category overlap into a single label map.

    Pixels in no mask stay background (0).  Multi-way overlaps are folded
    pairwise in descending-area order, so the result does not depend on the
    order of the input list.
    """
    if not masks:
        raise ValueError("no masks to combine")
    shape = masks[0][1].weights.shape
    pos: dict[int, np.ndarray] = {}
    area: dict[int, int] = {}
    for cat, grid in masks:
        if cat < 1:
            raise ValueError(f"category id must be >= 1, got {cat}")
        if grid.weights.shape != shape:
            raise DimensionMismatch(
                f"mask for category {cat} is {grid.weights.shape}, expected {shape}")
        if cat in pos:
            raise DuplicateCategory(f"category {cat} appears twice")
        pos[cat] = grid.positive
        area[cat] = int(pos[cat].sum())

    order = sorted(pos, key=lambda c: (-area[c], c))
    labels = np.zeros(shape, dtype=np.int32)
    for cat in order:
        m = pos[cat]
        free = m & (labels == 0)
        labels[free] = cat
        contested = m & (labels != 0) & (labels != cat)
        if np.any(contested):
            for holder in np.unique(labels[contested]):
                cells = contested & (labels == holder)
                labels[cells] = _pairwise_winner(int(holder), cat, pos, area)
    h, w = shape
    return LabelMap(width=w, height=h, labels=labels)
