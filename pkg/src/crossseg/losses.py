"""Per-pixel and reduced losses plus Dice evaluation metrics."""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, EmptyList, NoLabels

PROB_CLAMP = 1e-7
DICE_EPS = 1e-6


def bce(pred: np.ndarray, target: np.ndarray, reduction: str = "none"):
    """Binary cross entropy, per pixel or mean-reduced.

    Targets may be soft (pseudo masks with finite sigma); predictions are
    clamped to [1e-7, 1 - 1e-7] before the logs.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs target {target.shape}")
    p = np.clip(pred, PROB_CLAMP, 1.0 - PROB_CLAMP)
    grid = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))
    if reduction == "none":
        return grid
    if reduction == "mean":
        return float(grid.mean())
    raise ValueError(f"unknown reduction {reduction!r}")


def bce_grad_logit(logit: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d BCE / d logit = sigmoid(logit) - target, per pixel."""
    return expit(np.asarray(logit, dtype=np.float64)) - np.asarray(target, dtype=np.float64)


def partial_ce(pred: np.ndarray, labels: dict) -> float:
    """Mean BCE over the labelled pixels only.

    ``labels`` maps (row, col) to the binary class of that pixel; everything
    else is ignored, mirroring scribble-only supervision.
    """
    if not labels:
        raise NoLabels("no labelled pixel")
    pred = np.asarray(pred, dtype=np.float64)
    pix = list(labels.items())
    rows = np.array([rc[0] for rc, _ in pix])
    cols = np.array([rc[1] for rc, _ in pix])
    targets = np.array([t for _, t in pix], dtype=np.float64)
    return float(bce(pred[rows, cols], targets, reduction="mean"))


def dice_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """1 - (2 sum(p*t) + eps) / (sum(p) + sum(t) + eps), eps = 1e-6."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs target {target.shape}")
    inter = (pred * target).sum()
    return float(1.0 - (2.0 * inter + DICE_EPS) / (pred.sum() + target.sum() + DICE_EPS))


def dice_coefficient(pred: np.ndarray, gt: np.ndarray) -> float:
    """Binary Dice overlap 2|P & G| / (|P| + |G|); both-empty scores 1."""
    pred = np.asarray(pred) > 0
    gt = np.asarray(gt) > 0
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs gt {gt.shape}")
    p = int(pred.sum())
    g = int(gt.sum())
    if p == 0 and g == 0:
        return 1.0
    inter = int((pred & gt).sum())
    return 2.0 * inter / (p + g)


def mdice(pairs) -> float:
    """Mean Dice over (pred, gt) binary mask pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyList("no prediction/ground-truth pairs")
    return float(np.mean([dice_coefficient(p, g) for p, g in pairs]))
