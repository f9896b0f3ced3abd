"""Score-stage machinery: normalization, weighted averaging over the mask,
ground-truth score generation, the score loss, and the inference rule.

Branch indices in the public API are 1-based, matching branch 1 = small,
2 = medium, 3 = large.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .branching import BranchThresholds, select_branch
from .errors import (DimensionMismatch, EmptyPseudoMask, NonFiniteInput,
                     NonFiniteLoss)
from .multicat import LabelMap
from .pseudo_mask import MaskGrid

SCORE_CLAMP = 1e-7


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel branch scores, one channel per branch."""
    channels: np.ndarray  # (n_branches, H, W)
    normalized: bool = False

    @property
    def n_branches(self) -> int:
        return self.channels.shape[0]


def normalize_scores(raw: ScoreMap) -> ScoreMap:
    """Per-pixel softmax over the branch channels."""
    z = np.asarray(raw.channels, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NonFiniteInput("score map contains NaN/Inf")
    z = z - z.max(axis=0, keepdims=True)
    e = np.exp(z)
    return ScoreMap(channels=e / e.sum(axis=0, keepdims=True), normalized=True)


def channel_weighted_average(scores: ScoreMap, pseudo: MaskGrid) -> np.ndarray:
    """Mask-weighted per-channel average: s_i = sum(S_i * M) / N_p.

    N_p counts positive mask pixels, so for a binary mask this is the plain
    mean over the mask support.
    """
    if scores.channels.shape[1:] != pseudo.weights.shape:
        raise DimensionMismatch(
            f"scores {scores.channels.shape[1:]} vs mask {pseudo.weights.shape}")
    n_p = pseudo.positive_count
    if n_p == 0:
        raise EmptyPseudoMask("pseudo mask has no positive pixel")
    return (scores.channels * pseudo.weights).sum(axis=(1, 2)) / n_p


def gt_score(losses) -> np.ndarray:
    """One-hot vector marking the branch with the lowest loss (ties: lowest index)."""
    losses = np.asarray(losses, dtype=np.float64)
    if not np.all(np.isfinite(losses)):
        raise NonFiniteLoss(f"branch losses contain NaN/Inf: {losses}")
    out = np.zeros(losses.shape[0])
    out[int(np.argmin(losses))] = 1.0
    return out


def match_score(r_z: float, thr: BranchThresholds, n_branches: int = 3) -> np.ndarray:
    """Alternative ground truth: one-hot at the size-matched branch."""
    out = np.zeros(n_branches)
    out[select_branch(r_z, thr) - 1] = 1.0
    return out


def score_loss(s_g: np.ndarray, s: np.ndarray) -> float:
    """Cross entropy -sum(s_g * log s) with s clamped at 1e-7."""
    s = np.clip(np.asarray(s, dtype=np.float64), SCORE_CLAMP, None)
    return float(-(np.asarray(s_g) * np.log(s)).sum())


def infer_branch(s) -> int:
    """1-based index of the highest score (ties: lowest index)."""
    return int(np.argmax(np.asarray(s))) + 1


def multiclass_score_matrix(scores: np.ndarray, combined: LabelMap,
                            n_branches: int = 3) -> np.ndarray:
    """Per-category weighted-average scores, excluding the background.

    ``scores`` stacks one block of ``n_branches`` channels per category
    (block c = channels [c*n_branches, (c+1)*n_branches)), already
    normalized per pixel within each block.  Column c-1 of the result is
    the average of category c's block over its support in the combined
    label map; categories with no support get a NaN column.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 3 or scores.shape[0] % n_branches != 0:
        raise DimensionMismatch(
            f"expected (n_branches * n_categories, H, W), got {scores.shape}")
    n_c = scores.shape[0] // n_branches
    if scores.shape[1:] != combined.labels.shape:
        raise DimensionMismatch(
            f"scores {scores.shape[1:]} vs labels {combined.labels.shape}")
    out = np.full((n_branches, n_c - 1), np.nan)
    for cat in range(1, n_c):
        support = combined.labels == cat
        n_p = int(support.sum())
        if n_p == 0:
            continue
        block = scores[cat * n_branches:(cat + 1) * n_branches]
        out[:, cat - 1] = (block * support).sum(axis=(1, 2)) / n_p
    return out
