"""Two-stage training of the toy model against pseudo masks.

Stage one fits the three branch heads with the total loss: the mean BCE of
every branch plus the size-aware term, i.e. the selected branch's
unreduced BCE weighted by the coefficient mask.  Stage two freezes the
branch heads and fits only the score head so the mask-weighted average of
its softmaxed output points at the branch with the lowest BCE.  All
gradients are closed-form; plain gradient descent with optional momentum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..branching import (BranchThresholds, coefficient_alpha,
                         coefficient_mask, select_branch)
from ..errors import DivergenceDetected, EmptyPseudoMask
from ..losses import bce, dice_coefficient
from ..pseudo_mask import MaskGrid
from ..scoring import (SCORE_CLAMP, channel_weighted_average, gt_score,
                       infer_branch, match_score, normalize_scores)
from .features import extract_features
from .model import ToyModel, forward
from .synth import Sample


@dataclass(frozen=True)
class StageConfig:
    lr: float = 1.0
    momentum: float = 0.9
    epochs: int = 150


@dataclass(frozen=True)
class TrainConfig:
    coe: float = 10.0
    stage1: StageConfig = field(default_factory=StageConfig)
    stage2: StageConfig = field(default_factory=StageConfig)
    gt_mode: str = "min_loss"   # or "match"


@dataclass
class PreparedSample:
    features: np.ndarray     # (K, H, W)
    target: np.ndarray       # pseudo-mask weights (H, W)
    pseudo: MaskGrid
    coeff: np.ndarray        # (H, W) coefficient mask
    branch: int              # 1-based selected branch
    r_z: float
    gt: np.ndarray | None = None


def prepare_dataset(samples: list[Sample], thresholds: BranchThresholds,
                    coe: float) -> list[PreparedSample]:
    """Precompute features, branch selection and coefficient masks."""
    prepared = []
    for s in samples:
        if s.pseudo.positive_count == 0:
            raise EmptyPseudoMask("sample has an empty pseudo mask")
        alpha = coefficient_alpha(s.r_z, coe)
        prepared.append(PreparedSample(
            features=extract_features(s.image),
            target=s.pseudo.weights,
            pseudo=s.pseudo,
            coeff=coefficient_mask(s.pseudo, alpha),
            branch=select_branch(s.r_z, thresholds),
            r_z=s.r_z,
            gt=s.gt,
        ))
    return prepared


def seg_loss_and_grads(model: ToyModel, prep: PreparedSample):
    """Per-image total segmentation loss with gradients for the branch heads."""
    probs, _ = forward(model, prep.features)
    n = prep.target.size
    sel = prep.branch - 1

    grids = bce(probs, np.broadcast_to(prep.target, probs.shape))
    branch_losses = grids.mean(axis=(1, 2))
    l_sa = float((grids[sel] * prep.coeff).sum() / n)
    total = l_sa + float(branch_losses.sum())

    dz = (probs - prep.target) / n                # from the three mean BCEs
    dz[sel] = dz[sel] * (1.0 + prep.coeff)        # size-aware extra weight
    d_w = np.tensordot(dz, prep.features, axes=([1, 2], [1, 2]))
    d_b = dz.sum(axis=(1, 2))
    return total, d_w, d_b, [float(v) for v in branch_losses]


def score_loss_and_grads(model: ToyModel, prep: PreparedSample,
                         gt_mode: str = "min_loss",
                         thresholds: BranchThresholds | None = None):
    """Per-image score loss with gradients for the score head only."""
    probs, raw = forward(model, prep.features)
    grids = bce(probs, np.broadcast_to(prep.target, probs.shape))
    if gt_mode == "match":
        if thresholds is None:
            raise ValueError("match mode needs thresholds")
        target_vec = match_score(prep.r_z, thresholds, model.n_branches)
    else:
        target_vec = gt_score(grids.mean(axis=(1, 2)))
    k = int(np.argmax(target_vec))

    soft = normalize_scores(raw)
    s = channel_weighted_average(soft, prep.pseudo)
    loss = float(-np.log(max(s[k], SCORE_CLAMP)))

    if s[k] <= SCORE_CLAMP:
        d_w = np.zeros_like(model.score_w)
        d_b = np.zeros_like(model.score_b)
        return loss, d_w, d_b, s, target_vec

    n_p = prep.pseudo.positive_count
    sk_map = soft.channels[k]
    onehot = np.zeros((model.n_branches, 1, 1))
    onehot[k] = 1.0
    g = -(prep.pseudo.weights / (n_p * s[k])) * sk_map \
        * (onehot - soft.channels)
    d_w = np.tensordot(g, prep.features, axes=([1, 2], [1, 2]))
    d_b = g.sum(axis=(1, 2))
    return loss, d_w, d_b, s, target_vec


def _check_finite(loss: float, epoch: int, model: ToyModel):
    if not np.isfinite(loss):
        raise DivergenceDetected(
            f"loss {loss} at epoch {epoch}; "
            f"|seg_w|={np.abs(model.seg_w).max():.3g}, "
            f"|score_w|={np.abs(model.score_w).max():.3g}")


def train_segmentation_stage(model: ToyModel, dataset: list[PreparedSample],
                             cfg: StageConfig):
    """Gradient descent on the mean total loss; returns (model, history)."""
    model = model.copy()
    v_w = np.zeros_like(model.seg_w)
    v_b = np.zeros_like(model.seg_b)
    history = []
    n = len(dataset)
    for epoch in range(cfg.epochs):
        g_w = np.zeros_like(model.seg_w)
        g_b = np.zeros_like(model.seg_b)
        total = 0.0
        for prep in dataset:
            loss, d_w, d_b, _ = seg_loss_and_grads(model, prep)
            total += loss
            g_w += d_w
            g_b += d_b
        total /= n
        _check_finite(total, epoch, model)
        history.append(total)
        v_w = cfg.momentum * v_w + g_w / n
        v_b = cfg.momentum * v_b + g_b / n
        model.seg_w -= cfg.lr * v_w
        model.seg_b -= cfg.lr * v_b
    return model, history


def train_score_stage(model: ToyModel, dataset: list[PreparedSample],
                      cfg: StageConfig, gt_mode: str = "min_loss",
                      thresholds: BranchThresholds | None = None):
    """Fit the score head only; branch heads stay bit-identical."""
    model = model.copy()
    frozen_w = model.seg_w.copy()
    frozen_b = model.seg_b.copy()
    v_w = np.zeros_like(model.score_w)
    v_b = np.zeros_like(model.score_b)
    history = []
    n = len(dataset)
    for epoch in range(cfg.epochs):
        g_w = np.zeros_like(model.score_w)
        g_b = np.zeros_like(model.score_b)
        total = 0.0
        for prep in dataset:
            loss, d_w, d_b, _, _ = score_loss_and_grads(
                model, prep, gt_mode=gt_mode, thresholds=thresholds)
            total += loss
            g_w += d_w
            g_b += d_b
        total /= n
        _check_finite(total, epoch, model)
        history.append(total)
        v_w = cfg.momentum * v_w + g_w / n
        v_b = cfg.momentum * v_b + g_b / n
        model.score_w -= cfg.lr * v_w
        model.score_b -= cfg.lr * v_b
    assert np.array_equal(model.seg_w, frozen_w)
    assert np.array_equal(model.seg_b, frozen_b)
    return model, history


@dataclass
class EvalReport:
    mdice: float
    branch_agreement: float
    branch_usage: dict


def evaluate_model(model: ToyModel, samples: list[Sample],
                   thresholds: BranchThresholds | None = None) -> EvalReport:
    """Held-out metrics: mDice of the score-selected masks against ground
    truth, agreement between the score choice (mask-weighted, as trained)
    and the branch with the lowest BCE, and branch usage of predict()."""
    dices = []
    usage: dict[int, int] = {}
    agree = 0
    for s in samples:
        pred = predict(model, s.image, thresholds)
        dices.append(dice_coefficient(pred.mask, s.gt))
        usage[pred.branch] = usage.get(pred.branch, 0) + 1

        features = extract_features(s.image)
        probs, raw = forward(model, features)
        soft = normalize_scores(raw)
        s_vec = channel_weighted_average(soft, s.pseudo)
        grids = bce(probs, np.broadcast_to(s.pseudo.weights, probs.shape))
        best = int(np.argmin(grids.mean(axis=(1, 2)))) + 1
        agree += int(infer_branch(s_vec) == best)
    return EvalReport(mdice=float(np.mean(dices)),
                      branch_agreement=agree / len(samples),
                      branch_usage=dict(sorted(usage.items())))


@dataclass
class Prediction:
    mask: np.ndarray          # bool (H, W)
    branch: int               # 1-based
    scores: np.ndarray        # weighted-average score vector
    size_branch: int | None   # thresholds-implied branch, for diagnostics


def predict(model: ToyModel, image: np.ndarray,
            thresholds: BranchThresholds | None = None) -> Prediction:
    """Final mask: the 0.5-thresholded output of the highest-score branch.

    At inference no annotation exists, so the score map is averaged over
    the model's own preliminary foreground (mean branch probability > 0.5);
    when that is empty the plain unweighted mean is used instead.
    """
    features = extract_features(image)
    probs, raw = forward(model, features)
    soft = normalize_scores(raw)
    prelim = probs.mean(axis=0) > 0.5
    if prelim.any():
        scores = channel_weighted_average(
            soft, MaskGrid.from_array(prelim.astype(np.float64)))
    else:
        scores = soft.channels.mean(axis=(1, 2))
    branch = infer_branch(scores)
    mask = probs[branch - 1] > 0.5
    size_branch = None
    if thresholds is not None:
        r_z = float(mask.mean())
        size_branch = select_branch(r_z, thresholds)
    return Prediction(mask=mask, branch=branch, scores=scores,
                      size_branch=size_branch)
