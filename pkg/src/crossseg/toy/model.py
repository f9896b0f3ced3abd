"""Per-pixel linear model: three sigmoid branch heads plus a score head.

Each head is a K-weight linear map with bias applied at every pixel, the
closed-form equivalent of a 1x1 convolution, so every gradient used in
training has a short analytic expression.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from ..errors import ShapeMismatch
from ..scoring import ScoreMap


@dataclass
class ToyModel:
    seg_w: np.ndarray    # (n_branches, K)
    seg_b: np.ndarray    # (n_branches,)
    score_w: np.ndarray  # (n_branches, K)
    score_b: np.ndarray  # (n_branches,)

    @property
    def n_branches(self) -> int:
        return self.seg_w.shape[0]

    @property
    def n_features(self) -> int:
        return self.seg_w.shape[1]

    def copy(self) -> "ToyModel":
        return ToyModel(self.seg_w.copy(), self.seg_b.copy(),
                        self.score_w.copy(), self.score_b.copy())


def init_model(n_features: int, n_branches: int = 3, seed: int = 0) -> ToyModel:
    rng = np.random.default_rng(seed)
    # ordered bias offsets break the branch symmetry the same way every
    # run: low branches start conservative (small-target regime), high
    # branches liberal, matching their intended size specialization
    offsets = np.linspace(-0.3, 0.3, n_branches)
    return ToyModel(
        seg_w=rng.normal(scale=0.1, size=(n_branches, n_features)),
        seg_b=rng.normal(scale=0.1, size=n_branches) + offsets,
        score_w=rng.normal(scale=0.1, size=(n_branches, n_features)),
        score_b=rng.normal(scale=0.1, size=n_branches),
    )


def forward(model: ToyModel, features: np.ndarray) -> tuple[np.ndarray, ScoreMap]:
    """Branch probabilities (n_branches, H, W) and the raw score map."""
    if features.shape[0] != model.n_features:
        raise ShapeMismatch(
            f"model expects K={model.n_features}, features have {features.shape[0]}")
    seg_logits = np.tensordot(model.seg_w, features, axes=1) \
        + model.seg_b[:, None, None]
    score_logits = np.tensordot(model.score_w, features, axes=1) \
        + model.score_b[:, None, None]
    return expit(seg_logits), ScoreMap(channels=score_logits, normalized=False)


def save_checkpoint(model: ToyModel, path) -> None:
    """Flat parameter array with a {K, n_branches} header."""
    params = np.concatenate([model.seg_w.ravel(), model.seg_b.ravel(),
                             model.score_w.ravel(), model.score_b.ravel()])
    doc = {"K": model.n_features, "n_branches": model.n_branches,
           "params": params.tolist()}
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path) -> ToyModel:
    doc = json.loads(Path(path).read_text())
    k = int(doc["K"])
    nb = int(doc["n_branches"])
    params = np.asarray(doc["params"], dtype=np.float64)
    expected = 2 * nb * k + 2 * nb
    if params.size != expected:
        raise ShapeMismatch(
            f"checkpoint has {params.size} params, header implies {expected}")
    i = 0
    seg_w = params[i:i + nb * k].reshape(nb, k); i += nb * k
    seg_b = params[i:i + nb]; i += nb
    score_w = params[i:i + nb * k].reshape(nb, k); i += nb * k
    score_b = params[i:i + nb]
    return ToyModel(seg_w, seg_b, score_w, score_b)
