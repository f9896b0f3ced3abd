"""Fixed per-pixel feature bank standing in for a learned backbone.

Five deterministic channels per image: raw intensity, two box-blur scales,
gradient magnitude, and a constant bias channel.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

N_FEATURES = 5
# the wide scale keeps interior pixels informative about target size
BLUR_SIZES = (5, 21)


def extract_features(image: np.ndarray) -> np.ndarray:
    """(K, H, W) feature stack; K = 5, last channel is all ones."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains NaN/Inf")
    blur3 = uniform_filter(img, size=BLUR_SIZES[0], mode="nearest")
    blur7 = uniform_filter(img, size=BLUR_SIZES[1], mode="nearest")
    gy, gx = np.gradient(img)
    grad = np.hypot(gx, gy)
    return np.stack([img, blur3, blur7, grad, np.ones_like(img)])
