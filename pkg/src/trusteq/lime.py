"""Local surrogate attribution: mask sampling, exponential kernel weighting,
and weighted ridge regression on binary presence vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import PredictionBackend
from .core import FeatureSpace, Instance
from .errors import SingularSystem, TooFewSamples

EXHAUSTIVE_LIMIT = 4096  # 2^d masks at most when exhaustive mode kicks in


@dataclass
class LimeConfig:
    n_samples: int = 1000
    kernel_width: float = 25.0
    ridge: float = 1.0
    exhaustive: bool = False
    chunk_size: int = 64


@dataclass
class Attribution:
    instance_id: str
    method: str  # "lime" | "kshap"
    model_name: str
    explained_class: int
    scores: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_record(self, feature_space: FeatureSpace) -> dict:
        return {
            "instance": self.instance_id,
            "model": self.model_name,
            "method": self.method,
            "class": self.explained_class,
            "scores": [float(s) for s in self.scores],
            "features": list(feature_space.surfaces),
            "diag": self.diagnostics,
        }


def mask_text(instance: Instance, feature_space: FeatureSpace,
              mask: np.ndarray) -> tuple[str, str]:
    """Delete every occurrence of each switched-off feature.

    Remaining words keep their order and are joined with single spaces.
    """
    d = feature_space.d
    if len(mask) != d:
        raise ValueError(f"mask length {len(mask)} != d={d}")
    keep = {f.surface for f, bit in zip(feature_space.features, mask) if bit}
    parts = []
    for tokens in feature_space.segment_tokens:
        parts.append(" ".join(t for t in tokens if t in keep))
    while len(parts) < 2:
        parts.append("")
    return parts[0], parts[1]


def _masked_pair(instance, feature_space, mask):
    a, b = mask_text(instance, feature_space, mask)
    return (a, b if instance.text_b is not None else None)


def batched_probs(backend: PredictionBackend, pairs, chunk_size: int) -> np.ndarray:
    rows = []
    for start in range(0, len(pairs), chunk_size):
        rows.append(backend.predict_proba(pairs[start : start + chunk_size]))
    return np.vstack(rows)


def kernel_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    """exp(-D^2 / sigma^2) with D the cosine distance from the all-ones mask.

    For binary masks the cosine similarity to the ones vector reduces to
    sqrt(k/d) with k active bits; the empty mask gets distance 1.
    """
    d = masks.shape[1]
    k = masks.sum(axis=1)
    with np.errstate(invalid="ignore"):
        distance = 1.0 - np.sqrt(k / d)
    distance[k == 0] = 1.0
    if np.isinf(kernel_width):
        return np.ones(len(masks))
    return np.exp(-(distance**2) / kernel_width**2)


def weighted_ridge(masks: np.ndarray, y: np.ndarray, weights: np.ndarray,
                   ridge: float) -> tuple[np.ndarray, float, float, float]:
    """Weighted ridge with unpenalized intercept.

    Returns (coefficients, intercept, weighted r^2, lambda actually used).
    A singular system is resolved by climbing a ridge ladder starting at
    1e-6 above the configured lambda.
    """
    n, d = masks.shape
    X = np.column_stack([np.ones(n), masks.astype(float)])
    W = weights / weights.sum()
    XtW = X.T * W
    A0 = XtW @ X
    b = XtW @ y
    lam = ridge
    penalty = np.eye(d + 1)
    penalty[0, 0] = 0.0
    for _ in range(30):
        try:
            beta = np.linalg.solve(A0 + lam * penalty, b)
        except np.linalg.LinAlgError:
            beta = None
        if beta is not None and np.all(np.isfinite(beta)):
            resid = y - X @ beta
            mean_y = W @ y
            ss_tot = W @ (y - mean_y) ** 2
            ss_res = W @ resid**2
            r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
            return beta[1:], float(beta[0]), float(r2), lam
        lam = (lam + 1e-6) * 2
    raise SingularSystem("ridge ladder exhausted")


def explain_lime(backend: PredictionBackend, instance: Instance,
                 feature_space: FeatureSpace, cfg: LimeConfig,
                 rng: np.random.Generator) -> Attribution:
    """Fit a weighted linear surrogate of the predicted-class probability."""
    d = feature_space.d
    exhaustive = cfg.exhaustive and 2**d <= EXHAUSTIVE_LIMIT
    if not exhaustive and cfg.n_samples < d + 2:
        raise TooFewSamples(f"n_samples={cfg.n_samples} < d+2={d + 2}")

    if exhaustive:
        codes = np.arange(2**d, dtype=np.int64)[:, None]
        masks = ((codes >> np.arange(d)) & 1).astype(np.int8)
    else:
        masks = np.ones((cfg.n_samples + 1, d), dtype=np.int8)
        for i in range(1, cfg.n_samples + 1):
            k = int(rng.integers(1, d + 1))
            off = rng.choice(d, size=k, replace=False)
            masks[i, off] = 0

    pairs = [_masked_pair(instance, feature_space, m) for m in masks]
    probs = batched_probs(backend, pairs, cfg.chunk_size)

    full_row = int(np.flatnonzero(masks.sum(axis=1) == d)[0])
    explained_class = int(np.argmax(probs[full_row]))
    y = probs[:, explained_class]

    weights = kernel_weights(masks, cfg.kernel_width)
    coefs, intercept, r2, lam = weighted_ridge(masks, y, weights, cfg.ridge)

    return Attribution(
        instance_id=instance.id,
        method="lime",
        model_name=backend.name,
        explained_class=explained_class,
        scores=coefs,
        diagnostics={
            "n_evals": len(masks),
            "r2": r2,
            "intercept": intercept,
            "exhaustive": exhaustive,
            "ridge_used": lam,
        },
    )
