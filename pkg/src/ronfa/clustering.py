"""Class-mean-initialized soft K-means over the support set.

Initialization is the only label-dependent step: cluster c starts at the mean
of the items carrying given label c, which keeps the cluster-to-class
correspondence. The iteration itself is unsupervised over all support
features, so mislabeled items migrate toward the cluster their features
actually belong to. A hard-assignment variant exists for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateClassError, DegenerateClusterError
from .episodes import SupportItem

CLUSTER_MODES = ("soft", "hard")


@dataclass(frozen=True)
class ClusterConfig:
    mode: str = "soft"
    epsilon: float = 1e-4
    max_iters: int = 100
    temperature: float = 1.0
    normalize_inputs: bool = False

    def __post_init__(self) -> None:
        if self.mode not in CLUSTER_MODES:
            raise ConfigError(f"unknown clustering mode {self.mode!r}")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")


@dataclass(frozen=True)
class PrototypeSet:
    """One representative vector per task class plus clustering diagnostics."""

    centers: np.ndarray  # (m, d) float64, row c represents task class c
    iterations_used: int
    converged: bool
    final_shift: float
    history: Optional[tuple[np.ndarray, ...]] = None

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def l2_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization; zero rows pass through unchanged."""
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.where(norms == 0, 1.0, norms)


def _squared_distances(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = features[:, None, :] - centers[None, :, :]
    return np.einsum("nmd,nmd->nm", diff, diff)


def init_centers(support: Sequence[SupportItem], n_way: int) -> np.ndarray:
    """Initial center c = arithmetic mean of features with given label c."""
    features = np.stack([item.features for item in support]).astype(np.float64)
    labels = np.asarray([item.given_label for item in support])
    centers = np.empty((n_way, features.shape[1]), dtype=np.float64)
    for c in range(n_way):
        mask = labels == c
        if not mask.any():
            raise DegenerateClassError(f"task class {c} has no support items under its given label")
        centers[c] = features[mask].mean(axis=0)
    return centers


def soft_assign(features: np.ndarray, centers: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Row-stochastic soft assignment: softmax over clusters of minus the
    squared Euclidean distance divided by the temperature.

    Computed with row-max subtraction so arbitrarily large distances stay
    finite; at temperature 1 this is algebraically the plain Gaussian-kernel
    weight exp(-d) / sum(exp(-d)).
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    features = np.asarray(features, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    logits = -_squared_distances(features, centers) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights


def update_centers(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weight-normalized means: center c = sum_i w[i,c] x_i / sum_i w[i,c]."""
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    col_sums = weights.sum(axis=0)
    if np.any(col_sums <= 0):
        bad = int(np.argmin(col_sums))
        raise DegenerateClusterError(f"cluster {bad} received zero total weight")
    return (weights.T @ features) / col_sums[:, None]


def _hard_step(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Plain K-means step; empty clusters retain their previous center."""
    nearest = np.argmin(_squared_distances(features, centers), axis=1)
    new_centers = centers.copy()
    for c in range(centers.shape[0]):
        mask = nearest == c
        if mask.any():
            new_centers[c] = features[mask].mean(axis=0)
    return new_centers


def run_clustering(
    support: Sequence[SupportItem],
    n_way: int,
    config: ClusterConfig = ClusterConfig(),
    record_history: bool = False,
) -> PrototypeSet:
    """Iterate assignment/update until the summed per-center L2 shift drops
    below epsilon or max_iters is reached. Deterministic.
    """
    features = np.stack([item.features for item in support]).astype(np.float64)
    if config.normalize_inputs:
        features = l2_normalize_rows(features)
        support = [
            SupportItem(f, item.given_label, item.true_label, item.corrupted)
            for f, item in zip(features, support)
        ]
    centers = init_centers(support, n_way)
    history = [centers.copy()] if record_history else None

    iterations = 0
    converged = False
    shift = float("inf")
    for iterations in range(1, config.max_iters + 1):
        if config.mode == "soft":
            weights = soft_assign(features, centers, config.temperature)
            new_centers = update_centers(features, weights)
        else:
            new_centers = _hard_step(features, centers)
        shift = float(np.linalg.norm(new_centers - centers, axis=1).sum())
        centers = new_centers
        if history is not None:
            history.append(centers.copy())
        if shift < config.epsilon:
            converged = True
            break
    centers.setflags(write=False)
    return PrototypeSet(
        centers=centers,
        iterations_used=iterations,
        converged=converged,
        final_shift=shift,
        history=tuple(history) if history is not None else None,
    )
