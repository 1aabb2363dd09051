"""N-way K-shot episode construction and label-noise injection.

Noise kinds:
  symmetric - corrupted given labels drawn uniformly from the other task classes
  pair      - one fixed-point-free class map per episode; all corrupted items of
              class c receive given label map(c)
  outlier   - corrupted items keep their given label but their feature vector is
              replaced by a vector from a class outside the task

The corruption quota is per class: round(rate * k_shot), half away from zero,
so the clean items always remain the identifiable majority of each class.
All randomness flows through explicit 64-bit seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, ConfigError, ValidationError
from .store import EmbeddingSet, FeatureVector

# true_label sentinel for support items whose features came from outside the task
OUTLIER = -1

_GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

NOISE_KINDS = ("none", "symmetric", "pair", "outlier")


def derive_episode_seed(master_seed: int, episode_index: int) -> int:
    """Stable per-episode seed: episode_index-th output of the SplitMix64
    stream seeded at master_seed. Identical across platforms."""
    if episode_index < 0:
        raise ValueError("episode_index must be non-negative")
    z = (master_seed + (episode_index + 1) * _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def round_half_away(x: float) -> int:
    """round() with half-away-from-zero ties, fixed across platforms."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class EpisodeSpec:
    n_way: int
    k_shot: int
    n_query: int

    def __post_init__(self) -> None:
        if self.n_way < 2:
            raise ConfigError("n_way must be at least 2")
        if self.k_shot < 1 or self.n_query < 1:
            raise ConfigError("k_shot and n_query must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    rate: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.rate < 1.0):
            raise ConfigError(f"noise rate must be in [0, 1), got {self.rate}")

    def corrupted_per_class(self, k_shot: int) -> int:
        """Per-class corruption quota; must leave a clean majority."""
        if self.kind == "none":
            return 0
        n = round_half_away(self.rate * k_shot)
        if n >= k_shot:
            raise ValidationError(
                f"noise rate {self.rate} corrupts {n} of {k_shot} support items per "
                f"class; at least one clean item per class is required"
            )
        return n


@dataclass(frozen=True)
class SupportItem:
    """One support sample: the label the task sees plus the hidden truth."""

    features: FeatureVector
    given_label: int
    true_label: int
    corrupted: bool

    def __post_init__(self) -> None:
        expected = (self.given_label != self.true_label) or (self.true_label == OUTLIER)
        if self.corrupted != expected:
            raise ValidationError(
                f"corrupted flag {self.corrupted} inconsistent with labels "
                f"given={self.given_label} true={self.true_label}"
            )


@dataclass(frozen=True)
class OutlierPool:
    """Feature vectors from source classes outside an episode's class map."""

    features: np.ndarray
    source_class_ids: tuple[int, ...] = ()

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class Episode:
    spec: EpisodeSpec
    noise: NoiseSpec
    class_map: tuple[int, ...]
    support: tuple[SupportItem, ...]
    query_x: np.ndarray
    query_y: np.ndarray
    seed: int
    pair_map: Optional[tuple[int, ...]] = None

    @property
    def corrupted_indices(self) -> tuple[int, ...]:
        return tuple(i for i, item in enumerate(self.support) if item.corrupted)

    def support_matrix(self) -> np.ndarray:
        """Support features stacked into an (N*K, d) float64 matrix."""
        return np.stack([item.features for item in self.support]).astype(np.float64)

    def given_labels(self) -> np.ndarray:
        return np.asarray([item.given_label for item in self.support], dtype=np.int64)

    def audit_record(self) -> dict:
        """Serializable view used in JSON reports."""
        return {
            "spec": {
                "n_way": self.spec.n_way,
                "k_shot": self.spec.k_shot,
                "n_query": self.spec.n_query,
            },
            "noise": {"kind": self.noise.kind, "rate": self.noise.rate},
            "class_map": [int(c) for c in self.class_map],
            "corrupted_indices": [int(i) for i in self.corrupted_indices],
            "seed": int(self.seed),
        }


def eligible_classes(emb_set: EmbeddingSet, spec: EpisodeSpec) -> list[int]:
    """Class ids with at least k_shot + n_query items."""
    need = spec.k_shot + spec.n_query
    return [
        c for c in range(emb_set.n_classes)
        if emb_set.class_indices(c).size >= need
    ]


def sample_episode(emb_set: EmbeddingSet, spec: EpisodeSpec, seed: int) -> Episode:
    """Draw a clean N-way K-shot episode, deterministically per seed.

    Classes and items are sampled without replacement; support and query are
    disjoint. Task class c corresponds to class_map[c] in the source set.
    """
    pool = eligible_classes(emb_set, spec)
    if len(pool) < spec.n_way:
        raise CapacityError(
            f"need {spec.n_way} classes with >= {spec.k_shot + spec.n_query} items, "
            f"found {len(pool)}"
        )
    rng = np.random.default_rng(np.uint64(seed))
    class_map = tuple(int(c) for c in rng.choice(pool, size=spec.n_way, replace=False))

    support: list[SupportItem] = []
    query_x = np.empty((spec.n_way * spec.n_query, emb_set.dim), dtype=np.float64)
    query_y = np.empty(spec.n_way * spec.n_query, dtype=np.int64)
    for task_c, source_c in enumerate(class_map):
        idx = emb_set.class_indices(source_c)
        chosen = rng.choice(idx, size=spec.k_shot + spec.n_query, replace=False)
        for j in chosen[: spec.k_shot]:
            support.append(
                SupportItem(
                    features=emb_set.vectors[int(j)].astype(np.float64),
                    given_label=task_c,
                    true_label=task_c,
                    corrupted=False,
                )
            )
        block = slice(task_c * spec.n_query, (task_c + 1) * spec.n_query)
        query_x[block] = emb_set.vectors[chosen[spec.k_shot :]].astype(np.float64)
        query_y[block] = task_c
    query_x.setflags(write=False)
    query_y.setflags(write=False)
    return Episode(
        spec=spec,
        noise=NoiseSpec(),
        class_map=class_map,
        support=tuple(support),
        query_x=query_x,
        query_y=query_y,
        seed=int(seed) & _MASK,
    )


def build_outlier_pool(emb_set: EmbeddingSet, class_map: Sequence[int]) -> OutlierPool:
    """All items whose source class lies outside the episode's class map."""
    excluded = set(int(c) for c in class_map)
    keep = np.asarray([int(c) not in excluded for c in emb_set.labels], dtype=bool)
    return OutlierPool(
        features=emb_set.vectors[keep].astype(np.float64),
        source_class_ids=tuple(sorted(set(int(c) for c in emb_set.labels[keep]))),
    )


def _other_class(rng: np.random.Generator, own: int, n_way: int) -> int:
    """Uniform draw from the task classes excluding `own`."""
    g = int(rng.integers(0, n_way - 1))
    return g if g < own else g + 1


def apply_noise(
    ep: Episode,
    noise: NoiseSpec,
    pool: Optional[OutlierPool] = None,
    seed: int = 0,
) -> Episode:
    """Corrupt exactly round(rate * k_shot) support items per class.

    The query set is never touched. Returns a new episode; the input episode
    must be clean (noise kind "none").
    """
    if ep.noise.kind != "none":
        raise ValidationError("episode already carries noise")
    if noise.kind == "none":
        return replace(ep, noise=noise)
    n_way, k_shot = ep.spec.n_way, ep.spec.k_shot
    per_class = noise.corrupted_per_class(k_shot)

    rng = np.random.default_rng(np.uint64(seed))
    support = list(ep.support)
    pair_map: Optional[tuple[int, ...]] = None

    if noise.kind == "pair":
        if n_way < 2:
            raise ConfigError("pair noise requires n_way >= 2")
        pair_map = tuple(_other_class(rng, c, n_way) for c in range(n_way))

    if per_class == 0:
        return replace(ep, noise=noise, pair_map=pair_map)

    total = n_way * per_class
    pool_rows: Optional[np.ndarray] = None
    if noise.kind == "outlier":
        if pool is None or len(pool) < total:
            have = 0 if pool is None else len(pool)
            raise CapacityError(
                f"outlier noise needs {total} pool vectors, pool has {have}"
            )
        if pool.source_class_ids and set(pool.source_class_ids) & set(ep.class_map):
            raise ValidationError("outlier pool overlaps the episode's classes")
        pool_rows = rng.choice(len(pool), size=total, replace=False)

    # Positions come from the clean input; mutation must not shift later classes.
    positions_by_class = {
        c: [i for i, item in enumerate(ep.support) if item.given_label == c]
        for c in range(n_way)
    }
    taken = 0
    for c in range(n_way):
        positions = positions_by_class[c]
        if len(positions) != k_shot:
            raise ValidationError(
                f"clean episode must hold exactly {k_shot} items of class {c}, "
                f"found {len(positions)}"
            )
        offsets = np.sort(rng.choice(k_shot, size=per_class, replace=False))
        for off in offsets:
            i = positions[int(off)]
            item = support[i]
            if noise.kind == "symmetric":
                support[i] = SupportItem(
                    features=item.features,
                    given_label=_other_class(rng, c, n_way),
                    true_label=c,
                    corrupted=True,
                )
            elif noise.kind == "pair":
                assert pair_map is not None
                support[i] = SupportItem(
                    features=item.features,
                    given_label=pair_map[c],
                    true_label=c,
                    corrupted=True,
                )
            else:  # outlier
                assert pool_rows is not None
                support[i] = SupportItem(
                    features=pool.features[int(pool_rows[taken])].astype(np.float64),
                    given_label=item.given_label,
                    true_label=OUTLIER,
                    corrupted=True,
                )
                taken += 1
    return replace(ep, noise=noise, support=tuple(support), pair_map=pair_map)
