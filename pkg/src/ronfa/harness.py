"""Episodic benchmark: sample, corrupt, cluster, predict, score.

Episode i always runs under seed derive_episode_seed(master_seed, i), and the
per-episode work is a pure function of (set, config, i), so reports are
identical for any worker count. Results are assembled in episode order
regardless of execution order.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ._version import ENGINE_VERSION
from .clustering import ClusterConfig, init_centers, l2_normalize_rows, run_clustering
from .episodes import (
    Episode,
    EpisodeSpec,
    NoiseSpec,
    apply_noise,
    build_outlier_pool,
    derive_episode_seed,
    sample_episode,
)
from .errors import CapacityError, ConfigError, DegenerateClassError
from .field import FALLBACK_NEAREST, FieldConfig, predict
from .store import EmbeddingSet

POOL_SOURCES = ("heldout_classes", "none")


@dataclass(frozen=True)
class RunConfig:
    episode: EpisodeSpec
    noise: NoiseSpec = NoiseSpec()
    cluster: ClusterConfig = ClusterConfig()
    field: FieldConfig = FieldConfig()
    episodes: int = 600
    master_seed: int = 0
    baseline_enabled: bool = False
    outlier_pool_source: str = "heldout_classes"

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ConfigError("episodes must be at least 1")
        if self.outlier_pool_source not in POOL_SOURCES:
            raise ConfigError(f"unknown outlier pool source {self.outlier_pool_source!r}")
        if self.noise.kind == "outlier" and self.outlier_pool_source != "heldout_classes":
            raise ConfigError("outlier noise requires outlier_pool_source='heldout_classes'")

    @property
    def condition(self) -> str:
        return f"{self.noise.kind}@{self.noise.rate:g}"

    def to_dict(self) -> dict:
        return {
            "episode": {
                "n_way": self.episode.n_way,
                "k_shot": self.episode.k_shot,
                "n_query": self.episode.n_query,
            },
            "noise": {"kind": self.noise.kind, "rate": self.noise.rate},
            "cluster": {
                "mode": self.cluster.mode,
                "epsilon": self.cluster.epsilon,
                "max_iters": self.cluster.max_iters,
                "temperature": self.cluster.temperature,
                "normalize_inputs": self.cluster.normalize_inputs,
            },
            "field": {
                "excite": self.field.excite,
                "inhibit": self.field.inhibit,
                "resting_level": self.field.resting_level,
                "tuning_ratio": self.field.tuning_ratio,
                "sigma0": self.field.sigma0,
                "max_adapt_iters": self.field.max_adapt_iters,
                "scale_mode": self.field.scale_mode,
            },
            "episodes": self.episodes,
            "master_seed": self.master_seed,
            "baseline_enabled": self.baseline_enabled,
            "outlier_pool_source": self.outlier_pool_source,
        }


@dataclass(frozen=True)
class EpisodeResult:
    episode_index: int
    accuracy: float
    baseline_accuracy: Optional[float]
    iterations_used: int
    converged: bool
    final_shift: float
    fallback_count: int
    audit: dict

    def to_dict(self) -> dict:
        entry = {
            "episode_index": self.episode_index,
            "accuracy": self.accuracy,
            "baseline_accuracy": self.baseline_accuracy,
            "fallback_count": self.fallback_count,
            "clustering": {
                "iterations_used": self.iterations_used,
                "converged": self.converged,
                "final_shift": self.final_shift,
            },
        }
        entry.update(self.audit)
        return entry


@dataclass(frozen=True)
class EvalReport:
    config: dict
    engine_version: str
    episodes: tuple[EpisodeResult, ...]
    mean_accuracy: float
    ci_half_width: Optional[float]
    baseline_mean_accuracy: Optional[float]
    baseline_ci_half_width: Optional[float]
    wall_clock_seconds: float

    @property
    def condition(self) -> str:
        noise = self.config["noise"]
        return f"{noise['kind']}@{noise['rate']:g}"

    def conditions(self) -> list[dict]:
        rows = [
            {
                "condition": self.condition,
                "mean_accuracy": self.mean_accuracy,
                "ci95": self.ci_half_width,
            }
        ]
        if self.baseline_mean_accuracy is not None:
            rows.append(
                {
                    "condition": self.condition + ":baseline",
                    "mean_accuracy": self.baseline_mean_accuracy,
                    "ci95": self.baseline_ci_half_width,
                }
            )
        return rows

    def to_jsonable(self, include_wall_clock: bool = True) -> dict:
        summary = {
            "episodes": len(self.episodes),
            "mean_accuracy": self.mean_accuracy,
            "ci95": self.ci_half_width,
            "ci_convention": "95% normal approximation: 1.96 * sample std (ddof=1) / sqrt(E)",
            "baseline_mean_accuracy": self.baseline_mean_accuracy,
            "baseline_ci95": self.baseline_ci_half_width,
            "fallback_total": sum(r.fallback_count for r in self.episodes),
            "conditions": self.conditions(),
        }
        if include_wall_clock:
            summary["wall_clock_seconds"] = self.wall_clock_seconds
        return {
            "config": self.config,
            "engine_version": self.engine_version,
            "episodes": [r.to_dict() for r in self.episodes],
            "summary": summary,
        }

    def to_json(self, include_wall_clock: bool = True) -> str:
        return json.dumps(self.to_jsonable(include_wall_clock), indent=2, sort_keys=True)


def confidence_interval(accuracies: Iterable[float]) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width (1.96 * sample std / sqrt(E))."""
    values = np.asarray(list(accuracies), dtype=np.float64)
    if values.size < 1:
        raise ValueError("mean needs at least one value")
    mean = float(values.mean())
    if values.size < 2:
        raise ValueError("confidence half-width needs at least two values")
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return mean, half


def nearest_mean_baseline(ep: Episode) -> float:
    """Vanilla nearest-class-mean accuracy: prototypes are plain means of the
    given labels, queries go to the nearest prototype (lowest index on ties)."""
    centers = init_centers(ep.support, ep.spec.n_way)
    diff = ep.query_x[:, None, :] - centers[None, :, :]
    d2 = np.einsum("qmd,qmd->qm", diff, diff)
    predicted = np.argmin(d2, axis=1)
    return float(np.count_nonzero(predicted == ep.query_y)) / len(ep.query_y)


def _evaluate_episode(emb_set: EmbeddingSet, config: RunConfig, index: int) -> EpisodeResult:
    ep_seed = derive_episode_seed(config.master_seed, index)
    try:
        ep = sample_episode(emb_set, config.episode, derive_episode_seed(ep_seed, 0))
        if config.noise.kind != "none":
            pool = None
            if config.noise.kind == "outlier":
                pool = build_outlier_pool(emb_set, ep.class_map)
            ep = apply_noise(ep, config.noise, pool, derive_episode_seed(ep_seed, 1))
        protos = run_clustering(ep.support, config.episode.n_way, config.cluster)
        queries = ep.query_x
        if config.cluster.normalize_inputs:
            queries = l2_normalize_rows(queries)
        correct = 0
        fallbacks = 0
        for q, y in zip(queries, ep.query_y):
            result = predict(q, protos, config.field)
            correct += int(result.predicted == int(y))
            fallbacks += int(result.terminated == FALLBACK_NEAREST)
        accuracy = correct / len(ep.query_y)
        baseline = nearest_mean_baseline(ep) if config.baseline_enabled else None
        return EpisodeResult(
            episode_index=index,
            accuracy=accuracy,
            baseline_accuracy=baseline,
            iterations_used=protos.iterations_used,
            converged=protos.converged,
            final_shift=protos.final_shift,
            fallback_count=fallbacks,
            audit=ep.audit_record(),
        )
    except (CapacityError, DegenerateClassError) as exc:
        raise type(exc)(f"episode {index}: {exc}") from exc


_WORKER_SET: Optional[EmbeddingSet] = None
_WORKER_CONFIG: Optional[RunConfig] = None


def _init_worker(emb_set: EmbeddingSet, config: RunConfig) -> None:
    global _WORKER_SET, _WORKER_CONFIG
    _WORKER_SET = emb_set
    _WORKER_CONFIG = config


def _episode_task(index: int) -> EpisodeResult:
    assert _WORKER_SET is not None and _WORKER_CONFIG is not None
    return _evaluate_episode(_WORKER_SET, _WORKER_CONFIG, index)


def run_evaluation(emb_set: EmbeddingSet, config: RunConfig, workers: int = 1) -> EvalReport:
    """Run the full benchmark; deterministic for any worker count."""
    if config.noise.kind == "outlier" and emb_set.n_classes <= config.episode.n_way:
        raise ConfigError(
            f"outlier noise needs held-out classes: set has {emb_set.n_classes} "
            f"classes for a {config.episode.n_way}-way task"
        )
    start = time.perf_counter()
    if workers <= 1 or config.episodes == 1:
        results = [_evaluate_episode(emb_set, config, i) for i in range(config.episodes)]
    else:
        chunk = max(1, config.episodes // (workers * 4))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(emb_set, config)
        ) as pool:
            results = list(pool.map(_episode_task, range(config.episodes), chunksize=chunk))
    results.sort(key=lambda r: r.episode_index)
    elapsed = time.perf_counter() - start

    accuracies = [r.accuracy for r in results]
    mean = float(np.mean(accuracies))
    ci = confidence_interval(accuracies)[1] if len(accuracies) >= 2 else None
    baseline_mean = None
    baseline_ci = None
    if config.baseline_enabled:
        baseline_accs = [r.baseline_accuracy for r in results]
        baseline_mean = float(np.mean(baseline_accs))
        baseline_ci = confidence_interval(baseline_accs)[1] if len(baseline_accs) >= 2 else None
    return EvalReport(
        config=config.to_dict(),
        engine_version=ENGINE_VERSION,
        episodes=tuple(results),
        mean_accuracy=mean,
        ci_half_width=ci,
        baseline_mean_accuracy=baseline_mean,
        baseline_ci_half_width=baseline_ci,
        wall_clock_seconds=elapsed,
    )


def write_report(report: EvalReport, path: str | Path, format: str = "json") -> None:
    """JSON carries full per-episode detail; CSV one summary row per condition."""
    path = Path(path)
    if format == "json":
        path.write_text(report.to_json() + "\n")
    elif format == "csv":
        lines = ["condition,mean_accuracy,ci95"]
        for row in report.conditions():
            ci = "" if row["ci95"] is None else f"{row['ci95']:.10g}"
            lines.append(f"{row['condition']},{row['mean_accuracy']:.10g},{ci}")
        path.write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown report format {format!r}")
