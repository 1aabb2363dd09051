"""Acceptance suite: one test per primary criterion, each printing a
PASS/FAIL line (run with -s to see them on success).

Desk-scale thresholds were frozen from pilot runs over multiple data seeds
and master seeds; see the assertions for the frozen values.
"""

import math
import time

import numpy as np
import pytest

from ronfa import (
    ClusterConfig,
    EpisodeSpec,
    FieldConfig,
    NoiseSpec,
    PrototypeSet,
    RunConfig,
    SINGLE_ACTIVATION,
    SynthSpec,
    adapt_scale,
    apply_noise,
    dog_kernel,
    generate_synthetic,
    run_clustering,
    run_evaluation,
    sample_episode,
    soft_assign,
)
from ronfa.episodes import derive_episode_seed
from test_clustering import oracle_soft_kmeans


def _line(name: str, passed: bool, detail: str) -> None:
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    assert passed, f"{name}: {detail}"


DESK_SPEC = SynthSpec(n_classes=20, per_class=50, dim=64, center_radius=10.0, within_std=0.5)
PROTOCOL = EpisodeSpec(n_way=5, k_shot=5, n_query=15)


@pytest.fixture(scope="module")
def desk_set():
    return generate_synthetic(DESK_SPEC, 1)


def test_argmin_equivalence_suite():
    rng = np.random.default_rng(12345)
    start = time.perf_counter()
    mismatches = 0
    worst_steps = 0
    trials = 1000
    for _ in range(trials):
        m = int(rng.integers(2, 11))
        d = int(rng.integers(1, 17))
        scale = 10.0 ** rng.uniform(-2, 2)
        while True:
            centers = rng.normal(0, scale, size=(m, d))
            x = rng.normal(0, scale, size=d)
            dists = np.linalg.norm(centers - x, axis=1)
            order = np.sort(dists)
            if order[0] > 0 and order[1] / order[0] > 1 + 1e-6:
                break
        protos = PrototypeSet(centers=centers, iterations_used=1, converged=True, final_shift=0.0)
        res = adapt_scale(x, protos, FieldConfig())
        ok = res.terminated == SINGLE_ACTIVATION and res.predicted == int(np.argmin(dists))
        mismatches += int(not ok)
        worst_steps = max(worst_steps, len(res.trace))
    elapsed = time.perf_counter() - start
    _line(
        "argmin-equivalence",
        mismatches == 0 and worst_steps <= 100 and elapsed < 5.0,
        f"{trials - mismatches}/{trials} match, max {worst_steps} steps, {elapsed:.2f}s",
    )


def test_kernel_analytics():
    def profile(r: float) -> float:
        return dog_kernel(np.array([r]), np.zeros(1), sigma=1.0)

    lo, hi = 1.0, 2.0
    assert profile(lo) > 0 > profile(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if profile(mid) > 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    analytic = 1.5 * math.sqrt(math.log(3.0))
    root_ok = abs(root - analytic) < 1e-9

    peak_ok = profile(0.0) == 1.0

    grid = np.linspace(0.0, 2.7, 10_000)
    vals = np.array([profile(r) for r in grid])
    monotone_ok = bool(np.all(np.diff(vals) < 0.0))

    _line(
        "kernel-analytics",
        root_ok and peak_ok and monotone_ok,
        f"bisection root {root:.12f} vs analytic {analytic:.12f}, "
        f"peak {profile(0.0)}, strict decrease on 10^4-point grid: {monotone_ok}",
    )


def test_clustering_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    worst_rowsum = 0.0
    instances = 200
    for _ in range(instances):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(m, 13))
        d = int(rng.integers(1, 5))
        features = rng.uniform(-3, 3, (n, d))
        labels = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
        rng.shuffle(labels)

        from conftest import make_support

        support = make_support(features, labels)
        protos = run_clustering(support, m, ClusterConfig(), record_history=True)
        oracle = oracle_soft_kmeans(features.tolist(), labels.tolist(), m)
        assert len(protos.history) == len(oracle)
        for mine, theirs in zip(protos.history, oracle):
            worst = max(worst, float(np.abs(np.asarray(mine) - np.asarray(theirs)).max()))

        weights = soft_assign(features, protos.history[0])
        worst_rowsum = max(worst_rowsum, float(np.abs(weights.sum(axis=1) - 1.0).max()))
    _line(
        "clustering-oracle",
        worst < 1e-9 and worst_rowsum < 1e-12,
        f"{instances} instances, max per-coordinate deviation {worst:.2e}, "
        f"max row-sum deviation {worst_rowsum:.2e}",
    )


def test_noise_injection_exactness(desk_set):
    ep = sample_episode(desk_set, PROTOCOL, derive_episode_seed(33, 0))

    counts_ok = True
    for rate, expected_total in ((0.2, 5), (0.4, 10), (0.6, 15)):
        noisy = apply_noise(ep, NoiseSpec("symmetric", rate), seed=derive_episode_seed(33, 1))
        per_class = {c: 0 for c in range(5)}
        for item in noisy.support:
            if item.corrupted:
                per_class[item.true_label] += 1
        counts_ok &= sum(per_class.values()) == expected_total
        counts_ok &= all(v == expected_total // 5 for v in per_class.values())

    pair_ok = True
    for seed in range(500):
        noisy = apply_noise(ep, NoiseSpec("pair", 0.4), seed=seed)
        pair_ok &= all(noisy.pair_map[c] != c for c in range(5))
        targets = {}
        for item in noisy.support:
            if item.corrupted:
                targets.setdefault(item.true_label, set()).add(item.given_label)
        pair_ok &= all(len(v) == 1 for v in targets.values())

    draws_per_episode = 10  # rate 0.4, 2 per class
    episodes = 10_000
    counts = np.zeros((5, 5), dtype=np.int64)
    for seed in range(episodes):
        noisy = apply_noise(ep, NoiseSpec("symmetric", 0.4), seed=seed)
        for item in noisy.support:
            if item.corrupted:
                counts[item.true_label, item.given_label] += 1
    total_draws = int(counts.sum())
    per_class_draws = episodes * 2
    p = 1.0 / 4.0
    se = math.sqrt(p * (1 - p) / per_class_draws)
    freq = counts / per_class_draws
    off_diag = freq[~np.eye(5, dtype=bool)]
    max_dev = float(np.abs(off_diag - p).max())
    marginal_ok = bool(np.all(np.diag(counts) == 0)) and max_dev <= 3 * se

    _line(
        "noise-injection-exactness",
        counts_ok and pair_ok and marginal_ok,
        f"totals exact for rates .2/.4/.6, pair maps fixed-point-free over 500 draws, "
        f"marginal max deviation {max_dev:.5f} <= 3se={3*se:.5f} over {total_draws} draws",
    )


def test_desk_scale_robustness_trend(desk_set):
    start = time.perf_counter()

    def run(kind: str, rate: float):
        cfg = RunConfig(
            episode=PROTOCOL,
            noise=NoiseSpec(kind, rate),
            episodes=600,
            master_seed=42,
            baseline_enabled=True,
        )
        return run_evaluation(desk_set, cfg, workers=1)

    clean = run("none", 0.0)
    sym40 = run("symmetric", 0.4)
    sym60 = run("symmetric", 0.6)
    elapsed = time.perf_counter() - start

    drop40 = clean.mean_accuracy - sym40.mean_accuracy
    drop60 = clean.mean_accuracy - sym60.mean_accuracy
    baseline_drop60 = clean.baseline_mean_accuracy - sym60.baseline_mean_accuracy

    # Thresholds frozen from pilot runs (data seeds 1/2/3, master seeds 0/42):
    # clean accuracy 1.0000 throughout, drop at 40% 0.0000 throughout, drop at
    # 60% in [0.139, 0.158], baseline drop at 60% in [0.193, 0.203].
    clean_ok = clean.mean_accuracy >= 0.99
    trend40_ok = drop40 <= 0.005
    trend60_ok = drop60 <= 0.18
    paired_ok = baseline_drop60 > drop60
    runtime_ok = elapsed < 120.0
    _line(
        "desk-scale-robustness",
        clean_ok and trend40_ok and trend60_ok and paired_ok and runtime_ok,
        f"acc@0%={clean.mean_accuracy:.4f} (>=0.99), drop@40%={drop40:.4f} (<=0.005), "
        f"drop@60%={drop60:.4f} (<=0.18), baseline drop@60%={baseline_drop60:.4f} "
        f"(> method drop), {elapsed:.1f}s single-threaded (<120s)",
    )


def test_ablation_trends(desk_set):
    noise = NoiseSpec("symmetric", 0.4)

    def run(cluster: ClusterConfig, field: FieldConfig):
        cfg = RunConfig(
            episode=PROTOCOL, noise=noise, cluster=cluster, field=field,
            episodes=600, master_seed=0, baseline_enabled=True,
        )
        return run_evaluation(desk_set, cfg, workers=1)

    soft = run(ClusterConfig(mode="soft"), FieldConfig())
    hard = run(ClusterConfig(mode="hard"), FieldConfig())
    fixed = run(ClusterConfig(mode="soft"), FieldConfig(sigma0=1.0, scale_mode="fixed"))

    soft_ok = soft.mean_accuracy >= hard.mean_accuracy
    scale_ok = soft.mean_accuracy >= fixed.mean_accuracy
    baseline_gap_ok = soft.baseline_mean_accuracy < soft.mean_accuracy
    _line(
        "ablation-trends",
        soft_ok and scale_ok and baseline_gap_ok,
        f"soft={soft.mean_accuracy:.4f} >= hard={hard.mean_accuracy:.4f}; "
        f"adaptive={soft.mean_accuracy:.4f} >= fixed(sigma0=1)={fixed.mean_accuracy:.4f}; "
        f"nearest-mean baseline {soft.baseline_mean_accuracy:.4f} strictly below",
    )


def test_determinism_across_workers(desk_set):
    cfg = RunConfig(
        episode=PROTOCOL,
        noise=NoiseSpec("symmetric", 0.4),
        episodes=48,
        master_seed=9,
        baseline_enabled=True,
    )
    serial = run_evaluation(desk_set, cfg, workers=1).to_json(include_wall_clock=False)
    parallel = run_evaluation(desk_set, cfg, workers=8).to_json(include_wall_clock=False)
    _line(
        "determinism-across-workers",
        serial == parallel,
        f"{len(serial)} report bytes identical for 1 and 8 workers",
    )
