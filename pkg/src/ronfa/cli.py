"""Command-line driver: evaluation runs, synthetic data generation, file inspection.

Exit codes: 0 on success, 2 on usage/configuration errors (one-line diagnosis
on stderr). The stdout of `eval` is the summary table; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .clustering import ClusterConfig
from .episodes import EpisodeSpec, NoiseSpec
from .errors import RonfaError
from .field import FieldConfig
from .harness import RunConfig, run_evaluation, write_report
from .store import SynthSpec, generate_synthetic, load_embeddings, save_embeddings, validate_set

NOISE_FLAG_TO_KIND = {"none": "none", "sym": "symmetric", "pair": "pair", "outlier": "outlier"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of exiting, for one-line errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _default_workers() -> int:
    env = os.environ.get("RONFA_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"RONFA_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="ronfa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run the episodic benchmark on an embedding file")
    p_eval.add_argument("--data", required=True, help="embedding file path")
    p_eval.add_argument("--data-format", "--format", dest="data_format",
                        choices=["auto", "binary", "csv"], default="auto")
    p_eval.add_argument("--n-way", type=int, default=5)
    p_eval.add_argument("--k-shot", type=int, default=5)
    p_eval.add_argument("--queries", type=int, default=15)
    p_eval.add_argument("--noise", choices=sorted(NOISE_FLAG_TO_KIND), default="none")
    p_eval.add_argument("--noise-rate", type=float, default=0.0)
    p_eval.add_argument("--episodes", type=int, default=600)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--kmeans", choices=["soft", "hard"], default="soft")
    p_eval.add_argument("--scale", choices=["adaptive", "fixed"], default="adaptive")
    p_eval.add_argument("--sigma0", default="auto",
                        help="'auto' (mean prototype distance per query) or a positive real")
    p_eval.add_argument("--lambda", dest="tuning_ratio", type=float, default=0.5)
    p_eval.add_argument("--h-u", dest="resting_level", type=float, default=0.5)
    p_eval.add_argument("--temperature", type=float, default=1.0)
    p_eval.add_argument("--normalize", action="store_true",
                        help="L2-normalize features before clustering and prediction")
    p_eval.add_argument("--epsilon", type=float, default=1e-4)
    p_eval.add_argument("--max-iters", type=int, default=100)
    p_eval.add_argument("--max-adapt-iters", type=int, default=100)
    p_eval.add_argument("--baseline", action="store_true",
                        help="also score the nearest-class-mean baseline")
    p_eval.add_argument("--report", default=None, help="write a report (.json or .csv)")
    p_eval.add_argument("--workers", type=int, default=None,
                        help="parallel episode workers (default: available cores; "
                             "RONFA_WORKERS overrides the default)")

    p_synth = sub.add_parser("synth", help="generate a synthetic embedding file")
    p_synth.add_argument("--classes", type=int, required=True)
    p_synth.add_argument("--per-class", type=int, required=True)
    p_synth.add_argument("--dim", type=int, required=True)
    p_synth.add_argument("--center-radius", type=float, default=10.0)
    p_synth.add_argument("--within-std", type=float, default=1.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--out-format", choices=["binary", "csv"], default="binary")

    p_inspect = sub.add_parser("inspect", help="print summary diagnostics for an embedding file")
    p_inspect.add_argument("path")
    p_inspect.add_argument("--data-format", "--format", dest="data_format",
                           choices=["auto", "binary", "csv"], default="auto")
    return parser


def _resolve_format(path: str, flag: str) -> str:
    if flag != "auto":
        return flag
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def _cmd_eval(args: argparse.Namespace) -> int:
    if not (0.0 <= args.noise_rate < 1.0):
        raise UsageError(f"--noise-rate must be in [0, 1), got {args.noise_rate:g}")
    if args.sigma0 == "auto":
        sigma0 = None
    else:
        try:
            sigma0 = float(args.sigma0)
        except ValueError:
            raise UsageError(f"--sigma0 must be 'auto' or a real number, got {args.sigma0!r}") from None
        if sigma0 <= 0:
            raise UsageError(f"--sigma0 must be positive, got {args.sigma0}")
    noise = NoiseSpec(kind=NOISE_FLAG_TO_KIND[args.noise], rate=args.noise_rate)
    spec = EpisodeSpec(n_way=args.n_way, k_shot=args.k_shot, n_query=args.queries)
    noise.corrupted_per_class(spec.k_shot)  # reject over-quota rates before running
    config = RunConfig(
        episode=spec,
        noise=noise,
        cluster=ClusterConfig(
            mode=args.kmeans,
            epsilon=args.epsilon,
            max_iters=args.max_iters,
            temperature=args.temperature,
            normalize_inputs=args.normalize,
        ),
        field=FieldConfig(
            resting_level=args.resting_level,
            tuning_ratio=args.tuning_ratio,
            sigma0=sigma0,
            max_adapt_iters=args.max_adapt_iters,
            scale_mode=args.scale,
        ),
        episodes=args.episodes,
        master_seed=args.seed,
        baseline_enabled=args.baseline,
    )
    emb_set = load_embeddings(args.data, _resolve_format(args.data, args.data_format))
    if noise.kind == "outlier" and emb_set.n_classes <= spec.n_way:
        raise UsageError(
            f"--noise outlier needs a set with more than --n-way={spec.n_way} classes, "
            f"{args.data} has {emb_set.n_classes}"
        )
    workers = args.workers if args.workers is not None else _default_workers()
    report = run_evaluation(emb_set, config, workers=workers)

    width = max(len(row["condition"]) for row in report.conditions())
    print(f"{'condition'.ljust(width)}  mean_accuracy  ci95")
    for row in report.conditions():
        ci = "n/a" if row["ci95"] is None else f"{row['ci95']:.4f}"
        print(f"{row['condition'].ljust(width)}  {row['mean_accuracy']:.4f}         {ci}")
    if args.report:
        fmt = "csv" if Path(args.report).suffix.lower() == ".csv" else "json"
        write_report(report, args.report, fmt)
        print(f"report written to {args.report}", file=sys.stderr)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        n_classes=args.classes,
        per_class=args.per_class,
        dim=args.dim,
        center_radius=args.center_radius,
        within_std=args.within_std,
    )
    emb_set = generate_synthetic(spec, args.seed)
    save_embeddings(emb_set, args.out, args.out_format)
    print(f"wrote {args.out}: n={len(emb_set)} d={emb_set.dim} classes={emb_set.n_classes}")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    emb_set = load_embeddings(args.path, _resolve_format(args.path, args.data_format))
    diag = validate_set(emb_set)
    print(f"n={diag.n_items} d={diag.dim} classes={len(emb_set.class_names)}")
    counts = ", ".join(
        f"{emb_set.class_names[c]}:{diag.class_counts[c]}" for c in sorted(diag.class_counts)
    )
    print(f"per-class counts: {counts}")
    print(f"norms: min={diag.min_norm:.6g} mean={diag.mean_norm:.6g} max={diag.max_norm:.6g}")
    print(f"duplicate vector groups: {len(diag.duplicate_groups)}")
    return 0


def run_cli(argv: Sequence[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "synth":
            return _cmd_synth(args)
        return _cmd_inspect(args)
    except UsageError as exc:
        print(f"ronfa: error: {exc}", file=sys.stderr)
        return 2
    except (RonfaError, FileNotFoundError) as exc:
        print(f"ronfa: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ronfa: error: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run_cli(sys.argv[1:] if argv is None else argv))
