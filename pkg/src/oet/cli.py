"""Command-line interface: track, eval, synth, and solver-check subcommands.

Exit codes: 0 success, 1 usage/data/config failure, 2 failed diagnostics.
Flag values override config-file keys, which override built-in defaults.
"""

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import embedding, numerics
from .features import BoundingBox
from .hsic import make_labels, label_kernel
from .metrics import curve_rows, evaluate, report_lines
from .sequence_io import (
    ConfigError,
    GroundTruthMismatchError,
    GroundTruthParseError,
    SequenceLoadError,
    load_config,
    load_sequence,
    load_synth_spec,
    parse_groundtruth,
    save_sequence,
    write_results,
)
from .synth import InvalidSpecError, generate_sequence
from .tracker import track_sequence


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return 1


def _resolve_workers(value):
    if value is not None:
        return max(1, value)
    env = os.environ.get("OET_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def cmd_track(args):
    try:
        manifest = load_sequence(args.sequence)
    except (SequenceLoadError, GroundTruthMismatchError, GroundTruthParseError) as exc:
        return _fail(exc)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _fail(f"bad config: {exc}")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    if args.init is not None:
        try:
            x, y, w, h = (float(tok) for tok in args.init.split(","))
            init_box = BoundingBox(x, y, w, h)
        except ValueError as exc:
            return _fail(f"bad --init value {args.init!r}: {exc}")
    elif manifest.ground_truth:
        init_box = manifest.ground_truth[0]
    else:
        return _fail("no ground truth in sequence; pass --init x,y,w,h")

    workers = _resolve_workers(args.workers)
    try:
        result = track_sequence(manifest.frames, init_box, cfg, workers=workers)
    except Exception as exc:  # tracking failures should not traceback at the CLI
        return _fail(f"tracking failed: {exc}")
    write_results(args.out, result.boxes)
    print(
        f"frames = {len(result.boxes)}, mean psi = {result.mean_psi:.4f}, "
        f"relearns = {len(result.relearn_frames)}, failures = {len(result.failed_frames)}, "
        f"wall time = {result.elapsed:.2f} s"
    )
    return 0


def cmd_eval(args):
    try:
        results = parse_groundtruth(args.results)
        gt = parse_groundtruth(args.groundtruth)
        report = evaluate(results, gt)
    except (GroundTruthParseError, ValueError, OSError) as exc:
        return _fail(exc)

    report_path = Path(args.report)
    report_path.write_text("".join(line + "\n" for line in report_lines(report)))
    curves_path = report_path.with_suffix(".curves.csv")
    curves_path.write_text("".join(row + "\n" for row in curve_rows(report)))
    print(f"precision@20 = {report.precision_at_20:.3f}, auc = {report.auc:.3f}")
    return 0


def cmd_synth(args):
    try:
        spec = load_synth_spec(args.spec)
        frames, boxes = generate_sequence(spec)
    except (ConfigError, InvalidSpecError, OSError) as exc:
        return _fail(exc)
    save_sequence(args.out_dir, frames, boxes)
    print(f"wrote {len(frames)} frames to {args.out_dir}")
    return 0


def _check_pca_equivalence(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        n_pos, n_neg = 16, 14
        X = rng.standard_normal((40, n_pos + n_neg))
        train = embedding.TrainingSet(
            features=X, labels=make_labels(n_pos, n_neg), n_pos=n_pos, n_neg=n_neg
        )
        model = embedding.learn_embedding(train, freeze_error=True)
        Xc = X - X.mean(axis=1, keepdims=True)
        L = label_kernel(train.labels)
        P_ref = embedding.supervised_pca(Xc, L, model.dim)
        sv = np.linalg.svd(model.basis.T @ P_ref, compute_uv=False)
        worst = max(worst, float(np.arccos(np.clip(sv.min(), -1.0, 1.0))))
    return worst < 1e-6, f"max principal angle {worst:.2e}"


def _check_prox_optimality(seed):
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(3):
        M = rng.standard_normal((6, 5))
        theta = float(rng.uniform(0.2, 2.0))
        A = numerics.singular_value_shrinkage(theta, M)
        base = theta * np.linalg.svd(A, compute_uv=False).sum() + 0.5 * np.linalg.norm(A - M) ** 2
        x = rng.standard_normal(8)
        S = numerics.soft_threshold(theta, x)
        base_s = theta * np.abs(S).sum() + 0.5 * np.linalg.norm(S - x) ** 2
        for _ in range(200):
            D = 1e-3 * rng.standard_normal(M.shape)
            cand = A + D
            obj = theta * np.linalg.svd(cand, compute_uv=False).sum() + 0.5 * np.linalg.norm(cand - M) ** 2
            if obj < base - 1e-12:
                violations += 1
            d = 1e-3 * rng.standard_normal(8)
            cand_s = S + d
            obj_s = theta * np.abs(cand_s).sum() + 0.5 * np.linalg.norm(cand_s - x) ** 2
            if obj_s < base_s - 1e-12:
                violations += 1
    return violations == 0, f"{violations} perturbation violations"


def _check_e2_gradient(seed, printed_sign):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        m, n = 6, 5
        A = rng.standard_normal((m, n))
        X = rng.standard_normal((m, n))
        Q = rng.standard_normal((n, n))
        E1 = rng.standard_normal((m, n))
        E2 = embedding.step_e2(A, X, Q, E1, printed_sign=printed_sign)

        def f(E):
            return (
                np.linalg.norm(A - (X - E) @ Q.T, "fro") ** 2
                + np.linalg.norm(E1 - E, "fro") ** 2
            )

        h = 1e-5
        grad = np.zeros_like(E2)
        for i in range(m):
            for j in range(n):
                Ep, Em = E2.copy(), E2.copy()
                Ep[i, j] += h
                Em[i, j] -= h
                grad[i, j] = (f(Ep) - f(Em)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(grad)))
    return worst < 1e-6, f"max finite-difference gradient norm {worst:.2e}"


def _check_convergence(seed, verbose):
    rng = np.random.default_rng(seed)
    ok = True
    detail = []
    for k in range(3):
        m, n, r = 100, 50, 3
        X = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        mask = rng.random((m, n)) < 0.05
        X[mask] += 8.0 * rng.choice([-1.0, 1.0], size=int(mask.sum()))
        train = embedding.TrainingSet(
            features=X, labels=make_labels(n // 2, n - n // 2), n_pos=n // 2, n_neg=n - n // 2
        )
        model = embedding.learn_embedding(train, kernel=np.eye(n))
        trace = np.array(model.objective_trace)
        monotone = bool(np.all(np.diff(trace) <= 1e-9))
        ok = ok and monotone and model.converged and model.dim == r
        detail.append(f"d={model.dim} iters={model.n_iter} monotone={monotone}")
        if verbose:
            for i, v in enumerate(trace):
                print(f"  instance {k} iter {i}: objective {v:.10f}")
    return ok, "; ".join(detail)


def cmd_solver_check(args):
    checks = [
        ("supervised-pca-equivalence", lambda: _check_pca_equivalence(args.seed)),
        ("proximal-optimality", lambda: _check_prox_optimality(args.seed + 1)),
        (
            "e2-gradient",
            lambda: _check_e2_gradient(args.seed + 2, printed_sign=args.mutate_e2_sign),
        ),
        ("convergence-rank-recovery", lambda: _check_convergence(args.seed + 3, args.verbose)),
    ]
    failures = 0
    for name, fn in checks:
        t0 = time.perf_counter()
        passed, detail = fn()
        dt = time.perf_counter() - t0
        status = "PASS" if passed else "FAIL"
        print(f"{status} {name} ({detail}; {dt:.2f} s)")
        failures += 0 if passed else 1
    return 0 if failures == 0 else 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oet",
        description="Orthogonal-embedding tracker: subspace learning + particle-filter tracking.",
        epilog="Precedence: command-line flags > config-file keys > built-in defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="track a sequence and write result boxes")
    p_track.add_argument("sequence", help="sequence directory (img/ + optional ground truth)")
    p_track.add_argument("--out", required=True, help="output results file")
    p_track.add_argument("--config", default=None, help="key=value config file")
    p_track.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    p_track.add_argument("--init", default=None, help="initial box as x,y,w,h")
    p_track.add_argument(
        "--workers",
        type=int,
        default=None,
        help="scoring workers (default: OET_WORKERS or available parallelism)",
    )
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="evaluate results against ground truth")
    p_eval.add_argument("results", help="tracker results file")
    p_eval.add_argument("groundtruth", help="ground-truth file")
    p_eval.add_argument("--report", required=True, help="report output path")
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth", help="render a synthetic sequence to disk")
    p_synth.add_argument("spec", help="key=value synthetic-sequence spec file")
    p_synth.add_argument("out_dir", help="output sequence directory")
    p_synth.set_defaults(func=cmd_synth)

    p_check = sub.add_parser("solver-check", help="run the seeded solver diagnostics")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--verbose", action="store_true", help="print objective traces")
    p_check.add_argument(
        "--mutate-e2-sign",
        action="store_true",
        help=argparse.SUPPRESS,  # diagnostic hook: prove the gradient check catches a sign flip
    )
    p_check.set_defaults(func=cmd_solver_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
