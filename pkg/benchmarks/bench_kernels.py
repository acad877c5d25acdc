#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot paths (mean-recursion with gradients, per-observation
loss terms) and one full fit per backend on a simulated series.

    python benchmarks/bench_kernels.py [--n 2000] [--alpha 0.25] [--repeat 5]
"""

import argparse
import time

import numpy as np

import dpdcount as dc
from dpdcount import _backend, fitting
from dpdcount.dpd import DpdConfig
from dpdcount.meanmodel import ParamBox


def best_of(repeat, fn):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    spec = dc.SimSpec(
        model=dc.LinearIngarchX(q=1, p=1, transforms=("abs",)),
        family=dc.Poisson(),
        theta=[0.10, 0.15, 0.80, 0.03],
        driver=dc.Arch1Driver(1.0, 0.5),
        n=args.n,
        seed=1,
    )
    data = dc.simulate(spec)
    box = ParamBox.for_counts(data.y)
    cfg = DpdConfig(alpha=args.alpha, family=spec.family, model=spec.model,
                    box=box, lam_init="empirical-mean")
    theta = spec.theta
    y = data.y.astype(float)
    xt = np.abs(data.x)

    rows = []
    for name in _backend.available():
        kern = _backend.select(name)
        lam, _, _ = kern.ingarch_paths(y, xt, theta, 1, 1, y.mean(), True,
                                       False, False)
        t_path = best_of(args.repeat, lambda: kern.ingarch_paths(
            y, xt, theta, 1, 1, y.mean(), True, True, False))
        t_loss = best_of(args.repeat, lambda: kern.dpd_terms(
            spec.family, y, lam, args.alpha))
        t_fit = best_of(max(1, args.repeat // 2), lambda: fitting.fit(
            cfg, data, compute_cov=False, starts=2))
        rows.append((name, t_path, t_loss, t_fit))

    print(f"n={args.n} alpha={args.alpha} (best of {args.repeat})")
    print(f"{'backend':<8} {'paths+grad':>12} {'loss terms':>12} {'full fit':>12}")
    for name, t_path, t_loss, t_fit in rows:
        print(f"{name:<8} {t_path * 1e3:>10.3f}ms {t_loss * 1e3:>10.3f}ms "
              f"{t_fit * 1e3:>10.3f}ms")
    if len(rows) == 2:
        base = {r[0]: r for r in rows}
        for col, label in ((1, "paths"), (2, "loss"), (3, "fit")):
            speedup = base["python"][col] / base["cython"][col]
            print(f"speedup {label}: {speedup:.1f}x")


if __name__ == "__main__":
    main()
