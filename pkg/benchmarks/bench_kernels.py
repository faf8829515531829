#!/usr/bin/env python3
"""Benchmark the JIT-compiled monitoring kernels against the pure-Python path.

Runs the same replication workload twice in subprocesses, once with numba
enabled and once with SEQPRECISION_DISABLE_NUMBA=1, and reports throughput.
Results are bitwise identical between the two paths (same code, compiled vs
interpreted); this script only compares speed.

Usage: python benchmarks/bench_kernels.py [--reps 300] [--d 0.2]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, os, time
import seqprecision as sp
from seqprecision._kernels import NUMBA_ENABLED

reps = {reps}
d = {d}
dgp = sp.standard_dgp(2)
nbar = sp.reference_sample_size("fwcid", d, 0.1)
results = {{}}
for kind in ("fwcid_naive", "fwcid_conservative", "fwcid_always_valid"):
    kw = dict(kind=kind, d=d, alpha=0.1)
    if kind == "fwcid_conservative":
        kw.update(alpha_c=0.1, rho=sp.tune_rho(nbar, 0.1, "one_sided"))
    if kind == "fwcid_always_valid":
        kw.update(rho=sp.tune_rho(nbar, 0.1, "two_sided"))
    spec = sp.StoppingRuleSpec(**kw)
    sp.run_replication(dgp, spec, seed=0, nbar=nbar)  # warm the JIT cache
    t0 = time.perf_counter()
    total_n = 0
    for r in range(reps):
        res = sp.run_replication(dgp, spec, sp.derive_seed(7, 2, 0, r), nbar=nbar)
        total_n += res.n_stop
    dt = time.perf_counter() - t0
    results[kind] = dict(seconds=dt, observations=total_n,
                         obs_per_second=total_n / dt)
print(json.dumps(dict(numba=NUMBA_ENABLED, results=results)))
"""


def run_path(disable_numba: bool, reps: int, d: float) -> dict:
    env = dict(os.environ)
    env["SEQPRECISION_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    code = WORKLOAD.format(reps=reps, d=d)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=300,
                        help="replications per rule kind (default 300)")
    parser.add_argument("--d", type=float, default=0.1,
                        help="interval half-width of the workload (default 0.1); "
                             "smaller d means longer streams and more kernel time")
    args = parser.parse_args()

    print(f"workload: lognormal process, d={args.d}, {args.reps} replications "
          f"per rule kind\n")
    jit = run_path(False, args.reps, args.d)
    # the interpreted path is orders of magnitude slower; scale it down
    py_reps = max(args.reps // 100, 3)
    py = run_path(True, py_reps, args.d)

    print(f"{'rule kind':<24} {'jit Mobs/s':>12} {'python Mobs/s':>14} {'speedup':>9}")
    for kind in jit["results"]:
        a = jit["results"][kind]["obs_per_second"]
        b = py["results"][kind]["obs_per_second"]
        print(f"{kind:<24} {a / 1e6:>12.2f} {b / 1e6:>14.4f} {a / b:>8.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
