"""Wall-clock comparison of the numpy and numba backends.

Each backend runs in its own interpreter because SMD_BACKEND is read at
import time. Usage: python benchmarks/bench_backends.py [--n 1000] [--steps 500]
"""

import argparse
import json
import os
import subprocess
import sys

_CHILD = r"""
import json, sys, time
import numpy as np
from smd import kernels, simulator as S, observables as O, drivers as D, dynamics as Y

n, steps = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)


def best(fn, reps=5):
    fn()  # warm-up (JIT compile)
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


F, J = rng.normal(size=(n, 2)), rng.normal(size=(n, 1, 2))
H = rng.normal(size=(n, 2, 1, 1))
B = np.eye(2)
X = rng.normal(size=(n, 1))
res = {
    "backend": "numba" if kernels.USE_NUMBA else "numpy",
    "moments_us": 1e6 * best(lambda: kernels.moments(F, J)),
    "ito_moment_us": 1e6 * best(lambda: kernels.ito_moment(J, H, B)),
    "power_moment_us": 1e6 * best(lambda: kernels.power_moment(X, 2.0)),
}
dyn = Y.granular_media(Y.double_well_grad, Y.quadratic_grad, 0.7)
cfg = S.SimConfig(n, 1e-3, steps * 1e-3, gamma=0.8, record_stride=10)
obs, drv = O.builtin("mean_and_second_1d"), D.mean_variance(3.0)
res["generic_step_us"] = 1e6 * best(lambda: S.run(cfg, obs, drv, dyn, use_fused=False), 3) / steps
if kernels.USE_NUMBA:
    res["fused_step_us"] = 1e6 * best(lambda: S.run(cfg, obs, drv, dyn, use_fused=True), 3) / steps
print(json.dumps(res))
"""


def run_backend(name, n, steps):
    env = dict(os.environ, SMD_BACKEND=name)
    out = subprocess.run(
        [sys.executable, "-c", _CHILD, str(n), str(steps)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()
    rows = [run_backend(b, args.n, args.steps) for b in ("numpy", "numba")]
    keys = [k for k in rows[1] if k != "backend"]
    print(f"N={args.n}, {args.steps} steps; times in microseconds (best of several)")
    print(f"{'measure':<18}" + "".join(f"{r['backend']:>12}" for r in rows))
    for k in keys:
        print(f"{k:<18}" + "".join(f"{r[k]:>12.1f}" if k in r else f"{'-':>12}" for r in rows))


if __name__ == "__main__":
    main()
