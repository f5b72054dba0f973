"""Time the compiled and interpreted kernel paths on the same workload.

    python benchmarks/bench_kernels.py [--n 100] [--steps 50]

Each backend runs in its own interpreter because the switch is read at import.
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = """
import json, time
import numpy as np
import normdyn as nd
from normdyn import kernels as K
p = nd.WorldParams(n={n}, seed=1, mu=0.0)
w = nd.World.from_params(p)
nd.advance(w, 1)   # compile / warm up
t0 = time.perf_counter()
for i in range({reps}):
    nd.round_robin_fitness(w, i % p.n)
t_rr = (time.perf_counter() - t0) / {reps}
t0 = time.perf_counter()
nd.advance(w, {steps})
t_step = (time.perf_counter() - t0) / {steps}
print(json.dumps({{"backend": nd.BACKEND, "round_robin_s": t_rr, "step_s": t_step,
                  "counts": w.counts().tolist()}}))
"""


def run(disable: bool, n: int, steps: int, reps: int) -> dict:
    env = dict(os.environ, NORMDYN_DISABLE_JIT="1" if disable else "0")
    code = WORKLOAD.format(n=n, steps=steps, reps=reps)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()
    res = [run(False, args.n, args.steps, args.reps), run(True, args.n, args.steps, args.reps)]
    for r in res:
        print(f"{r['backend']:>7}: round-robin {r['round_robin_s'] * 1e3:9.3f} ms   "
              f"step {r['step_s'] * 1e3:9.3f} ms")
    if res[0]["backend"] == "numba":
        print(f"speed-up per step: {res[1]['step_s'] / res[0]['step_s']:.0f}x")
        print("same final composition:", res[0]["counts"] == res[1]["counts"])


if __name__ == "__main__":
    main()
