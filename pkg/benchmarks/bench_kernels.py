#!/usr/bin/env python3
"""Compiled vs interpreted kernels on the same workloads.

Each mode runs in its own interpreter because SP2INDEX_NUMBA is read at import.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, time
import numpy as np
from sp2index import integrate_fundamental, index_i2
from sp2index._jit import NUMBA_ENABLED
from sp2index.mathieu import MathieuParams, mathieu_spec
from sp2index.sympath import random_piecewise_spec

def mathieu_cells():
    for w2 in np.linspace(0.1, 9.0, 12):
        index_i2(integrate_fundamental(mathieu_spec(MathieuParams(float(w2), 0.7))))

def piecewise_paths():
    rng = np.random.default_rng(0)
    for _ in range(20):
        integrate_fundamental(random_piecewise_spec(rng), n_periods=3)

t0 = time.perf_counter()
integrate_fundamental(mathieu_spec(MathieuParams(2.0, 0.3)))
warm = time.perf_counter() - t0
out = {"numba": NUMBA_ENABLED, "first_call": warm}
for name, fn in (("mathieu_cells", mathieu_cells), ("piecewise_paths", piecewise_paths)):
    best = math.inf
    for _ in range(REPEAT):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
print(json.dumps(out))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, SP2INDEX_NUMBA=flag)
    code = WORKER.replace("REPEAT", str(repeat))
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    fast = run("1", args.repeat)
    slow = run("0", args.repeat)
    print(f"{'workload':<18}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for key in ("first_call", "mathieu_cells", "piecewise_paths"):
        print(f"{key:<18}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>9.1f}x")
    if not fast["numba"]:
        print("warning: numba unavailable, both columns are interpreted", file=sys.stderr)


if __name__ == "__main__":
    main()
