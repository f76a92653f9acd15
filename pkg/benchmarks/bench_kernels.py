"""Compare the compiled kernels with the pure-Python fallback.

Times the three kernel entry points directly, then a full elastic tangent and
one integrator step through the public API in a child process for each
backend (the backend is fixed at import time by ``DENSIFY_PURE_PYTHON``).

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from densify import _kernels_py

try:
    from densify import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

SEED = 7
N_CALLS = 2000

# run inside a child process with the backend chosen by the environment
API_SNIPPET = r"""
import json, sys, timeit
import numpy as np
import densify
from densify.elastic import InternalState, MaterialParams, elastic_tangent
from densify.integrator import MaterialPoint, integrate_step
params = MaterialParams(kappa=0.02, p0=0.063, n=2.0, mu0=5.0, mu1=5.0, B=0.3, pcb=0.5,
                        c_inf=0.5, Gamma=0.5, a1=0.3, a2=0.2, Lambda1=1.5, Lambda2=20.0,
                        M=1.1, m=2.0, alpha=0.1, beta=0.19, gamma=0.9, eps_na=0.3)
state = InternalState.from_pc(2.0, params)
U = state.Up @ np.diag([0.99, 1.0, 1.01])
pt = MaterialPoint.initial(params, 0.1)
repeat = int(sys.argv[1])
t_tan = min(timeit.repeat(lambda: elastic_tangent(U, state.Up, state, params),
                          number=20, repeat=repeat)) / 20
t_step = min(timeit.repeat(lambda: integrate_step(pt, -0.002 * np.eye(3)),
                           number=5, repeat=repeat)) / 5
print(json.dumps({"backend": densify.BACKEND, "elastic_tangent": t_tan,
                  "integrate_step": t_step}))
"""


def kernel_cases(rng):
    A = rng.normal(size=(3, 3))
    A = 0.5 * (A + A.T)
    A *= 0.5 / np.abs(np.linalg.eigvalsh(A)).max()
    L1, L2 = rng.normal(size=(2, 3, 3, 3, 3))
    C = rng.normal(size=(3, 3))
    return {
        "series_gradient (log)": lambda k: k.series_gradient(A, 0, 1e-16),
        "series_gradient (exp)": lambda k: k.series_gradient(A, 1, 1e-16),
        "compose4": lambda k: k.compose4(L1, L2),
        "apply4": lambda k: k.apply4(L1, C),
    }


def time_call(fn, module, repeat):
    return min(timeit.repeat(lambda: fn(module), number=N_CALLS, repeat=repeat)) / N_CALLS


def api_timings(pure, repeat):
    env = {**os.environ, "DENSIFY_PURE_PYTHON": "1" if pure else "0"}
    out = subprocess.run([sys.executable, "-c", API_SNIPPET, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def row(name, t_py, t_c):
    speedup = f"{t_py / t_c:8.1f}x" if t_c else f"{'-':>9}"
    t_c = f"{t_c * 1e6:15.2f}" if t_c else f"{'-':>15}"
    return f"{name:<24}{t_py * 1e6:12.2f}{t_c}{speedup}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'operation':<24}{'python [us]':>12}{'compiled [us]':>15}{'speedup':>9}")
    for name, fn in kernel_cases(np.random.default_rng(SEED)).items():
        t_py = time_call(fn, _kernels_py, args.repeat)
        t_c = time_call(fn, compiled, args.repeat) if compiled is not None else None
        print(row(name, t_py, t_c))

    py = api_timings(True, args.repeat)
    c = api_timings(False, args.repeat)
    c_ok = c["backend"] == "compiled"
    for key in ("elastic_tangent", "integrate_step"):
        print(row(key, py[key], c[key] if c_ok else None))
    if not c_ok:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
