"""Time the hot kernels under both backends (numba lane vs numpy lane).

Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --nodes 2000 --repeats 7

Each kernel is warmed up first so the numba timings exclude JIT compile
time, then timed best-of-N under each backend. The two lanes are also
checked against each other so a speedup never hides a numerical drift.
"""

import argparse
import time

import numpy as np

from disscat import _accel
from disscat import _kernels as K


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _make_cases(nodes, lams, rng):
    k, m, deg = 2, 3, 40
    coeffs = rng.normal(size=(deg + 1, k, m)) + 1j * rng.normal(size=(deg + 1, k, m))
    amp = rng.normal(size=(k, m))
    center = rng.uniform(1.0, 3.0, size=(k, m))
    width = rng.uniform(0.3, 0.8, size=(k, m))
    wpow = np.ones((k, m), np.int64)
    lam_pts = np.linspace(0.2, 3.8, lams)

    zx = rng.normal(size=(nodes, k, m)) + 1j * rng.normal(size=(nodes, k, m))
    zy = rng.normal(size=(nodes, k, m)) + 1j * rng.normal(size=(nodes, k, m))
    rho = np.einsum("nkp,nkq->npq", zx.conj(), zy)
    grid = np.linspace(0.0, 4.0, nodes)
    weights = np.full(nodes, 4.0 / nodes)

    n_t = 400
    omega = (rng.normal(size=(nodes, nodes))
             - 1j * 0.01 * rng.uniform(size=(nodes, nodes)))
    coefs = (np.cos(np.linspace(0.0, np.pi / 2, n_t)) ** 2).astype(complex)

    vpot = (1, -2.0, 1.0, 0.0)
    wpot = (1, 1.5, 1.0, 0.0)

    return {
        "cheb_batch": lambda: K.cheb_batch(coeffs, 0.0, 4.0, lam_pts),
        "gauss_batch": lambda: K.gauss_batch(amp, center, width, wpow,
                                             0.0, 4.0, lam_pts),
        "pair_density": lambda: K.pair_density(zx, zy),
        "cauchy_sum": lambda: K.cauchy_sum(rho, grid, weights, 2.0 + 0.05j),
        "pv_sum": lambda: K.pv_sum(rho, rho[nodes // 2], grid, weights,
                                   grid[nodes // 2]),
        "phase_window_sum": lambda: K.phase_window_sum(omega, coefs, 0.05),
        "radial_rk45": lambda: K.radial_rk45(
            0.01, 1.5, 0.01 ** 3, 3 * 0.01 ** 2, 4.0, 2.0,
            vpot, wpot, 1e-10, 1e-12, 200000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=800,
                    help="grid size for the array kernels (default 800)")
    ap.add_argument("--lams", type=int, default=400,
                    help="number of evaluation energies (default 400)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats, best is kept (default 5)")
    args = ap.parse_args()

    if not _accel.HAS_NUMBA:
        print("numba is not importable; only the numpy lane will run")

    cases = _make_cases(args.nodes, args.lams, np.random.default_rng(0))
    lanes = ["numpy"] + (["numba"] if _accel.HAS_NUMBA else [])
    saved = _accel.get_backend()

    rows = []
    try:
        for name, fn in cases.items():
            timings = {}
            outs = {}
            for lane in lanes:
                _accel.set_backend(lane)
                fn()  # warmup, compiles the numba lane on first call
                timings[lane] = _time(fn, args.repeats)
                outs[lane] = fn()
            if len(lanes) == 2:
                a = np.asarray(outs["numpy"][0] if isinstance(outs["numpy"], tuple)
                               else outs["numpy"])
                b = np.asarray(outs["numba"][0] if isinstance(outs["numba"], tuple)
                               else outs["numba"])
                scale = max(np.abs(a).max(), 1e-300)
                drift = float(np.abs(a - b).max() / scale)
                ratio = timings["numpy"] / timings["numba"]
            else:
                drift, ratio = 0.0, float("nan")
            rows.append((name, timings.get("numpy", np.nan),
                         timings.get("numba", np.nan), ratio, drift))
    finally:
        _accel.set_backend(saved)

    print(f"\nnodes={args.nodes} lams={args.lams} repeats={args.repeats}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}"
          f"{'speedup':>9}{'lane drift':>12}")
    for name, t_np, t_nb, ratio, drift in rows:
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}"
              f"{ratio:>8.1f}x{drift:>12.2e}")


if __name__ == "__main__":
    main()
