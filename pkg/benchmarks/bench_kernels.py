"""Time the compiled and pure-Python trajectory kernels on identical work.

    python benchmarks/bench_kernels.py [--trajectories 20] [--repeat 3]

Each backend runs the same seeded trajectories; the script reports the best
wall time per trajectory, the speedup, and the largest disagreement between
backends so a fast-but-wrong build is caught.
"""

import argparse
import logging
import time

import numpy as np

from cqed_thermo import kernels
from cqed_thermo.homodyne import MeasurementModel
from cqed_thermo.protocol import mhz, transmon_protocol
from cqed_thermo.rng import trajectory_rng
from cqed_thermo.trajectory import TrajectoryConfig, discretize, evolve_conditioned, run_forward

DT = 1e-3


def pure_case(backend, n):
    p = transmon_protocol()
    m = MeasurementModel(mhz(-0.5), mhz(10), 0.4, DT)
    c = TrajectoryConfig(dt=DT, keep_record=False, record_stride=2400)
    grid = discretize(p, DT)
    recs = [run_forward(p, m, c, 1 / p.omega0, trajectory_rng(5, k), grid=grid, backend=backend)
            for k in range(n)]
    return np.array([[r.log_pF, r.log_pB, r.sigma_final] for r in recs])


def mixed_case(integrator, gamma1):
    def run(backend, n):
        p = transmon_protocol()
        m = MeasurementModel(mhz(-0.5), mhz(10), 0.4, DT)
        grid = discretize(p, DT)
        rho0 = np.full((2, 2), 0.5, dtype=complex)
        return np.array([evolve_conditioned(rho0, grid, m, trajectory_rng(6, k), gamma1=gamma1,
                                            integrator=integrator, backend=backend).states[-1]
                         for k in range(n)])
    return run


CASES = {
    "pure state + backward chain": pure_case,
    "density matrix, POVM, damping": mixed_case("povm", mhz(0.2)),
    "density matrix, Bloch SME": mixed_case("sme", 0.0),
}


def best_time(fn, backend, n, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(backend, n)
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectories", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    logging.disable(logging.WARNING)

    names = kernels.available()
    if "cython" not in names:
        print("compiled extension not built; timing the Python fallback only")
    backends = {name: kernels.load(name) for name in names}
    print(f"{args.trajectories} trajectories of 2400 steps, best of {args.repeat}")
    print(f"{'case':32s} " + " ".join(f"{n + ' ms/traj':>16s}" for n in names)
          + f" {'speedup':>8s} {'max diff':>9s}")
    for label, fn in CASES.items():
        timing, outputs = {}, {}
        for name, mod in backends.items():
            t, outputs[name] = best_time(fn, mod, args.trajectories, args.repeat)
            timing[name] = 1e3 * t / args.trajectories
        row = f"{label:32s} " + " ".join(f"{timing[n]:16.2f}" for n in names)
        if len(names) == 2:
            diff = float(np.max(np.abs(outputs["python"] - outputs["cython"])))
            row += f" {timing['python'] / timing['cython']:8.1f} {diff:9.1e}"
        print(row)


if __name__ == "__main__":
    main()
