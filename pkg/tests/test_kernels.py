"""The compiled and pure-Python kernels implement the same arithmetic."""

import numpy as np
import pytest

from cqed_thermo import kernels
from cqed_thermo.homodyne import MeasurementModel
from cqed_thermo.protocol import mhz, transmon_protocol
from cqed_thermo.rng import trajectory_rng
from cqed_thermo.trajectory import TrajectoryConfig, discretize, evolve_conditioned, run_forward

pytestmark = pytest.mark.skipif(len(kernels.available()) < 2,
                                reason="compiled kernels not built")

FIELDS = ("energy", "work", "heat", "sigma", "currents")


def pair():
    return kernels.load("python"), kernels.load("cython")


def test_selected_backend_prefers_compiled():
    assert kernels.BACKEND in kernels.available()


@pytest.mark.parametrize("integrator, gamma1", [("povm", 0.0), ("povm", 3.0), ("sme", 0.0),
                                                ("sme", 3.0)])
def test_forward_runs_agree(integrator, gamma1):
    p = transmon_protocol()
    m = MeasurementModel(mhz(-0.5), mhz(10), 4.0, 1e-3)
    c = TrajectoryConfig(dt=1e-3, gamma1=gamma1, integrator=integrator)
    py, cy = pair()
    for k in range(3):
        a = run_forward(p, m, c, 1 / p.omega0, trajectory_rng(8, k), backend=py)
        b = run_forward(p, m, c, 1 / p.omega0, trajectory_rng(8, k), backend=cy)
        assert (a.n, a.m) == (b.n, b.m)
        for f in FIELDS:
            assert np.allclose(getattr(a, f), getattr(b, f), rtol=1e-12, atol=1e-9,
                               equal_nan=True), f
        if a.log_pF is not None:
            assert a.log_pF == pytest.approx(b.log_pF, abs=1e-9)
            assert a.log_pB == pytest.approx(b.log_pB, abs=1e-9)


def test_replay_agrees():
    p = transmon_protocol()
    m = MeasurementModel(mhz(-0.5), mhz(10), 4.0, 1e-3)
    grid = discretize(p, 1e-3)
    rho0 = np.array([[0.5, 0.5j], [-0.5j, 0.5]])
    py, cy = pair()
    base = evolve_conditioned(rho0, grid, m, np.random.default_rng(1), backend=py)
    for integ in ("povm", "sme"):
        a = evolve_conditioned(rho0, grid, m, currents=base.currents, integrator=integ,
                               backend=py)
        b = evolve_conditioned(rho0, grid, m, currents=base.currents, integrator=integ,
                               backend=cy)
        assert np.allclose(a.states, b.states, atol=1e-13)
        assert a.clamps == b.clamps
