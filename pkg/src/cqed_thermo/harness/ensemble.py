"""Deterministic parallel ensembles.

Trajectory k always draws from stream k of the master seed, and results are
collected in index order, so the output does not depend on the thread count.
The compiled kernels release the GIL, which is what makes threads useful.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..analysis import efficacy
from ..homodyne import MeasurementModel
from ..protocol import ProtocolParams, mhz
from ..rng import trajectory_rng
from ..trajectory import StepGrid, TrajectoryConfig, TrajectoryRecord, discretize, run_forward
from .config import RunConfig
from .io import write_outputs

log = logging.getLogger(__name__)


class TrajectoryFailure(RuntimeError):
    def __init__(self, index: int, seed: int, cause: Exception):
        super().__init__(f"trajectory {index} (master_seed {seed}) failed: {cause}")
        self.index = index
        self.seed = seed


@dataclass(frozen=True)
class Model:
    protocol: ProtocolParams
    measurement: MeasurementModel
    trajectory: TrajectoryConfig
    grid: StepGrid
    beta: float


def build_model(cfg: RunConfig) -> Model:
    p = ProtocolParams.from_mhz(cfg.omega0_mhz, cfg.delta_omega_mhz, cfg.omega_rabi_mhz,
                                cfg.tau_us, cfg.quench_time_us)
    m = MeasurementModel(mhz(cfg.chi_mhz), cfg.kappa, cfg.nbar, cfg.dt, cfg.rate_cap)
    tc = TrajectoryConfig(dt=cfg.dt, gamma1=cfg.gamma1, integrator=cfg.integrator,
                          seed=cfg.master_seed, record_stride=cfg.effective_stride,
                          keep_record=False)
    return Model(p, m, tc, discretize(p, cfg.dt), cfg.beta)


def resolve_threads(threads) -> int:
    if threads in (None, "auto"):
        return os.cpu_count() or 1
    n = int(threads)
    if n < 1:
        raise ValueError(f"threads must be >= 1 or 'auto', got {threads!r}")
    return n


def derive_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for sub-run ``index`` (e.g. one sweep point)."""
    seq = np.random.SeedSequence([int(master_seed), int(index)])
    return int(seq.generate_state(1, np.uint64)[0])


def simulate(cfg: RunConfig, threads=1, backend=None) -> list[TrajectoryRecord]:
    model = build_model(cfg)

    def one(k: int) -> TrajectoryRecord:
        try:
            return run_forward(model.protocol, model.measurement, model.trajectory,
                               model.beta, trajectory_rng(cfg.master_seed, k),
                               traj_id=k, grid=model.grid, backend=backend)
        except Exception as exc:
            raise TrajectoryFailure(k, cfg.master_seed, exc) from exc

    n_threads = min(resolve_threads(threads), cfg.trajectories)
    log.info("running %d trajectories (dt = %.4g us, %d steps) on %d threads",
             cfg.trajectories, cfg.dt, cfg.n_steps, n_threads)
    if n_threads == 1:
        return [one(k) for k in range(cfg.trajectories)]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(one, range(cfg.trajectories)))


def provenance(cfg: RunConfig, backend_name: str) -> dict:
    # output_dir is left out so relocated runs produce identical manifests
    config = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
    return {"config": config, "derived": cfg.derived(), "backend": backend_name}


def ensemble_summary(records) -> dict:
    sig = np.array([r.sigma_final for r in records])
    eff = efficacy(records)
    return {
        "trajectories": len(records),
        "efficacy": eff.mean,
        "efficacy_stderr": eff.stderr,
        "mean_sigma_final": float(sig.mean()),
        "fraction_negative_sigma_final": float(np.mean(sig < 0)),
        "bloch_clamps": int(sum(r.clamps for r in records)),
    }


def run_ensemble(cfg: RunConfig, threads=1, out_dir=None, backend=None):
    """Simulate the ensemble and write trajectories, endpoints and a summary."""
    k = backend or kernels.active
    records = simulate(cfg, threads, backend=k)
    bundle = write_outputs(records, {"summary": ensemble_summary(records)},
                           out_dir or cfg.output_dir, provenance(cfg, k.NAME))
    return records, bundle
