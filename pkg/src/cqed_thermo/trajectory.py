"""Single quantum trajectories of the monitored qubit.

Each step applies the evolution over [t_i, t_i+1) and then conditions on the
current sampled for that interval. The energy ledger follows

    dW_i = Tr[rho(t_i) (H(t_i+1) - H(t_i))],   dQ_i = dU_i - dW_i,

so U(t) - U(0) = W(t) + Q(t) holds by construction. A final projective
energy measurement closes every trajectory and its energy jump is booked as
heat, giving W + Q = eps_m(tau) - eps_n(0).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import kernels
from .homodyne import MeasurementModel
from .protocol import ProtocolParams
from .qstate import (
    eigensystem,
    gibbs_populations,
    log_partition,
    propagator,
    pure_to_dm,
    require_hermitian,
    time_reverse,
)
from .rng import trajectory_rng

log = logging.getLogger(__name__)


class IntegratorError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} at step {step}")
        self.step = step


class Integrator(enum.Enum):
    POVM_UPDATE = "povm"
    BLOCH_SME = "sme"


@dataclass(frozen=True)
class TrajectoryConfig:
    """Numerics of one trajectory.

    ``keep_record`` retains the full-resolution current record and per-step
    log weights (needed for ``backward_log_probability``); ``store_states``
    keeps the decimated conditioned states.
    """

    dt: float
    gamma1: float = 0.0
    integrator: Integrator = Integrator.POVM_UPDATE
    seed: int = 0
    record_stride: int = 1
    keep_record: bool = True
    store_states: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.gamma1 < 0:
            raise ValueError("gamma1 must be non-negative")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        object.__setattr__(self, "integrator", Integrator(self.integrator))

    @property
    def path_probabilities(self) -> bool:
        return self.gamma1 == 0 and self.integrator is Integrator.POVM_UPDATE


@dataclass(frozen=True)
class StepGrid:
    """Piecewise-constant protocol sampled on t_i = i*dt, i = 0..N.

    ``hams[index[i]]`` is the Hamiltonian on [t_i, t_i+1) and ``props`` holds
    the matching exact single-step propagators.
    """

    dt: float
    hams: np.ndarray
    props: np.ndarray
    index: np.ndarray

    @classmethod
    def from_hamiltonians(cls, hams, index, dt: float) -> "StepGrid":
        hams = np.ascontiguousarray(hams, dtype=complex)
        for h in hams:
            require_hermitian(h, "H")
        props = np.ascontiguousarray([propagator(h, dt) for h in hams])
        index = np.ascontiguousarray(index, dtype=np.int64)
        return cls(dt, hams, props, index)

    @property
    def n_steps(self) -> int:
        return len(self.index) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def hamiltonian(self, i: int) -> np.ndarray:
        return self.hams[self.index[i]]

    def delta_free_energy(self, beta: float) -> np.ndarray:
        f = np.array([-log_partition(h, beta) / beta for h in self.hams])
        return f[self.index] - f[self.index[0]]

    @property
    def quench_index(self) -> int | None:
        """First grid index whose Hamiltonian differs from its predecessor."""
        jumps = np.flatnonzero(np.diff(self.index))
        return int(jumps[0]) + 1 if len(jumps) else None


def n_grid_steps(tau: float, dt: float) -> int:
    n = round(tau / dt)
    if n < 1 or abs(n * dt - tau) > 1e-9 * tau:
        raise ValueError(f"grid mismatch: tau = {tau} is not a multiple of dt = {dt}")
    return n


def discretize(p: ProtocolParams, dt: float) -> StepGrid:
    """Quench protocol on the dt grid, quench time snapped to the nearest point."""
    n = n_grid_steps(p.tau, dt)
    if n < 2:
        raise ValueError("the quench protocol needs at least two steps")
    k_q = min(max(round(p.quench_time / dt), 1), n - 1)
    index = (np.arange(n + 1) >= k_q).astype(np.int64)
    return StepGrid.from_hamiltonians([p.h_before, p.h_after], index, dt)


@dataclass(frozen=True)
class BlochVector:
    rho00: float
    re01: float
    im01: float

    @classmethod
    def from_dm(cls, rho) -> "BlochVector":
        rho = np.asarray(rho)
        return cls(float(rho[0, 0].real), float(rho[0, 1].real), float(rho[0, 1].imag))

    def to_dm(self) -> np.ndarray:
        c = complex(self.re01, self.im01)
        return np.array([[self.rho00, c], [c.conjugate(), 1 - self.rho00]])


@dataclass(frozen=True)
class TrajectoryRecord:
    """One realization; series are decimated by ``record_stride``.

    Energy labels n, m are ascending (0 = lower level of H(0) resp. H(tau)).
    ``currents[0]`` is NaN: the first current belongs to the step ending at
    t_1. ``sigma`` is the pre-projection series; ``sigma_final`` includes the
    final collapse.
    """

    times: np.ndarray
    currents: np.ndarray
    energy: np.ndarray
    work: np.ndarray
    heat: np.ndarray
    sigma: np.ndarray
    n: int
    m: int
    eps_n: float
    eps_m: float
    beta: float
    delta_f: float
    work_total: float
    heat_total: float
    sigma_final: float
    quench_index: int | None
    quench_state: np.ndarray | None
    dt: float
    n_steps: int
    record_stride: int
    gamma1: float = 0.0
    log_pF: float | None = None
    log_pB: float | None = None
    clamps: int = 0
    record: np.ndarray | None = None
    step_log_weights: np.ndarray | None = None
    states: np.ndarray | None = None
    traj_id: int = 0

    @property
    def delta_u(self) -> float:
        return self.eps_m - self.eps_n


class Projection(NamedTuple):
    m: int
    heat: float
    state: np.ndarray
    log_prob: float


class ConditionedPath(NamedTuple):
    states: np.ndarray
    currents: np.ndarray
    energy: np.ndarray
    work: np.ndarray
    heat: np.ndarray
    step_log_weights: np.ndarray
    clamps: int


def sample_initial_eigenstate(p: ProtocolParams, beta: float, rng):
    """Projective energy measurement on the Gibbs state of H(0)."""
    es = eigensystem(p.h_before)
    pops = gibbs_populations(es.energies, beta)
    n = 0 if rng.random() < pops[0] else 1
    return n, es.vectors[n].copy()


def step_sme(b: BlochVector, h, gamma_d: float, current: float, dt: float) -> BlochVector:
    """One explicit step of the homodyne Bloch SME.

    The sigma_z-diagonal precession of the coherence is applied as an exact
    phase (integrating factor) and the drive terms are integrated against it
    (exponential Euler), so steps longer than the precession period do not
    alias; innovation and dephasing terms are explicit Euler. States pushed outside the Bloch ball are rescaled onto it.
    """
    h = require_hermitian(h, "H")
    a = b.rho00
    c = complex(b.re01, b.im01)
    sg = math.sqrt(gamma_d)
    z = 2 * a - 1
    innov = current - sg * z
    h01 = h[0, 1]
    phi = (h[0, 0].real - h[1, 1].real) * dt
    half = 0.5 * phi
    # drive terms see the coherence averaged over the step's precession
    avg = complex(math.cos(half), -math.sin(half)) * (math.sin(half) / half if half else 1.0)
    da = 2 * (h01 * (c * avg).conjugate()).imag + 2 * sg * a * (1 - a) * innov
    dc = -sg * z * innov * c - 0.5 * gamma_d * c
    kick = -1j * h01 * (1 - 2 * a) * avg * dt
    a = a + da * dt
    c = complex(math.cos(phi), -math.sin(phi)) * (c + dc * dt) + kick
    if not (math.isfinite(a) and math.isfinite(abs(c))):
        raise IntegratorError("non-finite Bloch SME state")
    rz = 2 * a - 1
    r2 = rz * rz + 4 * abs(c) ** 2
    if r2 > 1:
        log.warning("Bloch SME step left the Bloch ball (|r|^2 = %.6g); clamping", r2)
        s = 1 / math.sqrt(r2)
        a = 0.5 * (1 + rz * s)
        c = c * s
    return BlochVector(a, c.real, c.imag)


def lindblad_step(rho, h, gamma1: float, dt: float) -> np.ndarray:
    """Exact unitary step followed by the exact amplitude-damping channel.

    The damping map (populations relax by exp(-gamma1 dt), coherences by its
    square root) is completely positive, so the composition stays a valid
    state; the splitting itself is first order in dt.
    """
    if gamma1 < 0:
        raise ValueError("gamma1 must be non-negative")
    u = propagator(require_hermitian(h, "H"), dt)
    rho = u @ np.asarray(rho, dtype=complex) @ u.conj().T
    if gamma1 > 0:
        keep = math.exp(-gamma1 * dt)
        lost = -math.expm1(-gamma1 * dt)
        rho = np.array([[rho[0, 0] * keep, rho[0, 1] * math.sqrt(keep)],
                        [rho[1, 0] * math.sqrt(keep), rho[1, 1] + lost * rho[0, 0]]])
        if rho[0, 0].real < -1e-12 or rho[1, 1].real < -1e-12 or np.linalg.det(rho).real < -1e-10:
            raise IntegratorError("dissipator step produced a non-positive state")
    return rho


def final_projection(state, h_tau, rng) -> Projection:
    """Projective measurement of H(tau); the energy jump is returned as heat."""
    es = eigensystem(h_tau)
    state = np.asarray(state, dtype=complex)
    rho = pure_to_dm(state) if state.ndim == 1 else state
    probs = np.array([np.vdot(v, rho @ v).real for v in es.vectors])
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    m = 0 if rng.random() < probs[0] else 1
    u_before = float(np.trace(rho @ h_tau).real)
    eps_m = es.energies[m]
    lp = math.log(probs[m]) if probs[m] > 0 else -math.inf
    return Projection(m, float(eps_m - u_before), es.vectors[m].copy(), lp)


def evolve_conditioned(rho0, grid: StepGrid, m: MeasurementModel, rng=None,
                       gamma1: float = 0.0,
                       integrator: Integrator = Integrator.POVM_UPDATE,
                       currents=None, backend=None) -> ConditionedPath:
    """Density-matrix trajectory on ``grid`` without endpoint measurements.

    With ``currents`` (length N+1, entry 0 ignored) the given record is
    replayed instead of sampled, which lets different integrators be driven
    by a common record.
    """
    k = backend or kernels.active
    n = grid.n_steps
    replay = currents is not None
    if replay:
        cur = np.array(currents, dtype=float)
        if cur.shape != (n + 1,):
            raise ValueError(f"current record must have length {n + 1}")
        uniforms = normals = np.empty(0)
    else:
        cur = np.empty(n + 1)
        uniforms = rng.random(n)
        normals = rng.standard_normal(n)
    states = np.zeros((n + 1, 2, 2), dtype=complex)
    energy, work, heat = np.empty(n + 1), np.empty(n + 1), np.empty(n + 1)
    logw = np.empty(n)
    clamps = np.zeros(1, dtype=np.int64)
    bad = k.forward_mixed(np.ascontiguousarray(rho0, dtype=complex), grid.hams, grid.props,
                          grid.index, m.sqrt_gamma, grid.dt, float(gamma1),
                          Integrator(integrator) is Integrator.BLOCH_SME, replay,
                          uniforms, normals, states, energy, work, heat, cur, logw, clamps)
    if bad >= 0:
        raise IntegratorError("density-matrix integration failed", bad)
    if clamps[0]:
        log.warning("Bloch SME clamped %d states onto the Bloch ball", clamps[0])
    return ConditionedPath(states, cur, energy, work, heat, logw, int(clamps[0]))


def _check_grid(m: MeasurementModel, c: TrajectoryConfig):
    if abs(m.dt - c.dt) > 1e-12 * c.dt:
        raise ValueError(f"grid mismatch: measurement dt {m.dt} != trajectory dt {c.dt}")


def run_forward(p: ProtocolParams, m: MeasurementModel, c: TrajectoryConfig, beta: float,
                rng=None, *, backward: bool = True, traj_id: int = 0,
                grid: StepGrid | None = None, backend=None) -> TrajectoryRecord:
    """Simulate one forward trajectory and close it with a final projection.

    Pure states are evolved (and log p_F accumulated) when gamma1 = 0 with
    the POVM integrator; otherwise the density matrix is evolved and path
    probabilities are left as None. With ``backward`` the backward path
    probability is evaluated before the full record is discarded.
    """
    _check_grid(m, c)
    k = backend or kernels.active
    grid = grid or discretize(p, c.dt)
    n = grid.n_steps
    if n % c.record_stride:
        raise ValueError(f"record_stride {c.record_stride} does not divide {n} steps")
    if rng is None:
        rng = trajectory_rng(c.seed, traj_id)

    n0, psi0 = sample_initial_eigenstate(p, beta, rng)
    uniforms = rng.random(n)
    normals = rng.standard_normal(n)
    energy, work, heat = np.empty(n + 1), np.empty(n + 1), np.empty(n + 1)
    current = np.empty(n + 1)
    logw = np.empty(n)
    clamps = 0
    if c.path_probabilities:
        states = np.empty((n + 1, 2), dtype=complex)
        bad = k.forward_pure(psi0, grid.hams, grid.props, grid.index, m.sqrt_gamma, c.dt,
                             uniforms, normals, states, energy, work, heat, current, logw)
    else:
        states = np.zeros((n + 1, 2, 2), dtype=complex)
        cl = np.zeros(1, dtype=np.int64)
        bad = k.forward_mixed(pure_to_dm(psi0), grid.hams, grid.props, grid.index,
                              m.sqrt_gamma, c.dt, c.gamma1,
                              c.integrator is Integrator.BLOCH_SME, False,
                              uniforms, normals, states, energy, work, heat, current,
                              logw, cl)
        clamps = int(cl[0])
        if clamps:
            log.warning("trajectory %d: %d Bloch-ball clamps", traj_id, clamps)
    if bad >= 0:
        raise IntegratorError(f"trajectory {traj_id} failed", bad)

    es0 = eigensystem(grid.hamiltonian(0))
    pops0 = gibbs_populations(es0.energies, beta)
    h_tau = grid.hamiltonian(n)
    proj = final_projection(states[n], h_tau, rng)

    delta_f = grid.delta_free_energy(beta)
    sigma = beta * (work + heat - delta_f)
    heat_total = heat[n] + proj.heat
    sigma_final = beta * (work[n] + heat_total - delta_f[n])
    log_pf = None
    if c.path_probabilities:
        log_pf = math.log(pops0[n0]) + math.fsum(logw) + proj.log_prob

    kq = grid.quench_index
    qstate = None
    if kq is not None:
        s = states[kq - 1]
        qstate = pure_to_dm(s) if s.ndim == 1 else s.copy()

    sel = slice(None, None, c.record_stride)
    rec = TrajectoryRecord(
        times=grid.times[sel], currents=current[sel], energy=energy[sel],
        work=work[sel], heat=heat[sel], sigma=sigma[sel],
        n=n0, m=proj.m, eps_n=float(es0.energies[n0]),
        eps_m=float(eigensystem(h_tau).energies[proj.m]),
        beta=beta, delta_f=float(delta_f[n]), work_total=float(work[n]),
        heat_total=float(heat_total), sigma_final=float(sigma_final),
        quench_index=kq, quench_state=qstate, dt=c.dt, n_steps=n,
        record_stride=c.record_stride, gamma1=c.gamma1, log_pF=log_pf, clamps=clamps,
        record=current, step_log_weights=logw,
        states=states[sel].copy() if c.store_states else None, traj_id=traj_id,
    )
    if backward and c.path_probabilities:
        rec = replace(rec, log_pB=backward_log_probability(rec, p, m, beta, grid=grid,
                                                           backend=k))
    if not c.keep_record:
        rec = replace(rec, record=None, step_log_weights=None)
    return rec


def backward_log_probability(rec: TrajectoryRecord, p: ProtocolParams, m: MeasurementModel,
                             beta: float, *, grid: StepGrid | None = None,
                             backend=None) -> float:
    """log p_B of the time-reversed trajectory, built step by step.

    Starts from Theta|m> with its Gibbs weight at tau, then for the reversed
    record applies the Hermitian POVM element followed by
    Theta U_i^dag Theta^dag = U_i^T, and finally projects on Theta|n>.
    """
    if rec.record is None:
        raise ValueError("record was not kept; rerun with keep_record=True")
    if rec.gamma1 != 0:
        raise ValueError("backward path probability requires gamma1 = 0")
    k = backend or kernels.active
    grid = grid or discretize(p, m.dt)
    n = grid.n_steps
    if len(rec.record) != n + 1:
        raise ValueError(
            f"record/protocol length mismatch: {len(rec.record)} samples for {n} steps")
    es_tau = eigensystem(grid.hamiltonian(n))
    pops_tau = gibbs_populations(es_tau.energies, beta)
    es0 = eigensystem(grid.hamiltonian(0))
    psi_start = np.ascontiguousarray(time_reverse(es_tau.vectors[rec.m]))
    logw = np.empty(n)
    psi_out = np.empty(2, dtype=complex)
    bad = k.backward_pure(psi_start, grid.props, grid.index, m.sqrt_gamma, grid.dt,
                          np.ascontiguousarray(rec.record, dtype=float), logw, psi_out)
    if bad >= 0:
        raise IntegratorError("backward chain underflow", bad)
    overlap = abs(np.vdot(time_reverse(es0.vectors[rec.n]), psi_out)) ** 2
    lp_end = math.log(overlap) if overlap > 0 else -math.inf
    return math.log(pops_tau[rec.m]) + math.fsum(logw) + lp_end
