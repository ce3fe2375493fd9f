"""Homodyne readout of the qubit through a dispersively coupled resonator.

Basis index j carries sigma_z eigenvalue s_j = (-1)**j. A current sample x is
the homodyne signal averaged over one step dt; conditioned on level j it is
Gaussian with mean s_j*sqrt(gamma_d) and standard deviation 1/sqrt(dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIGNS = (1.0, -1.0)
DEFAULT_RATE_CAP = 0.05


class MeasurementUnderflowError(FloatingPointError):
    """The observed current has zero likelihood under the current state."""


def measurement_rate(chi: float, kappa: float, nbar: float) -> float:
    """Measurement rate 16 chi^2 nbar / kappa."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if nbar < 0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")
    return 16.0 * chi**2 * nbar / kappa


def derive_chi(g: float, detuning: float) -> float:
    """Dispersive shift g^2 / Delta."""
    return g**2 / detuning


def measurement_time(gamma_d: float) -> float:
    return 1.0 / (2.0 * gamma_d)


@dataclass(frozen=True)
class MeasurementModel:
    """Weak continuous sigma_z measurement, rates in rad/us and dt in us."""

    chi: float
    kappa: float
    nbar: float
    dt: float
    rate_cap: float = DEFAULT_RATE_CAP
    gamma_d: float = field(init=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        gamma = measurement_rate(self.chi, self.kappa, self.nbar)
        object.__setattr__(self, "gamma_d", gamma)
        if gamma * self.dt > self.rate_cap:
            raise ValueError(
                f"dt*gamma_d = {gamma * self.dt:.4g} exceeds the weak-measurement "
                f"cap {self.rate_cap}; use dt <= {self.rate_cap / gamma:.4g} us"
            )

    @classmethod
    def from_rate(cls, gamma_d: float, dt: float, rate_cap: float = DEFAULT_RATE_CAP):
        """Model with a prescribed gamma_d (kappa = nbar = 1)."""
        return cls(math.sqrt(gamma_d / 16.0), 1.0, 1.0, dt, rate_cap)

    @property
    def sqrt_gamma(self) -> float:
        return math.sqrt(self.gamma_d)

    @property
    def log_norm(self) -> float:
        return 0.5 * math.log(self.dt / (2 * math.pi))


def current_pdfs(m: MeasurementModel, x):
    """Conditional densities (P_0(x), P_1(x)), each normalized over x."""
    x = np.asarray(x, dtype=float)
    norm = math.sqrt(m.dt / (2 * math.pi))
    sg = m.sqrt_gamma
    return (norm * np.exp(-0.5 * m.dt * (x - sg) ** 2),
            norm * np.exp(-0.5 * m.dt * (x + sg) ** 2))


def _populations(state) -> tuple[float, float]:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return abs(state[0]) ** 2, abs(state[1]) ** 2
    return state[0, 0].real, state[1, 1].real


def outcome_density(m: MeasurementModel, rho, x):
    """Born density of the current, rho_00 P_0(x) + rho_11 P_1(x)."""
    p0, p1 = _populations(rho)
    f0, f1 = current_pdfs(m, x)
    return p0 * f0 + p1 * f1


def sample_current(m: MeasurementModel, rho, rng: np.random.Generator) -> float:
    p0, _ = _populations(rho)
    j = 0 if rng.random() < p0 else 1
    return SIGNS[j] * m.sqrt_gamma + rng.standard_normal() / math.sqrt(m.dt)


def povm_element(m: MeasurementModel, x: float) -> np.ndarray:
    f0, f1 = current_pdfs(m, x)
    return np.diag([math.sqrt(f0), math.sqrt(f1)]).astype(complex)


def scaled_likelihoods(m: MeasurementModel, x: float) -> tuple[float, float, float]:
    """Return (q0, q1, log_scale) with P_j(x) = q_j * exp(log_scale) and max(q) = 1."""
    sg = m.sqrt_gamma
    e0 = -0.5 * m.dt * (x - sg) ** 2
    e1 = -0.5 * m.dt * (x + sg) ** 2
    em = max(e0, e1)
    return math.exp(e0 - em), math.exp(e1 - em), m.log_norm + em


def measurement_update(state, m: MeasurementModel, x: float):
    """Condition a pure state or density matrix on the current x.

    Returns the normalized post-measurement state and ``log w`` where
    ``w = Tr[M_x rho M_x^dag]`` equals ``outcome_density(m, rho, x)``.
    """
    state = np.asarray(state, dtype=complex)
    p0, p1 = _populations(state)
    q0, q1, log_scale = scaled_likelihoods(m, x)
    w = p0 * q0 + p1 * q1
    if not w > 0:
        raise MeasurementUnderflowError(f"zero likelihood for current x = {x!r}")
    log_w = log_scale + math.log(w)
    if state.ndim == 1:
        return state * np.sqrt(np.array([q0, q1]) / w), log_w
    out = np.empty((2, 2), dtype=complex)
    out[0, 0] = p0 * q0 / w
    out[1, 1] = p1 * q1 / w
    out[0, 1] = state[0, 1] * math.sqrt(q0 * q1) / w
    out[1, 0] = out[0, 1].conjugate()
    return out, log_w
