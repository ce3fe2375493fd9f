"""Force protocol for the driven qubit: a simultaneous quench of the qubit
frequency and of the drive amplitude, plus equilibrium free energies."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .qstate import SX, SZ, log_partition

TWO_PI = 2 * math.pi


def mhz(f_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * f_mhz


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class ProtocolParams:
    """Quench protocol; all frequencies angular (rad/us), times in us.

    ``drive_frequency`` is informational only: the drive phase is absorbed in
    the frame where the Hamiltonian is real, so it never enters the dynamics.
    """

    omega0: float
    delta_omega: float
    omega_drive_amp: float
    tau: float = 2.4
    quench_time: float | None = None
    parity: int = 1

    def __post_init__(self):
        if self.quench_time is None:
            object.__setattr__(self, "quench_time", self.tau / 2)
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 < self.quench_time < self.tau:
            raise ValueError(
                f"quench_time must lie strictly inside (0, tau), got {self.quench_time}"
            )
        if self.parity != 1:
            raise ValueError("only time-reversal parity +1 is implemented")

    @classmethod
    def from_mhz(cls, omega0_mhz=4000.0, delta_omega_mhz=400.0, omega_rabi_mhz=1.0,
                 tau=2.4, quench_time=None):
        return cls(mhz(omega0_mhz), mhz(delta_omega_mhz), mhz(omega_rabi_mhz),
                   tau, quench_time)

    @property
    def drive_frequency(self) -> float:
        return self.omega0 + self.delta_omega

    @property
    def h_before(self) -> np.ndarray:
        return 0.5 * self.omega0 * SZ

    @property
    def h_after(self) -> np.ndarray:
        return 0.5 * (self.omega0 + self.delta_omega) * SZ + self.omega_drive_amp * SX


def transmon_protocol(**overrides) -> ProtocolParams:
    """Transmon parameters: omega0/2pi = 4 GHz, quench by 400 MHz, 1 MHz drive."""
    return ProtocolParams.from_mhz(**overrides)


def hamiltonian_at(p: ProtocolParams, t: float, direction: Direction = Direction.FORWARD):
    if not 0 <= t <= p.tau:
        raise ValueError(f"t = {t} outside [0, {p.tau}]")
    if direction is Direction.BACKWARD:
        return hamiltonian_at(p, p.tau - t, Direction.FORWARD)
    return p.h_before if t < p.quench_time else p.h_after


def free_energy(p: ProtocolParams, t: float, beta: float) -> float:
    """F(lambda_t) = -log Z_t / beta."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return -log_partition(hamiltonian_at(p, t), beta) / beta


def delta_free_energy(p: ProtocolParams, t: float, beta: float) -> float:
    """F(lambda_t) - F(lambda_0); exactly zero before the quench."""
    if t < p.quench_time:
        return 0.0
    return free_energy(p, t, beta) - free_energy(p, 0.0, beta)
