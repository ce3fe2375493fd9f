"""Exact two-level linear algebra.

Operators are plain ``(2, 2)`` complex arrays and pure states are length-2
complex arrays, both in the sigma_z basis with index 0 <-> sigma_z = +1.
Everything here is closed form; nothing calls a general eigensolver or
``expm``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_- lowers sigma_z = +1 (index 0) to sigma_z = -1 (index 1)
SM = np.array([[0, 0], [1, 0]], dtype=complex)
SP = SM.conj().T

HERMITIAN_ATOL = 1e-12


class ContractViolation(ValueError):
    """An operator or state does not satisfy a required precondition."""


class Eigensystem(NamedTuple):
    """Eigendecomposition of a 2x2 Hermitian operator.

    Energy labels are ascending: label 0 is ``eps_minus`` (lower level) and
    label 1 is ``eps_plus``. ``vectors[k]`` is the eigenvector of label k with
    its first non-negligible amplitude real and positive.
    """

    eps_minus: float
    eps_plus: float
    vectors: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return np.array([self.eps_minus, self.eps_plus])

    def projector(self, k: int) -> np.ndarray:
        v = self.vectors[k]
        return np.outer(v, v.conj())


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ContractViolation(f"expected a 2x2 operator, got shape {a.shape}")
    return a


def is_hermitian(a, atol: float = HERMITIAN_ATOL) -> bool:
    a = as_operator(a)
    scale = max(1.0, float(np.max(np.abs(a))))
    return bool(np.all(np.abs(a - a.conj().T) <= atol * scale))


def require_hermitian(a, name: str = "operator") -> np.ndarray:
    a = as_operator(a)
    if not is_hermitian(a):
        raise ContractViolation(f"{name} is not Hermitian")
    return a


def pauli_components(h) -> tuple[float, float, float, float]:
    """Return (h0, hx, hy, hz) with ``h = h0*1 + hx*sx + hy*sy + hz*sz``."""
    h = as_operator(h)
    h0 = 0.5 * (h[0, 0] + h[1, 1]).real
    hz = 0.5 * (h[0, 0] - h[1, 1]).real
    hx = 0.5 * (h[0, 1] + h[1, 0]).real
    hy = 0.5 * (h[1, 0] - h[0, 1]).imag
    return h0, hx, hy, hz


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = 0 if abs(v[0]) > 1e-14 else 1
    return v * (abs(v[k]) / v[k])


def eigensystem(h) -> Eigensystem:
    """Closed-form eigendecomposition of a Hermitian 2x2 operator.

    The null vectors of ``H - eps`` are taken from whichever row avoids the
    ``r - |hz|`` cancellation, so nearly diagonal operators keep full relative
    accuracy in their small eigenvector components.
    """
    h = require_hermitian(h, "H")
    h0, hx, hy, hz = pauli_components(h)
    r = math.hypot(hx, hy, hz)
    if r == 0.0:
        return Eigensystem(h0, h0, np.array([[0, 1], [1, 0]], dtype=complex))
    # eigenvectors are scale invariant; work with unit-length components
    nz = hz / r
    off = complex(hx / r, hy / r)  # h[1, 0] / r
    if nz >= 0:
        v_plus = np.array([1 + nz, off])
        v_minus = np.array([off.conjugate(), -(1 + nz)])
    else:
        v_plus = np.array([off.conjugate(), 1 - nz])
        v_minus = np.array([-(1 - nz), off])
    vectors = np.array([_fix_phase(v_minus), _fix_phase(v_plus)], dtype=complex)
    return Eigensystem(h0 - r, h0 + r, vectors)


def gibbs_populations(energies, beta: float) -> np.ndarray:
    """Boltzmann weights of ``energies`` at inverse temperature ``beta``.

    ``beta = inf`` gives the zero-temperature limit (all weight on the lowest
    level, split evenly on exact degeneracy).
    """
    e = np.asarray(energies, dtype=float)
    if math.isinf(beta):
        mask = e == e.min()
        return mask / mask.sum()
    a = -beta * e
    a = a - a.max()
    w = np.exp(a)
    return w / w.sum()


def log_partition(h, beta: float) -> float:
    """``log Tr exp(-beta H)`` evaluated without overflow."""
    es = eigensystem(h)
    a = -beta * es.energies
    amax = a.max()
    return float(amax + math.log(np.exp(a - amax).sum()))


def gibbs_state(h, beta: float) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Z``, built in the eigenbasis of H."""
    if not (beta >= 0 and math.isfinite(beta)):
        raise ContractViolation(f"beta must be finite and >= 0, got {beta}")
    es = eigensystem(h)
    p = gibbs_populations(es.energies, beta)
    return sum(p[k] * es.projector(k) for k in range(2))


def propagator(h, dt: float) -> np.ndarray:
    """Exact ``exp(-i H dt)`` from the Pauli decomposition of H."""
    h0, hx, hy, hz = pauli_components(h)
    r = math.hypot(hx, hy, hz)
    phase = complex(math.cos(h0 * dt), -math.sin(h0 * dt))
    c = math.cos(r * dt)
    # sin(r dt)/r, finite as r -> 0
    s = math.sin(r * dt) / r if r > 0 else dt
    u = np.array(
        [
            [c - 1j * s * hz, -1j * s * complex(hx, -hy)],
            [-1j * s * complex(hx, hy), c + 1j * s * hz],
        ]
    )
    return phase * u


def unitary_step(state, h, dt: float) -> np.ndarray:
    """Evolve a pure state (shape (2,)) or density matrix (shape (2, 2))."""
    require_hermitian(h, "H")
    u = propagator(h, dt)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return u @ state
    return u @ state @ u.conj().T


def expectation(rho, a) -> float:
    rho = as_operator(rho)
    a = require_hermitian(a, "observable")
    return float(np.trace(rho @ a).real)


def time_reverse(obj) -> np.ndarray:
    """Antiunitary time reversal, complex conjugation in the sigma_z basis."""
    return np.conj(np.asarray(obj, dtype=complex))


def pure_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def bloch_vector(rho) -> np.ndarray:
    rho = as_operator(rho)
    return np.array(
        [2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real]
    )


def from_bloch(r) -> np.ndarray:
    x, y, z = r
    return 0.5 * (I2 + x * SX + y * SY + z * SZ)


def trace_distance(rho, sigma) -> float:
    d = as_operator(rho) - as_operator(sigma)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


def check_density_matrix(rho, trace_tol: float = 1e-10) -> np.ndarray:
    """Raise ContractViolation unless ``rho`` is a valid density matrix."""
    rho = require_hermitian(rho, "rho")
    if abs(np.trace(rho).real - 1) > trace_tol:
        raise ContractViolation(f"trace {np.trace(rho).real!r} != 1")
    if rho[0, 0].real < -1e-12 or rho[1, 1].real < -1e-12:
        raise ContractViolation("negative population")
    if np.linalg.det(rho).real < -1e-10:
        raise ContractViolation("rho is not positive semidefinite")
    return rho
