"""Ensemble statistics: fluctuation-theorem checks, efficacy, entropy-production
histograms, the efficacy-vs-damping regression and the two-point-measurement
reference for the unmonitored protocol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.cluster.vq import kmeans2

from .protocol import Direction, ProtocolParams, delta_free_energy, hamiltonian_at
from .qstate import eigensystem, gibbs_populations, propagator, time_reverse


@dataclass(frozen=True)
class FtPoint:
    delta_u: float  # Delta U_nm - Delta F
    log_ratio: float  # log p_F - log p_B
    n: int = 0
    m: int = 0


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float


@dataclass(frozen=True)
class FtResult:
    points: list[FtPoint]
    fit: LineFit
    max_residual: float
    binned: dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    time: float
    cluster_centers: np.ndarray


@dataclass(frozen=True)
class EfficacyResult:
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class RegressionResult:
    intercept: float
    slope: float
    slope_stderr: float
    p_value: float
    residual_std: float


@dataclass(frozen=True)
class TpmDistribution:
    """Two-point-measurement statistics; arrays are indexed [m, n]."""

    prob: np.ndarray
    work: np.ndarray
    prob_backward: np.ndarray
    beta: float
    delta_f: float

    @property
    def crooks_residual(self) -> np.ndarray:
        """log p_F(W) - log p_B(-W) - beta (W - Delta F) per transition."""
        return (np.log(self.prob) - np.log(self.prob_backward.T)
                - self.beta * (self.work - self.delta_f))

    @property
    def jarzynski_sum(self) -> float:
        return float(np.sum(self.prob * np.exp(-self.beta * (self.work - self.delta_f))))

    @property
    def sigma_values(self) -> np.ndarray:
        return self.beta * (self.work - self.delta_f)


def fit_line(x, y) -> LineFit:
    """Ordinary least squares y = intercept + slope*x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0:
        raise ValueError("no points to fit")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        return LineFit(math.nan, math.nan, math.nan)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    dof = len(x) - 2
    if dof > 0:
        resid = y - intercept - slope * x
        se = math.sqrt(float(np.sum(resid**2)) / dof / sxx)
    else:
        se = math.nan
    return LineFit(slope, intercept, se)


def detailed_ft_points(records, beta: float, delta_f: float) -> FtResult:
    if not records:
        raise ValueError("no records")
    points = []
    for r in records:
        if r.log_pF is None or r.log_pB is None:
            raise ValueError(f"record {r.traj_id} has no path probabilities")
        points.append(FtPoint(r.delta_u - delta_f, r.log_pF - r.log_pB, r.n, r.m))
    x = np.array([pt.delta_u for pt in points])
    y = np.array([pt.log_ratio for pt in points])
    binned = {float(v): float(y[x == v].mean()) for v in np.unique(x)}
    return FtResult(points, fit_line(x, y), float(np.max(np.abs(y - beta * x))), binned)


def _sample_stats(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        raise ValueError("no samples")
    stderr = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
    return float(v.mean()), stderr


def efficacy(records, beta: float | None = None, delta_f: float | None = None) -> EfficacyResult:
    """<exp(-Sigma)> over final (endpoint-projected) entropy productions.

    ``beta`` and ``delta_f`` recompute Sigma from the endpoint energies; by
    default the stored ``sigma_final`` is used.
    """
    if not records:
        raise ValueError("no records")
    if beta is None:
        sig = np.array([r.sigma_final for r in records])
    else:
        df = records[0].delta_f if delta_f is None else delta_f
        sig = np.array([beta * (r.work_total + r.heat_total - df) for r in records])
    mean, se = _sample_stats(np.exp(-sig))
    return EfficacyResult(mean, se, len(records))


def _time_index(record, t: float) -> int:
    i = int(np.argmin(np.abs(record.times - t)))
    if abs(record.times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not on the record grid")
    return i


def sigma_at(records, t: float) -> np.ndarray:
    return np.array([r.sigma[_time_index(r, t)] for r in records])


def entropy_samples(records, t: float) -> np.ndarray:
    """Sigma(t) per trajectory; at the protocol end the projected Sigma_final."""
    tau = records[0].n_steps * records[0].dt
    if abs(t - tau) <= 1e-9 * tau:
        return np.array([r.sigma_final for r in records])
    return sigma_at(records, t)


def kmeans_1d(values, k: int = 4, seed: int = 0) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    k = min(k, len(np.unique(v)))
    if k <= 1:
        return np.array([v.mean()])
    centers, _ = kmeans2(v.reshape(-1, 1), k, minit="++", seed=seed)
    return np.sort(centers.ravel())


def entropy_histogram(records, t: float, bins=40) -> Histogram:
    values = entropy_samples(records, t)
    counts, edges = np.histogram(values, bins=bins)
    return Histogram(edges, counts, len(values), t, kmeans_1d(values))


def fraction_near(values, peaks, rel_window: float = 0.05) -> float:
    """Fraction of values within rel_window * (smallest peak spacing) of a peak."""
    peaks = np.sort(np.asarray(peaks, dtype=float))
    half = rel_window * float(np.min(np.diff(peaks)))
    d = np.min(np.abs(np.asarray(values)[:, None] - peaks[None, :]), axis=1)
    return float(np.mean(d <= half))


def count_modes(values, min_mass: float = 0.05, separation: float = 3.0) -> int:
    """Number of well-separated clusters holding at least ``min_mass`` each.

    Adjacent k-means clusters merge unless their centers are further apart
    than ``separation`` times the sum of their spreads.
    """
    v = np.sort(np.asarray(values, dtype=float))
    centers = kmeans_1d(v)
    labels = np.argmin(np.abs(v[:, None] - centers[None, :]), axis=1)
    groups = [v[labels == j] for j in range(len(centers)) if np.any(labels == j)]
    merged = [groups[0]]
    for g in groups[1:]:
        prev = merged[-1]
        gap = g.mean() - prev.mean()
        if gap > separation * (prev.std() + g.std()) and gap > 0:
            merged.append(g)
        else:
            merged[-1] = np.concatenate([prev, g])
    return sum(len(g) >= min_mass * len(v) for g in merged)


def mean_entropy_curve(records):
    """Pointwise mean and standard error of Sigma(t); returns (times, mean, stderr)."""
    if not records:
        raise ValueError("no records")
    times = records[0].times
    for r in records:
        if len(r.times) != len(times) or not np.allclose(r.times, times, rtol=0, atol=1e-12):
            raise ValueError("records are not on a common time grid")
    s = np.array([r.sigma for r in records])
    se = s.std(axis=0, ddof=1) / math.sqrt(len(s)) if len(s) > 1 else np.zeros(len(times))
    return times, s.mean(axis=0), se


def efficacy_regression(sweep: Sequence[tuple[float, EfficacyResult]]) -> RegressionResult:
    """Weighted least squares efficacy = a + b*x with weights 1/stderr^2.

    The slope p-value is the two-sided t-test with n - 2 degrees of freedom,
    covariance scaled by the weighted residual variance.
    """
    if len(sweep) < 3:
        raise ValueError("need at least three sweep points")
    x = np.array([s[0] for s in sweep], dtype=float)
    y = np.array([s[1].mean for s in sweep], dtype=float)
    se = np.array([s[1].stderr for s in sweep], dtype=float)
    if np.any(se <= 0):
        raise ValueError("every sweep point needs a positive standard error")
    w = 1.0 / se**2
    X = np.column_stack([np.ones_like(x), x])
    xtwx = X.T @ (w[:, None] * X)
    coef = np.linalg.solve(xtwx, X.T @ (w * y))
    resid = y - X @ coef
    dof = len(x) - 2
    s2 = float(np.sum(w * resid**2) / dof)
    cov = s2 * np.linalg.inv(xtwx)
    b_se = math.sqrt(max(cov[1, 1], 0.0))
    if b_se > 0:
        p = float(2 * stats.t.sf(abs(coef[1]) / b_se, dof))
    else:
        p = 1.0 if coef[1] == 0 else 0.0
    return RegressionResult(float(coef[0]), float(coef[1]), b_se, p, math.sqrt(s2))


def _forward_unitary(p: ProtocolParams) -> np.ndarray:
    u = propagator(p.h_before, p.quench_time)
    return propagator(p.h_after, p.tau - p.quench_time) @ u


def tpm_reference(p: ProtocolParams, beta: float) -> TpmDistribution:
    """Two-point-measurement work statistics of the unmonitored protocol.

    Forward: Gibbs-sampled eigenstate n of H(0), unitary evolution, projection
    on eigenstate m of H(tau). Backward: Theta-reversed Gibbs state of H(tau)
    evolved under the time-reversed Hamiltonians of the reversed protocol.
    """
    es0 = eigensystem(hamiltonian_at(p, 0.0))
    es_tau = eigensystem(hamiltonian_at(p, p.tau))
    p0 = gibbs_populations(es0.energies, beta)
    p_tau = gibbs_populations(es_tau.energies, beta)
    u_f = _forward_unitary(p)
    # Theta H Theta^dag for each backward segment, i.e. conj(H)
    u_b = np.eye(2, dtype=complex)
    for t0, t1 in [(0.0, p.tau - p.quench_time), (p.tau - p.quench_time, p.tau)]:
        h = time_reverse(hamiltonian_at(p, 0.5 * (t0 + t1), Direction.BACKWARD))
        u_b = propagator(h, t1 - t0) @ u_b
    prob = np.empty((2, 2))
    prob_b = np.empty((2, 2))
    work = np.empty((2, 2))
    for m in range(2):
        for n in range(2):
            amp = np.vdot(es_tau.vectors[m], u_f @ es0.vectors[n])
            prob[m, n] = abs(amp) ** 2 * p0[n]
            work[m, n] = es_tau.energies[m] - es0.energies[n]
            # backward: start Theta|m(tau)>, end on Theta|n(0)>; indexed [n, m]
            amp_b = np.vdot(time_reverse(es0.vectors[n]), u_b @ time_reverse(es_tau.vectors[m]))
            prob_b[n, m] = abs(amp_b) ** 2 * p_tau[m]
    return TpmDistribution(prob, work, prob_b, beta, delta_free_energy(p, p.tau, beta))
