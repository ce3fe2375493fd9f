import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqed_thermo.homodyne import (MeasurementModel, MeasurementUnderflowError, current_pdfs,
                                  derive_chi, measurement_rate, measurement_time,
                                  measurement_update, outcome_density, povm_element,
                                  sample_current)
from cqed_thermo.protocol import mhz
from cqed_thermo.qstate import I2, from_bloch, pure_to_dm

GROUND_PROJ = pure_to_dm([0, 1])
UP_PROJ = pure_to_dm([1, 0])


def quad(f, m, half_width=12.0):
    """Plain composite Simpson over +-half_width standard deviations."""
    sd = 1 / math.sqrt(m.dt)
    lo, hi = -m.sqrt_gamma - half_width * sd, m.sqrt_gamma + half_width * sd
    x = np.linspace(lo, hi, 40001)
    y = f(x)
    h = x[1] - x[0]
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def test_measurement_rate_transmon_values():
    gamma = measurement_rate(mhz(-0.5), mhz(10), 0.4)
    assert gamma / (2 * math.pi) == pytest.approx(0.16, rel=1e-14)
    assert measurement_time(gamma) == pytest.approx(0.497, abs=1e-3)


def test_measurement_rate_edge_cases():
    assert measurement_rate(mhz(-0.5), mhz(10), 0.0) == 0.0
    with pytest.raises(ValueError):
        measurement_rate(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        measurement_rate(1.0, 1.0, -0.1)


def test_derive_chi_is_dispersive_shift():
    assert derive_chi(2.0, 40.0) == pytest.approx(0.1)


def test_rate_cap_enforced():
    with pytest.raises(ValueError, match="cap"):
        MeasurementModel(mhz(-0.5), mhz(10), 200, 1e-3)
    MeasurementModel(mhz(-0.5), mhz(10), 200, 9e-5)


def test_outcome_density_eigenstate_is_gaussian(weak_model):
    m = weak_model
    mean = quad(lambda x: x * outcome_density(m, UP_PROJ, x), m)
    var = quad(lambda x: (x - mean) ** 2 * outcome_density(m, UP_PROJ, x), m)
    assert mean == pytest.approx(m.sqrt_gamma, rel=1e-8)
    assert var == pytest.approx(1 / m.dt, rel=1e-8)


def test_outcome_density_mixed_state_symmetric(weak_model):
    m = weak_model
    x = np.linspace(-200, 200, 11)
    assert np.allclose(outcome_density(m, I2 / 2, x), outcome_density(m, I2 / 2, -x))
    assert quad(lambda x: x * outcome_density(m, I2 / 2, x), m) == pytest.approx(0, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_outcome_density_normalized(x, y, z):
    r = np.array([x, y, z])
    if np.linalg.norm(r) > 1:
        r /= np.linalg.norm(r)
    m = MeasurementModel.from_rate(mhz(2.0), 1e-3)
    assert quad(lambda v: outcome_density(m, from_bloch(r), v), m) == pytest.approx(1, abs=1e-8)


def test_sample_current_no_signal():
    m = MeasurementModel(mhz(-0.5), mhz(10), 0.0, 1e-3)
    rng = np.random.default_rng(0)
    xs = np.array([sample_current(m, GROUND_PROJ, rng) for _ in range(20000)])
    assert abs(xs.mean()) < 4 / math.sqrt(m.dt) / math.sqrt(len(xs))
    assert xs.var() == pytest.approx(1 / m.dt, rel=0.03)


def test_sample_current_moments(weak_model):
    m = weak_model
    rng = np.random.default_rng(1)
    n = 10**6
    xs = np.array([sample_current(m, UP_PROJ, rng) for _ in range(n)])
    sd = 1 / math.sqrt(m.dt)
    assert abs(xs.mean() - m.sqrt_gamma) < 4 * sd / math.sqrt(n)
    assert xs.var() == pytest.approx(1 / m.dt, rel=0.01)


def test_sample_current_draw_order(weak_model):
    m = weak_model
    a, b = np.random.default_rng(3), np.random.default_rng(3)
    for _ in range(50):
        x = sample_current(m, UP_PROJ, a)
        b.random()
        assert x == m.sqrt_gamma + b.standard_normal() / math.sqrt(m.dt)


def test_povm_without_information_is_identity_multiple():
    m = MeasurementModel(mhz(-0.5), mhz(10), 0.0, 1e-3)
    for x in (-30.0, 0.0, 12.5):
        e = povm_element(m, x)
        assert e[0, 0] == pytest.approx(e[1, 1], rel=1e-15) and e[0, 1] == 0


def test_povm_symmetric_outcome(weak_model):
    e = povm_element(weak_model, 0.0)
    assert e[0, 0] == e[1, 1]


def test_povm_completeness(weak_model):
    m = weak_model
    f0 = quad(lambda x: current_pdfs(m, x)[0], m)
    f1 = quad(lambda x: current_pdfs(m, x)[1], m)
    assert f0 == pytest.approx(1, abs=1e-8) and f1 == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("proj", [UP_PROJ, GROUND_PROJ])
def test_update_fixes_eigenprojectors(weak_model, proj):
    for x in (-80.0, 0.0, 3.0, 55.0):
        out, _ = measurement_update(proj, weak_model, x)
        assert np.allclose(out, proj, atol=1e-15)


def test_update_equal_superposition(weak_model):
    rho = np.full((2, 2), 0.5, dtype=complex)
    for x in (-40.0, 0.0, 7.0):
        p0, p1 = current_pdfs(weak_model, x)
        out, log_w = measurement_update(rho, weak_model, x)
        assert out[0, 0].real == pytest.approx(p0 / (p0 + p1), rel=1e-13)
        assert math.exp(log_w) == pytest.approx(outcome_density(weak_model, rho, x), rel=1e-13)


def test_update_pure_and_mixed_agree(weak_model):
    psi = np.array([0.6, 0.8j])
    a, la = measurement_update(psi, weak_model, 11.0)
    b, lb = measurement_update(pure_to_dm(psi), weak_model, 11.0)
    assert np.allclose(pure_to_dm(a), b, atol=1e-14) and la == pytest.approx(lb, abs=1e-14)


def test_update_coherence_average(weak_model):
    m = weak_model
    rho = np.array([[0.7, 0.3 - 0.2j], [0.3 + 0.2j, 0.3]])
    xs = np.linspace(-m.sqrt_gamma - 12 / math.sqrt(m.dt), m.sqrt_gamma + 12 / math.sqrt(m.dt),
                     4001)
    vals = np.array([measurement_update(rho, m, x)[0][0, 1] * outcome_density(m, rho, x)
                     for x in xs])
    h = xs[1] - xs[0]
    mean01 = h / 3 * (vals[0] + vals[-1] + 4 * vals[1:-1:2].sum() + 2 * vals[2:-1:2].sum())
    gdt = m.gamma_d * m.dt
    assert mean01 == pytest.approx(rho[0, 1] * (1 - gdt / 2), abs=abs(rho[0, 1]) * gdt**2)
    assert mean01 == pytest.approx(rho[0, 1] * math.exp(-gdt / 2), abs=1e-10)


def test_update_underflow_raises():
    m = MeasurementModel.from_rate(1.0, 1e-3)
    with pytest.raises(MeasurementUnderflowError):
        measurement_update(np.zeros((2, 2)), m, 0.0)


def test_update_extreme_current_stays_finite(weak_model):
    out, log_w = measurement_update(np.full((2, 2), 0.5), weak_model, 1e6)
    assert np.all(np.isfinite(out)) and math.isfinite(log_w)
    assert out[0, 0].real == pytest.approx(1.0)
