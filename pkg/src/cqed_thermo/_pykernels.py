"""Pure-Python trajectory kernels (reference fallback for ``_ckernels``).

Both modules expose the same functions with the same in/out array contract:
inputs are read-only numpy arrays, outputs are preallocated by the caller.
Step i propagates with ``hams[index[i]]`` over [t_i, t_i+1); ``index`` has
one entry per grid point so ``hams[index[N]]`` is the final Hamiltonian.
Return value is the failing step index, or -1.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"
TWO_PI = 2.0 * math.pi


def _phase_average(phi):
    """Mean of exp(-i s) over s in [0, phi]."""
    half = 0.5 * phi
    sinc = math.sin(half) / half if half != 0.0 else 1.0
    return complex(math.cos(half), -math.sin(half)) * sinc


def _energy_pure(p0, p1, h):
    return (h[0][0].real * abs(p0) ** 2 + h[1][1].real * abs(p1) ** 2
            + 2.0 * (p0.conjugate() * h[0][1] * p1).real)


def _energy_mixed(a, b, c, h):
    # Tr[rho H] with rho = [[a, c], [c*, b]]
    return h[0][0].real * a + h[1][1].real * b + 2.0 * (h[1][0] * c).real


def _diff(h1, h0):
    return [[h1[r][s] - h0[r][s] for s in range(2)] for r in range(2)]


def forward_pure(psi0, hams, props, index, sqrt_gamma, dt, uniforms, normals,
                 states, energy, work, heat, current, logw):
    n_steps = len(uniforms)
    hl = hams.tolist()
    ul = props.tolist()
    idx = index.tolist()
    ur = uniforms.tolist()
    nr = normals.tolist()
    log_norm = 0.5 * math.log(dt / TWO_PI)
    inv_sqdt = 1.0 / math.sqrt(dt)
    half_dt = 0.5 * dt
    sg = sqrt_gamma

    a0 = complex(psi0[0])
    a1 = complex(psi0[1])
    k = idx[0]
    e_cur = _energy_pure(a0, a1, hl[k])
    w_acc = 0.0
    q_acc = 0.0
    out_states = [(a0, a1)]
    out_e = [e_cur]
    out_w = [0.0]
    out_q = [0.0]
    out_x = [math.nan]
    out_lw = []
    for i in range(n_steps):
        k = idx[i]
        kn = idx[i + 1]
        if kn != k:
            d_w = _energy_pure(a0, a1, _diff(hl[kn], hl[k]))
        else:
            d_w = 0.0
        u = ul[k]
        b0 = u[0][0] * a0 + u[0][1] * a1
        b1 = u[1][0] * a0 + u[1][1] * a1
        p0 = b0.real * b0.real + b0.imag * b0.imag
        p1 = b1.real * b1.real + b1.imag * b1.imag
        if ur[i] < p0:
            x = sg + nr[i] * inv_sqdt
        else:
            x = -sg + nr[i] * inv_sqdt
        e0 = -half_dt * (x - sg) * (x - sg)
        e1 = -half_dt * (x + sg) * (x + sg)
        em = e0 if e0 > e1 else e1
        q0 = math.exp(e0 - em)
        q1 = math.exp(e1 - em)
        w = p0 * q0 + p1 * q1
        if not (w > 0.0) or not math.isfinite(w):
            return i
        out_lw.append(log_norm + em + math.log(w))
        a0 = b0 * math.sqrt(q0 / w)
        a1 = b1 * math.sqrt(q1 / w)
        e_next = _energy_pure(a0, a1, hl[kn])
        w_acc += d_w
        q_acc += e_next - e_cur - d_w
        e_cur = e_next
        out_states.append((a0, a1))
        out_e.append(e_cur)
        out_w.append(w_acc)
        out_q.append(q_acc)
        out_x.append(x)
    states[:] = np.array(out_states, dtype=complex)
    energy[:] = out_e
    work[:] = out_w
    heat[:] = out_q
    current[:] = out_x
    logw[:] = out_lw
    return -1


def forward_mixed(rho0, hams, props, index, sqrt_gamma, dt, gamma1, use_sme,
                  replay, uniforms, normals, states, energy, work, heat, current,
                  logw, clamps):
    """Density-matrix trajectory.

    ``use_sme`` selects the explicit Bloch-SME step instead of the exact
    unitary + POVM update. With ``replay`` set, currents are read from
    ``current[1:]`` instead of being sampled. ``clamps[0]`` receives the
    number of Bloch-ball clamps (SME only).
    """
    n_steps = len(index) - 1
    hl = hams.tolist()
    ul = props.tolist()
    idx = index.tolist()
    ur = uniforms.tolist() if not replay else None
    nr = normals.tolist() if not replay else None
    xr = current.tolist() if replay else None
    log_norm = 0.5 * math.log(dt / TWO_PI)
    inv_sqdt = 1.0 / math.sqrt(dt)
    half_dt = 0.5 * dt
    sg = sqrt_gamma
    gamma = sg * sg
    # exact amplitude-damping channel over one step
    keep = math.exp(-gamma1 * dt)
    keep_c = math.sqrt(keep)
    lost = -math.expm1(-gamma1 * dt)
    g_dt = gamma1 * dt
    tol = 1e-9

    a = float(rho0[0, 0].real)
    b = float(rho0[1, 1].real)
    c = complex(rho0[0, 1])
    k = idx[0]
    e_cur = _energy_mixed(a, b, c, hl[k])
    w_acc = 0.0
    q_acc = 0.0
    n_clamp = 0
    out_states = [(a, b, c)]
    out_e = [e_cur]
    out_w = [0.0]
    out_q = [0.0]
    out_x = [math.nan]
    out_lw = []
    for i in range(n_steps):
        k = idx[i]
        kn = idx[i + 1]
        h = hl[k]
        if kn != k:
            d_w = _energy_mixed(a, b, c, _diff(hl[kn], h))
        else:
            d_w = 0.0
        if not use_sme:
            u = ul[k]
            # rho <- U rho U^dag
            m00 = u[0][0] * a + u[0][1] * c.conjugate()
            m01 = u[0][0] * c + u[0][1] * b
            m10 = u[1][0] * a + u[1][1] * c.conjugate()
            m11 = u[1][0] * c + u[1][1] * b
            a = (m00 * u[0][0].conjugate() + m01 * u[0][1].conjugate()).real
            c = m00 * u[1][0].conjugate() + m01 * u[1][1].conjugate()
            b = (m10 * u[1][0].conjugate() + m11 * u[1][1].conjugate()).real
            if g_dt > 0.0:
                b = b + lost * a
                a = a * keep
                c = c * keep_c
        if replay:
            x = xr[i + 1]
        elif ur[i] < a:
            x = sg + nr[i] * inv_sqdt
        else:
            x = -sg + nr[i] * inv_sqdt
        e0 = -half_dt * (x - sg) * (x - sg)
        e1 = -half_dt * (x + sg) * (x + sg)
        em = e0 if e0 > e1 else e1
        q0 = math.exp(e0 - em)
        q1 = math.exp(e1 - em)
        w = a * q0 + b * q1
        if not (w > 0.0) or not math.isfinite(w):
            return i
        out_lw.append(log_norm + em + math.log(w))
        if not use_sme:
            a = a * q0 / w
            b = b * q1 / w
            c = c * (math.sqrt(q0 * q1) / w)
            if a < -tol or b < -tol or abs(c) ** 2 > a * b + tol:
                return i
        else:
            z = a - b
            innov = x - sg * z
            h01 = h[0][1]
            phi = (h[0][0].real - h[1][1].real) * dt
            rot = complex(math.cos(phi), -math.sin(phi))
            avg = _phase_average(phi)
            da = (2.0 * (h01 * (c * avg).conjugate()).imag
                  + 2.0 * sg * a * b * innov)
            dc = -sg * z * innov * c - 0.5 * gamma * c
            kick = -1j * h01 * (b - a) * avg * dt
            a = a + da * dt
            c = rot * (c + dc * dt) + kick
            b = 1.0 - a
            rz = a - b
            r2 = rz * rz + 4.0 * (c.real * c.real + c.imag * c.imag)
            if not math.isfinite(r2):
                return i
            if r2 > 1.0:
                s = 1.0 / math.sqrt(r2)
                a = 0.5 * (1.0 + rz * s)
                b = 1.0 - a
                c = c * s
                n_clamp += 1
            if g_dt > 0.0:
                b = b + lost * a
                a = a * keep
                c = c * keep_c
        e_next = _energy_mixed(a, b, c, hl[kn])
        w_acc += d_w
        q_acc += e_next - e_cur - d_w
        e_cur = e_next
        out_states.append((a, b, c))
        out_e.append(e_cur)
        out_w.append(w_acc)
        out_q.append(q_acc)
        out_x.append(x)
    arr = np.array(out_states, dtype=complex)
    states[:, 0, 0] = arr[:, 0]
    states[:, 1, 1] = arr[:, 1]
    states[:, 0, 1] = arr[:, 2]
    states[:, 1, 0] = arr[:, 2].conj()
    energy[:] = out_e
    work[:] = out_w
    heat[:] = out_q
    if not replay:
        current[:] = out_x
    logw[:] = out_lw
    clamps[0] = n_clamp
    return -1


def backward_pure(psi_start, props, index, sqrt_gamma, dt, current, logw, psi_out):
    """Time-reversed chain: M_x then U^T per step, currents in reverse order."""
    n_steps = len(index) - 1
    ul = props.tolist()
    idx = index.tolist()
    xr = current.tolist()
    log_norm = 0.5 * math.log(dt / TWO_PI)
    half_dt = 0.5 * dt
    sg = sqrt_gamma
    a0 = complex(psi_start[0])
    a1 = complex(psi_start[1])
    out_lw = []
    for step in range(n_steps):
        i = n_steps - 1 - step
        x = xr[i + 1]
        e0 = -half_dt * (x - sg) * (x - sg)
        e1 = -half_dt * (x + sg) * (x + sg)
        em = e0 if e0 > e1 else e1
        q0 = math.exp(e0 - em)
        q1 = math.exp(e1 - em)
        p0 = a0.real * a0.real + a0.imag * a0.imag
        p1 = a1.real * a1.real + a1.imag * a1.imag
        w = p0 * q0 + p1 * q1
        if not (w > 0.0) or not math.isfinite(w):
            return step
        out_lw.append(log_norm + em + math.log(w))
        a0 = a0 * math.sqrt(q0 / w)
        a1 = a1 * math.sqrt(q1 / w)
        u = ul[idx[i]]
        b0 = u[0][0] * a0 + u[1][0] * a1
        b1 = u[0][1] * a0 + u[1][1] * a1
        a0, a1 = b0, b1
    logw[:] = out_lw
    psi_out[0] = a0
    psi_out[1] = a1
    return -1
