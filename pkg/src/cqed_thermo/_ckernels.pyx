# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernels; same contract as ``_pykernels``."""

from libc.math cimport exp, expm1, log, sqrt, cos, sin, isfinite, NAN

NAME = "cython"

cdef double TWO_PI = 6.283185307179586


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex cconj(double complex z) noexcept nogil:
    return z.real - 1j * z.imag


cdef inline double complex phase_average(double phi) noexcept nogil:
    # mean of exp(-i s) over s in [0, phi]
    cdef double half = 0.5 * phi
    cdef double sinc = sin(half) / half if half != 0.0 else 1.0
    return (cos(half) - 1j * sin(half)) * sinc


cdef inline double energy_pure(double complex p0, double complex p1,
                               double complex h00, double complex h01,
                               double complex h11) noexcept nogil:
    return h00.real * cabs2(p0) + h11.real * cabs2(p1) + 2.0 * (cconj(p0) * h01 * p1).real


cdef inline double energy_mixed(double a, double b, double complex c,
                                double complex h00, double complex h10,
                                double complex h11) noexcept nogil:
    return h00.real * a + h11.real * b + 2.0 * (h10 * c).real


def forward_pure(const double complex[::1] psi0,
                 const double complex[:, :, ::1] hams,
                 const double complex[:, :, ::1] props,
                 const long[::1] index,
                 double sqrt_gamma, double dt,
                 const double[::1] uniforms, const double[::1] normals,
                 double complex[:, ::1] states, double[::1] energy,
                 double[::1] work, double[::1] heat, double[::1] current,
                 double[::1] logw):
    cdef Py_ssize_t n_steps = uniforms.shape[0]
    cdef Py_ssize_t i
    cdef long k, kn
    cdef double log_norm = 0.5 * log(dt / TWO_PI)
    cdef double inv_sqdt = 1.0 / sqrt(dt)
    cdef double half_dt = 0.5 * dt
    cdef double sg = sqrt_gamma
    cdef double complex a0 = psi0[0], a1 = psi0[1], b0, b1
    cdef double p0, p1, x, e0, e1, em, q0, q1, w, d_w, e_cur, e_next
    cdef double w_acc = 0.0, q_acc = 0.0
    cdef Py_ssize_t bad = -1

    with nogil:
        k = index[0]
        e_cur = energy_pure(a0, a1, hams[k, 0, 0], hams[k, 0, 1], hams[k, 1, 1])
        states[0, 0] = a0
        states[0, 1] = a1
        energy[0] = e_cur
        work[0] = 0.0
        heat[0] = 0.0
        current[0] = NAN
        for i in range(n_steps):
            k = index[i]
            kn = index[i + 1]
            if kn != k:
                d_w = energy_pure(a0, a1,
                                  hams[kn, 0, 0] - hams[k, 0, 0],
                                  hams[kn, 0, 1] - hams[k, 0, 1],
                                  hams[kn, 1, 1] - hams[k, 1, 1])
            else:
                d_w = 0.0
            b0 = props[k, 0, 0] * a0 + props[k, 0, 1] * a1
            b1 = props[k, 1, 0] * a0 + props[k, 1, 1] * a1
            p0 = cabs2(b0)
            p1 = cabs2(b1)
            if uniforms[i] < p0:
                x = sg + normals[i] * inv_sqdt
            else:
                x = -sg + normals[i] * inv_sqdt
            e0 = -half_dt * (x - sg) * (x - sg)
            e1 = -half_dt * (x + sg) * (x + sg)
            em = e0 if e0 > e1 else e1
            q0 = exp(e0 - em)
            q1 = exp(e1 - em)
            w = p0 * q0 + p1 * q1
            if not (w > 0.0) or not isfinite(w):
                bad = i
                break
            logw[i] = log_norm + em + log(w)
            a0 = b0 * sqrt(q0 / w)
            a1 = b1 * sqrt(q1 / w)
            e_next = energy_pure(a0, a1, hams[kn, 0, 0], hams[kn, 0, 1], hams[kn, 1, 1])
            w_acc = w_acc + d_w
            q_acc = q_acc + (e_next - e_cur - d_w)
            e_cur = e_next
            states[i + 1, 0] = a0
            states[i + 1, 1] = a1
            energy[i + 1] = e_cur
            work[i + 1] = w_acc
            heat[i + 1] = q_acc
            current[i + 1] = x
    return bad


def forward_mixed(const double complex[:, ::1] rho0,
                  const double complex[:, :, ::1] hams,
                  const double complex[:, :, ::1] props,
                  const long[::1] index,
                  double sqrt_gamma, double dt, double gamma1,
                  bint use_sme, bint replay,
                  const double[::1] uniforms, const double[::1] normals,
                  double complex[:, :, ::1] states, double[::1] energy,
                  double[::1] work, double[::1] heat, double[::1] current,
                  double[::1] logw, long[::1] clamps):
    cdef Py_ssize_t n_steps = index.shape[0] - 1
    cdef Py_ssize_t i
    cdef long k, kn
    cdef double log_norm = 0.5 * log(dt / TWO_PI)
    cdef double inv_sqdt = 1.0 / sqrt(dt)
    cdef double half_dt = 0.5 * dt
    cdef double sg = sqrt_gamma
    cdef double gamma = sg * sg
    # exact amplitude-damping channel over one step
    cdef double keep = exp(-gamma1 * dt)
    cdef double keep_c = sqrt(keep)
    cdef double lost = -expm1(-gamma1 * dt)
    cdef double g_dt = gamma1 * dt
    cdef double tol = 1e-9
    cdef double a = rho0[0, 0].real, b = rho0[1, 1].real
    cdef double complex c = rho0[0, 1]
    cdef double complex u00, u01, u10, u11, m00, m01, m10, m11, h01, dc, rot, avg, kick
    cdef double x, e0, e1, em, q0, q1, w, d_w, e_cur, e_next, z, innov, da, phi
    cdef double rz, r2, s
    cdef double w_acc = 0.0, q_acc = 0.0
    cdef long n_clamp = 0
    cdef Py_ssize_t bad = -1

    with nogil:
        k = index[0]
        e_cur = energy_mixed(a, b, c, hams[k, 0, 0], hams[k, 1, 0], hams[k, 1, 1])
        states[0, 0, 0] = a
        states[0, 1, 1] = b
        states[0, 0, 1] = c
        states[0, 1, 0] = cconj(c)
        energy[0] = e_cur
        work[0] = 0.0
        heat[0] = 0.0
        if not replay:
            current[0] = NAN
        for i in range(n_steps):
            k = index[i]
            kn = index[i + 1]
            if kn != k:
                d_w = energy_mixed(a, b, c,
                                   hams[kn, 0, 0] - hams[k, 0, 0],
                                   hams[kn, 1, 0] - hams[k, 1, 0],
                                   hams[kn, 1, 1] - hams[k, 1, 1])
            else:
                d_w = 0.0
            if not use_sme:
                u00 = props[k, 0, 0]
                u01 = props[k, 0, 1]
                u10 = props[k, 1, 0]
                u11 = props[k, 1, 1]
                m00 = u00 * a + u01 * cconj(c)
                m01 = u00 * c + u01 * b
                m10 = u10 * a + u11 * cconj(c)
                m11 = u10 * c + u11 * b
                a = (m00 * cconj(u00) + m01 * cconj(u01)).real
                c = m00 * cconj(u10) + m01 * cconj(u11)
                b = (m10 * cconj(u10) + m11 * cconj(u11)).real
                if g_dt > 0.0:
                    b = b + lost * a
                    a = a * keep
                    c = c * keep_c
            if replay:
                x = current[i + 1]
            elif uniforms[i] < a:
                x = sg + normals[i] * inv_sqdt
            else:
                x = -sg + normals[i] * inv_sqdt
            e0 = -half_dt * (x - sg) * (x - sg)
            e1 = -half_dt * (x + sg) * (x + sg)
            em = e0 if e0 > e1 else e1
            q0 = exp(e0 - em)
            q1 = exp(e1 - em)
            w = a * q0 + b * q1
            if not (w > 0.0) or not isfinite(w):
                bad = i
                break
            logw[i] = log_norm + em + log(w)
            if not use_sme:
                a = a * q0 / w
                b = b * q1 / w
                c = c * (sqrt(q0 * q1) / w)
                if a < -tol or b < -tol or cabs2(c) > a * b + tol:
                    bad = i
                    break
            else:
                z = a - b
                innov = x - sg * z
                h01 = hams[k, 0, 1]
                phi = (hams[k, 0, 0].real - hams[k, 1, 1].real) * dt
                rot = cos(phi) - 1j * sin(phi)
                avg = phase_average(phi)
                da = 2.0 * (h01 * cconj(c * avg)).imag + 2.0 * sg * a * b * innov
                dc = -sg * z * innov * c - 0.5 * gamma * c
                kick = -1j * h01 * (b - a) * avg * dt
                a = a + da * dt
                c = rot * (c + dc * dt) + kick
                b = 1.0 - a
                rz = a - b
                r2 = rz * rz + 4.0 * cabs2(c)
                if not isfinite(r2):
                    bad = i
                    break
                if r2 > 1.0:
                    s = 1.0 / sqrt(r2)
                    a = 0.5 * (1.0 + rz * s)
                    b = 1.0 - a
                    c = c * s
                    n_clamp += 1
                if g_dt > 0.0:
                    b = b + lost * a
                    a = a * keep
                    c = c * keep_c
            e_next = energy_mixed(a, b, c, hams[kn, 0, 0], hams[kn, 1, 0], hams[kn, 1, 1])
            w_acc = w_acc + d_w
            q_acc = q_acc + (e_next - e_cur - d_w)
            e_cur = e_next
            states[i + 1, 0, 0] = a
            states[i + 1, 1, 1] = b
            states[i + 1, 0, 1] = c
            states[i + 1, 1, 0] = cconj(c)
            energy[i + 1] = e_cur
            work[i + 1] = w_acc
            heat[i + 1] = q_acc
            if not replay:
                current[i + 1] = x
    clamps[0] = n_clamp
    return bad


def backward_pure(const double complex[::1] psi_start,
                  const double complex[:, :, ::1] props,
                  const long[::1] index,
                  double sqrt_gamma, double dt,
                  const double[::1] current, double[::1] logw,
                  double complex[::1] psi_out):
    cdef Py_ssize_t n_steps = index.shape[0] - 1
    cdef Py_ssize_t step, i
    cdef long k
    cdef double log_norm = 0.5 * log(dt / TWO_PI)
    cdef double half_dt = 0.5 * dt
    cdef double sg = sqrt_gamma
    cdef double complex a0 = psi_start[0], a1 = psi_start[1], b0, b1
    cdef double x, e0, e1, em, q0, q1, p0, p1, w
    cdef Py_ssize_t bad = -1

    with nogil:
        for step in range(n_steps):
            i = n_steps - 1 - step
            x = current[i + 1]
            e0 = -half_dt * (x - sg) * (x - sg)
            e1 = -half_dt * (x + sg) * (x + sg)
            em = e0 if e0 > e1 else e1
            q0 = exp(e0 - em)
            q1 = exp(e1 - em)
            p0 = cabs2(a0)
            p1 = cabs2(a1)
            w = p0 * q0 + p1 * q1
            if not (w > 0.0) or not isfinite(w):
                bad = step
                break
            logw[step] = log_norm + em + log(w)
            a0 = a0 * sqrt(q0 / w)
            a1 = a1 * sqrt(q1 / w)
            k = index[i]
            b0 = props[k, 0, 0] * a0 + props[k, 1, 0] * a1
            b1 = props[k, 0, 1] * a0 + props[k, 1, 1] * a1
            a0 = b0
            a1 = b1
        psi_out[0] = a0
        psi_out[1] = a1
    return bad
