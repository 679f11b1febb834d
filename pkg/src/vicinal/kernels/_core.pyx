# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: scalar-loop twins of vicinal.kernels.reference.

Arithmetic is kept in the same order as the NumPy reference so results
agree to the last few ulps; any change there must be replicated here.
"""

import numpy as np

from libc.math cimport isfinite

BACKEND_NAME = "cython"

RUN_OK = 0
RUN_DT_UNDERFLOW = 1
RUN_NONFINITE = 2


def diff1(values, double spacing):
    cdef const double[::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double inv = 1.0 / (2.0 * spacing)
    cdef Py_ssize_t i, ip, im
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        out[i] = (f[ip] - f[im]) * inv
    return out_arr


def diff2(values, double spacing):
    cdef const double[::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double inv = 1.0 / (spacing * spacing)
    cdef Py_ssize_t i, ip, im
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        out[i] = (f[im] - 2.0 * f[i] + f[ip]) * inv
    return out_arr


def diff4(values, double spacing):
    cdef const double[::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    _diff4_into(f, spacing, out)
    return out_arr


cdef void _diff4_into(const double[::1] f, double spacing, double[::1] out) nogil:
    cdef Py_ssize_t n = f.shape[0]
    cdef double inv = 1.0 / (spacing * spacing * spacing * spacing)
    cdef Py_ssize_t i, ip, ipp, im, imm
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        ipp = ip + 1 if ip + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        imm = im - 1 if im > 0 else n - 1
        out[i] = (f[imm] - 4.0 * f[im] + 6.0 * f[i] - 4.0 * f[ip] + f[ipp]) * inv


def mobility(u, double epsilon):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double u2
    if epsilon == 0.0:
        for i in range(n):
            out[i] = uv[i] * uv[i]
    else:
        for i in range(n):
            u2 = uv[i] * uv[i]
            out[i] = (u2 * u2) / (epsilon + u2)
    return out_arr


cdef void _pde_rhs_into(const double[::1] u, double epsilon, double spacing,
                        double[::1] w, double[::1] d4, double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double u2
    for i in range(n):
        w[i] = u[i] * u[i] * u[i]
    _diff4_into(w, spacing, d4)
    if epsilon == 0.0:
        for i in range(n):
            out[i] = -(u[i] * u[i]) * d4[i]
    else:
        for i in range(n):
            u2 = u[i] * u[i]
            out[i] = -((u2 * u2) / (epsilon + u2)) * d4[i]


def pde_rhs(u, double epsilon, double spacing):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] w = np.empty(n, dtype=np.float64)
    cdef double[::1] d4 = np.empty(n, dtype=np.float64)
    _pde_rhs_into(uv, epsilon, spacing, w, d4, out)
    return out_arr


cdef double _max_diffusivity(const double[::1] u, double epsilon) nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef double best = 0.0
    cdef double u2, v
    cdef Py_ssize_t i
    for i in range(n):
        u2 = u[i] * u[i]
        if epsilon == 0.0:
            v = u2 * u2
        else:
            v = u2 * u2 * u2 / (epsilon + u2)
        if v > best:
            best = v
    return 3.0 * best


def max_diffusivity(u, double epsilon):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    return _max_diffusivity(uv, epsilon)


def cfl_dt(u, double epsilon, double spacing, double safety):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double kappa = _max_diffusivity(uv, epsilon)
    if kappa <= 0.0:
        return float("inf")
    return safety * (spacing * spacing * spacing * spacing) / (8.0 * kappa)


cdef void _rk4_step(const double[::1] u, double epsilon, double spacing, double dt,
                    double[::1] k1, double[::1] k2, double[::1] k3,
                    double[::1] k4, double[::1] stage, double[::1] w,
                    double[::1] d4, double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double half = 0.5 * dt
    _pde_rhs_into(u, epsilon, spacing, w, d4, k1)
    for i in range(n):
        stage[i] = u[i] + half * k1[i]
    _pde_rhs_into(stage, epsilon, spacing, w, d4, k2)
    for i in range(n):
        stage[i] = u[i] + half * k2[i]
    _pde_rhs_into(stage, epsilon, spacing, w, d4, k3)
    for i in range(n):
        stage[i] = u[i] + dt * k3[i]
    _pde_rhs_into(stage, epsilon, spacing, w, d4, k4)
    cdef double sixth = dt / 6.0
    for i in range(n):
        out[i] = u[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def rk4_pde_step(u, double epsilon, double spacing, double dt):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] k1 = np.empty(n, dtype=np.float64)
    cdef double[::1] k2 = np.empty(n, dtype=np.float64)
    cdef double[::1] k3 = np.empty(n, dtype=np.float64)
    cdef double[::1] k4 = np.empty(n, dtype=np.float64)
    cdef double[::1] stage = np.empty(n, dtype=np.float64)
    cdef double[::1] w = np.empty(n, dtype=np.float64)
    cdef double[::1] d4 = np.empty(n, dtype=np.float64)
    _rk4_step(uv, epsilon, spacing, dt, k1, k2, k3, k4, stage, w, d4, out)
    return out_arr


def rk4_pde_run(u, double epsilon, double spacing, double t, double t_end,
                double safety, double dt_min, double dt_max, double floor):
    """See reference.rk4_pde_run; identical semantics."""
    u_arr = np.array(u, dtype=np.float64, copy=True)
    cdef double[::1] uv = u_arr
    cdef Py_ssize_t n = uv.shape[0]
    cdef double[::1] k1 = np.empty(n, dtype=np.float64)
    cdef double[::1] k2 = np.empty(n, dtype=np.float64)
    cdef double[::1] k3 = np.empty(n, dtype=np.float64)
    cdef double[::1] k4 = np.empty(n, dtype=np.float64)
    cdef double[::1] stage = np.empty(n, dtype=np.float64)
    cdef double[::1] w = np.empty(n, dtype=np.float64)
    cdef double[::1] d4 = np.empty(n, dtype=np.float64)
    cdef double[::1] u_new = np.empty(n, dtype=np.float64)

    cdef long floor_events = 0
    cdef double last_dt = 0.0
    cdef double min_seen = uv[0]
    cdef double kappa, dt, m
    cdef double h4 = spacing * spacing * spacing * spacing
    cdef double tiny = 1e-14 * max(1.0, abs(t_end))
    cdef Py_ssize_t i
    cdef bint ok
    for i in range(n):
        if uv[i] < min_seen:
            min_seen = uv[i]

    while t_end - t > tiny:
        kappa = _max_diffusivity(uv, epsilon)
        if kappa <= 0.0:
            dt = dt_max
        else:
            dt = safety * h4 / (8.0 * kappa)
        if dt > dt_max:
            dt = dt_max
        if dt < dt_min:
            return u_arr, t, last_dt, floor_events, min_seen, RUN_DT_UNDERFLOW
        if t + dt >= t_end:
            dt = t_end - t
        _rk4_step(uv, epsilon, spacing, dt, k1, k2, k3, k4, stage, w, d4, u_new)
        ok = True
        for i in range(n):
            if not isfinite(u_new[i]):
                ok = False
                break
        if not ok:
            return u_arr, t, last_dt, floor_events, min_seen, RUN_NONFINITE
        if epsilon == 0.0:
            for i in range(n):
                if u_new[i] < floor:
                    u_new[i] = floor
                    floor_events += 1
        for i in range(n):
            uv[i] = u_new[i]
            if uv[i] < min_seen:
                min_seen = uv[i]
        t += dt
        last_dt = dt
    return u_arr, t_end, last_dt, floor_events, min_seen, RUN_OK
