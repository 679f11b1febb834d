"""Pure-NumPy implementations of the hot numerical kernels.

This module is the reference backend: the compiled extension
(``vicinal.kernels._core``) mirrors the arithmetic here operation for
operation, in the same order, so the two backends agree to the last few
ulps.  Anything added here must be replicated there.

All kernels operate on bare float64 arrays; the field containers live in
:mod:`vicinal.grid`.
"""

import numpy as np

BACKEND_NAME = "numpy"

# status codes returned by rk4_pde_run
RUN_OK = 0
RUN_DT_UNDERFLOW = 1
RUN_NONFINITE = 2


def diff1(values, spacing):
    """Central first difference (f_{i+1} - f_{i-1}) / (2 h), periodic."""
    return (np.roll(values, -1) - np.roll(values, 1)) / (2.0 * spacing)


def diff2(values, spacing):
    """Central second difference (f_{i-1} - 2 f_i + f_{i+1}) / h^2, periodic."""
    inv = 1.0 / (spacing * spacing)
    return (np.roll(values, 1) - 2.0 * values + np.roll(values, -1)) * inv


def diff4(values, spacing):
    """5-point fourth difference (1, -4, 6, -4, 1) / h^4, periodic."""
    inv = 1.0 / (spacing * spacing * spacing * spacing)
    return (
        np.roll(values, 2)
        - 4.0 * np.roll(values, 1)
        + 6.0 * values
        - 4.0 * np.roll(values, -1)
        + np.roll(values, -2)
    ) * inv


def mobility(u, epsilon):
    """Degenerate mobility u^4/(eps + u^2); the algebraic limit u^2 at eps=0."""
    if epsilon == 0.0:
        return u * u
    u2 = u * u
    return (u2 * u2) / (epsilon + u2)


def pde_rhs(u, epsilon, spacing):
    """Slope equation right-hand side: -u^4/(eps+u^2) * (u^3)_hhhh."""
    w = u * u * u
    return -mobility(u, epsilon) * diff4(w, spacing)


def max_diffusivity(u, epsilon):
    """max_i 3 u_i^6/(eps + u_i^2): frozen-coefficient diffusivity of w = u^3."""
    u2 = u * u
    if epsilon == 0.0:
        return 3.0 * float(np.max(u2 * u2))
    return 3.0 * float(np.max(u2 * u2 * u2 / (epsilon + u2)))


def cfl_dt(u, epsilon, spacing, safety):
    """Stable explicit step: safety * h^4 / (8 kappa_max); inf for kappa = 0."""
    kappa = max_diffusivity(u, epsilon)
    if kappa <= 0.0:
        return np.inf
    return safety * (spacing * spacing * spacing * spacing) / (8.0 * kappa)


def rk4_pde_step(u, epsilon, spacing, dt):
    """One classical RK4 step of the slope equation (no clamping)."""
    k1 = pde_rhs(u, epsilon, spacing)
    k2 = pde_rhs(u + (0.5 * dt) * k1, epsilon, spacing)
    k3 = pde_rhs(u + (0.5 * dt) * k2, epsilon, spacing)
    k4 = pde_rhs(u + dt * k3, epsilon, spacing)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_pde_run(u, epsilon, spacing, t, t_end, safety, dt_min, dt_max, floor):
    """March the explicit scheme from t to t_end with per-step CFL control.

    The last step is truncated to land on t_end exactly (exempt from the
    dt_min check).  At eps = 0 values below ``floor`` are clamped to it and
    counted.  Returns (u, t, last_dt, floor_events, min_seen, status).
    """
    u = np.array(u, dtype=np.float64, copy=True)
    floor_events = 0
    last_dt = 0.0
    min_seen = float(np.min(u))
    tiny = 1e-14 * max(1.0, abs(t_end))
    while t_end - t > tiny:
        dt = cfl_dt(u, epsilon, spacing, safety)
        if dt > dt_max:
            dt = dt_max
        if dt < dt_min:
            return u, t, last_dt, floor_events, min_seen, RUN_DT_UNDERFLOW
        if t + dt >= t_end:
            dt = t_end - t
        u_new = rk4_pde_step(u, epsilon, spacing, dt)
        if not np.all(np.isfinite(u_new)):
            return u, t, last_dt, floor_events, min_seen, RUN_NONFINITE
        if epsilon == 0.0:
            low = u_new < floor
            n_low = int(np.count_nonzero(low))
            if n_low:
                u_new[low] = floor
                floor_events += n_low
        u = u_new
        t += dt
        last_dt = dt
        m = float(np.min(u))
        if m < min_seen:
            min_seen = m
    return u, t_end, last_dt, floor_events, min_seen, RUN_OK
