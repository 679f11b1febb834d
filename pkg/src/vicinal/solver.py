"""Time integration of the regularized slope equation.

The flow is u_t = -u^4/(eps + u^2) (u^3)_hhhh on the periodic height
domain, started from u0 + eps^(1/3); eps = 0 recovers the degenerate
equation u_t = -u^2 (u^3)_hhhh with mobility vanishing at u = 0.

Two steppers:

- explicit classical RK4 on u, with the step chosen from the
  frozen-coefficient diffusivity of w = u^3: dt = safety h^4 / (8 kappa),
  kappa = max 3 u^6/(eps + u^2).  The 8 comes from the extreme eigenvalue
  16/h^4 of the periodic 5-point stencil under forward Euler and is kept
  for RK4 as a conservative bound.
- a semi-implicit step that linearizes in w = u^3 (the variable in which
  the operator is linear): (I + 3 dt diag(m) D4) w_new = w_old with the
  mobility m = u^6/(eps + u^2) frozen at the old state.  The cyclic
  pentadiagonal system is solved directly and the solve is residual-checked.

At eps = 0 the positivity floor (default 0) clamps explicit undershoots;
the semi-implicit step always floors negative w at zero.  Every clamp is
counted, never silent.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels, pentadiagonal
from .energetics import EnergyReport, energy_report
from .errors import NonFinite, StepSizeUnderflow
from .grid import PeriodicField

EXPLICIT_RK4 = "explicit_rk4"
SEMI_IMPLICIT = "semi_implicit"


@dataclass(frozen=True)
class SolverOptions:
    """Stepper controls.

    For the semi-implicit scheme, dt_max IS the fixed step size (truncated
    at report boundaries); when dt_max is inf the step defaults to
    report_every / 20.
    """

    scheme: str = SEMI_IMPLICIT
    cfl_safety: float = 0.4
    dt_min: float = 1e-16
    dt_max: float = math.inf
    positivity_floor: float = 0.0
    report_every: Optional[float] = None

    def __post_init__(self):
        if self.scheme not in (EXPLICIT_RK4, SEMI_IMPLICIT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not (self.dt_min < self.dt_max):
            raise ValueError("dt_min must be below dt_max")
        if self.positivity_floor < 0.0:
            raise ValueError("positivity_floor must be non-negative")


@dataclass(frozen=True)
class SolverState:
    """Snapshot of an evolving solution.

    ``u_min_interval`` is the running minimum over all accepted steps since
    the previous snapshot (equal to min(u) at t = 0).
    """

    t: float
    u: PeriodicField
    epsilon: float
    dt: float
    floor_events: int = 0
    report: Optional[EnergyReport] = None
    u_min_interval: float = float("nan")


def regularize_initial(u0, epsilon):
    """Initial datum of the regularized flow: u0 + eps^(1/3), pointwise."""
    if not (epsilon > 0.0):
        raise ValueError("epsilon must be positive")
    if u0.min() < 0.0:
        raise ValueError("initial datum must be non-negative")
    return u0.with_values(u0.values + epsilon ** (1.0 / 3.0))


def pde_rhs(u, epsilon):
    """-u^4/(eps+u^2) (u^3)_hhhh as a field; mobility u^2 (zero at u=0) for eps=0."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    return u.with_values(kernels.pde_rhs(u.values, epsilon, u.grid.spacing))


def mobility_coefficient(u, epsilon):
    """Frozen w-mobility m = u^6/(eps + u^2) used by the implicit solve."""
    u2 = u.values * u.values
    if epsilon == 0.0:
        return u2 * u2
    return u2 * u2 * u2 / (epsilon + u2)


def explicit_step(state, opts):
    """One CFL-limited RK4 step; clamps to the positivity floor at eps = 0."""
    u = state.u
    eps = state.epsilon
    dt = kernels.cfl_dt(u.values, eps, u.grid.spacing, opts.cfl_safety)
    if dt > opts.dt_max:
        dt = opts.dt_max
    if dt < opts.dt_min:
        raise StepSizeUnderflow(
            f"explicit step {dt:.3g} below dt_min={opts.dt_min:.3g}", t=state.t
        )
    new_vals = kernels.rk4_pde_step(u.values, eps, u.grid.spacing, dt)
    if not np.all(np.isfinite(new_vals)):
        raise NonFinite("explicit step produced NaN/Inf", t=state.t)
    events = state.floor_events
    if eps == 0.0:
        low = new_vals < opts.positivity_floor
        n_low = int(np.count_nonzero(low))
        if n_low:
            new_vals = new_vals.copy()
            new_vals[low] = opts.positivity_floor
            events += n_low
    return replace(
        state,
        t=state.t + dt,
        u=u.with_values(new_vals),
        dt=dt,
        floor_events=events,
        u_min_interval=float(np.min(new_vals)),
    )


def semi_implicit_step(state, dt, opts=None):
    """One lagged-mobility implicit step in w = u^3.

    Solves (I + 3 dt diag(m) D4) w_new = w_old with m frozen at the old
    state, floors negative w_new at zero (counted), and returns
    u_new = w_new^(1/3).
    """
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    u = state.u
    eps = state.epsilon
    w_old = u.values**3
    m = mobility_coefficient(u, eps)
    h = u.grid.spacing
    c = (3.0 * dt / (h * h * h * h)) * m
    w_new = pentadiagonal.solve(c, w_old)
    if not np.all(np.isfinite(w_new)):
        raise NonFinite("implicit solve produced NaN/Inf", t=state.t)
    events = state.floor_events
    low = w_new < 0.0
    n_low = int(np.count_nonzero(low))
    if n_low:
        w_new = w_new.copy()
        w_new[low] = 0.0
        events += n_low
    new_vals = np.cbrt(w_new)
    return replace(
        state,
        t=state.t + dt,
        u=u.with_values(new_vals),
        dt=dt,
        floor_events=events,
        u_min_interval=float(np.min(new_vals)),
    )


def _semi_implicit_dt(opts, report_every):
    if math.isfinite(opts.dt_max):
        return opts.dt_max
    return report_every / 20.0


def evolve(u0, epsilon, t_end, opts=None, stop_when=None):
    """March to t_end, emitting a state snapshot and an EnergyReport every
    ``report_every`` time units and at t_end.

    For eps > 0 the datum is first shifted by eps^(1/3).  Reports carry a
    monotonicity flag for E relative to the previous report (tolerance
    1e-8 (1 + E_prev)).  ``stop_when(u_values)``, checked at report times,
    ends the run early.  Returns (states, reports).
    """
    if not (t_end > 0.0):
        raise ValueError("t_end must be positive")
    opts = opts or SolverOptions()
    if epsilon > 0.0:
        u = regularize_initial(u0, epsilon)
    elif epsilon == 0.0:
        if u0.min() < 0.0:
            raise ValueError("initial datum must be non-negative")
        u = u0
    else:
        raise ValueError("epsilon must be non-negative")

    report_every = opts.report_every if opts.report_every else t_end / 100.0
    report_every = min(report_every, t_end)
    spacing = u.grid.spacing
    explicit = opts.scheme == EXPLICIT_RK4
    if explicit:
        dt0 = min(kernels.cfl_dt(u.values, epsilon, spacing, opts.cfl_safety),
                  opts.dt_max)
    else:
        dt0 = _semi_implicit_dt(opts, report_every)

    t = 0.0
    floor_events = 0
    rep = energy_report(u, epsilon, 0.0, dt0)
    state = SolverState(0.0, u, epsilon, dt0, 0, rep, u.min())
    states = [state]
    reports = [rep]

    tiny = 1e-14 * max(1.0, t_end)
    k = 0
    while t_end - t > tiny:
        k += 1
        t_next = min(k * report_every, t_end)
        if t_next - t <= tiny:
            continue
        if explicit:
            vals, t, dt_last, ev, min_seen, status = kernels.rk4_pde_run(
                state.u.values, epsilon, spacing, t, t_next,
                opts.cfl_safety, opts.dt_min, opts.dt_max,
                opts.positivity_floor,
            )
            if status == kernels.RUN_DT_UNDERFLOW:
                raise StepSizeUnderflow("explicit step below dt_min", t=t)
            if status == kernels.RUN_NONFINITE:
                raise NonFinite("explicit run produced NaN/Inf", t=t)
            floor_events += ev
            u_field = state.u.with_values(vals)
        else:
            dt_semi = _semi_implicit_dt(opts, report_every)
            if dt_semi < opts.dt_min:
                raise StepSizeUnderflow("implicit step below dt_min", t=t)
            cur = replace(state, t=t, floor_events=0)
            min_seen = math.inf
            while t_next - cur.t > tiny:
                dt_step = min(dt_semi, t_next - cur.t)
                cur = semi_implicit_step(cur, dt_step)
                min_seen = min(min_seen, cur.u_min_interval)
            t = t_next
            dt_last = cur.dt
            floor_events += cur.floor_events
            u_field = cur.u

        prev = reports[-1]
        rep = energy_report(u_field, epsilon, t, dt_last)
        rep = replace(
            rep, e_nonincreasing=rep.E <= prev.E + 1e-8 * (1.0 + prev.E)
        )
        state = SolverState(t, u_field, epsilon, dt_last, floor_events, rep,
                            float(min_seen))
        states.append(state)
        reports.append(rep)
        if stop_when is not None and stop_when(u_field.values):
            break

    return states, reports
