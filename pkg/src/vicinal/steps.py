"""Discrete step-train dynamics in one period.

A configuration is N ordered step positions x_1 < ... < x_N inside a
period of length L, with step height a = 1/N (the surface rises by 1 over
one period).  Terrace widths include the wraparound terrace
w_N = x_1 + L - x_N, so they always sum to L exactly.

The interaction energy is F_N = 1/2 sum_i a^3 / w_i^2, the chemical
potential its scaled first variation, and the three velocity laws are the
attachment-detachment-limited (ADL) law, the diffusion-limited (DL) law,
and the general two-rate law with the diffusion/attachment ratio as an
explicit parameter.  Slopes u_i = a / w_i evolve by the equivalent slope
system, which is exactly the node-based semidiscretization of the
continuum slope equation.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import CollisionDetected, StepSizeUnderflow

ADL = "ADL"
DL = "DL"
BCF = "BCF"


@dataclass(frozen=True)
class StepConfiguration:
    """Ordered step positions within one period; step height a = 1/N."""

    big_l: float
    positions: np.ndarray
    step_height: float = field(init=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).copy()
        if pos.ndim != 1 or len(pos) < 1:
            raise ValueError("positions must be a non-empty 1-d array")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if not (self.big_l > 0.0):
            raise ValueError("period length must be positive")
        if len(pos) > 1 and not np.all(np.diff(pos) > 0.0):
            raise ValueError("positions must be strictly increasing")
        if not (pos[0] + self.big_l - pos[-1] > 0.0):
            raise ValueError("positions must span less than one period")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "step_height", 1.0 / len(pos))

    @property
    def n_steps(self):
        return len(self.positions)


@dataclass(frozen=True)
class SlopeVector:
    """Positive terrace slopes u_i = a / w_i with step height a."""

    values: np.ndarray
    step_height: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("slopes must be finite")
        if np.any(vals <= 0.0):
            raise ValueError("slopes must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass
class StepTrajectory:
    """Accepted states of a step-train integration."""

    times: np.ndarray
    states: list
    energy_series: np.ndarray
    n_rejected: int = 0

    @property
    def final(self):
        return self.states[-1]


@dataclass
class StepControls:
    """Adaptive RK4 controls (PI step-size controller, step doubling)."""

    rtol: float = 1e-10
    atol: float = 1e-13
    dt_min: float = 1e-18
    dt_max: float = np.inf
    max_steps: int = 2_000_000
    collision_floor_rel: float = 1e-8  # floor = rel * L


def uniform_train(n_steps, big_l=1.0, x1=0.0):
    """Equally spaced steps: the exact equilibrium."""
    spacing = big_l / n_steps
    return StepConfiguration(big_l, x1 + spacing * np.arange(n_steps))


def translate(c, delta):
    """Shift all steps by delta; widths (hence energy) are unchanged."""
    return StepConfiguration(c.big_l, c.positions + delta)


def terrace_widths(c):
    """Widths w_i = x_{i+1} - x_i with wraparound w_N = x_1 + L - x_N."""
    pos = c.positions
    widths = np.empty(len(pos))
    widths[:-1] = pos[1:] - pos[:-1]
    widths[-1] = pos[0] + c.big_l - pos[-1]
    return widths


def _widths_of(pos, big_l):
    widths = np.empty(len(pos))
    widths[:-1] = pos[1:] - pos[:-1]
    widths[-1] = pos[0] + big_l - pos[-1]
    return widths


def step_energy(c):
    """Interaction energy F_N = 1/2 sum a^3 / w_i^2 (inverse-square law)."""
    widths = terrace_widths(c)
    a = c.step_height
    return float(0.5 * np.sum(a**3 / widths**2))


def chemical_potential(c):
    """mu_i = a^2 (1/w_i^3 - 1/w_{i-1}^3), periodic indexing."""
    widths = terrace_widths(c)
    return _mu_of(widths, c.step_height)


def _mu_of(widths, a):
    inv3 = (a * a) / widths**3
    return inv3 - np.roll(inv3, 1)


def velocities(c, model=ADL, dk=None):
    """Step velocities under the chosen kinetic law.

    ADL: dx_i/dt = (mu_{i+1} - 2 mu_i + mu_{i-1}) / a^2.
    DL:  dx_i/dt = ((mu_{i+1}-mu_i)/w_i - (mu_i-mu_{i-1})/w_{i-1}) / a^2.
    BCF: like DL but widths augmented by the diffusion/attachment length dk,
         with prefactor dk/a^2; the ADL law is its dk -> infinity limit.

    All three telescope: sum of velocities is zero.
    """
    widths = terrace_widths(c)
    a = c.step_height
    mu = _mu_of(widths, a)
    return _velocities_of(widths, mu, a, model, dk)


def _velocities_of(widths, mu, a, model, dk):
    if model == ADL:
        return (np.roll(mu, -1) - 2.0 * mu + np.roll(mu, 1)) / (a * a)
    dmu_fwd = np.roll(mu, -1) - mu        # mu_{i+1} - mu_i
    dmu_bwd = mu - np.roll(mu, 1)         # mu_i - mu_{i-1}
    w_bwd = np.roll(widths, 1)            # w_{i-1}
    if model == DL:
        return (dmu_fwd / widths - dmu_bwd / w_bwd) / (a * a)
    if model == BCF:
        if dk is None or not (dk > 0.0):
            raise ValueError("BCF model needs a positive diffusion/attachment ratio dk")
        return (dk / (a * a)) * (dmu_fwd / (widths + dk) - dmu_bwd / (w_bwd + dk))
    raise ValueError(f"unknown model {model!r}")


def to_slopes(c):
    """Slopes u_i = a / w_i."""
    return SlopeVector(c.step_height / terrace_widths(c), c.step_height)


def from_slopes(s, x1=0.0):
    """Rebuild positions from slopes, anchored at x_1; L = sum a/u_i."""
    widths = s.step_height / s.values
    pos = x1 + np.concatenate([[0.0], np.cumsum(widths[:-1])])
    return StepConfiguration(float(np.sum(widths)), pos)


def slope_rhs(s):
    """du_i/dt = -(u_i^2 / a^4) * (u^3_{i+2} - 4u^3_{i+1} + 6u^3_i - 4u^3_{i-1} + u^3_{i-2}).

    This is the node-based 5-point discretization of the continuum slope
    equation with spacing a, so it reuses the PDE kernel.
    """
    return kernels.pde_rhs(s.values, 0.0, s.step_height)


def _rhs_or_none(pos, big_l, a, model, dk):
    """Velocity field; None when the ordering degenerated mid-stage."""
    widths = _widths_of(pos, big_l)
    if np.any(widths <= 0.0):
        return None
    mu = _mu_of(widths, a)
    v = _velocities_of(widths, mu, a, model, dk)
    if not np.all(np.isfinite(v)):
        return None
    return v


def _rk4(pos, big_l, a, model, dk, dt):
    k1 = _rhs_or_none(pos, big_l, a, model, dk)
    if k1 is None:
        return None
    k2 = _rhs_or_none(pos + (0.5 * dt) * k1, big_l, a, model, dk)
    if k2 is None:
        return None
    k3 = _rhs_or_none(pos + (0.5 * dt) * k2, big_l, a, model, dk)
    if k3 is None:
        return None
    k4 = _rhs_or_none(pos + dt * k3, big_l, a, model, dk)
    if k4 is None:
        return None
    return pos + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_steps(c0, model=ADL, t_end=None, controls=None, dk=None):
    """Integrate the step ODE with adaptive RK4 (step doubling, PI control).

    Raises CollisionDetected if a terrace narrows to the collision floor
    (1e-8 L by default) -- the theory forbids collisions for ordered data,
    so reaching the floor flags a numerical fault rather than physics.
    Raises StepSizeUnderflow when the controller pushes dt below dt_min.
    """
    if t_end is None or not (t_end > 0.0):
        raise ValueError("t_end must be positive")
    ctl = controls or StepControls()
    big_l = c0.big_l
    a = c0.step_height
    floor = ctl.collision_floor_rel * big_l

    pos = c0.positions.copy()
    t = 0.0
    mu0 = chemical_potential(c0)
    dt = 0.1 * a**4 / max(1.0, float(np.max(np.abs(mu0))))
    dt = min(dt, ctl.dt_max, t_end)

    times = [0.0]
    states = [c0]
    energies = [step_energy(c0)]
    n_rejected = 0
    err_prev = 1.0
    tiny = 1e-14 * max(1.0, t_end)

    n_accepted = 0
    while t_end - t > tiny:
        if n_accepted + n_rejected > ctl.max_steps:
            raise StepSizeUnderflow(
                f"exceeded {ctl.max_steps} steps before reaching t_end", t=t
            )
        if dt < ctl.dt_min:
            raise StepSizeUnderflow(f"dt={dt:.3g} below dt_min={ctl.dt_min:.3g}", t=t)
        clipped = False
        if t + dt >= t_end:
            dt = t_end - t
            clipped = True

        full = _rk4(pos, big_l, a, model, dk, dt)
        half = _rk4(pos, big_l, a, model, dk, 0.5 * dt)
        two_half = None if half is None else _rk4(half, big_l, a, model, dk, 0.5 * dt)
        if full is None or two_half is None:
            err_norm = np.inf
        else:
            scale = ctl.atol + ctl.rtol * np.maximum(np.abs(pos), np.abs(two_half))
            err_norm = float(np.max(np.abs(two_half - full) / (15.0 * scale)))

        if err_norm <= 1.0:
            pos = two_half
            t = t_end if clipped else t + dt
            widths = _widths_of(pos, big_l)
            if np.min(widths) < floor:
                raise CollisionDetected(
                    f"terrace width {np.min(widths):.3g} below floor {floor:.3g}", t=t
                )
            state = StepConfiguration(big_l, pos)
            times.append(t)
            states.append(state)
            energies.append(step_energy(state))
            n_accepted += 1
            if err_norm == 0.0:
                factor = 5.0
            else:
                factor = 0.9 * err_norm**-0.06 * (err_prev / err_norm) ** 0.08
                factor = min(5.0, max(0.2, factor))
            err_prev = max(err_norm, 1e-4)
            dt = min(dt * factor, ctl.dt_max)
        else:
            n_rejected += 1
            if np.isfinite(err_norm):
                dt *= min(0.9, max(0.1, 0.9 * err_norm**-0.2))
            else:
                dt *= 0.25

    return StepTrajectory(
        times=np.asarray(times),
        states=states,
        energy_series=np.asarray(energies),
        n_rejected=n_rejected,
    )
