"""Built-in initial-condition library.

Each entry samples u0 on a height grid and knows its own conserved
integral m0 = int 1/u0 to full precision: by formula for constants, by a
fine-grid rectangle rule (spectrally accurate for smooth periodic
integrands) for the sine family, and in closed Beta-integral form for the
degenerate sine, whose grid quadrature would diverge at the zero node.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .grid import PeriodicField, make_grid
from .rng import XorShift64Star

_FINE_N = 1 << 16


@dataclass(frozen=True)
class InitialCondition:
    """A named initial slope profile with its exact conserved integral."""

    name: str
    profile: Callable  # height array -> u0 values
    m0: float

    def sample(self, n):
        grid = make_grid(n, 1.0)
        return PeriodicField(grid, self.profile(grid.nodes))


def constant(c):
    if not (c > 0.0):
        raise ConfigError("constant initial value must be positive")
    return InitialCondition(
        name=f"constant(c={c:g})",
        profile=lambda h: np.full_like(h, float(c)),
        m0=1.0 / c,
    )


def sine_cubed(amplitude, mean):
    """u0^3 = mean + amplitude * sin(2 pi h); requires amplitude < mean."""
    if not (0.0 <= amplitude < mean):
        raise ConfigError("u^3 must stay positive: need 0 <= A < M")

    def profile(h):
        return np.cbrt(mean + amplitude * np.sin(2.0 * np.pi * h))

    fine = np.arange(_FINE_N) / _FINE_N
    m0 = float(np.mean(1.0 / profile(fine)))
    return InitialCondition(
        name=f"sine_cubed(A={amplitude:g},M={mean:g})", profile=profile, m0=m0
    )


def degenerate_sine():
    """u0 = (sin^2(pi h))^(1/3): touches zero at h = 0.

    m0 = int sin(pi h)^(-2/3) dh = Gamma(1/6) / (sqrt(pi) Gamma(2/3)),
    an integrable endpoint singularity the node quadrature cannot see.
    """

    def profile(h):
        return np.cbrt(np.sin(np.pi * h) ** 2)

    m0 = math.gamma(1.0 / 6.0) / (math.sqrt(math.pi) * math.gamma(2.0 / 3.0))
    return InitialCondition(name="degenerate_sine", profile=profile, m0=m0)


def perturbed_uniform_positions(n_steps, amplitude, seed, big_l=1.0):
    """Uniform step train with seeded jitter; stays strictly ordered.

    Each position moves by amplitude * spacing * (r - 1/2) with r from the
    xorshift64* stream, so adjacent gaps keep at least (1 - amplitude) of
    the uniform spacing.
    """
    if not (0.0 <= amplitude < 1.0):
        raise ConfigError("step perturbation amplitude must lie in [0, 1)")
    if n_steps < 4:
        raise ConfigError("step experiments need at least 4 steps")
    generator = XorShift64Star(seed)
    spacing = big_l / n_steps
    jitter = np.array(generator.uniforms(n_steps)) - 0.5
    return spacing * np.arange(n_steps) + amplitude * spacing * jitter


def from_config(spec):
    """Build an InitialCondition from the JSON ``initial`` object.

    Step-train initials are handled separately by the harness; this covers
    the field-valued families.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("initial must be a one-key object")
    kind, params = next(iter(spec.items()))
    params = params or {}
    if kind == "constant":
        return constant(float(params.get("c", 1.0)))
    if kind == "sine_cubed":
        if "A" not in params or "M" not in params:
            raise ConfigError("sine_cubed needs fields A and M")
        return sine_cubed(float(params["A"]), float(params["M"]))
    if kind == "degenerate_sine":
        return degenerate_sine()
    raise ConfigError(f"unknown initial condition {kind!r}")
