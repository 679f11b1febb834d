"""Uniform periodic grids and field containers.

Fields are node-based: sample i sits at ``i * spacing`` for
``i = 0 .. n-1`` and the point at ``length`` is identified with the one at
``0``.  Two container types exist:

- :class:`PeriodicField` for genuinely periodic samples, and
- :class:`WindingField` for profiles that gain a fixed increment per
  period (a height profile gains 1 over a period of length L; an inverse
  profile gains L over a period of length 1).

All difference operators are second-order central stencils; quadrature is
the periodic rectangle rule (equivalently the trapezoid rule on a periodic
grid), which is exact for trigonometric polynomials of degree < n.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

MIN_POINTS = 8  # the 5-point fourth-difference stencil needs room to breathe


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid with n nodes on a periodic domain of given length."""

    n: int
    length: float
    spacing: float = field(init=False)

    def __post_init__(self):
        if self.n < MIN_POINTS:
            raise ValueError(f"grid too small: n={self.n} < {MIN_POINTS}")
        if not (self.length > 0.0):
            raise ValueError(f"grid length must be positive, got {self.length}")
        object.__setattr__(self, "spacing", self.length / self.n)

    @property
    def nodes(self):
        """Node coordinates i * spacing, i = 0 .. n-1."""
        return np.arange(self.n) * self.spacing


def make_grid(n, length):
    """Construct a PeriodicGrid, rejecting n < 8 or non-positive length."""
    return PeriodicGrid(int(n), float(length))


def _validated_values(grid, values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PeriodicField:
    """Samples of a periodic function at the grid nodes (immutable)."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _validated_values(self.grid, self.values))

    def with_values(self, values):
        return PeriodicField(self.grid, values)

    def min(self):
        return float(np.min(self.values))

    def max(self):
        return float(np.max(self.values))


@dataclass(frozen=True)
class WindingField:
    """Samples of a function with a fixed increment (winding) per period.

    ``values`` holds the full samples; the periodic part is
    ``values - winding * nodes / length``, and first differences add the
    exact mean slope ``winding / length`` back, so the period seam never
    sees an O(1) jump.
    """

    grid: PeriodicGrid
    values: np.ndarray
    winding: float

    def __post_init__(self):
        object.__setattr__(self, "values", _validated_values(self.grid, self.values))

    def periodic_part(self):
        ramp = self.winding * np.arange(self.grid.n) / self.grid.n
        return self.values - ramp

    def with_values(self, values):
        return WindingField(self.grid, values, self.winding)


def sample(grid, fn):
    """Evaluate a callable at the grid nodes and wrap it as a field."""
    return PeriodicField(grid, fn(grid.nodes))


def diff1(f):
    """Central first derivative of a periodic field."""
    return f.with_values(kernels.diff1(f.values, f.grid.spacing))


def diff1_winding(f):
    """First derivative of a winding field: periodic part + mean slope."""
    per = kernels.diff1(f.periodic_part(), f.grid.spacing)
    return PeriodicField(f.grid, per + f.winding / f.grid.length)


def diff2(f):
    """Central second derivative; annihilates constants exactly."""
    return f.with_values(kernels.diff2(f.values, f.grid.spacing))


def diff4(f):
    """5-point fourth derivative; equals diff2 applied twice to roundoff."""
    return f.with_values(kernels.diff4(f.values, f.grid.spacing))


def integrate(f):
    """Periodic rectangle rule: sum(values) * spacing."""
    return float(np.sum(f.values) * f.grid.spacing)


def integrate_values(values, spacing):
    """Rectangle rule on a bare array (same rule as :func:`integrate`)."""
    return float(np.sum(values) * spacing)


def resample(f, n_new):
    """Linear interpolation of the periodic extension onto a finer/coarser grid.

    Linear (not spectral) interpolation keeps positive fields positive.
    """
    n_new = int(n_new)
    if n_new < MIN_POINTS:
        raise ValueError(f"grid too small: n={n_new} < {MIN_POINTS}")
    n_old = f.grid.n
    if n_new == n_old:
        return PeriodicField(f.grid, f.values)
    pos = np.arange(n_new) * (n_old / n_new)
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    i0 = i0 % n_old
    i1 = (i0 + 1) % n_old
    vals = (1.0 - frac) * f.values[i0] + frac * f.values[i1]
    return PeriodicField(make_grid(n_new, f.grid.length), vals)


def interp_periodic(values, length, x):
    """Linearly interpolate periodic node samples at arbitrary positions."""
    n = len(values)
    spacing = length / n
    pos = np.asarray(x, dtype=np.float64) / spacing
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    i0 = i0 % n
    i1 = (i0 + 1) % n
    return (1.0 - frac) * values[i0] + frac * values[i1]
