"""Step-flow and continuum slope dynamics on periodic vicinal surfaces.

Subpackages and modules:

- :mod:`vicinal.grid` -- periodic grids, fields, stencil operators
- :mod:`vicinal.steps` -- discrete step-train dynamics (ADL/DL/general laws)
- :mod:`vicinal.solver` -- explicit and semi-implicit slope-equation steppers
- :mod:`vicinal.energetics` -- functionals, conserved integrals, bound checks
- :mod:`vicinal.formulations` -- the four equivalent surface descriptions
- :mod:`vicinal.harness` -- experiment configs, persistence, orchestration
- :mod:`vicinal.checks` -- the acceptance suite behind ``vicinal check``
- :mod:`vicinal.kernels` -- compiled/NumPy backends for the hot loops
"""

__version__ = "0.1.0"

from . import energetics, formulations, grid, harness, kernels, solver, steps
from .errors import (
    CollisionDetected,
    ConfigError,
    NonFinite,
    NumericalError,
    SingularSystem,
    StepSizeUnderflow,
    VicinalError,
)

__all__ = [
    "__version__",
    "energetics",
    "formulations",
    "grid",
    "harness",
    "kernels",
    "solver",
    "steps",
    "CollisionDetected",
    "ConfigError",
    "NonFinite",
    "NumericalError",
    "SingularSystem",
    "StepSizeUnderflow",
    "VicinalError",
]
