"""Kernel backend selection.

The compiled extension (``_core``, Cython) is preferred when it imported
cleanly; otherwise the NumPy reference implementation is used.  Setting the
environment variable ``VICINAL_PURE_PYTHON`` (to anything non-empty) before
import forces the reference backend, which is what the benchmark and the
backend-equivalence tests use.

Both backends expose the same names with identical semantics:

- diff1, diff2, diff4: periodic central differences on raw arrays
- mobility, pde_rhs, max_diffusivity, cfl_dt: slope-equation pieces
- rk4_pde_step, rk4_pde_run: explicit stepping (single step / CFL loop)
- RUN_OK / RUN_DT_UNDERFLOW / RUN_NONFINITE: run-loop status codes
"""

import os

from . import reference

if os.environ.get("VICINAL_PURE_PYTHON"):
    _backend = reference
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = reference

BACKEND = _backend.BACKEND_NAME

RUN_OK = reference.RUN_OK
RUN_DT_UNDERFLOW = reference.RUN_DT_UNDERFLOW
RUN_NONFINITE = reference.RUN_NONFINITE

diff1 = _backend.diff1
diff2 = _backend.diff2
diff4 = _backend.diff4
mobility = _backend.mobility
pde_rhs = _backend.pde_rhs
max_diffusivity = _backend.max_diffusivity
cfl_dt = _backend.cfl_dt
rk4_pde_step = _backend.rk4_pde_step
rk4_pde_run = _backend.rk4_pde_run
