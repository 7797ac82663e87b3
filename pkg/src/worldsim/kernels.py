"""Backend selection for the world-transport kernel.

The compiled extension (``worldsim._advect``) is preferred when it imported
cleanly and the grid dimension is covered by its specializations (1-D, 2-D);
otherwise the NumPy fallback runs. Both produce bit-identical results. Set
``SIM_DISABLE_EXT=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _advect_py

_ext = None
if os.environ.get("SIM_DISABLE_EXT", "") in ("", "0"):
    try:
        from . import _advect as _ext  # type: ignore[no-redef]
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"


def rk4_substep(pos, alive, vel0, vel1, rho0, rho1, s0, sh, s1, h, lo, dx, eps) -> None:
    """Advance the ensemble by one RK4 substep (in place)."""
    ndim = pos.shape[1]
    if _ext is not None and ndim == 1:
        _ext.rk4_substep_1d(
            pos, alive, vel0[0], vel1[0], rho0, rho1, s0, sh, s1, h, lo[0], dx[0], eps
        )
    elif _ext is not None and ndim == 2:
        _ext.rk4_substep_2d(
            pos, alive, vel0[0], vel0[1], vel1[0], vel1[1], rho0, rho1,
            s0, sh, s1, h, lo[0], lo[1], dx[0], dx[1], eps,
        )
    else:
        _advect_py.rk4_substep(
            pos, alive, vel0, vel1, rho0, rho1, s0, sh, s1, h, lo, dx, eps
        )
