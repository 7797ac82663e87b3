"""Pure NumPy implementation of the world-transport kernel.

Semantics and floating-point operation order match worldsim._advect (the
compiled extension) exactly:

* fields live on cell centers ``lo + (i + 0.5) dx`` of a periodic grid and are
  interpolated multilinearly with wrap-around;
* time interpolation between the two bracketing snapshot fields is linear,
  evaluated as ``a + s * (b - a)``;
* a world whose interpolated density falls below ``eps`` at the start of a
  substep is frozen in place and marked dead;
* the RK4 increment is accumulated as ``((k1 + 2 k2) + 2 k3) + k4``.
"""

from __future__ import annotations

import numpy as np


def _interp(field: np.ndarray, pts: np.ndarray, lo: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Periodic multilinear interpolation of one scalar field at (M, D) points."""
    ndim = pts.shape[1]
    shape = field.shape
    s = (pts - lo) / dx - 0.5
    i0 = np.floor(s).astype(np.int64)
    w = s - i0
    acc = np.zeros(pts.shape[0])
    for corner in range(2**ndim):
        wgt = np.ones(pts.shape[0])
        idx = []
        for d in range(ndim):
            bit = (corner >> (ndim - 1 - d)) & 1
            wgt = wgt * (w[:, d] if bit else (1.0 - w[:, d]))
            idx.append((i0[:, d] + bit) % shape[d])
        acc = acc + wgt * field[tuple(idx)]
    return acc


def _blend_velocity(vel0, vel1, pts, s, lo, dx) -> np.ndarray:
    out = np.empty_like(pts)
    for d in range(pts.shape[1]):
        a = _interp(vel0[d], pts, lo, dx)
        b = _interp(vel1[d], pts, lo, dx)
        out[:, d] = a + s * (b - a)
    return out


def rk4_substep(pos, alive, vel0, vel1, rho0, rho1, s0, sh, s1, h, lo, dx, eps) -> None:
    """One RK4 substep over the ensemble; mutates ``pos`` and ``alive`` in place.

    ``pos`` is (M, D) float64, ``alive`` (M,) uint8, ``vel*`` (D, *shape),
    ``rho*`` (*shape); ``s0, sh, s1`` are the time-blend weights at the substep
    start, midpoint and end; ``h`` the substep length.
    """
    lo = np.asarray(lo, dtype=float)
    dx = np.asarray(dx, dtype=float)
    live = alive != 0
    ra = _interp(rho0, pos, lo, dx)
    rb = _interp(rho1, pos, lo, dx)
    rho = ra + s0 * (rb - ra)
    alive[live & (rho < eps)] = 0
    live = alive != 0
    if not live.any():
        return
    half_h = 0.5 * h
    h6 = h / 6.0
    k1 = _blend_velocity(vel0, vel1, pos, s0, lo, dx)
    k2 = _blend_velocity(vel0, vel1, pos + half_h * k1, sh, lo, dx)
    k3 = _blend_velocity(vel0, vel1, pos + half_h * k2, sh, lo, dx)
    k4 = _blend_velocity(vel0, vel1, pos + h * k3, s1, lo, dx)
    incr = ((k1 + 2.0 * k2) + 2.0 * k3) + k4
    pos[live] = pos[live] + h6 * incr[live]
