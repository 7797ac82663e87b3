"""Library of parameterized initial states.

Conventions: ``gaussian`` uses the amplitude width sigma, i.e.
Psi ~ exp(-(x - c)^2 / (2 sigma^2)), so the density variance is sigma^2 / 2.
All builders return unit-norm states unless noted.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Grid
from .wavefunction import Wavefunction, normalized


def gaussian(grid: Grid, center=0.0, width=1.0, boost=None, time_tag: float = 0.0) -> Wavefunction:
    """Gaussian packet, optionally boosted by a plane-wave phase exp(i k . x)."""
    cen = np.broadcast_to(np.asarray(center, dtype=float), (grid.dims,))
    wid = np.broadcast_to(np.asarray(width, dtype=float), (grid.dims,))
    if np.any(wid <= 0):
        raise ValueError("width must be positive")
    vals = np.ones(grid.shape, dtype=np.complex128)
    for d, x in enumerate(grid.broadcast_axes()):
        vals = vals * np.exp(-((x - cen[d]) ** 2) / (2.0 * wid[d] ** 2))
    if boost is not None:
        k = np.broadcast_to(np.asarray(boost, dtype=float), (grid.dims,))
        for d, x in enumerate(grid.broadcast_axes()):
            vals = vals * np.exp(1j * k[d] * x)
    return normalized(Wavefunction(grid, vals, time_tag=time_tag))


def plane_wave(grid: Grid, modes, time_tag: float = 0.0) -> Wavefunction:
    """Periodic plane wave exp(i k . x) with k_d = 2 pi m_d / L_d.

    ``modes`` are integers, so the wave is exactly one spectral mode of the
    grid (the clean eigenstate of the free propagator).
    """
    m = np.broadcast_to(np.asarray(modes, dtype=int), (grid.dims,))
    vals = np.ones(grid.shape, dtype=np.complex128)
    for d, x in enumerate(grid.broadcast_axes()):
        k = 2.0 * np.pi * m[d] / grid.lengths[d]
        vals = vals * np.exp(1j * k * x)
    return normalized(Wavefunction(grid, vals, time_tag=time_tag))


def superposition(terms, normalize: bool = True, time_tag: float | None = None) -> Wavefunction:
    """Linear combination sum_i c_i psi_i of states on a common grid."""
    terms = list(terms)
    if not terms:
        raise ValueError("superposition needs at least one term")
    grid = terms[0][1].grid
    comps = terms[0][1].components
    vals = np.zeros_like(terms[0][1].values)
    for c, psi in terms:
        if psi.grid != grid or psi.components != comps:
            raise ValueError("superposition terms live on different grids")
        vals = vals + complex(c) * psi.values
    tag = terms[0][1].time_tag if time_tag is None else time_tag
    out = Wavefunction(grid, vals, time_tag=tag)
    return normalized(out) if normalize else out


def harmonic_eigenstate(
    grid: Grid, n: int, omega: float = 1.0, mass: float = 1.0,
    center: float = 0.0, hbar: float = 1.0, time_tag: float = 0.0,
) -> Wavefunction:
    """n-th oscillator eigenstate on a 1-D grid (physicists' Hermite functions)."""
    if grid.dims != 1:
        raise ValueError("harmonic_eigenstate is one-dimensional")
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = grid.axis(0) - center
    a = mass * omega / hbar
    xi = np.sqrt(a) * x
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    hn = np.polynomial.hermite.hermval(xi, coeffs)
    pref = (a / np.pi) ** 0.25 / math.sqrt(2.0**n * math.factorial(n))
    vals = pref * hn * np.exp(-0.5 * xi**2)
    return normalized(Wavefunction(grid, vals.astype(np.complex128), time_tag=time_tag))


def bump(grid: Grid, center: float, halfwidth: float, time_tag: float = 0.0) -> Wavefunction:
    """Compactly supported C-infinity bump, exactly zero for |x - c| >= halfwidth."""
    if grid.dims != 1:
        raise ValueError("bump is one-dimensional")
    u = (grid.axis(0) - center) / halfwidth
    vals = np.zeros(grid.points[0])
    inside = np.abs(u) < 1.0
    vals[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return normalized(Wavefunction(grid, vals.astype(np.complex128), time_tag=time_tag))


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """C-infinity monotone step: 0 for s <= 0, 1 for s >= 1."""
    out = np.zeros_like(s)
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    fa = np.exp(-1.0 / sm)
    fb = np.exp(-1.0 / (1.0 - sm))
    out[mid] = fa / (fa + fb)
    out[s >= 1.0] = 1.0
    return out


def flattop_gaussian(
    grid: Grid, center: float, sigma: float, halfwidth: float,
    core: float = 0.7, time_tag: float = 0.0,
) -> Wavefunction:
    """Gaussian multiplied by a flat-top C-infinity window of compact support.

    The window equals 1 for |x - c| <= core * halfwidth and 0 beyond halfwidth,
    so the state has exactly compact support while staying numerically
    indistinguishable from the Gaussian when the tail already decayed inside
    the transition zone (choose halfwidth >= ~8 sigma for that). This is the
    pointer-lobe shape of choice: disjoint supports, negligible radiation
    under evolution.
    """
    if grid.dims != 1:
        raise ValueError("flattop_gaussian is one-dimensional")
    if not 0.0 < core < 1.0:
        raise ValueError("core must be in (0, 1)")
    x = grid.axis(0)
    u = np.abs(x - center) / halfwidth
    window = _smoothstep((1.0 - u) / (1.0 - core))
    vals = np.exp(-((x - center) ** 2) / (2.0 * sigma**2)) * window
    return normalized(Wavefunction(grid, vals.astype(np.complex128), time_tag=time_tag))


def spinor(coefficients, spatial: Wavefunction, time_tag: float | None = None) -> Wavefunction:
    """Two-component state (a, b) * chi(x) from spin coefficients and a scalar state."""
    a, b = (complex(c) for c in coefficients)
    if spatial.is_spinor:
        raise ValueError("spatial factor must be a scalar state")
    vals = np.stack([a * spatial.values, b * spatial.values])
    tag = spatial.time_tag if time_tag is None else time_tag
    return Wavefunction(spatial.grid, vals, time_tag=tag)
