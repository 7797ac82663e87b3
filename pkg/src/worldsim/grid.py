"""Uniform periodic grids over configuration space.

A grid discretizes a D-dimensional box ``[lo_d, hi_d)`` into ``n_d`` cells per
dimension, with field values living on cell centers ``lo_d + (i + 0.5) dx_d``.
All transforms assume periodic boundary conditions, so scenario authors must
keep the support of their states away from the box edges (see
:func:`worldsim.wavefunction.edge_mass` for the diagnostic).

This module also owns the spectral machinery: discrete wavenumbers in FFT
layout and spectrally accurate derivatives of periodic fields.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import MemoryBudgetError

MEMORY_BUDGET_ENV = "SIM_MEM_BUDGET_MB"
_DEFAULT_BUDGET_MB = 1024.0
_BYTES_PER_CELL = 16  # one complex128 value per cell and component

_fft_workers = 1


def set_fft_workers(n: int) -> None:
    """Bound the number of threads used by spectral transforms."""
    global _fft_workers
    _fft_workers = max(1, int(n))


def fft_workers() -> int:
    return _fft_workers


def memory_budget_bytes() -> int:
    """Current cell-storage budget, configurable via ``SIM_MEM_BUDGET_MB``."""
    raw = os.environ.get(MEMORY_BUDGET_ENV)
    if raw is None:
        mb = _DEFAULT_BUDGET_MB
    else:
        try:
            mb = float(raw)
        except ValueError as exc:
            raise MemoryBudgetError(f"cannot parse {MEMORY_BUDGET_ENV}={raw!r}") from exc
    return int(mb * 1024 * 1024)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Immutable uniform periodic discretization of a configuration-space box.

    Attributes
    ----------
    lo, hi : per-dimension interval bounds, the box is ``[lo_d, hi_d)``
    points : per-dimension cell count, a power of two >= 8
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.lo) == len(self.hi) == len(self.points)):
            raise ValueError("extent and points must have the same length")
        if len(self.points) < 1:
            raise ValueError("grid needs at least one dimension")
        for d, (a, b, n) in enumerate(zip(self.lo, self.hi, self.points)):
            if not (np.isfinite(a) and np.isfinite(b)) or not b > a:
                raise ValueError(f"dimension {d}: interval [{a}, {b}) is empty or invalid")
            if n < 8 or not _is_power_of_two(int(n)):
                raise ValueError(f"dimension {d}: points={n} must be a power of two >= 8")
        cells = int(np.prod(self.points, dtype=np.int64))
        budget = memory_budget_bytes()
        if cells * _BYTES_PER_CELL > budget:
            raise MemoryBudgetError(
                f"grid with {cells} cells needs {cells * _BYTES_PER_CELL} bytes, "
                f"budget is {budget} (set {MEMORY_BUDGET_ENV} to raise it)"
            )

    @property
    def dims(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / n for a, b, n in zip(self.lo, self.hi, self.points))

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.points, dtype=np.int64))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, d: int) -> np.ndarray:
        """Cell-center coordinates along dimension ``d``."""
        dx = self.spacing[d]
        return self.lo[d] + (np.arange(self.points[d]) + 0.5) * dx

    def axes(self) -> list[np.ndarray]:
        return [self.axis(d) for d in range(self.dims)]

    def broadcast_axes(self) -> list[np.ndarray]:
        """Cell-center coordinates shaped for broadcasting over ``shape``."""
        out = []
        for d in range(self.dims):
            shp = [1] * self.dims
            shp[d] = self.points[d]
            out.append(self.axis(d).reshape(shp))
        return out

    def wavenumbers(self) -> list[np.ndarray]:
        """Per-dimension angular wavenumbers ``k = 2 pi f`` in FFT layout.

        Contains k = 0 exactly once per dimension; the Nyquist mode carries the
        negative sign ``-pi/dx`` (asymmetric Nyquist convention), so the sum of
        each dimension's wavenumbers equals that single Nyquist term.
        """
        return [
            2.0 * np.pi * np.fft.fftfreq(n, d=dx)
            for n, dx in zip(self.points, self.spacing)
        ]

    def broadcast_wavenumbers(self) -> list[np.ndarray]:
        out = []
        for d, k in enumerate(self.wavenumbers()):
            shp = [1] * self.dims
            shp[d] = self.points[d]
            out.append(k.reshape(shp))
        return out

    def locate_cell(self, q) -> tuple[int, ...] | None:
        """Multi-index of the cell containing point ``q``, or None when outside.

        Cells are half-open: ``q = lo`` maps to index 0, ``q = hi`` is outside.
        """
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dims,):
            raise ValueError(f"point has shape {q.shape}, expected ({self.dims},)")
        if np.any(np.isnan(q)):
            raise ValueError("point contains NaN")
        idx = []
        for d in range(self.dims):
            if not (self.lo[d] <= q[d] < self.hi[d]):
                return None
            idx.append(int(np.floor((q[d] - self.lo[d]) / self.spacing[d])))
        # guard against floating roundoff at the upper cell edge
        return tuple(min(i, n - 1) for i, n in zip(idx, self.points))

    def locate_cells(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized cell lookup: returns (indices (M, D), inside (M,))."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dims:
            raise ValueError("points must have shape (M, D)")
        if np.any(np.isnan(pts)):
            raise ValueError("points contain NaN")
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        dx = np.asarray(self.spacing)
        inside = np.all((pts >= lo) & (pts < hi), axis=1)
        idx = np.floor((pts - lo) / dx).astype(np.int64)
        np.clip(idx, 0, np.asarray(self.points) - 1, out=idx)
        return idx, inside

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Map positions onto the periodic box (torus coordinates)."""
        pts = np.asarray(points, dtype=float)
        lo = np.asarray(self.lo)
        length = np.asarray(self.lengths)
        return lo + np.mod(pts - lo, length)

    def edge_mask(self, fraction: float = 0.05) -> np.ndarray:
        """Boolean mask of cells within ``fraction`` of either box edge.

        The mask is the union over dimensions and serves the edge-mass
        diagnostic of the periodic propagator.
        """
        mask = np.zeros(self.shape, dtype=bool)
        for d in range(self.dims):
            x = self.broadcast_axes()[d]
            band = fraction * self.lengths[d]
            mask |= (x < self.lo[d] + band) | (x >= self.hi[d] - band)
        return mask


def make_grid(extent, points) -> Grid:
    """Build a :class:`Grid` from per-dimension intervals and cell counts.

    ``extent`` is a sequence of ``(lo, hi)`` pairs interpreted as half-open
    intervals ``[lo, hi)``; ``points`` the matching cell counts.
    """
    extent = list(extent)
    points = list(points)
    if len(extent) != len(points):
        raise ValueError(
            f"extent has {len(extent)} dimensions but points has {len(points)}"
        )
    lo = tuple(float(e[0]) for e in extent)
    hi = tuple(float(e[1]) for e in extent)
    return Grid(lo=lo, hi=hi, points=tuple(int(n) for n in points))


def product_grid(a: Grid, b: Grid) -> Grid:
    """Cartesian product of two grids (configuration space of a joint system)."""
    return Grid(lo=a.lo + b.lo, hi=a.hi + b.hi, points=a.points + b.points)


def fftn(values: np.ndarray, axes) -> np.ndarray:
    return scipy.fft.fftn(values, axes=axes, workers=_fft_workers)


def ifftn(values: np.ndarray, axes) -> np.ndarray:
    return scipy.fft.ifftn(values, axes=axes, workers=_fft_workers)


def spectral_derivative(field: np.ndarray, grid: Grid, dim: int) -> np.ndarray:
    """Spectrally accurate partial derivative of a periodic field along ``dim``.

    ``field`` may carry leading component axes; the grid axes are the trailing
    ``grid.dims`` axes.
    """
    axis = field.ndim - grid.dims + dim
    k = grid.wavenumbers()[dim]
    shp = [1] * field.ndim
    shp[axis] = field.shape[axis]
    fk = scipy.fft.fft(field, axis=axis, workers=_fft_workers)
    fk *= 1j * k.reshape(shp)
    return scipy.fft.ifft(fk, axis=axis, workers=_fft_workers)
