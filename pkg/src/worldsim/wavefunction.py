"""Wavefunctions on a grid and the static measures derived from them.

The central quantities:

* ``density``: rho = |Psi|^2 summed over spin components, the density of
  worlds over configuration space.
* ``current``: j_d = (hbar / m_d) Im(Psi* d_d Psi), the conserved flow
  associated with rho by the continuity equation.
* ``world_volume``: mu(Q) = integral of rho over a region Q, evaluated by
  midpoint quadrature on cell centers.
* ``probability``: P(Q) = mu(Q) / mu(everything), well defined for any
  nonzero wavefunction regardless of normalization.

All operations are pure; wavefunction values are read-only snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, spectral_derivative


@dataclass(frozen=True)
class Wavefunction:
    """Complex amplitude field over a grid, scalar or two-component spinor.

    ``values`` has shape ``grid.shape`` for a scalar state or
    ``(2,) + grid.shape`` for a spinor. Amplitudes are dimensionless; densities
    acquire units through the quadrature weight ``grid.cell_volume``.
    """

    grid: Grid
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.shape == self.grid.shape:
            pass
        elif vals.shape == (2,) + self.grid.shape:
            pass
        else:
            raise ValueError(
                f"values shape {vals.shape} matches neither {self.grid.shape} "
                f"nor {(2,) + self.grid.shape}"
            )
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("wavefunction values contain NaN or Inf")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_tag", float(self.time_tag))

    @property
    def components(self) -> int:
        return 1 if self.values.shape == self.grid.shape else 2

    @property
    def is_spinor(self) -> bool:
        return self.components == 2

    def component_stack(self) -> np.ndarray:
        """View of the values with an explicit leading component axis."""
        if self.is_spinor:
            return self.values
        return self.values[np.newaxis]

    def with_values(self, values: np.ndarray, time_tag: float | None = None) -> "Wavefunction":
        return Wavefunction(self.grid, values, self.time_tag if time_tag is None else time_tag)


@dataclass(frozen=True)
class Region:
    """Measurable subset of configuration space as a boolean cell mask."""

    grid: Grid
    mask: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {mask.shape} != grid shape {self.grid.shape}")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def full(cls, grid: Grid) -> "Region":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def empty(cls, grid: Grid) -> "Region":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def box(cls, grid: Grid, bounds) -> "Region":
        """Cells whose centers lie in the product of per-dimension intervals.

        ``bounds`` is a sequence of ``(lo, hi)`` pairs or None for a dimension
        without restriction; intervals are half-open like the grid box.
        """
        mask = np.ones(grid.shape, dtype=bool)
        for d, b in enumerate(bounds):
            if b is None:
                continue
            x = grid.broadcast_axes()[d]
            mask &= (x >= b[0]) & (x < b[1])
        return cls(grid, mask)

    def __or__(self, other: "Region") -> "Region":
        _check_same_grid(self.grid, other.grid)
        return Region(self.grid, self.mask | other.mask)

    def __and__(self, other: "Region") -> "Region":
        _check_same_grid(self.grid, other.grid)
        return Region(self.grid, self.mask & other.mask)

    def __invert__(self) -> "Region":
        return Region(self.grid, ~self.mask)

    @property
    def cell_count(self) -> int:
        return int(self.mask.sum())


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError("grid mismatch")


def density(psi: Wavefunction) -> np.ndarray:
    """Per-cell world density rho = sum over components of |value|^2."""
    stack = psi.component_stack()
    return np.sum(stack.real**2 + stack.imag**2, axis=0)


def current(psi: Wavefunction, masses, hbar: float = 1.0) -> np.ndarray:
    """Probability current, one real field per configuration coordinate.

    j_d = (hbar / m_d) Im(Psi* d_d Psi), summed over spin components; the
    gradient is evaluated spectrally. Vanishes identically for real states and
    wherever Psi = 0.
    """
    masses = _as_masses(masses, psi.grid.dims)
    stack = psi.component_stack()
    out = np.empty((psi.grid.dims,) + psi.grid.shape, dtype=np.float64)
    for d in range(psi.grid.dims):
        grad = spectral_derivative(stack, psi.grid, d)
        jd = np.sum(np.imag(np.conj(stack) * grad), axis=0)
        out[d] = (hbar / masses[d]) * jd
    return out


def _as_masses(masses, dims: int) -> np.ndarray:
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    if m.size == 1:
        m = np.full(dims, m[0])
    if m.shape != (dims,):
        raise ValueError(f"need {dims} masses, got shape {m.shape}")
    if np.any(m <= 0):
        raise ValueError("masses must be positive")
    return m


def world_volume(psi: Wavefunction, region: Region) -> float:
    """Amount of worlds in a region: quadrature of rho over the region's cells."""
    _check_same_grid(psi.grid, region.grid)
    rho = density(psi)
    return float(rho[region.mask].sum() * psi.grid.cell_volume)


def total_volume(psi: Wavefunction) -> float:
    return float(density(psi).sum() * psi.grid.cell_volume)


def probability(psi: Wavefunction, region: Region) -> float:
    """Fraction of worlds whose configuration lies in the region.

    Invariant under rescaling Psi -> c Psi for any complex c != 0; requires a
    nonzero total world volume.
    """
    total = total_volume(psi)
    if total <= 0.0:
        raise ValueError("zero total world volume")
    return world_volume(psi, region) / total


def inner_product(a: Wavefunction, b: Wavefunction) -> complex:
    """Quadrature inner product <a|b>, conjugate-linear in the first slot."""
    _check_same_grid(a.grid, b.grid)
    if a.components != b.components:
        raise ValueError("component count mismatch")
    return complex(np.vdot(a.values, b.values) * a.grid.cell_volume)


def norm(psi: Wavefunction) -> float:
    return float(np.sqrt(inner_product(psi, psi).real))


def normalized(psi: Wavefunction) -> Wavefunction:
    n = norm(psi)
    if n == 0.0:
        raise ValueError("cannot normalize the zero wavefunction")
    return psi.with_values(psi.values / n)


def edge_mass(psi: Wavefunction, fraction: float = 0.05) -> float:
    """Fraction of |Psi|^2 in the outer shell of the box.

    Values above ~1e-6 indicate that periodic wrap-around is about to
    contaminate the dynamics.
    """
    rho = density(psi)
    mask = psi.grid.edge_mask(fraction)
    total = rho.sum()
    if total == 0.0:
        return 0.0
    return float(rho[mask].sum() / total)
