"""Projection of the configuration-space world density to physical space.

A layout assigns each grid dimension to one particle's spatial coordinate
(desk scale: one axis per particle, a shared 1-D physical axis). The physical
particle density is the sum over particles of the marginal of rho over all
other coordinates; integrating it over a physical region and normalizing by
the total world volume gives the expected particle count there.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid
from .wavefunction import Region, Wavefunction, density, total_volume


def _check_layout(grid: Grid, layout) -> list[tuple[int, ...]]:
    """Layout = one tuple of grid dimensions per particle, congruent per axis."""
    particles = [tuple(int(d) for d in np.atleast_1d(dims)) for dims in layout]
    if not particles:
        raise ValueError("layout assigns no particles")
    axes_count = len(particles[0])
    used: list[int] = []
    for dims in particles:
        if len(dims) != axes_count:
            raise ValueError("all particles must use the same number of axes")
        used.extend(dims)
    if sorted(used) != list(range(grid.dims)):
        raise ValueError(
            f"layout must use every grid dimension exactly once, got {sorted(used)}"
        )
    ref = particles[0]
    for dims in particles[1:]:
        for a, (da, db) in enumerate(zip(ref, dims)):
            same = (
                grid.lo[da] == grid.lo[db]
                and grid.hi[da] == grid.hi[db]
                and grid.points[da] == grid.points[db]
            )
            if not same:
                raise ValueError(
                    f"axis {a}: dimensions {da} and {db} are not congruent"
                )
    return particles


def physical_grid(grid: Grid, layout) -> Grid:
    """The shared physical axis grid implied by a layout."""
    particles = _check_layout(grid, layout)
    dims = particles[0]
    return Grid(
        lo=tuple(grid.lo[d] for d in dims),
        hi=tuple(grid.hi[d] for d in dims),
        points=tuple(grid.points[d] for d in dims),
    )


def particle_density(psi: Wavefunction, layout) -> tuple[Grid, np.ndarray]:
    """Sum over particles of the marginal world density on the physical axis.

    Integrates to N * mu(everything) over the axis, where N is the particle
    count; nonnegative everywhere.
    """
    grid = psi.grid
    particles = _check_layout(grid, layout)
    phys = physical_grid(grid, layout)
    rho = density(psi)
    out = np.zeros(phys.shape)
    for dims in particles:
        others = tuple(d for d in range(grid.dims) if d not in dims)
        weight = float(np.prod([grid.spacing[d] for d in others])) if others else 1.0
        marginal = rho.sum(axis=others) if others else rho
        # rho.sum drops the summed axes; reorder the survivors to axis order
        survivors = [d for d in range(grid.dims) if d not in others]
        perm = [survivors.index(d) for d in dims]
        out = out + weight * np.transpose(marginal, perm)
    return phys, out


def expected_particle_count(psi: Wavefunction, region: Region, layout) -> float:
    """Expected number of particles found in a region of physical space."""
    phys, dens = particle_density(psi, layout)
    if region.grid != phys:
        raise ValueError("region does not live on the layout's physical grid")
    total = total_volume(psi)
    if total <= 0.0:
        raise ValueError("zero total world volume")
    return float(dens[region.mask].sum() * phys.cell_volume / total)
