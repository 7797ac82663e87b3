"""Spin-1/2 measurement with spinor states and a pointer system.

The observed particle carries a two-component wavefunction (psi_up, psi_down)
over X. An idealized Stern-Gerlach transition entangles the spin components
with pointer states phi_up, phi_down of disjoint support on Y, after which the
up/down outcome probabilities are world volumes of X x Y_up and X x Y_down
computed with the summed-component density. For a disentangled input
(alpha, beta) chi(x) they reduce to |alpha|^2 and |beta|^2.

Worlds are configurations only; there is no per-world spin label. Sampling and
readout therefore use the summed-component density throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelViolationError
from .grid import Grid, product_grid
from .measurement import _min_gap_cells, _support_mask, _tensor, POINTER_GAP_CELLS, SPAN_TOLERANCE
from .wavefunction import Region, Wavefunction, density, norm, probability
from .worlds import WorldEnsemble, substream


@dataclass(frozen=True)
class SpinSetup:
    """System spinor factor plus pointer geometry for one spin measurement.

    Either pass spin coefficients (alpha, beta) with a scalar spatial state
    ``chi``, or an already entangled pair of spatial components via
    :meth:`entangled`.
    """

    system_grid: Grid
    pointer_grid: Grid
    up_component: Wavefunction
    down_component: Wavefunction
    pointer_initial: Wavefunction
    pointer_up: Wavefunction
    pointer_down: Wavefunction
    support_up: np.ndarray = field(init=False, repr=False)
    support_down: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.pointer_grid.dims != 1:
            raise ValueError("pointer space must be one-dimensional")
        for psi in (self.up_component, self.down_component):
            if psi.grid != self.system_grid or psi.is_spinor:
                raise ValueError("spin components must be scalar states on the system grid")
        for phi in (self.pointer_initial, self.pointer_up, self.pointer_down):
            if phi.grid != self.pointer_grid or phi.is_spinor:
                raise ValueError("pointer states must be scalar states on the pointer grid")
        n0 = norm(self.pointer_initial)
        if abs(norm(self.pointer_up) - n0) > 1e-10 or abs(norm(self.pointer_down) - n0) > 1e-10:
            raise ValueError("pointer states must share the initial pointer norm")
        up = _support_mask(self.pointer_up)
        down = _support_mask(self.pointer_down)
        if (up & down).any():
            raise ValueError("pointer supports overlap")
        if _min_gap_cells(up, down) <= POINTER_GAP_CELLS:
            raise ValueError("pointer supports are not separated by an empty cell")
        object.__setattr__(self, "support_up", up)
        object.__setattr__(self, "support_down", down)

    @classmethod
    def from_coefficients(
        cls, alpha, beta, chi: Wavefunction,
        pointer_initial: Wavefunction, pointer_up: Wavefunction, pointer_down: Wavefunction,
    ) -> "SpinSetup":
        if chi.is_spinor:
            raise ValueError("chi must be a scalar state")
        return cls(
            system_grid=chi.grid,
            pointer_grid=pointer_initial.grid,
            up_component=chi.with_values(complex(alpha) * chi.values),
            down_component=chi.with_values(complex(beta) * chi.values),
            pointer_initial=pointer_initial,
            pointer_up=pointer_up,
            pointer_down=pointer_down,
        )

    @classmethod
    def entangled(
        cls, psi_up: Wavefunction, psi_down: Wavefunction,
        pointer_initial: Wavefunction, pointer_up: Wavefunction, pointer_down: Wavefunction,
    ) -> "SpinSetup":
        return cls(
            system_grid=psi_up.grid,
            pointer_grid=pointer_initial.grid,
            up_component=psi_up,
            down_component=psi_down,
            pointer_initial=pointer_initial,
            pointer_up=pointer_up,
            pointer_down=pointer_down,
        )

    def joint_grid(self) -> Grid:
        return product_grid(self.system_grid, self.pointer_grid)

    def outcome_region(self, up: bool) -> Region:
        joint = self.joint_grid()
        mask1d = self.support_up if up else self.support_down
        shape = (1,) * self.system_grid.dims + self.pointer_grid.shape
        return Region(joint, np.broadcast_to(mask1d.reshape(shape), joint.shape).copy())


def spin_premeasurement(setup: SpinSetup) -> Wavefunction:
    """Spinor product state (psi_up, psi_down) tensor phi_0 on X x Y."""
    joint = setup.joint_grid()
    phi0 = setup.pointer_initial.values
    vals = np.stack(
        [
            _tensor(setup.up_component.values, phi0),
            _tensor(setup.down_component.values, phi0),
        ]
    )
    return Wavefunction(joint, vals)


def stern_gerlach_measure(psi: Wavefunction, setup: SpinSetup) -> Wavefunction:
    """Idealized transition to (psi_up (x) phi_up, psi_down (x) phi_down).

    The input must be a spinor product with the initial pointer state; a
    residual beyond tolerance is a model violation. Norm is preserved.
    """
    joint = setup.joint_grid()
    if psi.grid != joint or not psi.is_spinor:
        raise ValueError("state must be a spinor on the setup's joint grid")
    phi0 = setup.pointer_initial.values
    phi0_sq = float(np.vdot(phi0, phi0).real * setup.pointer_grid.cell_volume)
    x_axes = tuple(range(setup.system_grid.dims))
    comps = []
    recon = np.empty_like(psi.values)
    for c in range(2):
        c_y_given_x = psi.values[c]
        # project the Y factor onto phi_0, leaving the spatial component
        sys_vals = np.tensordot(c_y_given_x, np.conj(phi0), axes=([psi.grid.dims - 1], [0]))
        sys_vals *= setup.pointer_grid.cell_volume / phi0_sq
        comps.append(sys_vals)
        recon[c] = _tensor(sys_vals, phi0)
    residual = float(np.linalg.norm((psi.values - recon).ravel())) * np.sqrt(joint.cell_volume)
    scale = norm(psi)
    if scale == 0.0 or residual > SPAN_TOLERANCE * scale:
        raise ModelViolationError(
            f"input is not a spinor product with the initial pointer "
            f"(relative residual {residual / scale if scale else np.inf:.2e})"
        )
    post = np.stack(
        [
            _tensor(comps[0], setup.pointer_up.values),
            _tensor(comps[1], setup.pointer_down.values),
        ]
    )
    return Wavefunction(joint, post, time_tag=psi.time_tag)


def spin_probabilities(psi_post: Wavefunction, setup: SpinSetup) -> tuple[float, float]:
    """(P_up, P_down) as world volumes of X x Y_up and X x Y_down.

    Uses the summed-component density; for a valid post-measurement state the
    two probabilities sum to one.
    """
    p_up = probability(psi_post, setup.outcome_region(True))
    p_down = probability(psi_post, setup.outcome_region(False))
    return float(p_up), float(p_down)


def spin_readout(world, setup: SpinSetup) -> str | None:
    """"up", "down", or None for a configuration point on X x Y."""
    q = np.asarray(world, dtype=float)
    y = q[setup.system_grid.dims :]
    cell = setup.pointer_grid.locate_cell(y)
    if cell is None:
        return None
    if setup.support_up[cell]:
        return "up"
    if setup.support_down[cell]:
        return "down"
    return None


def spin_readout_frequencies(
    ensemble: WorldEnsemble, setup: SpinSetup
) -> tuple[float, float, float]:
    """(up, down, neither) fractions over alive worlds."""
    live = ensemble.alive
    if not live.any():
        raise ValueError("no alive worlds")
    y = ensemble.positions[live, setup.system_grid.dims :]
    idx, inside = setup.pointer_grid.locate_cells(y)
    up = inside & setup.support_up[idx[:, 0]]
    down = inside & setup.support_down[idx[:, 0]]
    total = float(live.sum())
    return float(up.sum() / total), float(down.sum() / total), float((~(up | down)).sum() / total)


def carry_through_spin_measurement(
    ensemble: WorldEnsemble, setup: SpinSetup, seed: int
) -> WorldEnsemble:
    """Carry worlds through the spin transition (X kept, Y resampled).

    Branch attribution weights are the summed-at-x component densities
    |psi_up(x)|^2 and |psi_down(x)|^2; there is no per-world spin label.
    """
    joint = setup.joint_grid()
    if ensemble.dims != joint.dims:
        raise ValueError("ensemble does not live on the setup's joint space")
    dx_sys = setup.system_grid.dims
    pos = ensemble.positions.copy()
    rng = substream(seed, "spin_transition")

    x_idx, _ = setup.system_grid.locate_cells(pos[:, :dx_sys])
    amp_up = setup.up_component.values[tuple(x_idx.T)]
    amp_down = setup.down_component.values[tuple(x_idx.T)]
    w_up = amp_up.real**2 + amp_up.imag**2
    w_down = amp_down.real**2 + amp_down.imag**2
    totals = w_up + w_down
    alive = ensemble.alive & (totals > 0.0)
    pick_up = rng.random(ensemble.count) * np.where(totals > 0.0, totals, 1.0) < w_up

    y_grid = setup.pointer_grid
    y_lo = y_grid.lo[0]
    y_dx = y_grid.spacing[0]
    for phi, sel in (
        (setup.pointer_up, alive & pick_up),
        (setup.pointer_down, alive & ~pick_up),
    ):
        count = int(sel.sum())
        if count == 0:
            continue
        rho = density(phi).ravel()
        cdf = np.cumsum(rho)
        cdf /= cdf[-1]
        cells = np.searchsorted(cdf, rng.random(count), side="right")
        cells = np.minimum(cells, rho.size - 1)
        pos[sel, dx_sys] = y_lo + (cells + rng.random(count)) * y_dx
    return WorldEnsemble(
        positions=pos,
        world_ids=ensemble.world_ids,
        birth_time=ensemble.birth_time,
        rng_seed=ensemble.rng_seed,
        alive=alive,
        time_tag=ensemble.time_tag,
    )
