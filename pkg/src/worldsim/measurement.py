"""Ideal measurement: pre/post states, outcome statistics, effective collapse.

A measurement couples an observed system on configuration space X to a pointer
on Y. Expanding the system state over an orthonormal basis {chi_i} with
coefficients alpha_i, the ideal transition replaces the shared initial pointer
state phi_0 by per-branch pointer states phi_i whose supports Y_i are pairwise
disjoint. Outcome probabilities are then computed three independent ways:

* volume route: world volume of X x Y_i over the total volume,
* coefficient route: |alpha_i|^2 / sum_j |alpha_j|^2 (the Born weights),
* frequency route: readout statistics over a transported world ensemble.

The three agree; that agreement is the package's central verification target.

Worlds are carried through the instantaneous transition by keeping their X
coordinate and resampling Y from the attributed branch's pointer density,
with branch attribution by the local posterior weight
|alpha_i chi_i(x)|^2 / sum_j |alpha_j chi_j(x)|^2. This is a modeling
convention (the transition itself has no world-level dynamics here); it
reproduces the post-state distribution exactly when branch supports in X are
disjoint, which the bundled scenarios arrange.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchOverlapError, ModelViolationError, SimulationError
from .evolution import Hamiltonian, evolve
from .grid import Grid, product_grid
from .wavefunction import Region, Wavefunction, density, inner_product, norm, probability, total_volume
from .worlds import WorldEnsemble, advance_worlds, substream

POINTER_GAP_CELLS = 1  # required empty cells between pointer supports
SPAN_TOLERANCE = 1e-8


def _support_mask(psi: Wavefunction) -> np.ndarray:
    return density(psi) > 0.0


def _min_gap_cells(mask_a: np.ndarray, mask_b: np.ndarray) -> int:
    """Smallest periodic index distance between two 1-D support masks."""
    ia = np.flatnonzero(mask_a)
    ib = np.flatnonzero(mask_b)
    n = mask_a.size
    d = np.abs(ia[:, None] - ib[None, :])
    d = np.minimum(d, n - d)
    return int(d.min())


@dataclass(frozen=True)
class MeasurementSetup:
    """Basis, coefficients, pointer geometry and outcome values of one measurement.

    Invariants checked at construction: the basis is orthonormal to 1e-10, all
    pointer states share the norm of the initial pointer state to 1e-10, and
    the pointer supports are pairwise disjoint with at least one empty cell
    between them.
    """

    system_grid: Grid
    pointer_grid: Grid
    basis: tuple[Wavefunction, ...]
    coefficients: np.ndarray
    pointer_initial: Wavefunction
    pointer_states: tuple[Wavefunction, ...]
    outcome_values: np.ndarray
    support_masks: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        basis = tuple(self.basis)
        pointers = tuple(self.pointer_states)
        k = len(basis)
        if k < 1:
            raise ValueError("need at least one basis state")
        coeff = np.asarray(self.coefficients, dtype=np.complex128).reshape(k)
        values = np.asarray(self.outcome_values, dtype=float).reshape(k)
        if len(pointers) != k:
            raise ValueError("need one pointer state per basis state")
        if self.pointer_grid.dims != 1:
            raise ValueError("pointer space must be one-dimensional")
        for chi in basis:
            if chi.grid != self.system_grid or chi.is_spinor:
                raise ValueError("basis states must be scalar states on the system grid")
        for phi in (self.pointer_initial,) + pointers:
            if phi.grid != self.pointer_grid or phi.is_spinor:
                raise ValueError("pointer states must be scalar states on the pointer grid")

        gram = np.array([[inner_product(a, b) for b in basis] for a in basis])
        defect = np.abs(gram - np.eye(k)).max()
        if defect > 1e-10:
            raise ValueError(f"basis is not orthonormal (defect {defect:.2e})")

        n0 = norm(self.pointer_initial)
        for i, phi in enumerate(pointers):
            if abs(norm(phi) - n0) > 1e-10:
                raise ValueError(f"pointer state {i} does not share the initial norm")

        masks = tuple(_support_mask(phi) for phi in pointers)
        for i in range(k):
            if not masks[i].any():
                raise ValueError(f"pointer state {i} has empty support")
            for j in range(i + 1, k):
                if (masks[i] & masks[j]).any():
                    raise ValueError(f"pointer supports {i} and {j} overlap")
                if _min_gap_cells(masks[i], masks[j]) <= POINTER_GAP_CELLS:
                    raise ValueError(
                        f"pointer supports {i} and {j} are not separated by "
                        f"at least {POINTER_GAP_CELLS} empty cell(s)"
                    )
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "pointer_states", pointers)
        object.__setattr__(self, "coefficients", coeff)
        object.__setattr__(self, "outcome_values", values)
        object.__setattr__(self, "support_masks", masks)

    @property
    def branch_count(self) -> int:
        return len(self.basis)

    def joint_grid(self) -> Grid:
        return product_grid(self.system_grid, self.pointer_grid)

    def system_state(self) -> Wavefunction:
        """psi = sum_i alpha_i chi_i on the system grid."""
        vals = np.zeros(self.system_grid.shape, dtype=np.complex128)
        for a, chi in zip(self.coefficients, self.basis):
            vals = vals + a * chi.values
        return Wavefunction(self.system_grid, vals)

    def outcome_region(self, i: int) -> Region:
        """X x Y_i on the joint grid."""
        joint = self.joint_grid()
        shape = (1,) * self.system_grid.dims + self.pointer_grid.shape
        mask = np.broadcast_to(self.support_masks[i].reshape(shape), joint.shape)
        return Region(joint, mask.copy())


def _tensor(system_values: np.ndarray, pointer_values: np.ndarray) -> np.ndarray:
    return np.multiply.outer(system_values, pointer_values)


def premeasurement_state(setup: MeasurementSetup) -> Wavefunction:
    """Product state (sum_i alpha_i chi_i) tensor phi_0 on the joint grid."""
    joint = setup.joint_grid()
    sys_vals = setup.system_state().values
    return Wavefunction(joint, _tensor(sys_vals, setup.pointer_initial.values))


def _project_branch_amplitudes(psi: Wavefunction, setup: MeasurementSetup) -> np.ndarray:
    """<chi_i (x) phi_0 | Psi> / ||phi_0||^2 for each branch."""
    phi0 = setup.pointer_initial.values
    phi0_sq = float(np.vdot(phi0, phi0).real * setup.pointer_grid.cell_volume)
    x_axes = tuple(range(setup.system_grid.dims))
    out = np.empty(setup.branch_count, dtype=np.complex128)
    for i, chi in enumerate(setup.basis):
        # project the X factor, leaving a pointer-space amplitude c_i(y)
        c_y = np.tensordot(np.conj(chi.values), psi.values, axes=(x_axes, x_axes))
        c_y *= setup.system_grid.cell_volume
        out[i] = np.vdot(phi0, c_y) * setup.pointer_grid.cell_volume / phi0_sq
    return out


def apply_ideal_measurement(psi: Wavefunction, setup: MeasurementSetup) -> Wavefunction:
    """Transition sum_i alpha_i chi_i (x) phi_0  ->  sum_i alpha_i chi_i (x) phi_i.

    The input must lie in the span of {chi_i (x) phi_0}; a residual beyond
    1e-8 of the input norm is reported as a model violation. Unitarity of the
    transition shows up as exact norm preservation.
    """
    if psi.grid != setup.joint_grid():
        raise ValueError("state does not live on the setup's joint grid")
    amps = _project_branch_amplitudes(psi, setup)
    recon = np.zeros(psi.grid.shape, dtype=np.complex128)
    for a, chi in zip(amps, setup.basis):
        recon = recon + a * _tensor(chi.values, setup.pointer_initial.values)
    residual = float(np.linalg.norm((psi.values - recon).ravel())) * np.sqrt(psi.grid.cell_volume)
    scale = norm(psi)
    if scale == 0.0 or residual > SPAN_TOLERANCE * scale:
        raise ModelViolationError(
            f"input is outside the span of the pre-measurement model "
            f"(relative residual {residual / scale if scale else np.inf:.2e})"
        )
    post = np.zeros(psi.grid.shape, dtype=np.complex128)
    for a, chi, phi in zip(amps, setup.basis, setup.pointer_states):
        post = post + a * _tensor(chi.values, phi.values)
    return Wavefunction(psi.grid, post, time_tag=psi.time_tag)


def outcome_probabilities(
    psi_post: Wavefunction, setup: MeasurementSetup
) -> tuple[np.ndarray, float]:
    """Volume-route probabilities P_i = mu(X x Y_i) / mu(everything).

    Returns (probabilities, escaped_mass); the escaped mass is whatever
    fraction lies outside every outcome region (ideally zero).
    """
    probs = np.array(
        [probability(psi_post, setup.outcome_region(i)) for i in range(setup.branch_count)]
    )
    return probs, float(1.0 - probs.sum())


def born_reference(setup: MeasurementSetup) -> np.ndarray:
    """Coefficient-route probabilities |alpha_i|^2 / sum_j |alpha_j|^2."""
    w = np.abs(setup.coefficients) ** 2
    total = w.sum()
    if total == 0.0:
        raise ValueError("all coefficients vanish")
    return w / total


def expectation(setup: MeasurementSetup) -> tuple[float, float]:
    """Expected outcome, twice: sum_i p_i a_i and <psi|A psi> / <psi|psi>.

    The operator A = sum_i a_i |chi_i><chi_i| is applied through basis
    projections. Disagreement beyond 1e-8 signals broken orthonormality.
    """
    probs = born_reference(setup)
    prob_route = float(np.dot(probs, setup.outcome_values))
    psi = setup.system_state()
    a_psi = np.zeros(setup.system_grid.shape, dtype=np.complex128)
    for a_i, chi in zip(setup.outcome_values, setup.basis):
        proj = inner_product(chi, psi)
        a_psi = a_psi + a_i * proj * chi.values
    num = inner_product(psi, Wavefunction(setup.system_grid, a_psi)).real
    den = inner_product(psi, psi).real
    op_route = float(num / den)
    if abs(prob_route - op_route) > 1e-8:
        raise SimulationError(
            f"expectation routes disagree: {prob_route!r} vs {op_route!r}"
        )
    return prob_route, op_route


def readout(world, setup: MeasurementSetup) -> int | None:
    """Outcome index whose pointer region contains the world's Y coordinate.

    None when the pointer coordinate lies between regions (or outside the box).
    """
    q = np.asarray(world, dtype=float)
    joint = setup.joint_grid()
    if q.shape != (joint.dims,):
        raise ValueError(f"world must be a point in the {joint.dims}-D joint space")
    y = q[setup.system_grid.dims :]
    cell = setup.pointer_grid.locate_cell(y)
    if cell is None:
        return None
    for i, mask in enumerate(setup.support_masks):
        if mask[cell]:
            return i
    return None


def readout_frequencies(
    ensemble: WorldEnsemble, setup: MeasurementSetup
) -> tuple[np.ndarray, float]:
    """Fraction of alive worlds read off in each outcome region.

    Returns (frequencies over outcomes, fraction outside all regions).
    """
    live = ensemble.alive
    if not live.any():
        raise ValueError("no alive worlds")
    y = ensemble.positions[live, setup.system_grid.dims :]
    idx, inside = setup.pointer_grid.locate_cells(y)
    counts = np.zeros(setup.branch_count)
    matched = np.zeros(idx.shape[0], dtype=bool)
    for i, mask in enumerate(setup.support_masks):
        hit = inside & mask[idx[:, 0]]
        counts[i] = hit.sum()
        matched |= hit
    total = float(live.sum())
    return counts / total, float((~matched).sum() / total)


def carry_through_measurement(
    ensemble: WorldEnsemble, setup: MeasurementSetup, seed: int
) -> WorldEnsemble:
    """Carry worlds through the instantaneous transition (see module notes).

    Each alive world keeps its X coordinate; a branch is drawn from the local
    posterior weights and the Y coordinate is resampled from that branch's
    pointer density. World count and identities are conserved.
    """
    joint = setup.joint_grid()
    if ensemble.dims != joint.dims:
        raise ValueError("ensemble does not live on the setup's joint space")
    dx_sys = setup.system_grid.dims
    pos = ensemble.positions.copy()
    rng = substream(seed, "measurement_transition")

    x_idx, _ = setup.system_grid.locate_cells(pos[:, :dx_sys])
    weights = np.empty((ensemble.count, setup.branch_count))
    for i, (a, chi) in enumerate(zip(setup.coefficients, setup.basis)):
        amp = chi.values[tuple(x_idx.T)]
        weights[:, i] = np.abs(a) ** 2 * (amp.real**2 + amp.imag**2)
    totals = weights.sum(axis=1)
    alive = ensemble.alive & (totals > 0.0)

    cum = np.cumsum(weights, axis=1)
    u_branch = rng.random(ensemble.count)
    draw = u_branch * np.where(totals > 0.0, totals, 1.0)
    branch = (draw[:, None] >= cum).sum(axis=1)
    branch = np.minimum(branch, setup.branch_count - 1)

    y_grid = setup.pointer_grid
    y_lo = y_grid.lo[0]
    y_dx = y_grid.spacing[0]
    for i, phi in enumerate(setup.pointer_states):
        sel = alive & (branch == i)
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


def collapse(psi: Wavefunction, setup: MeasurementSetup, i: int) -> Wavefunction:
    """Branch projection Pi_i Psi = alpha_i chi_i (x) (pointer amplitude).

    No renormalization is applied; probabilities stay well defined for
    non-normalized states. Idempotent by construction.
    """
    if not 0 <= i < setup.branch_count:
        raise ValueError(f"branch index {i} out of range")
    if psi.grid != setup.joint_grid():
        raise ValueError("state does not live on the setup's joint grid")
    x_axes = tuple(range(setup.system_grid.dims))
    chi = setup.basis[i]
    c_y = np.tensordot(np.conj(chi.values), psi.values, axes=(x_axes, x_axes))
    c_y *= setup.system_grid.cell_volume
    out = Wavefunction(psi.grid, _tensor(chi.values, c_y), time_tag=psi.time_tag)
    if norm(out) == 0.0:
        raise SimulationError(f"branch {i} carries zero norm")
    return out


def branch_overlap_mass(full: Wavefunction, collapsed: Wavefunction) -> float:
    """Pointwise min of the branch density and the rest's density, integrated.

    Zero exactly when the collapsed branch and the remainder have disjoint
    supports; used to monitor the effective-collapse hypothesis.
    """
    rest = Wavefunction(full.grid, full.values - collapsed.values, time_tag=full.time_tag)
    ov = np.minimum(density(collapsed), density(rest))
    return float(ov.sum() * full.grid.cell_volume)


def collapse_equivalence(
    world,
    setup: MeasurementSetup,
    h: Hamiltonian,
    horizon: float,
    dt: float,
    snapshot_every: int = 4,
    dt_world: float | None = None,
    branch: int | None = None,
    overlap_limit: float = 1e-8,
) -> float:
    """Max trajectory divergence between full-state and collapsed-state transport.

    The post-measurement state and its branch projection are evolved side by
    side over the horizon; the given world (or worlds, shape (M, D)) is
    transported through both velocity fields and the max-norm position
    difference over the horizon is returned. Aborts with
    :class:`BranchOverlapError` when the branches re-interfere (overlap mass
    beyond ``overlap_limit`` of the total), since then the disjoint-support
    hypothesis no longer holds.
    """
    pts = np.atleast_2d(np.asarray(world, dtype=float))
    psi_post = apply_ideal_measurement(premeasurement_state(setup), setup)
    branches = [readout(p, setup) for p in pts]
    if branch is None:
        found = set(branches)
        if None in found or len(found) != 1:
            raise SimulationError("worlds must all lie inside one branch's support")
        branch = branches[0]
    elif any(b != branch for b in branches):
        raise SimulationError(f"world outside the support of branch {branch}")
    psi_coll = collapse(psi_post, setup, branch)

    snaps_full, _ = evolve(psi_post, h, horizon, dt, snapshot_every)
    snaps_coll, _ = evolve(psi_coll, h, horizon, dt, snapshot_every)
    for sf, sc in zip(snaps_full, snaps_coll):
        if branch_overlap_mass(sf, sc) > overlap_limit * total_volume(sf):
            raise BranchOverlapError(
                f"branches re-interfered at t={sf.time_tag:.6g}; the theorem's "
                "hypothesis (disjoint supports) no longer holds"
            )
    ens = WorldEnsemble(
        positions=pts,
        world_ids=np.arange(pts.shape[0], dtype=np.int64),
        birth_time=psi_post.time_tag,
        rng_seed=0,
        alive=np.ones(pts.shape[0], dtype=bool),
    )
    _, rec_full = advance_worlds(ens, snaps_full, h.masses, dt_world, h.hbar)
    _, rec_coll = advance_worlds(ens, snaps_coll, h.masses, dt_world, h.hbar)
    return float(np.abs(rec_full.positions - rec_coll.positions).max())
