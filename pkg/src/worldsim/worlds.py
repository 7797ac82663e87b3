"""World-ensemble machinery: sampling, transport, equivariance diagnostics.

A world is a point in configuration space. Ensembles of M worlds sample the
normalized density p = rho / integral(rho); they are transported along the
velocity field v = j / rho by RK4 on a space-multilinear, time-linear
interpolant between snapshots. Below the node threshold
``eps = NODE_EPS_FRACTION * max(rho)`` the velocity is undefined; worlds
entering such cells freeze in place and are counted.

Sampling uses a counter-based RNG (Philox) keyed by (seed, stream name), so
parallel or repeated draws are deterministic per seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import Grid
from .wavefunction import Wavefunction, _as_masses, current, density, total_volume

NODE_EPS_FRACTION = 1e-12
MIN_PHASE_SEGMENT = 5  # cells needed by the 4th-order phase stencil


def substream(seed: int, name: str) -> np.random.Generator:
    """Deterministic named RNG substream derived from a single scenario seed."""
    digest = hashlib.blake2s(name.encode("utf-8"), digest_size=8).digest()
    key = int.from_bytes(digest, "little")
    ss = np.random.SeedSequence(entropy=[int(seed) & 0xFFFFFFFFFFFFFFFF, key])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class WorldEnsemble:
    """Monte-Carlo sample of the continuum of worlds.

    ``positions`` are torus coordinates inside the grid box; ``alive`` is False
    for worlds frozen at a density node. ``world_ids`` are stable labels, never
    reassigned.
    """

    positions: np.ndarray
    world_ids: np.ndarray
    birth_time: float
    rng_seed: int
    alive: np.ndarray
    time_tag: float = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[0] < 1:
            raise ValueError("positions must have shape (M, D) with M >= 1")
        ids = np.ascontiguousarray(self.world_ids, dtype=np.int64)
        alive = np.ascontiguousarray(self.alive, dtype=bool)
        if ids.shape != (pos.shape[0],) or alive.shape != (pos.shape[0],):
            raise ValueError("world_ids and alive must have shape (M,)")
        if len(np.unique(ids)) != ids.size:
            raise ValueError("world_ids must be unique")
        if not np.all(np.isfinite(pos[alive])):
            raise ValueError("alive worlds must have finite positions")
        for a in (pos, ids, alive):
            a.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "world_ids", ids)
        object.__setattr__(self, "alive", alive)
        tag = self.birth_time if self.time_tag is None else self.time_tag
        object.__setattr__(self, "time_tag", float(tag))
        object.__setattr__(self, "birth_time", float(self.birth_time))

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def dims(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class VelocityField:
    """Grid-sampled velocity v = j / rho with its validity mask.

    ``velocity`` is zeroed outside the mask (where rho <= eps there is no well
    defined velocity); interpolation is multilinear with periodic wrap.
    """

    grid: Grid
    velocity: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    eps: float

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Velocity at arbitrary points (multilinear, periodic)."""
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
        lo = np.asarray(self.grid.lo)
        dx = np.asarray(self.grid.spacing)
        from ._advect_py import _interp

        out = np.empty_like(pts)
        for d in range(self.grid.dims):
            out[:, d] = _interp(self.velocity[d], pts, lo, dx)
        return out


def velocity_field(
    psi: Wavefunction, masses, hbar: float = 1.0, eps_fraction: float = NODE_EPS_FRACTION
) -> VelocityField:
    """v = j / rho where rho exceeds the node threshold, masked elsewhere.

    Invariant under rescaling psi -> c psi (both j and rho scale by |c|^2).
    An all-masked field signals a vanishing state.
    """
    rho = density(psi)
    eps = eps_fraction * float(rho.max())
    valid = rho > eps
    j = current(psi, masses, hbar)
    safe = np.where(valid, rho, 1.0)
    vel = np.where(valid[np.newaxis], j / safe[np.newaxis], 0.0)
    vel = np.ascontiguousarray(vel)
    return VelocityField(psi.grid, vel, valid, np.ascontiguousarray(rho), eps)


def _deriv4_segment(f: np.ndarray, dx: float) -> np.ndarray:
    """4th-order first derivative on a uniform segment with one-sided ends."""
    n = f.size
    out = np.empty(n)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dx)
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * dx)
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * dx)
    out[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / (12.0 * dx)
    out[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / (12.0 * dx)
    return out


def _circular_runs(mask: np.ndarray) -> list[np.ndarray]:
    """Index runs of True cells on a periodic axis (wrap-around runs merged)."""
    n = mask.size
    if not mask.any():
        return []
    if mask.all():
        return [np.arange(n)]
    start = int(np.flatnonzero(~mask)[0])
    rolled = np.roll(mask, -start)
    idx = np.flatnonzero(rolled)
    splits = np.flatnonzero(np.diff(idx) > 1)
    return [(chunk + start) % n for chunk in np.split(idx, splits + 1)]


def velocity_from_phase(
    psi: Wavefunction, masses, hbar: float = 1.0, eps_fraction: float = NODE_EPS_FRACTION
) -> VelocityField:
    """Velocity from the unwrapped phase gradient, v = hbar grad(arg psi) / m.

    Defined for 1-D scalar states only (phase unwrapping is a 1-D notion).
    Each connected run of above-threshold density is unwrapped independently;
    runs shorter than the stencil are masked out. On its validity mask this
    agrees with :func:`velocity_field` (the j / rho route) up to discretization.
    """
    if psi.grid.dims != 1 or psi.is_spinor:
        raise ValueError("velocity_from_phase requires a 1-D scalar state")
    grid = psi.grid
    n = grid.points[0]
    dx = grid.spacing[0]
    m = _as_masses(masses, 1)[0]
    rho = density(psi)
    eps = eps_fraction * float(rho.max())
    valid = rho > eps
    vel = np.zeros(n)
    out_mask = np.zeros(n, dtype=bool)
    angles = np.angle(psi.values)
    if valid.all():
        theta = np.unwrap(angles)
        # total phase accumulated around the circle, a multiple of 2 pi
        closure = float(angles[0] - angles[-1])
        closure = (closure + np.pi) % (2.0 * np.pi) - np.pi
        winding = (theta[-1] + closure) - theta[0]
        ext = np.concatenate([theta[-2:] - winding, theta, theta[:2] + winding])
        vel = (ext[:-4] - 8.0 * ext[1:-3] + 8.0 * ext[3:-1] - ext[4:]) / (12.0 * dx)
        out_mask[:] = True
    else:
        for run in _circular_runs(valid):
            if run.size < MIN_PHASE_SEGMENT:
                continue
            theta = np.unwrap(angles[run])
            vel[run] = _deriv4_segment(theta, dx)
            out_mask[run] = True
    vel = np.where(out_mask, hbar * vel / m, 0.0)
    return VelocityField(grid, vel[np.newaxis].copy(), out_mask, np.ascontiguousarray(rho), eps)


def sample_worlds(psi: Wavefunction, count: int, seed: int) -> WorldEnsemble:
    """Draw ``count`` i.i.d. worlds from the cell-discrete density, jittered
    uniformly within each cell to avoid lattice artifacts. Deterministic for a
    fixed seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    total = total_volume(psi)
    if total <= 0.0:
        raise ValueError("zero total world volume")
    grid = psi.grid
    rho = density(psi).ravel()
    cdf = np.cumsum(rho)
    cdf /= cdf[-1]
    rng = substream(seed, "sample_worlds")
    u = rng.random(count)
    flat = np.searchsorted(cdf, u, side="right")
    flat = np.minimum(flat, rho.size - 1)
    idx = np.stack(np.unravel_index(flat, grid.shape), axis=1).astype(np.float64)
    jitter = rng.random((count, grid.dims))
    lo = np.asarray(grid.lo)
    dx = np.asarray(grid.spacing)
    positions = lo + (idx + jitter) * dx
    return WorldEnsemble(
        positions=positions,
        world_ids=np.arange(count, dtype=np.int64),
        birth_time=psi.time_tag,
        rng_seed=int(seed),
        alive=np.ones(count, dtype=bool),
        time_tag=psi.time_tag,
    )


@dataclass
class TrajectoryRecord:
    """Unwrapped trajectories at snapshot times plus transport diagnostics."""

    times: np.ndarray
    positions: np.ndarray  # (S, M, D), unwrapped coordinates
    alive: np.ndarray  # (S, M)
    world_ids: np.ndarray
    order_violations: int
    frozen_count: int

    def wrapped_positions(self, grid: Grid) -> np.ndarray:
        return grid.wrap(self.positions.reshape(-1, self.positions.shape[2])).reshape(
            self.positions.shape
        )


def _count_order_violations(unwrapped_x: np.ndarray, alive: np.ndarray, perm: np.ndarray) -> int:
    """Adjacent inversions among alive worlds in the initial sort order."""
    ordered = unwrapped_x[perm]
    live = alive[perm] != 0
    vals = ordered[live]
    if vals.size < 2:
        return 0
    return int(np.sum(np.diff(vals) < 0.0))


def advance_worlds(
    ensemble: WorldEnsemble,
    snapshots: list[Wavefunction],
    masses,
    dt_world: float | None = None,
    hbar: float = 1.0,
    eps_fraction: float = NODE_EPS_FRACTION,
) -> tuple[WorldEnsemble, TrajectoryRecord]:
    """Transport the ensemble through the snapshots' velocity fields.

    Snapshots must be uniformly spaced in time and start at the ensemble's
    time. ``dt_world`` is the RK4 substep (default: cadence / 4); it must
    divide the cadence. Worlds that enter the node-excluded zone freeze and are
    counted. In one dimension the strict ordering of alive worlds is asserted
    at every substep; inversions are counted as integration failures.
    """
    if len(snapshots) == 0:
        raise ValueError("empty snapshot list")
    grid = snapshots[0].grid
    ndim = grid.dims
    if ensemble.dims != ndim:
        raise ValueError("ensemble dimension does not match the snapshots")
    times = np.array([s.time_tag for s in snapshots])
    if abs(ensemble.time_tag - times[0]) > 1e-9:
        raise ValueError("ensemble is not time-aligned with the first snapshot")

    pos = ensemble.positions.copy()
    alive = ensemble.alive.astype(np.uint8).copy()
    rec_times = [times[0]]
    rec_pos = [pos.copy()]
    rec_alive = [alive.astype(bool)]
    violations = 0
    perm = np.argsort(pos[:, 0], kind="stable") if ndim == 1 else None

    if len(snapshots) > 1:
        gaps = np.diff(times)
        cadence = float(gaps[0])
        if cadence <= 0 or np.any(np.abs(gaps - cadence) > 1e-9 * max(1.0, cadence)):
            raise ValueError("snapshots are not uniformly spaced in time")
        if dt_world is None:
            dt_world = cadence / 4.0
        if dt_world <= 0 or dt_world > cadence + 1e-15:
            raise ValueError("dt_world must be positive and at most the snapshot cadence")
        n_sub = int(round(cadence / dt_world))
        if abs(n_sub * dt_world - cadence) > 1e-9 * max(1.0, cadence):
            raise ValueError("dt_world must divide the snapshot cadence")
        h = cadence / n_sub
        lo = np.asarray(grid.lo)
        dx = np.asarray(grid.spacing)

        fields = [velocity_field(s, masses, hbar, eps_fraction) for s in snapshots]
        for i in range(len(snapshots) - 1):
            f0, f1 = fields[i], fields[i + 1]
            eps = eps_fraction * max(float(f0.density.max()), float(f1.density.max()))
            for k in range(n_sub):
                s0 = k / n_sub
                s_half = (k + 0.5) / n_sub
                s1 = (k + 1) / n_sub
                kernels.rk4_substep(
                    pos, alive, f0.velocity, f1.velocity, f0.density, f1.density,
                    s0, s_half, s1, h, lo, dx, eps,
                )
                if ndim == 1:
                    violations += _count_order_violations(pos[:, 0], alive, perm)
            rec_times.append(times[i + 1])
            rec_pos.append(pos.copy())
            rec_alive.append(alive.astype(bool))

    alive_bool = alive.astype(bool)
    frozen = int(np.sum(ensemble.alive & ~alive_bool))
    new_ensemble = WorldEnsemble(
        positions=grid.wrap(pos),
        world_ids=ensemble.world_ids,
        birth_time=ensemble.birth_time,
        rng_seed=ensemble.rng_seed,
        alive=alive_bool,
        time_tag=float(times[-1]),
    )
    record = TrajectoryRecord(
        times=np.asarray(rec_times),
        positions=np.stack(rec_pos),
        alive=np.stack(rec_alive),
        world_ids=ensemble.world_ids.copy(),
        order_violations=violations,
        frozen_count=frozen,
    )
    return new_ensemble, record


def _bin_index(points: np.ndarray, grid: Grid, bins: int) -> np.ndarray:
    """Flat bin index of each point on the bins^D partition of the box."""
    lo = np.asarray(grid.lo)
    length = np.asarray(grid.lengths)
    rel = (points - lo) / length
    idx = np.clip((rel * bins).astype(np.int64), 0, bins - 1)
    flat = np.zeros(points.shape[0], dtype=np.int64)
    for d in range(grid.dims):
        flat = flat * bins + idx[:, d]
    return flat


def binned_density(psi: Wavefunction, bins: int) -> np.ndarray:
    """Exact probability content of each of the bins^D boxes."""
    grid = psi.grid
    rho = density(psi)
    axes_idx = []
    for d in range(grid.dims):
        centers = grid.axis(d)
        rel = (centers - grid.lo[d]) / grid.lengths[d]
        axes_idx.append(np.clip((rel * bins).astype(np.int64), 0, bins - 1))
    flat = np.zeros(grid.shape, dtype=np.int64)
    for d in range(grid.dims):
        shp = [1] * grid.dims
        shp[d] = grid.points[d]
        flat = flat * bins + axes_idx[d].reshape(shp)
    weights = np.bincount(flat.ravel(), weights=rho.ravel(), minlength=bins**grid.dims)
    total = weights.sum()
    if total <= 0:
        raise ValueError("zero total world volume")
    return weights / total


def equivariance_distance(ensemble: WorldEnsemble, psi: Wavefunction, bins: int) -> float:
    """Total-variation distance between the alive-world histogram and the
    binned density p = rho / integral(rho), both on a bins^D partition."""
    if not ensemble.alive.any():
        raise ValueError("no alive worlds")
    grid = psi.grid
    pts = grid.wrap(ensemble.positions[ensemble.alive])
    flat = _bin_index(pts, grid, bins)
    emp = np.bincount(flat, minlength=bins**grid.dims).astype(float)
    emp /= emp.sum()
    exact = binned_density(psi, bins)
    return float(0.5 * np.abs(emp - exact).sum())
