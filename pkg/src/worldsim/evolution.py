"""Unitary time evolution by Strang-split spectral stepping.

One step of size dt applies

    exp(-i V dt / 2 hbar) . exp(-i hbar k^2 dt / 2 m) . exp(-i V dt / 2 hbar)

with exact cell-wise and mode-wise exponentials, so each step is unitary to
rounding and the world volume is conserved over long runs. When a spinor
coupling field is present its exact 2x2 matrix exponential joins the potential
half-kicks.

The continuity diagnostic checks d(rho)/dt + div j = 0 between consecutive
snapshots; its summary converges at second order in dt.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EdgeMassError, SimulationError
from .grid import Grid, fftn, ifftn, spectral_derivative
from .wavefunction import Wavefunction, _as_masses, current, density, edge_mass, norm

EDGE_WARN_FRACTION = 1e-6


@dataclass(frozen=True)
class Hamiltonian:
    """Kinetic term with per-coordinate masses plus a static potential.

    ``spinor_coupling``, when present, is a cell-wise Hermitian 2x2 matrix
    field of shape ``(2, 2) + grid.shape`` acting on the spinor components
    (this is what a Stern-Gerlach device configures).
    """

    grid: Grid
    masses: tuple[float, ...]
    potential: np.ndarray = field(repr=False)
    spinor_coupling: np.ndarray | None = field(default=None, repr=False)
    hbar: float = 1.0

    def __post_init__(self) -> None:
        m = _as_masses(self.masses, self.grid.dims)
        object.__setattr__(self, "masses", tuple(float(x) for x in m))
        pot = np.ascontiguousarray(self.potential, dtype=np.float64)
        if pot.shape != self.grid.shape:
            raise ValueError(f"potential shape {pot.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(pot)):
            raise ValueError("potential contains NaN or Inf")
        pot.setflags(write=False)
        object.__setattr__(self, "potential", pot)
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.spinor_coupling is not None:
            c = np.ascontiguousarray(self.spinor_coupling, dtype=np.complex128)
            if c.shape != (2, 2) + self.grid.shape:
                raise ValueError(
                    f"spinor coupling shape {c.shape} != {(2, 2) + self.grid.shape}"
                )
            herm_defect = max(
                np.abs(c[0, 0].imag).max(),
                np.abs(c[1, 1].imag).max(),
                np.abs(c[0, 1] - np.conj(c[1, 0])).max(),
            )
            if herm_defect > 1e-12:
                raise ValueError(f"spinor coupling not Hermitian (defect {herm_defect:.2e})")
            c.setflags(write=False)
            object.__setattr__(self, "spinor_coupling", c)


def free_hamiltonian(grid: Grid, masses=1.0, hbar: float = 1.0) -> Hamiltonian:
    return Hamiltonian(grid, masses, np.zeros(grid.shape), hbar=hbar)


def harmonic_hamiltonian(
    grid: Grid, omega=1.0, masses=1.0, center=0.0, hbar: float = 1.0
) -> Hamiltonian:
    """V = sum_d m_d omega_d^2 (x_d - c_d)^2 / 2 on the grid's cell centers."""
    m = _as_masses(masses, grid.dims)
    om = np.broadcast_to(np.asarray(omega, dtype=float), (grid.dims,))
    cen = np.broadcast_to(np.asarray(center, dtype=float), (grid.dims,))
    pot = np.zeros(grid.shape)
    for d, x in enumerate(grid.broadcast_axes()):
        pot = pot + 0.5 * m[d] * om[d] ** 2 * (x - cen[d]) ** 2
    return Hamiltonian(grid, masses, pot, hbar=hbar)


class _Propagator:
    """Precomputed kick/drift factors for a fixed (Hamiltonian, dt) pair."""

    def __init__(self, h: Hamiltonian, dt: float):
        grid = h.grid
        self.grid = grid
        self.dt = dt
        self.kick = np.exp(-0.5j * dt / h.hbar * h.potential)
        ksum = np.zeros(grid.shape)
        for d, k in enumerate(grid.broadcast_wavenumbers()):
            ksum = ksum + k**2 / (2.0 * h.masses[d])
        self.drift = np.exp(-1j * h.hbar * dt * ksum)
        self.coupling = None
        if h.spinor_coupling is not None:
            self.coupling = _coupling_half_kick(h.spinor_coupling, dt, h.hbar)

    def apply(self, values: np.ndarray) -> np.ndarray:
        spinor = values.ndim == self.grid.dims + 1
        axes = tuple(range(values.ndim - self.grid.dims, values.ndim))
        out = self.kick * values
        if self.coupling is not None:
            if not spinor:
                raise SimulationError("spinor coupling requires a two-component state")
            out = _apply_2x2(self.coupling, out)
        out = ifftn(self.drift * fftn(out, axes), axes)
        out = self.kick * out
        if self.coupling is not None:
            out = _apply_2x2(self.coupling, out)
        return out


def _coupling_half_kick(coupling: np.ndarray, dt: float, hbar: float):
    """Exact exp(-i C dt / 2 hbar) for a Hermitian 2x2 field C.

    Decomposes C = m0 I + n . sigma, giving
    exp(-i theta C) = e^{-i theta m0} (cos(theta |n|) I - i sin(theta |n|) nhat . sigma).
    """
    theta = 0.5 * dt / hbar
    m0 = 0.5 * (coupling[0, 0].real + coupling[1, 1].real)
    nz = 0.5 * (coupling[0, 0].real - coupling[1, 1].real)
    nx = coupling[0, 1].real
    ny = -coupling[0, 1].imag
    nmag = np.sqrt(nx**2 + ny**2 + nz**2)
    phase = np.exp(-1j * theta * m0)
    cosv = np.cos(theta * nmag)
    # sin(theta n)/n with its n -> 0 limit
    small = nmag == 0.0
    sinc = np.where(small, theta, np.sin(theta * nmag) / np.where(small, 1.0, nmag))
    u00 = phase * (cosv - 1j * sinc * nz)
    u11 = phase * (cosv + 1j * sinc * nz)
    u01 = phase * (-1j * sinc * (nx - 1j * ny))
    u10 = phase * (-1j * sinc * (nx + 1j * ny))
    return u00, u01, u10, u11


def _apply_2x2(u, values: np.ndarray) -> np.ndarray:
    u00, u01, u10, u11 = u
    a = u00 * values[0] + u01 * values[1]
    b = u10 * values[0] + u11 * values[1]
    return np.stack([a, b])


def step(psi: Wavefunction, h: Hamiltonian, dt: float) -> Wavefunction:
    """One Strang step; norm is preserved to rounding.

    Negative dt is allowed and steps backwards (the scheme is exactly
    reversible); dt must be nonzero.
    """
    if psi.grid != h.grid:
        raise ValueError("grid mismatch between state and Hamiltonian")
    if dt == 0.0:
        raise ValueError("dt must be nonzero")
    out = _Propagator(h, dt).apply(psi.values)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise SimulationError("NaN/Inf after step; check dt and the potential scale")
    return Wavefunction(psi.grid, out, time_tag=psi.time_tag + dt)


@dataclass
class EvolutionLog:
    """Per-snapshot diagnostics collected by :func:`evolve`."""

    times: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    edge_masses: list[float] = field(default_factory=list)
    continuity_summaries: list[float] = field(default_factory=list)


def default_dt(grid: Grid, h: Hamiltonian) -> float:
    """Phase-wrap-safe step: max|V| dt / hbar <= 0.1 and hbar k_max^2 dt / 2m <= 0.5."""
    vmax = float(np.abs(h.potential).max())
    limits = []
    if vmax > 0:
        limits.append(0.1 * h.hbar / vmax)
    kin = max(
        h.hbar * (np.pi / dx) ** 2 / (2.0 * m) for dx, m in zip(grid.spacing, h.masses)
    )
    limits.append(0.5 / kin)
    return min(limits)


def evolve(
    psi: Wavefunction,
    h: Hamiltonian,
    t_final: float,
    dt: float,
    snapshot_every: int = 1,
    edge_mass_limit: float | None = 1e-3,
) -> tuple[list[Wavefunction], EvolutionLog]:
    """Propagate to ``t_final`` collecting snapshots every ``snapshot_every`` steps.

    ``dt`` must divide ``t_final`` within 1e-9. The first and final states are
    always snapshots. Aborts with :class:`EdgeMassError` when the edge-mass
    fraction of a snapshot exceeds ``edge_mass_limit`` (None disables).
    Deterministic for fixed inputs; t_final = 0 returns the input unchanged.
    """
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")
    log = EvolutionLog()

    def _record(snapshot: Wavefunction, previous: Wavefunction | None, gap: float) -> None:
        log.times.append(snapshot.time_tag)
        log.norms.append(norm(snapshot))
        frac = edge_mass(snapshot)
        log.edge_masses.append(frac)
        if previous is None:
            log.continuity_summaries.append(float("nan"))
        else:
            _, summary = continuity_residual(previous, snapshot, h, gap)
            log.continuity_summaries.append(summary)
        if frac > EDGE_WARN_FRACTION:
            warnings.warn(
                f"edge mass {frac:.3e} at t={snapshot.time_tag:.6g} exceeds "
                f"{EDGE_WARN_FRACTION:.0e}; support is reaching the box boundary",
                stacklevel=3,
            )
        if edge_mass_limit is not None and frac > edge_mass_limit:
            raise EdgeMassError(
                f"edge mass {frac:.3e} at t={snapshot.time_tag:.6g} exceeds the "
                f"abort limit {edge_mass_limit:.0e}"
            )

    if t_final == 0.0:
        _record(psi, None, 0.0)
        return [psi], log

    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_final / dt))
    if n_steps < 1 or abs(n_steps * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError(f"dt={dt} does not divide t_final={t_final}")

    prop = _Propagator(h, dt)
    snapshots = [psi]
    _record(psi, None, 0.0)
    vals = psi.values
    t0 = psi.time_tag
    last = psi
    for k in range(1, n_steps + 1):
        vals = prop.apply(vals)
        if k % snapshot_every == 0 or k == n_steps:
            if not np.all(np.isfinite(vals.view(np.float64))):
                raise SimulationError("NaN/Inf during evolution; check dt and potential")
            snap = Wavefunction(psi.grid, vals, time_tag=t0 + k * dt)
            _record(snap, last, snap.time_tag - last.time_tag)
            snapshots.append(snap)
            last = snap
    return snapshots, log


def continuity_residual(
    before: Wavefunction, after: Wavefunction, h: Hamiltonian, dt: float
) -> tuple[np.ndarray, float]:
    """Discrete continuity defect between two consecutive snapshots.

    r = (rho_after - rho_before)/dt + div j_mid, with j_mid the average of the
    two snapshot currents and the divergence evaluated spectrally. The scalar
    summary is ||r||_2 / ||rho_mid||_2 (units of inverse time); it vanishes for
    stationary states and decreases at second order in dt.
    """
    if before.grid != after.grid or before.grid != h.grid:
        raise ValueError("grid mismatch")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho_b = density(before)
    rho_a = density(after)
    j_mid = 0.5 * (current(before, h.masses, h.hbar) + current(after, h.masses, h.hbar))
    div = np.zeros(before.grid.shape)
    for d in range(before.grid.dims):
        div = div + np.real(spectral_derivative(j_mid[d].astype(np.complex128), before.grid, d))
    r = (rho_a - rho_b) / dt + div
    rho_mid = 0.5 * (rho_a + rho_b)
    denom = float(np.linalg.norm(rho_mid.ravel()))
    summary = float(np.linalg.norm(r.ravel()) / denom) if denom > 0 else 0.0
    return r, summary
