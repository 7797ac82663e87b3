"""Serialization: binary snapshot containers and CSV emitters.

Wavefunction container (suggested suffix ``.wf``), little-endian throughout::

    bytes 0..7   magic  b"WSWF0001"
    uint32       D      number of grid dimensions
    uint32       C      components (1 scalar, 2 spinor)
    float64      time_tag
    D times      uint64 n_d, float64 lo_d, float64 hi_d
    payload      C * prod(n_d) complex128 values, C order
                 (component-major, then row-major over cells); each complex128
                 is an interleaved (re, im) float64 pair

World-ensemble container (suffix ``.we``)::

    bytes 0..7   magic  b"WSEN0001"
    uint32       D
    uint64       M      number of worlds
    float64      birth_time
    float64      time_tag
    int64        rng_seed
    payload      positions (M, D) float64 C order,
                 world_ids (M,) int64, alive (M,) uint8

CSV emitters write floats with shortest round-trip precision so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Grid
from .wavefunction import Wavefunction

_WF_MAGIC = b"WSWF0001"
_EN_MAGIC = b"WSEN0001"

_CSV_CELL_LIMIT = 65536


def fmt_float(x) -> str:
    """Shortest decimal string that round-trips the float64 exactly."""
    return repr(float(x))


def save_wavefunction(psi: Wavefunction, path) -> None:
    path = Path(path)
    g = psi.grid
    with open(path, "wb") as f:
        f.write(_WF_MAGIC)
        f.write(struct.pack("<IId", g.dims, psi.components, psi.time_tag))
        for n, lo, hi in zip(g.points, g.lo, g.hi):
            f.write(struct.pack("<Qdd", n, lo, hi))
        np.ascontiguousarray(psi.values, dtype="<c16").tofile(f)


def load_wavefunction(path) -> Wavefunction:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != _WF_MAGIC:
            raise ValueError(f"{path}: not a wavefunction container")
        dims, comps, time_tag = struct.unpack("<IId", f.read(16))
        points, lo, hi = [], [], []
        for _ in range(dims):
            n, a, b = struct.unpack("<Qdd", f.read(24))
            points.append(int(n))
            lo.append(a)
            hi.append(b)
        grid = Grid(lo=tuple(lo), hi=tuple(hi), points=tuple(points))
        count = comps * grid.cell_count
        vals = np.fromfile(f, dtype="<c16", count=count)
        if vals.size != count:
            raise ValueError(f"{path}: truncated payload")
    shape = grid.shape if comps == 1 else (2,) + grid.shape
    return Wavefunction(grid, vals.reshape(shape), time_tag=time_tag)


def wavefunction_to_csv(psi: Wavefunction, path) -> None:
    """Cell-indexed CSV dump for small grids (plotting, eyeballing)."""
    g = psi.grid
    if g.cell_count > _CSV_CELL_LIMIT:
        raise ValueError(
            f"grid has {g.cell_count} cells, CSV output capped at {_CSV_CELL_LIMIT}"
        )
    stack = psi.component_stack()
    header = [f"i_{d}" for d in range(g.dims)]
    header += [f"q_{d}" for d in range(g.dims)]
    for c in range(psi.components):
        header += [f"re_{c}", f"im_{c}"]
    axes = g.axes()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for idx in np.ndindex(*g.shape):
            row = [str(i) for i in idx]
            row += [fmt_float(axes[d][i]) for d, i in enumerate(idx)]
            for c in range(psi.components):
                z = stack[(c,) + idx]
                row += [fmt_float(z.real), fmt_float(z.imag)]
            w.writerow(row)


def save_ensemble(ensemble, path) -> None:
    path = Path(path)
    pos = np.ascontiguousarray(ensemble.positions, dtype="<f8")
    m, d = pos.shape
    with open(path, "wb") as f:
        f.write(_EN_MAGIC)
        f.write(
            struct.pack(
                "<IQddq", d, m, ensemble.birth_time, ensemble.time_tag, ensemble.rng_seed
            )
        )
        pos.tofile(f)
        np.ascontiguousarray(ensemble.world_ids, dtype="<i8").tofile(f)
        np.ascontiguousarray(ensemble.alive, dtype=np.uint8).tofile(f)


def load_ensemble(path):
    from .worlds import WorldEnsemble

    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != _EN_MAGIC:
            raise ValueError(f"{path}: not an ensemble container")
        d, m, birth, time_tag, seed = struct.unpack("<IQddq", f.read(36))
        pos = np.fromfile(f, dtype="<f8", count=m * d).reshape(m, d)
        ids = np.fromfile(f, dtype="<i8", count=m)
        alive = np.fromfile(f, dtype=np.uint8, count=m).astype(bool)
    return WorldEnsemble(
        positions=pos,
        world_ids=ids,
        birth_time=birth,
        rng_seed=int(seed),
        alive=alive,
        time_tag=time_tag,
    )


def trajectory_to_csv(record, path, record_every: int = 1) -> None:
    """Trajectory CSV with columns world_id, t, q_1..q_D, alive.

    ``record_every`` thins the recorded times (the final time is always kept).
    """
    times = record.times
    keep = [i for i in range(len(times)) if i % record_every == 0]
    if keep[-1] != len(times) - 1:
        keep.append(len(times) - 1)
    d = record.positions.shape[2]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["world_id", "t"] + [f"q_{k + 1}" for k in range(d)] + ["alive"])
        for i in keep:
            t = fmt_float(times[i])
            for m in range(record.positions.shape[1]):
                row = [str(int(record.world_ids[m])), t]
                row += [fmt_float(record.positions[i, m, k]) for k in range(d)]
                row.append("1" if record.alive[i, m] else "0")
                w.writerow(row)


def evolution_log_to_csv(log, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["time", "norm", "edge_mass", "continuity_summary"])
        for t, n, e, c in zip(log.times, log.norms, log.edge_masses, log.continuity_summaries):
            w.writerow([fmt_float(t), fmt_float(n), fmt_float(e), fmt_float(c)])


def read_evolution_log_csv(path):
    rows = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ["time", "norm", "edge_mass", "continuity_summary"]:
            raise ValueError(f"{path}: unexpected evolution log header {header}")
        for row in r:
            rows.append([float(v) for v in row])
    return np.asarray(rows, dtype=float)
