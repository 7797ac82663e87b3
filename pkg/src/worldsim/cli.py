"""Scenario-driven batch driver.

Usage::

    sim run <config.json> [--output DIR] [--threads N]
    sim verify <artifact-dir>

A scenario is a single JSON file (schema below); ``sim run`` executes the
stages it declares and writes a deterministic artifact tree:

    config.json            canonical copy of the configuration
    manifest.json          config hash, versions, artifact list
    evolution_log.csv      time, norm, edge_mass, continuity_summary
    snapshots/*.wf         binary wavefunction containers
    trajectories.csv       world_id, t, q_1..q_D, alive
    ensemble_final.we      binary ensemble container
    equivariance_report.json / measurement_report.json / spin_report.json
    physical_density.csv   projection stage output

Exit codes: 0 success, 2 configuration/schema violation, 3 runtime abort.
``sim verify`` re-derives the invariants from the stored artifacts and exits
0 when all pass, 1 on a violated invariant, 3 on missing/corrupt artifacts.

Re-running a scenario with the same seed produces byte-identical numerical
artifacts (the manifest timestamp is the only exception). The memory budget
for grids is configurable via the ``SIM_MEM_BUDGET_MB`` environment variable.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import sys
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import grid as gridmod
from . import io as wsio
from . import kernels, measurement, projection, spin, states, worlds
from .errors import ConfigError, SimulationError
from .evolution import Hamiltonian, evolve, free_hamiltonian, harmonic_hamiltonian
from .grid import Grid, make_grid
from .wavefunction import Region, normalized, world_volume

_NUMBER = {"type": "number"}
_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_GRID = {
    "type": "object",
    "properties": {
        "extent": {
            "type": "array",
            "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
            "minItems": 1,
        },
        "points": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
    },
    "required": ["extent", "points"],
    "additionalProperties": False,
}
_STATE = {
    "type": "object",
    "properties": {
        "type": {"enum": ["gaussian", "plane_wave", "superposition", "spinor"]},
        "center": {},
        "width": {},
        "boost": {},
        "modes": {},
        "terms": {"type": "array"},
        "coefficients": {"type": "array", "items": _COMPLEX},
        "spatial": {"type": "object"},
    },
    "required": ["type"],
}
_POINTER = {
    "type": "object",
    "properties": {
        "centers": {"type": "array", "items": _NUMBER},
        "sigma": _NUMBER,
        "halfwidth": _NUMBER,
        "initial_center": _NUMBER,
        "initial_sigma": _NUMBER,
    },
    "required": ["centers", "sigma", "halfwidth"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "grid": _GRID,
        "initial_state": _STATE,
        "hamiltonian": {
            "type": "object",
            "properties": {
                "type": {"enum": ["free", "harmonic", "custom"]},
                "omega": _NUMBER,
                "center": {},
                "potential_csv": {"type": "string"},
                "masses": {"type": "array", "items": _NUMBER},
                "hbar": _NUMBER,
            },
            "required": ["type"],
            "additionalProperties": False,
        },
        "evolution": {
            "type": "object",
            "properties": {
                "t_final": _NUMBER,
                "dt": _NUMBER,
                "snapshot_every": {"type": "integer", "minimum": 1},
                "edge_mass_limit": _NUMBER,
            },
            "required": ["t_final", "dt", "snapshot_every"],
            "additionalProperties": False,
        },
        "worlds": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "bins": {"type": "integer", "minimum": 2},
                "substeps": {"type": "integer", "minimum": 1},
                "record_every": {"type": "integer", "minimum": 1},
            },
            "required": ["count"],
            "additionalProperties": False,
        },
        "measurement": {
            "type": "object",
            "properties": {
                "system_grid": _GRID,
                "pointer_grid": _GRID,
                "basis": {
                    "type": "object",
                    "properties": {
                        "type": {"enum": ["flattop_lobes", "harmonic"]},
                        "centers": {"type": "array", "items": _NUMBER},
                        "sigma": _NUMBER,
                        "halfwidth": _NUMBER,
                        "count": {"type": "integer", "minimum": 1},
                        "omega": _NUMBER,
                    },
                    "required": ["type"],
                    "additionalProperties": False,
                },
                "coefficients": {"type": "array", "items": _COMPLEX, "minItems": 1},
                "pointer": _POINTER,
                "outcome_values": {"type": "array", "items": _NUMBER},
                "worlds": {"type": "integer", "minimum": 1},
            },
            "required": ["system_grid", "pointer_grid", "basis", "coefficients", "pointer"],
            "additionalProperties": False,
        },
        "spin": {
            "type": "object",
            "properties": {
                "system_grid": _GRID,
                "pointer_grid": _GRID,
                "alpha": _COMPLEX,
                "beta": _COMPLEX,
                "chi": _STATE,
                "pointer": _POINTER,
                "worlds": {"type": "integer", "minimum": 1},
            },
            "required": ["system_grid", "pointer_grid", "alpha", "beta", "chi", "pointer"],
            "additionalProperties": False,
        },
        "projection": {
            "type": "object",
            "properties": {
                "layout": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "count_region": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
            },
            "required": ["layout"],
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {
                "directory": {"type": "string"},
                "snapshot_csv": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["name"],
    "additionalProperties": False,
}


def _as_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(v[0], v[1])


def load_config(path: Path) -> dict:
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: e.json_path)
    if errors:
        e = errors[0]
        raise ConfigError(f"config key {e.json_path}: {e.message}")
    stochastic = "worlds" in cfg or "measurement" in cfg or "spin" in cfg
    if stochastic and "seed" not in cfg:
        raise ConfigError("config key $.seed: required for stochastic stages")
    if ("evolution" in cfg or "worlds" in cfg or "projection" in cfg) and (
        "grid" not in cfg or "initial_state" not in cfg
    ):
        raise ConfigError("config key $.grid: grid and initial_state are required")
    return cfg


def _build_grid(spec: dict) -> Grid:
    return make_grid(spec["extent"], spec["points"])


def _build_state(spec: dict, grid: Grid) -> Wavefunction:
    kind = spec["type"]
    if kind == "gaussian":
        return states.gaussian(
            grid,
            center=spec.get("center", 0.0),
            width=spec.get("width", 1.0),
            boost=spec.get("boost"),
        )
    if kind == "plane_wave":
        return states.plane_wave(grid, spec.get("modes", 1))
    if kind == "superposition":
        terms = [
            (_as_complex(t.get("coefficient", 1.0)), _build_state(t["state"], grid))
            for t in spec["terms"]
        ]
        return states.superposition(terms)
    if kind == "spinor":
        coeffs = [_as_complex(c) for c in spec["coefficients"]]
        return states.spinor(coeffs, _build_state(spec["spatial"], grid))
    raise ConfigError(f"unknown state type {kind!r}")


def _build_hamiltonian(spec: dict | None, grid: Grid) -> Hamiltonian:
    spec = spec or {"type": "free"}
    masses = spec.get("masses", 1.0)
    hbar = spec.get("hbar", 1.0)
    kind = spec["type"]
    if kind == "free":
        return free_hamiltonian(grid, masses, hbar)
    if kind == "harmonic":
        return harmonic_hamiltonian(
            grid, spec.get("omega", 1.0), masses, spec.get("center", 0.0), hbar
        )
    if kind == "custom":
        path = Path(spec["potential_csv"])
        vals = np.loadtxt(path, delimiter=",", dtype=float).reshape(grid.shape)
        return Hamiltonian(grid, masses, vals, hbar=hbar)
    raise ConfigError(f"unknown hamiltonian type {kind!r}")


def _build_pointer_states(spec: dict, grid: Grid):
    centers = spec["centers"]
    sigma = spec["sigma"]
    halfwidth = spec["halfwidth"]
    lobes = [states.flattop_gaussian(grid, c, sigma, halfwidth) for c in centers]
    initial = states.flattop_gaussian(
        grid,
        spec.get("initial_center", 0.0),
        spec.get("initial_sigma", sigma),
        halfwidth,
    )
    return initial, lobes


def _build_measurement_setup(spec: dict) -> measurement.MeasurementSetup:
    xg = _build_grid(spec["system_grid"])
    yg = _build_grid(spec["pointer_grid"])
    bs = spec["basis"]
    if bs["type"] == "flattop_lobes":
        basis = [
            states.flattop_gaussian(xg, c, bs["sigma"], bs["halfwidth"])
            for c in bs["centers"]
        ]
    else:
        basis = [
            states.harmonic_eigenstate(xg, n, bs.get("omega", 1.0))
            for n in range(bs["count"])
        ]
    coeffs = [_as_complex(c) for c in spec["coefficients"]]
    initial, lobes = _build_pointer_states(spec["pointer"], yg)
    values = spec.get("outcome_values", list(range(1, len(basis) + 1)))
    return measurement.MeasurementSetup(
        system_grid=xg,
        pointer_grid=yg,
        basis=tuple(basis),
        coefficients=np.asarray(coeffs, dtype=complex),
        pointer_initial=initial,
        pointer_states=tuple(lobes),
        outcome_values=np.asarray(values, dtype=float),
    )


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o)}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def run(config_path, output_dir=None, threads: int = 1) -> Path:
    """Execute a scenario; returns the artifact directory."""
    gridmod.set_fft_workers(threads)
    config_path = resolve_scenario(config_path)
    cfg = load_config(config_path)

    out = Path(output_dir) if output_dir else Path(cfg.get("outputs", {}).get("directory", cfg["name"]))
    out.mkdir(parents=True, exist_ok=True)
    canonical = json.dumps(cfg, indent=2, sort_keys=True) + "\n"
    (out / "config.json").write_text(canonical)
    artifacts = ["config.json"]

    seed = cfg.get("seed", 0)
    ham = None
    snapshots = None
    final_ensemble = None

    if "evolution" in cfg:
        g = _build_grid(cfg["grid"])
        psi0 = _build_state(cfg["initial_state"], g)
        ham = _build_hamiltonian(cfg.get("hamiltonian"), g)
        ev = cfg["evolution"]
        snapshots, log = evolve(
            psi0, ham, ev["t_final"], ev["dt"], ev["snapshot_every"],
            edge_mass_limit=ev.get("edge_mass_limit", 1e-3),
        )
        wsio.evolution_log_to_csv(log, out / "evolution_log.csv")
        artifacts.append("evolution_log.csv")
        snapdir = out / "snapshots"
        snapdir.mkdir(exist_ok=True)
        for i, snap in enumerate(snapshots):
            name = f"snapshots/snap_{i:06d}.wf"
            wsio.save_wavefunction(snap, out / name)
            artifacts.append(name)
            if cfg.get("outputs", {}).get("snapshot_csv"):
                csv_name = f"snapshots/snap_{i:06d}.csv"
                wsio.wavefunction_to_csv(snap, out / csv_name)
                artifacts.append(csv_name)

    if "worlds" in cfg:
        if snapshots is None:
            raise ConfigError("worlds stage requires an evolution stage")
        w = cfg["worlds"]
        bins = w.get("bins", 64)
        ens0 = worlds.sample_worlds(snapshots[0], w["count"], seed)
        tv0 = worlds.equivariance_distance(ens0, snapshots[0], bins)
        cadence = snapshots[1].time_tag - snapshots[0].time_tag if len(snapshots) > 1 else None
        dt_world = cadence / w.get("substeps", 4) if cadence else None
        final_ensemble, record = worlds.advance_worlds(
            ens0, snapshots, ham.masses, dt_world, ham.hbar
        )
        tv_final = worlds.equivariance_distance(final_ensemble, snapshots[-1], bins)
        wsio.trajectory_to_csv(record, out / "trajectories.csv", w.get("record_every", 1))
        wsio.save_ensemble(final_ensemble, out / "ensemble_final.we")
        _write_json(
            out / "equivariance_report.json",
            {
                "world_count": w["count"],
                "bins": bins,
                "tv_initial": tv0,
                "tv_final": tv_final,
                "frozen": record.frozen_count,
                "order_violations": record.order_violations,
                "time_initial": float(record.times[0]),
                "time_final": float(record.times[-1]),
            },
        )
        artifacts += ["trajectories.csv", "ensemble_final.we", "equivariance_report.json"]

    if "measurement" in cfg:
        report = run_measurement_stage(cfg["measurement"], seed)
        _write_json(out / "measurement_report.json", report)
        artifacts.append("measurement_report.json")

    if "spin" in cfg:
        report = run_spin_stage(cfg["spin"], seed)
        _write_json(out / "spin_report.json", report)
        artifacts.append("spin_report.json")

    if "projection" in cfg:
        if snapshots is None:
            raise ConfigError("projection stage requires an evolution stage")
        pj = cfg["projection"]
        phys, dens = projection.particle_density(snapshots[-1], pj["layout"])
        with open(out / "physical_density.csv", "w", newline="") as f:
            f.write("x,density\n")
            for x, d in zip(phys.axis(0), dens):
                f.write(f"{wsio.fmt_float(x)},{wsio.fmt_float(d)}\n")
        artifacts.append("physical_density.csv")
        if "count_region" in pj:
            lo_r, hi_r = pj["count_region"]
            region = Region.box(phys, [(lo_r, hi_r)])
            count = projection.expected_particle_count(snapshots[-1], region, pj["layout"])
            _write_json(
                out / "projection_report.json",
                {"count_region": [lo_r, hi_r], "expected_count": count},
            )
            artifacts.append("projection_report.json")

    manifest = {
        "name": cfg["name"],
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": _package_version(),
        "numpy_version": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "hbar": ham.hbar if ham else 1.0,
        "masses": list(ham.masses) if ham else None,
        "artifacts": artifacts,
    }
    _write_json(out / "manifest.json", manifest)
    return out


def run_measurement_stage(spec: dict, seed: int) -> dict:
    setup = _build_measurement_setup(spec)
    psi_pre = measurement.premeasurement_state(setup)
    psi_post = measurement.apply_ideal_measurement(psi_pre, setup)
    probs, escaped = measurement.outcome_probabilities(psi_post, setup)
    born = measurement.born_reference(setup)
    exp_p, exp_o = measurement.expectation(setup)
    volumes = [
        world_volume(psi_post, setup.outcome_region(i))
        for i in range(setup.branch_count)
    ]
    report = {
        "coefficients": [[c.real, c.imag] for c in setup.coefficients],
        "outcome_values": setup.outcome_values.tolist(),
        "region_volumes": volumes,
        "probabilities_volume_route": probs.tolist(),
        "probabilities_born_route": born.tolist(),
        "escaped_mass": escaped,
        "expectation_probability_route": exp_p,
        "expectation_operator_route": exp_o,
        "collapse_divergence": None,
        "empirical_frequencies": None,
        "empirical_unresolved": None,
        "world_count": None,
    }
    if "worlds" in spec:
        m = spec["worlds"]
        ens = worlds.sample_worlds(psi_pre, m, seed)
        ens_post = measurement.carry_through_measurement(ens, setup, seed)
        freqs, unresolved = measurement.readout_frequencies(ens_post, setup)
        report["empirical_frequencies"] = freqs.tolist()
        report["empirical_unresolved"] = unresolved
        report["world_count"] = m
    return report


def run_spin_stage(spec: dict, seed: int) -> dict:
    xg = _build_grid(spec["system_grid"])
    yg = _build_grid(spec["pointer_grid"])
    chi = _build_state(spec["chi"], xg)
    p = spec["pointer"]
    if len(p["centers"]) != 2:
        raise ConfigError("config key $.spin.pointer.centers: need exactly two centers")
    initial, lobes = _build_pointer_states(p, yg)
    setup = spin.SpinSetup.from_coefficients(
        _as_complex(spec["alpha"]), _as_complex(spec["beta"]), normalized(chi),
        initial, lobes[0], lobes[1],
    )
    psi_pre = spin.spin_premeasurement(setup)
    psi_post = spin.stern_gerlach_measure(psi_pre, setup)
    p_up, p_down = spin.spin_probabilities(psi_post, setup)
    a = _as_complex(spec["alpha"])
    b = _as_complex(spec["beta"])
    wsum = abs(a) ** 2 + abs(b) ** 2
    report = {
        "alpha": [a.real, a.imag],
        "beta": [b.real, b.imag],
        "probability_up_volume_route": p_up,
        "probability_down_volume_route": p_down,
        "probability_up_born_route": abs(a) ** 2 / wsum,
        "probability_down_born_route": abs(b) ** 2 / wsum,
        "empirical_up": None,
        "empirical_down": None,
        "world_count": None,
    }
    if "worlds" in spec:
        m = spec["worlds"]
        ens = worlds.sample_worlds(psi_pre, m, seed)
        ens_post = spin.carry_through_spin_measurement(ens, setup, seed)
        up, down, _ = spin.spin_readout_frequencies(ens_post, setup)
        report["empirical_up"] = up
        report["empirical_down"] = down
        report["world_count"] = m
    return report


def _package_version() -> str:
    try:
        return metadata.version("worldsim")
    except metadata.PackageNotFoundError:
        return "unknown"


def bundled_scenarios() -> list[str]:
    root = resources.files("worldsim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario(name_or_path) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    p = Path(name_or_path)
    if p.exists():
        return p
    candidate = resources.files("worldsim") / "scenarios" / f"{p.name}.json"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(
        f"no such config file or bundled scenario: {name_or_path} "
        f"(bundled: {', '.join(bundled_scenarios())})"
    )


class VerifyError(SimulationError):
    """Artifacts are missing or corrupt (distinct from a failed invariant)."""


def verify(artifact_dir) -> tuple[bool, list[tuple[str, bool, str]]]:
    """Re-check stored artifacts against the package invariants.

    Returns (all_passed, [(check name, passed, detail), ...]). Raises
    :class:`VerifyError` when artifacts are missing or unreadable, which is an
    error rather than a failed verification.
    """
    out = Path(artifact_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.is_file():
        raise VerifyError(f"{out}: no manifest.json (not an artifact directory?)")
    try:
        manifest = json.loads(manifest_path.read_text())
        config_text = (out / "config.json").read_text()
    except (OSError, json.JSONDecodeError) as exc:
        raise VerifyError(f"corrupt artifacts: {exc}") from exc

    checks: list[tuple[str, bool, str]] = []

    def check(name: str, passed: bool, detail: str = "") -> None:
        checks.append((name, bool(passed), detail))

    digest = hashlib.sha256(config_text.encode()).hexdigest()
    check("config_hash", digest == manifest.get("config_sha256"),
          "stored configuration matches its manifest hash")

    log_path = out / "evolution_log.csv"
    if log_path.is_file():
        try:
            log = wsio.read_evolution_log_csv(log_path)
        except (OSError, ValueError) as exc:
            raise VerifyError(f"corrupt evolution log: {exc}") from exc
        norms = log[:, 1]
        drift = np.abs(norms - norms[0]).max() / norms[0] if len(norms) else 0.0
        check("norm_conservation", drift <= 1e-10, f"relative drift {drift:.3e}")

        snapdir = out / "snapshots"
        snaps = sorted(snapdir.glob("snap_*.wf")) if snapdir.is_dir() else []
        if len(snaps) != len(log):
            raise VerifyError(
                f"{len(snaps)} snapshots but {len(log)} log rows; artifacts incomplete"
            )
        if snaps:
            from .evolution import continuity_residual
            from .wavefunction import edge_mass as edge_fn
            from .wavefunction import norm as norm_fn

            hbar = manifest.get("hbar", 1.0)
            masses = manifest.get("masses")
            loaded = [wsio.load_wavefunction(p) for p in snaps]
            ham = Hamiltonian(
                loaded[0].grid, masses if masses else 1.0,
                np.zeros(loaded[0].grid.shape), hbar=hbar,
            )
            worst_norm = max(
                abs(norm_fn(s) - log[i, 1]) for i, s in enumerate(loaded)
            )
            check("log_norm_matches_snapshots", worst_norm <= 1e-12,
                  f"max discrepancy {worst_norm:.3e}")
            worst_edge = max(
                abs(edge_fn(s) - log[i, 2]) for i, s in enumerate(loaded)
            )
            check("log_edge_mass_matches_snapshots", worst_edge <= 1e-12,
                  f"max discrepancy {worst_edge:.3e}")
            worst_cont = 0.0
            for i in range(1, len(loaded)):
                gap = loaded[i].time_tag - loaded[i - 1].time_tag
                _, summary = continuity_residual(loaded[i - 1], loaded[i], ham, gap)
                worst_cont = max(worst_cont, abs(summary - log[i, 3]))
            check("log_continuity_matches_snapshots", worst_cont <= 1e-12,
                  f"max discrepancy {worst_cont:.3e}")

    meas_path = out / "measurement_report.json"
    if meas_path.is_file():
        rep = json.loads(meas_path.read_text())
        vol = np.asarray(rep["probabilities_volume_route"])
        born = np.asarray(rep["probabilities_born_route"])
        gap = np.abs(vol - born).max()
        check("born_rule_identity", gap <= 1e-8, f"max |volume - born| = {gap:.3e}")
        total = float(vol.sum() + rep["escaped_mass"])
        check("probability_completeness", abs(total - 1.0) <= 1e-8, f"sum {total!r}")
        egap = abs(rep["expectation_probability_route"] - rep["expectation_operator_route"])
        check("expectation_routes_agree", egap <= 1e-8, f"|difference| = {egap:.3e}")

    spin_path = out / "spin_report.json"
    if spin_path.is_file():
        rep = json.loads(spin_path.read_text())
        s = rep["probability_up_volume_route"] + rep["probability_down_volume_route"]
        check("spin_probability_completeness", abs(s - 1.0) <= 1e-8, f"sum {s!r}")
        gap = max(
            abs(rep["probability_up_volume_route"] - rep["probability_up_born_route"]),
            abs(rep["probability_down_volume_route"] - rep["probability_down_born_route"]),
        )
        check("spin_born_identity", gap <= 1e-8, f"max |volume - born| = {gap:.3e}")

    eq_path = out / "equivariance_report.json"
    if eq_path.is_file():
        rep = json.loads(eq_path.read_text())
        check("no_order_violations", rep["order_violations"] == 0,
              f"{rep['order_violations']} violations recorded")
        ens_path = out / "ensemble_final.we"
        snapdir = out / "snapshots"
        snaps = sorted(snapdir.glob("snap_*.wf")) if snapdir.is_dir() else []
        if ens_path.is_file() and snaps:
            ens = wsio.load_ensemble(ens_path)
            last = wsio.load_wavefunction(snaps[-1])
            tv = worlds.equivariance_distance(ens, last, rep["bins"])
            check("equivariance_tv_reproducible", abs(tv - rep["tv_final"]) <= 1e-12,
                  f"stored {rep['tv_final']!r}, recomputed {tv!r}")

    return all(p for _, p, _ in checks), checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sim", description="Batch driver for world-ensemble quantum scenarios"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config (path or bundled name)")
    p_run.add_argument("config", help="JSON scenario file or bundled scenario name")
    p_run.add_argument("--output", default=None, help="artifact directory")
    p_run.add_argument("--threads", type=int, default=1, help="FFT worker bound")

    p_verify = sub.add_parser("verify", help="re-check invariants of a finished run")
    p_verify.add_argument("directory", help="artifact directory to verify")

    sub.add_parser("scenarios", help="list bundled scenarios")

    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            out = run(args.config, args.output, args.threads)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return 2
        except SimulationError as exc:
            print(f"runtime abort: {exc}", file=sys.stderr)
            return 3
        print(f"artifacts written to {out}")
        return 0
    if args.command == "verify":
        try:
            ok, checks = verify(args.directory)
        except VerifyError as exc:
            print(f"verification error: {exc}", file=sys.stderr)
            return 3
        for name, passed, detail in checks:
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        return 0 if ok else 1
    if args.command == "scenarios":
        for name in bundled_scenarios():
            print(name)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
