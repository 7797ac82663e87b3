"""Acceptance suite: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion. Runtime-limited criteria assert their own wall-clock budget.
"""

import json
import time

import numpy as np
import pytest

from worldsim import (
    MeasurementSetup,
    Wavefunction,
    apply_ideal_measurement,
    born_reference,
    collapse,
    collapse_equivalence,
    continuity_residual,
    evolve,
    expectation,
    free_hamiltonian,
    harmonic_hamiltonian,
    inner_product,
    make_grid,
    norm,
    outcome_probabilities,
    premeasurement_state,
    sample_worlds,
    step,
    velocity_field,
    velocity_from_phase,
)
from worldsim import cli, states
from worldsim.evolution import Hamiltonian


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num}: {name}: {detail}"


# --- shared scenario runs (module-scoped, each executed once) ----------------


@pytest.fixture(scope="module")
def harmonic_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("harmonic")
    outs = []
    for tag in ("a", "b"):
        out = base / tag
        code = cli.main(["run", "harmonic-equivariance", "--output", str(out)])
        assert code == 0
        outs.append(out)
    return outs


@pytest.fixture(scope="module")
def born_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("born") / "run"
    t0 = time.perf_counter()
    code = cli.main(["run", "two-branch-born", "--output", str(out)])
    elapsed = time.perf_counter() - t0
    assert code == 0
    return out, elapsed


def _random_setup(rng: np.random.Generator, k: int) -> MeasurementSetup:
    """Random complex coefficients, orthonormalized smooth basis, random
    disjoint pointer intervals (jittered partition keeps them disjoint)."""
    xg = make_grid([(-8, 8)], [64])
    yg = make_grid([(-16, 16)], [256])
    x = xg.axis(0)
    basis = []
    for _ in range(k):
        env = np.exp(-((x - rng.uniform(-1.5, 1.5)) ** 2) / (2 * rng.uniform(0.8, 1.5) ** 2))
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi) * np.sin(2 * np.pi * (x + 8) / 16))
        w = Wavefunction(xg, env * phase)
        for b in basis:
            w = w.with_values(w.values - inner_product(b, w) * b.values)
        basis.append(w.with_values(w.values / norm(w)))
    edges = np.linspace(-15, 15, k + 1)
    centers = 0.5 * (edges[:-1] + edges[1:]) + rng.uniform(-0.5, 0.5, k)
    halfwidth = 0.4 * (edges[1] - edges[0])
    initial = states.flattop_gaussian(yg, 0.0, halfwidth / 4, halfwidth)
    lobes = tuple(states.flattop_gaussian(yg, c, halfwidth / 4, halfwidth) for c in centers)
    alpha = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return MeasurementSetup(
        system_grid=xg,
        pointer_grid=yg,
        basis=tuple(basis),
        coefficients=alpha,
        pointer_initial=initial,
        pointer_states=lobes,
        outcome_values=rng.uniform(-5, 5, k),
    )


@pytest.fixture(scope="module")
def randomized_setups():
    rng = np.random.default_rng(20250810)
    t0 = time.perf_counter()
    setups = [_random_setup(rng, int(rng.integers(2, 5))) for _ in range(50)]
    results = []
    for s in setups:
        post = apply_ideal_measurement(premeasurement_state(s), s)
        probs, escaped = outcome_probabilities(post, s)
        results.append((s, probs, escaped))
    elapsed = time.perf_counter() - t0
    return results, elapsed


# --- criteria ----------------------------------------------------------------


def test_criterion_1_born_rule_identity(randomized_setups):
    results, elapsed = randomized_setups
    worst = 0.0
    for s, probs, escaped in results:
        worst = max(worst, float(np.abs(probs - born_reference(s)).max()), abs(escaped))
    ok = worst <= 1e-8 and elapsed <= 30.0
    _report(1, "Born-rule identity over 50 randomized setups", ok,
            f"max deviation {worst:.3e}, {elapsed:.1f} s")


def test_criterion_2_born_rule_frequency(born_run):
    out, elapsed = born_run
    rep = json.loads((out / "measurement_report.json").read_text())
    freq = rep["empirical_frequencies"][0]
    ok = 0.285 <= freq <= 0.315 and rep["world_count"] == 10000 and elapsed <= 60.0
    _report(2, "Born-rule frequency, two-branch-born scenario", ok,
            f"outcome-1 frequency {freq:.4f} in [0.285, 0.315], {elapsed:.1f} s")


def test_criterion_3_spin_probabilities(tmp_path):
    out = tmp_path / "spin"
    assert cli.main(["run", "spin-quarter", "--output", str(out)]) == 0
    rep = json.loads((out / "spin_report.json").read_text())
    vol_gap = max(
        abs(rep["probability_up_volume_route"] - 0.25),
        abs(rep["probability_down_volume_route"] - 0.75),
    )
    emp_gap = abs(rep["empirical_up"] - 0.25)
    ok = vol_gap <= 1e-8 and emp_gap <= 0.02 and rep["world_count"] == 10000
    _report(3, "Spin probabilities (0.25, 0.75)", ok,
            f"volume-route gap {vol_gap:.3e}, empirical gap {emp_gap:.4f}")


def test_criterion_4_equivariance(harmonic_runs):
    rep = json.loads((harmonic_runs[0] / "equivariance_report.json").read_text())
    tv0, tv1 = rep["tv_initial"], rep["tv_final"]
    cfg = json.loads((harmonic_runs[0] / "config.json").read_text())
    steps = round(cfg["evolution"]["t_final"] / cfg["evolution"]["dt"])
    ok = (
        tv1 <= 0.05
        and abs(tv1 - tv0) <= 0.02
        and rep["bins"] == 64
        and rep["world_count"] == 10000
        and steps == 4096
    )
    _report(4, "Equivariance over one harmonic period", ok,
            f"TV(t=0) = {tv0:.4f}, TV(t=T) = {tv1:.4f}, drift {abs(tv1 - tv0):.2e}")


def test_criterion_5_unitarity():
    g = make_grid([(-16, 16)], [2048])
    h = harmonic_hamiltonian(g, omega=1.0)
    psi = states.gaussian(g, 1.0, 1.0)
    snaps, log = evolve(psi, h, 10.0, 0.001, snapshot_every=500)
    norms = np.asarray(log.norms)
    drift = float(np.abs(norms - norms[0]).max() / norms[0])
    ok = drift <= 1e-10
    _report(5, "Unitarity over 10^4 steps on 2048 cells", ok, f"relative drift {drift:.3e}")


def test_criterion_6_continuity_order():
    g = make_grid([(-16, 16)], [512])
    psi = states.gaussian(g, 0.0, 1.0, boost=2 * np.pi * 5 / 32)
    h = free_hamiltonian(g)
    summaries = []
    for dt in (0.02, 0.01, 0.005):
        after = step(psi, h, dt)
        _, summary = continuity_residual(psi, after, h, dt)
        summaries.append(summary)
    slope = float(-np.polyfit(np.arange(3), np.log2(summaries), 1)[0])
    ok = 1.8 <= slope <= 2.5
    _report(6, "Continuity residual convergence order", ok,
            f"fitted order {slope:.3f} from summaries {[f'{s:.2e}' for s in summaries]}")


def test_criterion_7_effective_collapse():
    xg = make_grid([(-8, 8)], [128])
    yg = make_grid([(-16, 16)], [256])
    basis = (
        states.harmonic_eigenstate(xg, 0, omega=1.0),
        states.harmonic_eigenstate(xg, 1, omega=1.0),
    )
    well, disp, sigma = 8.0, 0.8, 0.5
    setup = MeasurementSetup(
        system_grid=xg,
        pointer_grid=yg,
        basis=basis,
        coefficients=np.array([np.sqrt(0.4), np.sqrt(0.6)], dtype=complex),
        pointer_initial=states.flattop_gaussian(yg, 0.0, sigma, 5.0),
        pointer_states=(
            states.flattop_gaussian(yg, well + disp, sigma, 5.0),
            states.flattop_gaussian(yg, -well - disp, sigma, 5.0),
        ),
        outcome_values=np.array([1.0, -1.0]),
    )
    joint = setup.joint_grid()
    x = joint.broadcast_axes()[0]
    y = joint.broadcast_axes()[1]
    v = 0.5 * x**2 + 0.5 * (1.0 / sigma**2) ** 2 * np.minimum((y - well) ** 2, (y + well) ** 2)
    h = Hamiltonian(joint, (1.0, 1.0), v)
    post = apply_ideal_measurement(premeasurement_state(setup), setup)
    worlds_xy = sample_worlds(collapse(post, setup, 0), 100, 777).positions
    div = collapse_equivalence(worlds_xy, setup, h, 1.0, 1.0 / 256, branch=0)
    ok = div <= 1e-6
    _report(7, "Effective collapse, 100 worlds over T = 1", ok, f"max divergence {div:.3e}")


def test_criterion_8_phase_gradient_equivalence():
    n, lo, hi = 2048, -14.0, 14.0
    g = make_grid([(lo, hi)], [n])
    x = g.axis(0)
    length = hi - lo
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(20):
        nc = int(rng.integers(2, 4))
        amps = rng.uniform(0.5, 1.5, nc)
        centers = rng.uniform(-2.5, 2.5, nc)
        widths = rng.uniform(0.8, 1.3, nc)
        envelope = sum(
            a * np.exp(-((x - c) ** 2) / (2 * w**2))
            for a, c, w in zip(amps, centers, widths)
        )
        boost = 2 * np.pi * int(rng.integers(-6, 7)) / length
        ripple = rng.uniform(-0.5, 0.5) * np.sin(
            2 * np.pi * int(rng.integers(1, 4)) * (x - lo) / length + rng.uniform(0, 2 * np.pi)
        )
        psi = Wavefunction(g, envelope * np.exp(1j * (boost * x + ripple)))
        f = velocity_field(psi, 1.0)
        p = velocity_from_phase(psi, 1.0)
        both = f.valid & p.valid
        worst = max(worst, float(np.abs(f.velocity[0][both] - p.velocity[0][both]).max()))
    ok = worst <= 1e-6
    _report(8, "Phase-gradient velocity equivalence, 20 states", ok,
            f"worst max-norm disagreement {worst:.3e}")


def test_criterion_9_expectation_consistency(randomized_setups):
    results, _ = randomized_setups
    worst = 0.0
    for s, _, _ in results:
        p_route, o_route = expectation(s)
        worst = max(worst, abs(p_route - o_route))
    ok = worst <= 1e-10
    _report(9, "Expectation route consistency on the 50 setups", ok,
            f"max route disagreement {worst:.3e}")


def test_criterion_10_non_crossing_and_determinism(harmonic_runs):
    reports = [
        json.loads((out / "equivariance_report.json").read_text()) for out in harmonic_runs
    ]
    violations = max(r["order_violations"] for r in reports)
    t1 = (harmonic_runs[0] / "trajectories.csv").read_bytes()
    t2 = (harmonic_runs[1] / "trajectories.csv").read_bytes()
    identical = t1 == t2
    ok = violations == 0 and identical
    _report(10, "1-D non-crossing and bytewise determinism", ok,
            f"order violations {violations}, trajectory CSVs identical: {identical}")
