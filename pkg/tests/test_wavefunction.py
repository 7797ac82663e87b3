import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worldsim import (
    Region,
    Wavefunction,
    current,
    density,
    inner_product,
    make_grid,
    norm,
    normalized,
    probability,
    total_volume,
    world_volume,
)
from worldsim import states


def lobe_pair(weights=(0.5, 0.5), grid=None):
    """Two disjoint flat-top lobes with prescribed squared-norm weights."""
    g = grid or make_grid([(-16, 16)], [512])
    a = states.flattop_gaussian(g, -8.0, 0.8, 5.0)
    b = states.flattop_gaussian(g, 8.0, 0.8, 5.0)
    vals = np.sqrt(weights[0]) * a.values + np.sqrt(weights[1]) * b.values
    return g, Wavefunction(g, vals), a, b


def test_density_uniform():
    g = make_grid([(0, 1)], [8])
    psi = Wavefunction(g, np.ones(8, dtype=complex))
    assert np.allclose(density(psi), 1.0)


def test_density_plane_wave_phase_drops():
    g = make_grid([(0, 4)], [64])
    k = 2 * np.pi * 5 / 4
    psi = Wavefunction(g, np.exp(1j * k * g.axis(0)))
    assert np.abs(density(psi) - 1.0).max() < 1e-14


def test_density_spinor_sums_components():
    g = make_grid([(-6, 6)], [128])
    chi = states.gaussian(g, 0.0, 1.0)
    a, b = 0.6, 0.8  # |a|^2 + |b|^2 = 1
    psi = states.spinor((a, b), chi)
    assert np.abs(density(psi) - density(chi)).max() < 1e-14


def test_current_real_state_vanishes():
    g = make_grid([(-8, 8)], [256])
    psi = states.gaussian(g, 0.0, 1.0)
    assert np.abs(current(psi, 1.0)).max() < 1e-12


def test_current_plane_wave():
    g = make_grid([(-8, 8)], [256])
    k = 2 * np.pi * 4 / 16
    psi = Wavefunction(g, np.exp(1j * k * g.axis(0)))
    j = current(psi, 1.0)
    assert np.abs(j - k * density(psi)).max() < 1e-12


def fd_gradient_oracle(values, dx):
    """6th-order periodic finite-difference gradient, independent of the FFT."""
    c = [1.0 / 60, -3.0 / 20, 3.0 / 4]
    out = np.zeros_like(values)
    for shift, coef in zip((3, 2, 1), c):
        out += coef * (np.roll(values, -shift) - np.roll(values, shift))
    return out / dx


def test_current_against_fd_oracle():
    # two separated lobes boosted in opposite directions
    g = make_grid([(-20, 20)], [4096])
    x = g.axis(0)
    k = 2 * np.pi * 32 / 40  # grid mode, keeps the state periodic
    vals = np.exp(-((x + 6) ** 2) / 2) * np.exp(-1j * k * x) + np.exp(
        -((x - 6) ** 2) / 2
    ) * np.exp(1j * k * x)
    psi = Wavefunction(g, vals)
    j = current(psi, 1.0)[0]
    grad = fd_gradient_oracle(psi.values, g.spacing[0])
    j_oracle = np.imag(np.conj(psi.values) * grad)
    assert np.abs(j - j_oracle).max() < 1e-8
    # sign structure: flow is outward in each lobe
    rho = density(psi)
    right = (x > 3) & (x < 9)
    left = (x < -3) & (x > -9)
    assert np.all(j[right] > 0.5 * k * rho[right])
    assert np.all(j[left] < -0.5 * k * rho[left])


def test_world_volume_full_and_empty():
    g = make_grid([(-8, 8)], [128])
    psi = states.gaussian(g, 0.0, 1.0)
    assert abs(world_volume(psi, Region.full(g)) - 1.0) < 1e-12
    assert world_volume(psi, Region.empty(g)) == 0.0


def test_world_volume_two_lobes():
    g, psi, a, _ = lobe_pair((0.5, 0.5))
    lobe1 = Region.box(g, [(-16, 0)])
    half = 0.5 * world_volume(psi, Region.full(g))
    assert abs(world_volume(psi, lobe1) - half) < 1e-10


def test_world_volume_grid_mismatch():
    g1 = make_grid([(-8, 8)], [128])
    g2 = make_grid([(-8, 8)], [64])
    psi = states.gaussian(g1, 0.0, 1.0)
    with pytest.raises(ValueError):
        world_volume(psi, Region.full(g2))


def test_probability_full_is_one():
    g = make_grid([(-8, 8)], [128])
    psi = states.gaussian(g, 0.0, 1.0)
    assert probability(psi, Region.full(g)) == 1.0


def test_probability_two_lobe_weights():
    g, psi, _, _ = lobe_pair((0.3, 0.7))
    assert abs(probability(psi, Region.box(g, [(-16, 0)])) - 0.3) < 1e-10
    assert abs(probability(psi, Region.box(g, [(0, 16)])) - 0.7) < 1e-10


@settings(max_examples=25, deadline=None)
@given(
    re=st.floats(-5, 5),
    im=st.floats(-5, 5),
)
def test_probability_scale_invariant(re, im):
    c = complex(re, im)
    if abs(c) < 1e-3:
        return
    g, psi, _, _ = lobe_pair((0.3, 0.7), make_grid([(-16, 16)], [128]))
    region = Region.box(g, [(-16, 0)])
    p1 = probability(psi, region)
    p2 = probability(psi.with_values(c * psi.values), region)
    assert abs(p1 - p2) < 1e-14


def test_inner_product_norm():
    g = make_grid([(-8, 8)], [128])
    psi = states.gaussian(g, 0.0, 1.0)
    assert abs(inner_product(psi, psi).real - 1.0) < 1e-12
    assert abs(norm(psi) - 1.0) < 1e-12


def test_inner_product_disjoint_supports():
    g, _, a, b = lobe_pair()
    assert inner_product(a, b) == 0.0


def test_inner_product_dft_orthogonality():
    g = make_grid([(0, 4)], [64])
    x = g.axis(0)
    k1 = 2 * np.pi * 3 / 4
    k2 = 2 * np.pi * 7 / 4
    p1 = Wavefunction(g, np.exp(1j * k1 * x))
    p2 = Wavefunction(g, np.exp(1j * k2 * x))
    assert abs(inner_product(p1, p2)) < 1e-12


def test_inner_product_conjugate_symmetry():
    rng = np.random.default_rng(5)
    g = make_grid([(0, 1)], [32])
    a = Wavefunction(g, rng.standard_normal(32) + 1j * rng.standard_normal(32))
    b = Wavefunction(g, rng.standard_normal(32) + 1j * rng.standard_normal(32))
    assert abs(inner_product(a, b) - np.conj(inner_product(b, a))) < 1e-14


def test_inner_product_component_mismatch():
    g = make_grid([(-6, 6)], [64])
    chi = states.gaussian(g, 0.0, 1.0)
    with pytest.raises(ValueError):
        inner_product(chi, states.spinor((1, 0), chi))


def test_volume_additivity_disjoint():
    g, psi, _, _ = lobe_pair((0.4, 0.6))
    r1 = Region.box(g, [(-16, 0)])
    r2 = Region.box(g, [(0, 16)])
    lhs = world_volume(psi, r1 | r2)
    rhs = world_volume(psi, r1) + world_volume(psi, r2)
    assert abs(lhs - rhs) < 1e-12


def test_density_nonnegative_random():
    rng = np.random.default_rng(17)
    g = make_grid([(0, 1)], [64])
    psi = Wavefunction(g, rng.standard_normal(64) + 1j * rng.standard_normal(64))
    assert np.all(density(psi) >= 0.0)


def test_rejects_nan_values():
    g = make_grid([(0, 1)], [8])
    vals = np.ones(8, dtype=complex)
    vals[3] = np.nan
    with pytest.raises(ValueError):
        Wavefunction(g, vals)


def test_normalized_zero_raises():
    g = make_grid([(0, 1)], [8])
    with pytest.raises(ValueError):
        normalized(Wavefunction(g, np.zeros(8, dtype=complex)))


def test_total_volume_unnormalized():
    g = make_grid([(-8, 8)], [128])
    psi = states.gaussian(g, 0.0, 1.0)
    scaled = psi.with_values(3.0 * psi.values)
    assert abs(total_volume(scaled) - 9.0) < 1e-10
