import numpy as np
import pytest

from worldsim import (
    ModelViolationError,
    SpinSetup,
    Wavefunction,
    carry_through_spin_measurement,
    density,
    make_grid,
    norm,
    sample_worlds,
    spin_premeasurement,
    spin_probabilities,
    spin_readout,
    spin_readout_frequencies,
    stern_gerlach_measure,
)
from worldsim import states

XG = make_grid([(-8, 8)], [128])
YG = make_grid([(-16, 16)], [256])


def pointer_triplet():
    initial = states.flattop_gaussian(YG, 0.0, 0.5, 5.0)
    up = states.flattop_gaussian(YG, -8.0, 0.5, 5.0)
    down = states.flattop_gaussian(YG, 8.0, 0.5, 5.0)
    return initial, up, down


def spin_setup(alpha, beta):
    initial, up, down = pointer_triplet()
    chi = states.gaussian(XG, 0.0, 1.0)
    return SpinSetup.from_coefficients(alpha, beta, chi, initial, up, down)


def test_premeasurement_pure_up():
    s = spin_setup(1.0, 0.0)
    psi = spin_premeasurement(s)
    assert psi.is_spinor
    assert np.abs(psi.values[1]).max() == 0.0
    assert abs(norm(psi) - 1.0) < 1e-12


def test_premeasurement_norm_disentangled():
    s = spin_setup(0.6, 0.8)
    psi = spin_premeasurement(s)
    assert abs(norm(psi) - 1.0) < 1e-10


def test_premeasurement_symmetric_components():
    a = np.sqrt(0.5)
    s = spin_setup(a, a)
    psi = spin_premeasurement(s)
    assert np.abs(psi.values[0] - psi.values[1]).max() < 1e-14


def test_stern_gerlach_single_branch():
    s = spin_setup(1.0, 0.0)
    post = stern_gerlach_measure(spin_premeasurement(s), s)
    want = np.multiply.outer(s.up_component.values, s.pointer_up.values)
    assert np.abs(post.values[0] - want).max() < 1e-12
    assert np.abs(post.values[1]).max() < 1e-14


def test_stern_gerlach_equal_branches():
    a = np.sqrt(0.5)
    s = spin_setup(a, a)
    post = stern_gerlach_measure(spin_premeasurement(s), s)
    n_up = float(np.sum(np.abs(post.values[0]) ** 2))
    n_down = float(np.sum(np.abs(post.values[1]) ** 2))
    assert n_up == pytest.approx(n_down, rel=1e-10)


def test_stern_gerlach_preserves_norm():
    s = spin_setup(0.5, np.sqrt(0.75))
    pre = spin_premeasurement(s)
    post = stern_gerlach_measure(pre, s)
    assert abs(norm(post) - norm(pre)) < 1e-10


def test_stern_gerlach_rejects_non_product():
    s = spin_setup(0.5, np.sqrt(0.75))
    joint = s.joint_grid()
    rogue = states.spinor((1.0, 0.0), states.gaussian(joint, (0.0, 0.0), (1.0, 1.0)))
    with pytest.raises(ModelViolationError):
        stern_gerlach_measure(rogue, s)


def test_spin_probabilities_quarter():
    s = spin_setup(np.sqrt(0.25), np.sqrt(0.75))
    post = stern_gerlach_measure(spin_premeasurement(s), s)
    p_up, p_down = spin_probabilities(post, s)
    assert abs(p_up - 0.25) < 1e-10
    assert abs(p_down - 0.75) < 1e-10
    assert abs(p_up + p_down - 1.0) < 1e-10


def test_spin_probabilities_certain():
    s = spin_setup(1.0, 0.0)
    post = stern_gerlach_measure(spin_premeasurement(s), s)
    assert spin_probabilities(post, s) == pytest.approx((1.0, 0.0), abs=1e-12)


def test_spin_probabilities_entangled_unnormalized():
    # entangled components with ||psi_up||^2 = 0.4, ||psi_down||^2 = 0.8,
    # deliberately unnormalized: P_up = 0.4 / 1.2
    initial, up, down = pointer_triplet()
    chi_a = states.gaussian(XG, -1.0, 0.8)
    chi_b = states.gaussian(XG, 1.0, 1.1)
    psi_up = chi_a.with_values(np.sqrt(0.4) * chi_a.values)
    psi_down = chi_b.with_values(np.sqrt(0.8) * chi_b.values)
    s = SpinSetup.entangled(psi_up, psi_down, initial, up, down)
    post = stern_gerlach_measure(spin_premeasurement(s), s)
    p_up, p_down = spin_probabilities(post, s)
    assert abs(p_up - 0.4 / 1.2) < 1e-10
    assert abs(p_down - 0.8 / 1.2) < 1e-10


def test_spin_probabilities_phase_and_scale_invariant():
    s1 = spin_setup(0.5, np.sqrt(0.75))
    s2 = spin_setup(0.5 * np.exp(1.3j), np.sqrt(0.75) * np.exp(-0.4j))
    p1 = spin_probabilities(stern_gerlach_measure(spin_premeasurement(s1), s1), s1)
    post2 = stern_gerlach_measure(spin_premeasurement(s2), s2)
    scaled = Wavefunction(post2.grid, -3.2j * post2.values, post2.time_tag)
    p2 = spin_probabilities(scaled, s2)
    assert np.abs(np.asarray(p1) - np.asarray(p2)).max() < 1e-12


def test_spinor_sampling_uses_summed_density():
    s = spin_setup(0.6, 0.8)
    pre = spin_premeasurement(s)
    ens = sample_worlds(pre, 5000, 17)
    # the summed-component density is the product chi^2 * phi0^2 regardless
    # of the spin split; all samples live inside the product support
    assert np.all(np.abs(ens.positions[:, 0]) < 8.0)
    rho = density(pre)
    assert rho.min() >= 0.0


def test_spin_readout_and_frequencies():
    s = spin_setup(np.sqrt(0.25), np.sqrt(0.75))
    assert spin_readout(np.array([0.0, -8.0]), s) == "up"
    assert spin_readout(np.array([0.0, 8.0]), s) == "down"
    assert spin_readout(np.array([0.0, 0.0]), s) is None
    pre = spin_premeasurement(s)
    ens = sample_worlds(pre, 10_000, 424242)
    post_ens = carry_through_spin_measurement(ens, s, 424242)
    up, down, neither = spin_readout_frequencies(post_ens, s)
    assert abs(up - 0.25) <= 0.013  # 3 sigma binomial
    assert neither == 0.0
    assert post_ens.count == ens.count
    assert np.array_equal(post_ens.positions[:, 0], ens.positions[:, 0])


def test_pointer_support_disjointness_enforced():
    initial = states.flattop_gaussian(YG, 0.0, 0.5, 5.0)
    up = states.flattop_gaussian(YG, -2.0, 0.5, 5.0)
    down = states.flattop_gaussian(YG, 2.0, 0.5, 5.0)
    chi = states.gaussian(XG, 0.0, 1.0)
    with pytest.raises(ValueError):
        SpinSetup.from_coefficients(1.0, 0.0, chi, initial, up, down)
