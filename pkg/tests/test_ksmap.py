import math

import numpy as np
import pytest

from qbranch import ksmap as ks
from qbranch.errors import CausticError, DomainError, OutOfRegimeError, UnsupportedInitialStateError

BOUND = ks.KSConfig(1.0, -0.5)
INVERTED = ks.KSConfig(1.0, 0.5)


@pytest.mark.parametrize("q,r", [((0, 0, 0, 0), 0.0), ((1, 0, 0, 0), 1.0), ((1, 1, 1, 1), 4.0)])
def test_ks_radius(q, r):
    assert ks.ks_radius(q) == r


def test_frequency_and_width():
    assert BOUND.M == 4.0
    assert BOUND.omega == pytest.approx(0.5)
    assert BOUND.ground_state_width == pytest.approx(1.0)
    assert INVERTED.complex_omega == pytest.approx(0.5j)
    assert ks.KSConfig(1.0, -0.5, omega_override=2.0).omega == 2.0
    with pytest.raises(OutOfRegimeError):
        ks.KSConfig(1.0, 0.0)
    with pytest.raises(DomainError):
        ks.KSConfig(-1.0, -0.5)


@pytest.mark.parametrize("cfg,target", [(BOUND, 1.0), (ks.KSConfig(2.0, -0.3, m=1.7), 2.0),
                                        (INVERTED, -1.0), (ks.KSConfig(0.7, 1.3, m=0.6), -0.7)])
def test_pseudo_energy_is_conserved(cfg, target):
    q0 = np.array([0.3, -0.2, 0.1, 0.4]) if cfg.bound else np.array([1.5, 0.8, -0.6, 0.9])
    traj = ks.classical_trajectory(cfg, q0, [1.0, 2.0, -1.0, 0.5], np.linspace(0.0, 3.0, 61))
    np.testing.assert_allclose(ks.ks_pseudo_energy(cfg, traj.q, traj.p), target, atol=1e-8)


def test_unreachable_start_rejected():
    with pytest.raises(DomainError):
        ks.classical_trajectory(BOUND, [3.0, 0, 0, 0], [1, 0, 0, 0], [0.5])


def test_action_continuation_identity():
    rng = np.random.default_rng(4)
    for cfg in (BOUND, INVERTED, ks.KSConfig(2.0, 0.8, m=1.3)):
        for _ in range(10):
            q, q0 = rng.normal(size=4), rng.normal(size=4)
            b = ks.OscillatorBranch(q0, float(rng.uniform(0.2, 2.5)), int(rng.integers(-2, 3)))
            a1 = ks.oscillator_action(cfg, q, b)
            a2 = ks.continued_action(cfg, q, b)
            assert abs(a1 - a2) < 1e-10 * max(1.0, abs(a1))


def test_action_reality():
    b = ks.OscillatorBranch((0.1, 0.2, 0.3, 0.4), 1.0)
    q = np.array([0.5, -0.1, 0.0, 0.2])
    assert ks.oscillator_action(BOUND, q, b).imag == 0.0
    # the quadratic part stays real; the winding term carries the imaginary part
    wound = ks.OscillatorBranch(b.q0, 1.0, 1)
    assert ks.oscillator_action(INVERTED, q, b).imag == 0.0
    assert ks.oscillator_action(INVERTED, q, wound).imag != 0.0


def test_action_is_quadratic():
    b = ks.OscillatorBranch((0.3, 0.1, -0.2, 0.5), 0.8)
    q = np.array([0.4, -0.3, 0.2, 0.1])
    c = ks.action_constant(BOUND, b)
    base = ks.oscillator_action(BOUND, q, b) - c
    for lam in (0.5, 2.0, 3.0):
        scaled = ks.OscillatorBranch(tuple(lam * np.array(b.q0)), b.tprime)
        assert ks.oscillator_action(BOUND, lam * q, scaled) - c == pytest.approx(lam**2 * base, rel=1e-12)


def test_caustics():
    with pytest.raises(CausticError):
        ks.oscillator_action(BOUND, np.zeros(4), ks.OscillatorBranch(np.zeros(4), 2 * math.pi / BOUND.omega))
    with pytest.raises(CausticError):
        ks.oscillator_action(INVERTED, np.zeros(4), ks.OscillatorBranch(np.zeros(4), 0.0))


def test_gaussian_quantum_potential_4d():
    assert ks.branch_quantum_potential_4d(0.0, 0.0, np.ones(4), BOUND) == 0.0
    alpha = 0.7
    assert ks.branch_quantum_potential_4d(alpha, 0.0, np.zeros(4), BOUND) == pytest.approx(
        BOUND.hbar**2 / (2 * BOUND.M) * 2 * alpha * 4)


def test_gaussian_quantum_potential_matches_finite_differences():
    alpha, beta = 0.6, np.array([0.3, -0.2, 0.5, 0.1])
    q = np.array([0.2, 0.4, -0.3, 0.1])
    amp = lambda x: np.exp(-alpha * x @ x + beta @ x)  # noqa: E731
    h = 1e-2
    lap = 0.0
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        lap += (-amp(q + 2 * e) + 16 * amp(q + e) - 30 * amp(q) + 16 * amp(q - e) - amp(q - 2 * e)) / (12 * h * h)
    fd = -(BOUND.hbar**2 / (2 * BOUND.M)) * lap / amp(q)
    assert ks.branch_quantum_potential_4d(alpha, beta, q, BOUND) == pytest.approx(fd, abs=1e-8)


def test_ground_state_is_stationary():
    g0 = ks.InitialGaussian().to_gaussian(BOUND)
    g1 = ks.propagate_gaussian(BOUND, g0, 1.3)
    assert g1.a == pytest.approx(g0.a, abs=1e-14)
    # the phase advances by the zero-point energy d hbar omega/2
    assert abs(g1.c) == pytest.approx(2 * BOUND.omega * 1.3, rel=1e-12)


def test_propagation_solves_the_oscillator_equation():
    cfg = ks.KSConfig(1.0, -0.5, d=1)
    g0 = ks.Gaussian4D(0.4 + 0.1j, (0.3 - 0.2j,), 0.0)
    q = np.linspace(-1.0, 1.0, 9)[:, None]
    t, dt = 0.9, 1e-4
    psi = lambda tt: ks.propagate_gaussian(cfg, g0, tt)(q)  # noqa: E731
    g = ks.propagate_gaussian(cfg, g0, t)
    lhs = 1j * cfg.hbar * (psi(t + dt) - psi(t - dt)) / (2 * dt)
    rhs = -(cfg.hbar**2 / (2 * cfg.M)) * g.laplacian(q) + 0.5 * cfg.M * cfg.omega**2 * q[:, 0] ** 2 * g(q)
    np.testing.assert_allclose(lhs, rhs, atol=1e-7)


def test_reconstruction_is_linear_in_the_initial_state():
    p1 = ks.reconstruct_ground_state(BOUND)
    p2 = ks.reconstruct_ground_state(BOUND, ks.InitialGaussian(amplitude=3.0))
    np.testing.assert_allclose(p2.log_abs_psi - p1.log_abs_psi, math.log(3.0), atol=1e-12)


def test_reconstruction_independent_of_quadrature_refinement():
    closed = ks.reconstruct_ground_state(BOUND)
    for n in (64, 96):
        herm = ks.reconstruct_ground_state(BOUND, quadrature=ks.Quadrature("hermite", n))
        np.testing.assert_allclose(herm.log_abs_psi, closed.log_abs_psi, atol=1e-10)


def test_reconstruction_rejections():
    with pytest.raises(OutOfRegimeError):
        ks.reconstruct_ground_state(INVERTED)
    with pytest.raises(UnsupportedInitialStateError):
        ks.reconstruct_ground_state(BOUND, ks.InitialGaussian(center=(0.5, 0, 0, 0)))
    with pytest.raises(UnsupportedInitialStateError):
        ks.reconstruct_ground_state(BOUND, ks.InitialGaussian(kind="plane"))
    with pytest.raises(DomainError):
        ks.Quadrature("trapezoid")


def test_every_single_branch_has_a_quantum_potential():
    rep = ks.inverted_branch_interference_check(INVERTED, ks.BranchSample.random(n_branches=10, seed=3))
    assert np.all(rep.branch_max_abs_Q > 0)
    assert rep.hj_residual_max < 1e-6
    with pytest.raises(OutOfRegimeError):
        ks.inverted_branch_interference_check(BOUND)


def test_symmetric_branch_pair():
    c = np.array([[0.7, -0.3, 0.2, 0.5]])
    sample = ks.BranchSample(np.vstack([c, -c]), 1.0, 1.0)
    q = np.array([[0.3, 0.1, -0.4, 0.2]])
    np.testing.assert_allclose(ks.superposed_field(INVERTED, sample, q),
                               ks.superposed_field(INVERTED, sample, -q), rtol=1e-13)
    h = 1e-4
    for i in range(4):
        e = np.zeros((1, 4))
        e[0, i] = h
        dphase = np.angle(ks.superposed_field(INVERTED, sample, e) / ks.superposed_field(INVERTED, sample, -e))
        assert abs(dphase[0]) / (2 * h) < 1e-8
