import math

import numpy as np
import pytest

from qbranch import phases as ph
from qbranch.errors import ClosureError, DomainError, IllDefinedGeodesicError, OutOfRegimeError
from qbranch.gridfield import ComplexField, Grid1D
from qbranch.madelung import decompose


def _mod2pi(x):
    return abs(math.remainder(x, 2 * math.pi))


@pytest.mark.parametrize("theta,phi,expected", [(0.0, 0.0, (1, 0)), (math.pi, 0.0, (0, 1)),
                                                (math.pi / 2, 0.0, (2**-0.5, 2**-0.5))])
def test_spin_half_states(theta, phi, expected):
    np.testing.assert_allclose(ph.spin_half_state(theta, phi), expected, atol=1e-15)


def test_states_are_orthonormal_eigenvectors():
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1, -1])
    th, fi = 1.1, -0.4
    n = (math.sin(th) * math.cos(fi), math.sin(th) * math.sin(fi), math.cos(th))
    H = n[0] * sx + n[1] * sy + n[2] * sz
    up, dn = ph.spin_half_state(th, fi, +1), ph.spin_half_state(th, fi, -1)
    np.testing.assert_allclose(H @ up, up, atol=1e-15)
    np.testing.assert_allclose(H @ dn, -dn, atol=1e-15)
    assert abs(np.vdot(up, dn)) < 1e-15
    with pytest.raises(DomainError):
        ph.spin_half_state(0.3, 0.0, 0)


def test_loop_validation():
    with pytest.raises(ClosureError):
        ph.LoopPath([0.5, 0.6, 0.7, 0.8], [0.0, 0.1, 0.2, 0.3])
    with pytest.raises(ClosureError):
        ph.LoopPath([0.5, 0.6, 0.5], [0.0, 0.1, 0.0])
    assert ph.LoopPath.latitude(0.5, 10).n_points == 10
    with pytest.raises(IllDefinedGeodesicError):
        ph.LoopPath.geodesic_polygon([(0, 0, 1), (1, 0, 0), (0, 0, -1)])


def test_equator_and_reference_latitudes():
    assert _mod2pi(ph.berry_phase_discrete(ph.LoopPath.latitude(math.pi / 2, 2000)) + math.pi) < 1e-3
    assert abs(ph.berry_phase_discrete(ph.LoopPath.latitude(math.pi / 3, 2000)) + math.pi / 2) < 1e-3


def test_degenerate_loop():
    loop = ph.LoopPath(np.full(6, 0.8), np.full(6, 0.3))
    assert abs(ph.berry_phase_discrete(loop)) < 1e-15
    assert abs(ph.solid_angle(loop)) < 1e-15


def test_solid_angles():
    assert ph.solid_angle(ph.LoopPath.latitude(math.pi / 2, 2000)) == pytest.approx(2 * math.pi, abs=1e-12)
    octant = ph.LoopPath.geodesic_polygon([(1, 0, 0), (0, 1, 0), (0, 0, 1)], 50)
    assert ph.solid_angle(octant) == pytest.approx(math.pi / 2, abs=1e-12)
    assert ph.berry_phase_discrete(octant) == pytest.approx(-math.pi / 4, abs=1e-3)
    th = 0.3
    omega = ph.solid_angle(ph.LoopPath.latitude(th, 500))
    assert omega == pytest.approx(2 * math.pi * (1 - math.cos(th)), rel=1e-4)
    assert ph.solid_angle(ph.LoopPath.latitude(th, 500, reverse=True)) == pytest.approx(-omega, rel=1e-12)


def test_tiny_loop_vanishes_quadratically():
    eps = [1e-1, 1e-2, 1e-3]
    omegas = [ph.solid_angle(ph.LoopPath.latitude(e, 100)) for e in eps]
    np.testing.assert_allclose(np.array(omegas) / np.array(eps) ** 2, math.pi, rtol=1e-2)


def test_bands_are_opposite():
    rng = np.random.default_rng(8)
    for _ in range(5):
        verts = rng.normal(size=(4, 3))
        loop = ph.LoopPath.geodesic_polygon(list(verts), 30)
        gp, gm = ph.berry_phase_discrete(loop, +1), ph.berry_phase_discrete(loop, -1)
        assert _mod2pi(gp + gm) < 1e-10


def test_holonomy_gauge_invariance():
    rng = np.random.default_rng(21)
    loop = ph.LoopPath.geodesic_polygon([(1, 0.2, 0.1), (0.1, 1, 0.3), (0.2, 0.1, 1)], 40)
    states = np.array([ph.spin_half_state(t, f, -1) for t, f in zip(loop.theta, loop.phi)])
    chi = rng.uniform(-math.pi, math.pi, len(states))
    chi[-1] = chi[0]
    assert _mod2pi(ph.discrete_holonomy(states) - ph.discrete_holonomy(states * np.exp(1j * chi)[:, None])) < 1e-12


def test_second_order_convergence():
    th = 2 * math.pi / 3
    target = -math.pi * (1 - math.cos(th))
    errs = [_mod2pi(ph.berry_phase_discrete(ph.LoopPath.latitude(th, n)) - target) for n in (100, 200, 400)]
    np.testing.assert_allclose(np.array(errs[:-1]) / np.array(errs[1:]), 4.0, rtol=0.05)


def test_flux_quantization():
    Phi0 = ph.flux_quantum()
    assert Phi0 == pytest.approx(math.pi)
    assert ph.flux_quantum(hbar=2.0, e=0.5) == pytest.approx(2 * math.pi * 2.0 / (2 * 0.5))
    assert ph.winding_to_flux(0) == 0.0
    assert ph.winding_to_flux(1) == Phi0
    assert ph.winding_to_flux(-3) == -3 * Phi0
    ring = ph.RingState(4)
    assert ring.Phi / ring.Phi0 == 4.0


def test_josephson_closed_form():
    j = ph.JunctionSpec(2.0, 1.0, 1.5, 0.8, 0.6, 0.0)
    assert ph.josephson_current(j) == 0.0
    jq = ph.JunctionSpec(2.0, 1.0, 1.5, 0.8, 0.6, math.pi / 2)
    assert ph.josephson_current(jq) == pytest.approx(jq.j_c, rel=1e-15)
    thick = ph.JunctionSpec(2.0, 1.0, 3.0, 0.8, 0.6, math.pi / 2)
    assert thick.j_c / jq.j_c == pytest.approx(math.exp(-jq.kappa_sc * 1.5), rel=1e-14)
    assert jq.j_c > 0
    with pytest.raises(OutOfRegimeError):
        ph.JunctionSpec(1.0, 2.0, 1.0)


def test_squid_values():
    Phi0 = ph.flux_quantum()
    assert ph.squid_critical_current(1.0, 0.0) == 2.0
    assert ph.squid_critical_current(1.0, Phi0 / 2) < 1e-15
    assert ph.squid_critical_current_brute(1.0, Phi0 / 4) == pytest.approx(math.sqrt(2), abs=1e-12)
    with pytest.raises(DomainError):
        ph.squid_critical_current(0.0, 0.1)


def test_squid_periodic_and_even():
    Phi0 = ph.flux_quantum()
    flux = np.linspace(-2.0, 2.0, 81) * Phi0
    base = ph.squid_critical_current(0.7, flux)
    np.testing.assert_allclose(ph.squid_critical_current(0.7, flux + Phi0), base, atol=1e-12)
    np.testing.assert_allclose(ph.squid_critical_current(0.7, -flux), base, atol=1e-12)


def test_classical_flux_constraints():
    assert ph.classical_flux_obstruction("single_valued_action").allowed_fluxes() == [0.0]
    assert ph.classical_flux_obstruction("multivalued_action").allowed_fluxes() is None
    quant = ph.classical_flux_obstruction("single_valued_phase_factor")
    assert quant.quantized
    assert quant.allowed_fluxes(2) == [n * math.pi for n in range(-2, 3)]
    with pytest.raises(DomainError):
        ph.classical_flux_obstruction("anything")


def test_uniform_condensate_has_no_quantum_potential():
    g = Grid1D(0.0, 4.0, 81)
    f = decompose(ComplexField(g, np.full(g.n_points, 1.3 + 0j) * np.exp(0.7j * g.x)), m=2.0)
    np.testing.assert_allclose(f.Q, 0.0, atol=1e-10)
