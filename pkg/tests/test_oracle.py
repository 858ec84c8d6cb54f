import math

import numpy as np
import pytest

from qbranch.gridfield import Grid1D
from qbranch.oracle import (Boundary, PiecewisePotential, dense_maximize, numerov_solve, numerov_transmission,
                            radial_coulomb_integrate, transfer_matrix_transmission)
from qbranch.scattering1d import ScatteringProblem, solve_barrier, transmission
from qbranch.errors import IllPosedError


def test_transfer_matrix_matches_closed_form():
    res = transfer_matrix_transmission(PiecewisePotential.barrier(1.0, 2.0), 0.5)
    assert res.T == pytest.approx(transmission(ScatteringProblem(0.5, 1.0, 2.0)), rel=1e-12)
    assert abs(res.T + res.R - 1.0) < 1e-12


def test_transfer_matrix_amplitudes_match_matching_solve():
    sol = solve_barrier(ScatteringProblem(0.3, 1.0, 1.7))
    res = transfer_matrix_transmission(PiecewisePotential.barrier(1.0, 1.7), 0.3)
    assert abs(res.t - sol.t) < 1e-12
    assert abs(res.r - sol.r) < 1e-12


def test_free_potential_is_transparent():
    res = transfer_matrix_transmission(PiecewisePotential((), (0.0,)), 0.7)
    assert res.T == 1.0 and res.r == 0


def test_very_wide_barrier():
    a = 40.0 / math.sqrt(2.0 * 0.5)
    res = transfer_matrix_transmission(PiecewisePotential.barrier(1.0, a), 0.5)
    assert 0 < res.T < 1e-30
    assert res.R == pytest.approx(1.0, abs=1e-14)


def test_flux_conservation_multistep():
    rng = np.random.default_rng(3)
    for _ in range(20):
        bp = tuple(np.cumsum(rng.uniform(0.1, 1.5, 4)))
        levels = (0.0,) + tuple(rng.uniform(-0.5, 2.0, 3)) + (float(rng.uniform(-0.3, 0.3)),)
        res = transfer_matrix_transmission(PiecewisePotential(bp, levels), 0.8)
        assert abs(res.T + res.R - 1.0) < 1e-12


def test_energy_below_exterior_is_ill_posed():
    with pytest.raises(IllPosedError):
        transfer_matrix_transmission(PiecewisePotential((0.0,), (0.0, 1.0)), 0.5)


def test_zero_width_segments_are_dropped():
    with pytest.warns(UserWarning):
        res = transfer_matrix_transmission(PiecewisePotential((0.0, 0.0, 2.0), (0.0, 5.0, 1.0, 0.0)), 0.5)
    assert res.T == pytest.approx(transmission(ScatteringProblem(0.5, 1.0, 2.0)), rel=1e-12)


def test_numerov_free_wave_phase():
    k = 1.0
    g = Grid1D(0.0, 20 * math.pi, 20001)
    psi = numerov_solve(np.zeros(g.n_points), g, 0.5 * k * k).values
    ref = np.exp(1j * k * (g.x - g.x_max))
    assert np.max(np.abs(np.angle(psi / ref))) < 1e-8
    np.testing.assert_allclose(np.abs(psi), 1.0, atol=1e-8)


def test_numerov_barrier_field_matches_exact():
    sol = solve_barrier(ScatteringProblem(0.5, 1.0, 2.0))
    V = PiecewisePotential.barrier(1.0, 2.0)
    g = Grid1D(-5.0, 7.0, 24001)
    psi = numerov_solve(V(g.x), g, 0.5).values
    exact = sol(g.x)
    scaled = psi * exact[-1] / psi[-1]
    assert np.max(np.abs(scaled - exact)) / np.max(np.abs(exact)) < 1e-7


def test_numerov_transmission():
    T = numerov_transmission(PiecewisePotential.barrier(1.0, 2.0), 0.5, -5.0, 7.0, 12001)
    assert T == pytest.approx(transmission(ScatteringProblem(0.5, 1.0, 2.0)), rel=1e-8)


def test_numerov_decaying_step():
    V0, E = 1.0, 0.3
    g = Grid1D(-3.0, 8.0, 11001)
    psi = numerov_solve(np.where(g.x >= 0.0, V0, 0.0), g, E, boundary=Boundary("decaying")).values
    sel = (g.x > 0.5) & (g.x < 6.0)
    slope = np.polyfit(g.x[sel], np.log(np.abs(psi[sel])), 1)[0]
    assert -slope == pytest.approx(math.sqrt(2.0 * (V0 - E)), abs=1e-8)


def test_numerov_boundary_kind_checked():
    g = Grid1D(0.0, 1.0, 11)
    with pytest.raises(IllPosedError):
        numerov_solve(np.ones(11), g, 0.5, boundary=Boundary("outgoing"))
    with pytest.raises(IllPosedError):
        numerov_solve(np.zeros(11), g, 0.5, boundary=Boundary("decaying"))
    with pytest.raises(IllPosedError):
        Boundary("reflecting")


def test_radial_oracle_free_limit():
    rho = np.linspace(0.2, 40.0, 60)
    o = radial_coulomb_integrate(0.0, 0, rho)
    np.testing.assert_allclose(o.F, np.sin(rho), atol=1e-10)
    np.testing.assert_allclose(o.G, np.cos(rho), atol=1e-10)


def test_radial_oracle_wronskian_along_trajectory():
    o = radial_coulomb_integrate(2.0, 0, np.linspace(1.0, 20.0, 200))
    np.testing.assert_allclose(o.wronskian, 1.0, atol=1e-9)


def test_radial_oracle_unsorted_input():
    rho = np.array([5.0, 1.0, 3.0])
    o = radial_coulomb_integrate(2.0, 1, rho)
    s = radial_coulomb_integrate(2.0, 1, np.sort(rho))
    np.testing.assert_allclose(o.F, s.F[[2, 0, 1]], rtol=1e-12)


def test_dense_maximize():
    x, f = dense_maximize(lambda t: -(t - 0.3) ** 2 + 2.0, -1.0, 1.0, 101)
    assert x == pytest.approx(0.3, abs=1e-7) and f == pytest.approx(2.0, abs=1e-14)
