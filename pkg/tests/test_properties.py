import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qbranch import branches as br
from qbranch import coulomb, ksmap, phases
from qbranch import scattering1d as sc
from qbranch.gridfield import ComplexField, Grid1D, RealField, second_derivative
from qbranch.madelung import decompose
from qbranch.oracle import PiecewisePotential, transfer_matrix_transmission
from qbranch.serialize import format_float

PROPS = settings(max_examples=60, deadline=None)
mass = st.floats(0.1, 10.0)
fraction = st.floats(0.01, 0.99)
height = st.floats(0.1, 50.0)
opacity = st.floats(0.01, 30.0)


def _barrier(m, frac, V0, opac):
    E = frac * V0
    kap = math.sqrt(2.0 * m * (V0 - E))
    return sc.ScatteringProblem(E, V0, opac / kap, m)


@PROPS
@given(mass, fraction, height)
def test_step_reflects_totally(m, frac, V0):
    sol = sc.solve_step(sc.ScatteringProblem(frac * V0, V0, None, m))
    assert abs(abs(sol.r) ** 2 - 1.0) < 1e-14
    x = np.linspace(0.0, 5.0 / sol.problem.kappa, 50)
    assert np.max(np.abs(sc.probability_current(sol, x))) < 1e-14


@PROPS
@given(mass, fraction, height, opacity)
def test_barrier_flux_conservation(m, frac, V0, opac):
    p = _barrier(m, frac, V0, opac)
    sol = sc.solve_barrier(p)
    assert abs(sol.R + sol.T - 1.0) < 1e-12
    x = np.linspace(-2.0 * p.a, 3.0 * p.a, 60)
    # region I carries incident minus reflected flux, so rounding scales with the incident flux
    incident = p.hbar * p.k / p.m
    np.testing.assert_allclose(sc.probability_current(sol, x), incident * sol.T, rtol=1e-10, atol=1e-13 * incident)
    np.testing.assert_allclose(abs(sol.B / sol.A), math.exp(-2.0 * opac), rtol=1e-12)


@PROPS
@given(mass, fraction, height, opacity, st.floats(1.01, 3.0))
def test_transmission_decreases_with_width(m, frac, V0, opac, factor):
    p = _barrier(m, frac, V0, opac)
    wider = sc.ScatteringProblem(p.E, p.V0, p.a * factor, p.m)
    assert sc.log_transmission(wider) < sc.log_transmission(p)


@PROPS
@given(mass, fraction, height, opacity)
def test_transfer_matrix_agrees_with_closed_form(m, frac, V0, opac):
    p = _barrier(m, frac, V0, opac)
    tmm = transfer_matrix_transmission(PiecewisePotential.barrier(V0, p.a), p.E, m)
    assert abs(math.log(tmm.T) - sc.log_transmission(p)) < 1e-10


@PROPS
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_second_derivative_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    g = Grid1D(0.0, 1.0, 41)
    f, h = RealField(g, rng.normal(size=41)), RealField(g, rng.normal(size=41))
    lhs = second_derivative(a * f + b * h).values
    rhs = a * second_derivative(f).values + b * second_derivative(h).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + abs(a) + abs(b)) / g.h**2)


@PROPS
@given(st.floats(-3, 3), st.floats(0.1, 2.0), st.floats(-math.pi, math.pi))
def test_madelung_round_trip(k, width, phase0):
    g = Grid1D(-3.0, 3.0, 601)
    psi = ComplexField(g, np.exp(-(g.x**2) / width + 1j * (k * g.x + phase0 + 0.3 * g.x**2)))
    f = decompose(psi)
    ok = ~f.node_mask
    assert np.max(np.abs(f.recompose().values[ok] - psi.values[ok])) < 1e-10


@PROPS
@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5), st.floats(0.1, 5.0),
       st.floats(-2, 2), st.floats(-2, 2))
def test_cross_term_identity(p1, p2, m, V, E):
    g = Grid1D(0.0, 1.0, 11)
    b1, b2 = br.plane_branch(p1, E), br.plane_branch(p2, E)
    lhs = (br.hj_residual(br.combine_actions(b1, b2), V, m, g).values - br.hj_residual(b1, V, m, g).values
           - br.hj_residual(b2, V, m, g).values + (V - E))
    np.testing.assert_allclose(lhs, br.nonlinearity_cross_term(b1, b2, g, m).values, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 30.0), st.integers(0, 20), st.floats(0.1, 200.0))
def test_coulomb_wronskian_in_box(eta, L, rho):
    cs = coulomb.coulomb_fg(eta, rho, L)
    assert abs(cs.wronskian - 1.0) < 1e-8


@PROPS
@given(st.floats(0.05, 0.95), st.floats(0.05, math.pi - 0.05), st.integers(0, 2**32 - 1), st.sampled_from([1, -1]))
def test_holonomy_gauge_invariance(t0, th, seed, band):
    rng = np.random.default_rng(seed)
    loop = phases.LoopPath.geodesic_polygon([(math.sin(th), 0, math.cos(th)), (0, 1, t0), (-0.5, -0.5, 1.0)], 20)
    states = np.array([phases.spin_half_state(a, b, band) for a, b in zip(loop.theta, loop.phi)])
    chi = rng.uniform(-math.pi, math.pi, len(states))
    chi[-1] = chi[0]
    d = phases.discrete_holonomy(states) - phases.discrete_holonomy(states * np.exp(1j * chi)[:, None])
    assert abs(math.remainder(d, 2 * math.pi)) < 1e-12


@PROPS
@given(st.floats(0.05, math.pi - 0.05), st.integers(10, 400))
def test_band_opposition(th, n):
    loop = phases.LoopPath.latitude(th, n)
    s = phases.berry_phase_discrete(loop, 1) + phases.berry_phase_discrete(loop, -1)
    assert abs(math.remainder(s, 2 * math.pi)) < 1e-10


@PROPS
@given(st.floats(-10, 10), st.integers(-5, 5), st.floats(0.1, 5.0))
def test_squid_period_and_parity(frac, n, ic):
    Phi0 = phases.flux_quantum()
    base = phases.squid_critical_current(ic, frac * Phi0)
    assert abs(phases.squid_critical_current(ic, (frac + n) * Phi0) - base) < 1e-12 * max(1.0, abs(n) + abs(frac))
    assert abs(phases.squid_critical_current(ic, -frac * Phi0) - base) < 1e-12


@PROPS
@given(st.floats(0.2, 5.0), st.floats(-3.0, 3.0).filter(lambda e: abs(e) > 0.05), st.floats(0.3, 3.0),
       st.integers(0, 2**32 - 1), st.integers(-2, 2))
def test_action_continuation(G, E, m, seed, winding):
    cfg = ksmap.KSConfig(G, E, m)
    rng = np.random.default_rng(seed)
    q, q0 = rng.normal(size=4), rng.normal(size=4)
    tprime = float(rng.uniform(0.1, 0.9)) * math.pi / cfg.omega
    b = ksmap.OscillatorBranch(q0, tprime, winding)
    a1, a2 = ksmap.oscillator_action(cfg, q, b), ksmap.continued_action(cfg, q, b)
    assert abs(a1 - a2) < 1e-9 * max(1.0, abs(a1))


@PROPS
@given(st.floats(-1e300, 1e300))
def test_format_float_round_trip(x):
    assert float(format_float(x)) == x
