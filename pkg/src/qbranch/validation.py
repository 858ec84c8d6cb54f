"""Dual-path cross-checks: every production path against an independent one.

Each check returns the worst observed discrepancy and the tolerance it is
held to. ``run_checks`` is what the ``validate`` subcommand executes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from qbranch import coulomb, ksmap, phases, scattering1d
from qbranch.gridfield import Grid1D
from qbranch.madelung import decompose
from qbranch.oracle import PiecewisePotential, numerov_transmission, radial_coulomb_integrate, transfer_matrix_transmission
from qbranch.serialize import Table


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def check_barrier_transmission() -> float:
    """Closed form vs transfer matrix vs 4x4 solve on a grid of cases."""
    worst = 0.0
    for ev in (0.1, 0.5, 0.9):
        for opac in (0.5, 2.0, 10.0, 25.0):
            V0 = 1.0
            kap = math.sqrt(2.0 * (V0 - ev))
            p = scattering1d.ScatteringProblem(ev, V0, opac / kap)
            closed = scattering1d.transmission(p)
            tmm = transfer_matrix_transmission(PiecewisePotential.barrier(V0, p.a), ev).T
            solve = scattering1d.solve_barrier(p).T
            worst = max(worst, _rel(tmm, closed), _rel(solve, closed))
    return worst


def check_numerov() -> float:
    """Numerov integration vs closed-form barrier transmission (node-aligned grid)."""
    p = scattering1d.ScatteringProblem(0.5, 1.0, 2.0)
    T = numerov_transmission(PiecewisePotential.barrier(1.0, 2.0), 0.5, -5.0, 7.0, 12001)
    return _rel(T, scattering1d.transmission(p))


def check_interior_kinematics() -> float:
    """Exact-derivative Madelung fields inside a barrier: current and HJ closure."""
    p = scattering1d.ScatteringProblem(0.4, 1.0, 1.5)
    sol = scattering1d.solve_barrier(p)
    g = Grid1D(0.0, p.a, 401)
    psi = scattering1d.evaluate_wavefunction(sol, g)
    f = decompose(psi, dpsi=sol.derivative(g.x, 1), d2psi=sol.derivative(g.x, 2))
    cur = _rel(f.current, np.full(g.n_points, p.k * sol.T))
    hj = float(np.max(np.abs(0.5 * f.v**2 + p.V0 + f.Q - p.E)))
    return max(cur, hj)


def check_coulomb_oracle() -> float:
    """Coulomb functions vs direct ODE integration, relative to ``|H|`` or each function."""
    worst = 0.0
    for eta, L in ((0.0, 0), (2.0, 0), (10.0, 5), (30.0, 20)):
        rho = np.array([0.5, 2.0, 10.0, 60.0, 150.0])
        cs = coulomb.coulomb_fg(eta, rho, L)
        o = radial_coulomb_integrate(eta, L, rho)
        worst = max(worst, _rel(o.F, cs.F), _rel(o.G, cs.G))
    return worst


def check_coulomb_wronskian() -> float:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        eta, L = rng.uniform(0, 30), int(rng.integers(0, 21))
        cs = coulomb.coulomb_fg(eta, rng.uniform(0.1, 200.0, 6), L)
        worst = max(worst, float(np.max(np.abs(cs.wronskian - 1.0))))
    return worst


def check_decay_fields() -> float:
    p = coulomb.CoulombParams.from_eta(2.0, L=0, k=1.0)
    g = Grid1D(1.0, 12.0, 1101)
    f = coulomb.decay_fields(p, g)
    cur = float(np.ptp(f.current) / (p.hbar * p.k / p.m))
    hj = float(np.max(np.abs(0.5 * p.m * f.v**2 + p.V_eff(g.x) + f.Q - p.E)))
    return max(cur, hj)


def check_fusion_limit() -> float:
    p = coulomb.CoulombParams.from_eta(2.0, L=1, k=1.0)
    g = Grid1D(1.0, 12.0, 501)
    dec = coulomb.decay_fields(p, g)
    fus = coulomb.fusion_fields(p, coulomb.FusionChannel(0.0, 1.0), g).field
    return max(float(np.max(np.abs(fus.rho - dec.rho))), float(np.max(np.abs(fus.Q - dec.Q))),
               float(np.max(np.abs(fus.v + dec.v))))


def check_ks_decay_rate() -> float:
    """Fitted decay rate of the reconstructed state vs the oscillator ground-state width."""
    cfg = ksmap.KSConfig(1.0, -0.5)
    prof = ksmap.reconstruct_ground_state(cfg)
    return abs(prof.decay_rate - cfg.ground_state_width) / cfg.ground_state_width


def check_ks_quadrature() -> float:
    """Closed-form Gaussian integral vs Gauss-Hermite quadrature."""
    cfg = ksmap.KSConfig(1.0, -0.5)
    closed = ksmap.reconstruct_ground_state(cfg)
    herm = ksmap.reconstruct_ground_state(cfg, quadrature=ksmap.Quadrature("hermite", 96))
    return float(np.max(np.abs(closed.log_abs_psi - herm.log_abs_psi)))


def check_ks_inverted() -> float:
    rep = ksmap.inverted_branch_interference_check(ksmap.KSConfig(1.0, 0.5))
    return rep.hj_residual_max if rep.branches_nonzero else math.inf


def check_berry() -> float:
    worst = 0.0
    for th in (math.pi / 6, math.pi / 3, 2 * math.pi / 3):
        loop = phases.LoopPath.latitude(th, 2000)
        g = phases.berry_phase_discrete(loop)
        worst = max(worst, abs(math.remainder(g + math.pi * (1.0 - math.cos(th)), 2 * math.pi)))
    return worst


def check_squid() -> float:
    flux = np.linspace(0.0, 2.0, 41) * math.pi
    closed = phases.squid_critical_current(1.0, flux)
    brute = np.array([phases.squid_critical_current_brute(1.0, f) for f in flux])
    return float(np.max(np.abs(closed - brute)))


def check_josephson() -> float:
    worst = 0.0
    for delta in np.linspace(0.0, 2 * math.pi, 9):
        j = phases.JunctionSpec(2.0, 1.0, 1.5, 0.8, 0.6, float(delta))
        worst = max(worst, float(np.max(np.abs(phases.josephson_current_from_field(j) - phases.josephson_current(j)))))
    return worst


CHECKS: Mapping[str, tuple[Callable[[], float], float]] = {
    "barrier_transmission": (check_barrier_transmission, 1e-10),
    "numerov_transmission": (check_numerov, 1e-8),
    "interior_kinematics": (check_interior_kinematics, 1e-8),
    "coulomb_oracle": (check_coulomb_oracle, 1e-8),
    "coulomb_wronskian": (check_coulomb_wronskian, 1e-8),
    "decay_fields": (check_decay_fields, 1e-6),
    "fusion_limit": (check_fusion_limit, 1e-10),
    "ks_decay_rate": (check_ks_decay_rate, 1e-2),
    "ks_quadrature": (check_ks_quadrature, 1e-10),
    "ks_inverted_closure": (check_ks_inverted, 1e-6),
    "berry_holonomy": (check_berry, 1e-3),
    "squid_brute_force": (check_squid, 1e-12),
    "josephson_current": (check_josephson, 1e-10),
}


def run_checks(tolerances: Optional[Mapping[str, float]] = None) -> list[CheckResult]:
    """Run every check; ``tolerances`` overrides individual thresholds by name."""
    tolerances = dict(tolerances or {})
    unknown = set(tolerances) - set(CHECKS)
    if unknown:
        raise KeyError(f"unknown checks: {sorted(unknown)}")
    out = []
    for name, (func, tol) in CHECKS.items():
        out.append(CheckResult(name, float(func()), float(tolerances.get(name, tol))))
    return out


def report_table(results: list[CheckResult]) -> Table:
    return Table(
        {"check": [r.name for r in results], "value": np.array([r.value for r in results]),
         "tolerance": np.array([r.tolerance for r in results]),
         "passed": np.array([r.passed for r in results])},
        {"all_passed": all(r.passed for r in results), "n_checks": len(results)},
    )
