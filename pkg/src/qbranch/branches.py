"""Multi-branch classical-action superpositions ``psi = sum_j sqrt(rho_j) e^{i phi_j/hbar}``.

A branch carries a spatial action ``phi(x)`` and an amplitude ``sqrt(rho)(x)``,
both allowed to be complex, plus the common energy ``E`` (the ``-Et`` part of
the action is never stored). Products of complex derivatives are bilinear:
no complex conjugation is applied anywhere, so ``(i hbar kappa)^2`` is
``-hbar^2 kappa^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from qbranch.errors import DegenerateBranchError, InconsistentBranchError
from qbranch.gridfield import ComplexField, Grid1D, _SampledField, as_samples, second_difference
from qbranch.scattering1d import BarrierSolution, StepSolution

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ActionBranch:
    """One classical-action branch.

    Parameters
    ----------
    phi : callable
        Spatial action ``phi(x)`` (complex allowed).
    amplitude : callable
        ``sqrt(rho)(x)`` (complex allowed).
    E : float
        Branch energy.
    label : str
        Tag such as ``"incident"`` or ``"decaying"``.
    dphi, d2amplitude : callable, optional
        Exact ``phi'`` and ``sqrt(rho)''``. When absent, second-order finite
        differences on the evaluation grid are used.
    """

    phi: ArrayFn
    amplitude: ArrayFn
    E: float
    label: str = ""
    dphi: Optional[ArrayFn] = None
    d2amplitude: Optional[ArrayFn] = None

    def sample(self, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
        x = grid.x
        phi = np.broadcast_to(np.asarray(self.phi(x), dtype=complex), x.shape)
        amp = np.broadcast_to(np.asarray(self.amplitude(x), dtype=complex), x.shape)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(amp))):
            raise DegenerateBranchError(f"branch {self.label!r} is not finite on the grid")
        return phi, amp

    def momentum(self, grid: Grid1D) -> np.ndarray:
        """``phi'`` on the grid."""
        if self.dphi is not None:
            return np.broadcast_to(np.asarray(self.dphi(grid.x), dtype=complex), grid.x.shape)
        phi, _ = self.sample(grid)
        return np.gradient(phi, grid.h, edge_order=2)

    def amplitude_curvature(self, grid: Grid1D) -> np.ndarray:
        """``sqrt(rho)''`` on the grid."""
        if self.d2amplitude is not None:
            return np.broadcast_to(np.asarray(self.d2amplitude(grid.x), dtype=complex), grid.x.shape)
        _, amp = self.sample(grid)
        return second_difference(amp, grid.h)

    def field(self, grid: Grid1D, hbar: float = 1.0) -> ComplexField:
        phi, amp = self.sample(grid)
        return ComplexField(grid, amp * np.exp(1j * phi / hbar))


def plane_branch(p: complex, E: float, amplitude: complex = 1.0, offset: complex = 0.0,
                 label: str = "") -> ActionBranch:
    """Branch ``phi = p x + offset`` with constant amplitude."""
    p, amplitude, offset = complex(p), complex(amplitude), complex(offset)
    return ActionBranch(
        phi=lambda x: p * np.asarray(x) + offset,
        amplitude=lambda x: np.full(np.shape(x), amplitude),
        E=E,
        label=label,
        dphi=lambda x: np.full(np.shape(x), p),
        d2amplitude=lambda x: np.zeros(np.shape(x), dtype=complex),
    )


def combine_actions(b1: ActionBranch, b2: ActionBranch, label: str = "") -> ActionBranch:
    """Branch with action ``phi_1 + phi_2`` and amplitude ``sqrt(rho_1) sqrt(rho_2)``."""
    if not math.isclose(b1.E, b2.E, rel_tol=1e-12, abs_tol=0.0):
        raise InconsistentBranchError(f"branch energies differ: {b1.E} vs {b2.E}")
    dphi = None
    if b1.dphi is not None and b2.dphi is not None:
        dphi = lambda x: np.asarray(b1.dphi(x)) + np.asarray(b2.dphi(x))  # noqa: E731
    return ActionBranch(
        phi=lambda x: np.asarray(b1.phi(x)) + np.asarray(b2.phi(x)),
        amplitude=lambda x: np.asarray(b1.amplitude(x)) * np.asarray(b2.amplitude(x)),
        E=b1.E,
        label=label or f"{b1.label}+{b2.label}",
        dphi=dphi,
    )


def superpose(branches: Sequence[ActionBranch], grid: Grid1D, hbar: float = 1.0) -> ComplexField:
    """Pointwise ``sum_j sqrt(rho_j) exp(i phi_j / hbar)``.

    Raises
    ------
    InconsistentBranchError
        For an empty sequence or branches with different energies.
    """
    branches = list(branches)
    if not branches:
        raise InconsistentBranchError("need at least one branch")
    E0 = branches[0].E
    for b in branches[1:]:
        if not math.isclose(b.E, E0, rel_tol=1e-12, abs_tol=0.0):
            raise InconsistentBranchError(f"branch {b.label!r} has energy {b.E}, expected {E0}")
    total = np.zeros(grid.n_points, dtype=complex)
    for b in branches:
        total += b.field(grid, hbar).values
    return ComplexField(grid, total)


def _grid_of(V, grid: Optional[Grid1D]) -> Grid1D:
    if isinstance(V, _SampledField):
        return V.grid
    if grid is None:
        raise ValueError("pass a grid when V is not a sampled field")
    return grid


def hj_residual(b: ActionBranch, V, m: float = 1.0, grid: Optional[Grid1D] = None) -> ComplexField:
    """Classical stationary Hamilton-Jacobi residual ``phi'^2/2m + V - E``."""
    grid = _grid_of(V, grid)
    p = b.momentum(grid)
    v = as_samples(V, grid)
    return ComplexField(grid, p * p / (2.0 * m) + v - b.E)


def branch_quantum_potential(b: ActionBranch, grid: Grid1D, m: float = 1.0,
                             hbar: float = 1.0) -> ComplexField:
    """``Q_j = -(hbar^2/2m) sqrt(rho_j)''/sqrt(rho_j)`` (complex for complex amplitudes).

    Isolated zeros of the amplitude give NaN.

    Raises
    ------
    DegenerateBranchError
        If the amplitude vanishes on two or more consecutive samples.
    """
    _, amp = b.sample(grid)
    zero = amp == 0
    if np.any(zero[1:] & zero[:-1]):
        raise DegenerateBranchError(f"amplitude of branch {b.label!r} vanishes on a subinterval")
    curv = b.amplitude_curvature(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = -(hbar**2 / (2.0 * m)) * curv / amp
    Q = np.where(zero, np.nan, Q)
    return ComplexField(grid, Q)


@dataclass(frozen=True)
class HarmonicityReport:
    harmonic: bool
    max_residual: float
    scale: float

    def __bool__(self) -> bool:
        return self.harmonic


def harmonicity_check(b: ActionBranch, grid: Grid1D, tol: float = 1e-8) -> HarmonicityReport:
    """Whether ``sqrt(rho)'' = 0`` to within ``tol`` times ``max |sqrt(rho)|``."""
    _, amp = b.sample(grid)
    curv = b.amplitude_curvature(grid)
    scale = float(np.max(np.abs(amp))) or 1.0
    resid = float(np.max(np.abs(curv)))
    return HarmonicityReport(resid < tol * scale, resid, scale)


def nonlinearity_cross_term(b1: ActionBranch, b2: ActionBranch, grid: Grid1D,
                            m: float = 1.0) -> ComplexField:
    """``phi_1' phi_2' / m``: what the sum of two actions misses in the HJ equation."""
    return ComplexField(grid, b1.momentum(grid) * b2.momentum(grid) / m)


def is_classical_real(b: ActionBranch, grid: Grid1D, rtol: float = 1e-12) -> bool:
    """Real action, real non-negative amplitude (relative tolerance ``rtol``)."""
    phi, amp = b.sample(grid)
    phi_scale = max(float(np.max(np.abs(phi))), 1e-300)
    amp_scale = max(float(np.max(np.abs(amp))), 1e-300)
    return bool(
        np.all(np.abs(phi.imag) <= rtol * phi_scale)
        and np.all(np.abs(amp.imag) <= rtol * amp_scale)
        and np.all(amp.real >= -rtol * amp_scale)
    )


def gaussian_quantum_potential(alpha, beta, q, mass: float = 1.0, hbar: float = 1.0, d: int = 1):
    """Quantum potential of the amplitude ``exp(-alpha q.q + beta.q)`` in ``d`` dimensions.

    ``Q = -(hbar^2/2M) [(-2 alpha q + beta).(-2 alpha q + beta) - 2 alpha d]``.
    For ``d = 1``, ``q`` is a scalar or an array of points. For ``d > 1`` the
    components of ``q`` run along its last axis and ``beta`` is a scalar or a
    ``d``-vector. Complex coefficients are allowed (bilinear square).
    """
    g = -2.0 * alpha * np.asarray(q) + np.asarray(beta)
    sq = g * g if d == 1 else np.sum(g * g, axis=-1)
    return -(hbar**2 / (2.0 * mass)) * (sq - 2.0 * alpha * d)


# ---------------------------------------------------------------------------
# Branch sets of the exact step and barrier solutions
# ---------------------------------------------------------------------------


def step_branches(sol: StepSolution) -> dict[str, list[ActionBranch]]:
    """Branches reproducing the step solution region by region.

    Region I: incident ``(1, hbar k x)`` and reflected ``(|r|, -hbar k x + hbar arg r)``.
    Region II: the decaying branch ``(|A|, i hbar kappa x + hbar arg A)``; the
    constant ``hbar arg A`` is needed for the sum to equal ``A e^{-kappa x}``.
    """
    p = sol.problem
    hk, hkap = p.hbar * p.k, p.hbar * p.kappa
    return {
        "I": [
            plane_branch(hk, p.E, 1.0, 0.0, "incident"),
            plane_branch(-hk, p.E, abs(sol.r), p.hbar * np.angle(sol.r), "reflected"),
        ],
        "II": [plane_branch(1j * hkap, p.E, abs(sol.A), p.hbar * np.angle(sol.A), "decaying")],
    }


def barrier_branches(sol: BarrierSolution) -> dict[str, list[ActionBranch]]:
    """Branches reproducing the barrier solution region by region.

    Region II uses complex amplitudes ``A`` and ``B`` with actions
    ``+- i hbar kappa x``.
    """
    p = sol.problem
    hk, hkap = p.hbar * p.k, p.hbar * p.kappa
    return {
        "I": [
            plane_branch(hk, p.E, 1.0, 0.0, "incident"),
            plane_branch(-hk, p.E, abs(sol.r), p.hbar * np.angle(sol.r), "reflected"),
        ],
        "II": [
            plane_branch(1j * hkap, p.E, sol.A, 0.0, "decaying"),
            plane_branch(-1j * hkap, p.E, sol.B, 0.0, "growing"),
        ],
        "III": [plane_branch(hk, p.E, abs(sol.t), p.hbar * np.angle(sol.t), "transmitted")],
    }


def forced_real_branch(kappa: float, E: float, hbar: float = 1.0) -> ActionBranch:
    """Real action ``hbar kappa x`` imposed in a forbidden region (violates HJ by ``hbar^2 kappa^2/m``)."""
    return plane_branch(hbar * kappa, E, 1.0, 0.0, "forced-real")


@dataclass(frozen=True)
class MomentumPairDiagnostic:
    """Both sides of the imaginary-momentum velocity argument in a forbidden region.

    ``p_plus + p_minus`` vanishes, which is the claimed ``m dx/dt = 0``; the
    growing branch that supplies ``p_minus`` is not normalizable on a
    half-line, and the exact solution's Bohmian velocity is zero on its own.
    """

    p_plus: complex
    p_minus: complex
    claimed_m_velocity: complex
    growing_branch_normalizable: bool
    exact_bohmian_velocity: float


def momentum_pair_diagnostic(sol: StepSolution, n_samples: int = 201) -> MomentumPairDiagnostic:
    p = sol.problem
    pp, pm = 1j * p.hbar * p.kappa, -1j * p.hbar * p.kappa
    x = np.linspace(0.0, 5.0 / p.kappa, n_samples)
    psi = sol.derivative(x, 0)
    dpsi = sol.derivative(x, 1)
    v = (p.hbar / p.m) * np.imag(dpsi / psi)
    return MomentumPairDiagnostic(pp, pm, pp + pm, False, float(np.max(np.abs(v))))
