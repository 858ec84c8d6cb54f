"""Stationary sub-barrier scattering off a potential step and a rectangular barrier.

Conventions: unit incident amplitude from the left, ``V = V0`` on ``x >= 0``
(step) or on ``0 <= x <= a`` (barrier), all fields at ``t = 0``. Region I is
``x < 0``, region II the classically forbidden part, region III ``x > a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from qbranch.errors import InvalidGeometryError, OutOfRegimeError, ThickBarrierOverflowError
from qbranch.gridfield import ComplexField, Grid1D

#: Above this opacity the log-domain transmission path is used.
LOG_DOMAIN_THRESHOLD = 30.0


@dataclass(frozen=True)
class ScatteringProblem:
    """Particle of energy ``E`` hitting a step or barrier of height ``V0``.

    Parameters
    ----------
    E, V0 : float
        Energy and barrier height with ``0 < E < V0``.
    a : float or None
        Barrier width. ``None`` (or ``inf``) selects the step.
    m, hbar : float
        Mass and reduced Planck constant.
    """

    E: float
    V0: float
    a: Optional[float] = None
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("E", "V0", "m", "hbar"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise OutOfRegimeError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.m <= 0 or self.hbar <= 0:
            raise OutOfRegimeError("mass and hbar must be positive")
        if not (0.0 < self.E < self.V0):
            raise OutOfRegimeError(
                f"only the sub-barrier regime 0 < E < V0 is supported (E={self.E}, V0={self.V0})"
            )
        if self.a is not None:
            a = float(self.a)
            if math.isnan(a) or a < 0:
                raise InvalidGeometryError(f"barrier width must be >= 0, got {self.a}")
            object.__setattr__(self, "a", None if math.isinf(a) else a)

    @property
    def is_step(self) -> bool:
        return self.a is None

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * self.m * self.E) / self.hbar

    @property
    def kappa(self) -> float:
        return math.sqrt(2.0 * self.m * (self.V0 - self.E)) / self.hbar

    @property
    def opacity(self) -> float:
        """``kappa * a`` (infinite for the step)."""
        return math.inf if self.a is None else self.kappa * self.a

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = x >= 0.0
        if self.a is not None:
            inside &= x <= self.a
        return np.where(inside, self.V0, 0.0)


@dataclass(frozen=True)
class StepSolution:
    """Exact step solution ``psi_I = e^{ikx} + r e^{-ikx}``, ``psi_II = A e^{-kappa x}``."""

    problem: ScatteringProblem
    r: complex
    A: complex

    @property
    def theta(self) -> float:
        return float(np.angle(self.A))

    @property
    def delta(self) -> float:
        return math.atan2(self.problem.kappa, self.problem.k)

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    def derivative(self, x, order: int = 0) -> np.ndarray:
        """``d^order psi / dx^order`` at ``x`` (order 0, 1 or 2)."""
        p = self.problem
        x = np.asarray(x, dtype=float)
        ik, mk = 1j * p.k, -p.kappa
        left = ik**order * np.exp(ik * x) + self.r * (-ik) ** order * np.exp(-ik * x)
        right = self.A * mk**order * np.exp(mk * np.maximum(x, 0.0))
        return np.where(x < 0.0, left, right)

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)


@dataclass(frozen=True)
class BarrierSolution:
    """Exact barrier solution.

    ``psi_I = e^{ikx} + r e^{-ikx}``, ``psi_II = A e^{-kappa x} + B e^{kappa x}``,
    ``psi_III = t e^{ikx}``.
    """

    problem: ScatteringProblem
    r: complex
    t: complex
    A: complex
    B: complex

    @property
    def alpha(self) -> float:
        return float(np.angle(self.A))

    @property
    def beta(self) -> float:
        return float(np.angle(self.B))

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    def derivative(self, x, order: int = 0) -> np.ndarray:
        p = self.problem
        a = p.a
        x = np.asarray(x, dtype=float)
        ik, kap = 1j * p.k, p.kappa
        xc = np.clip(x, 0.0, a)
        b_scaled = self.B * math.exp(kap * a)
        inner = (-kap) ** order * self.A * np.exp(-kap * xc) + kap**order * b_scaled * np.exp(
            kap * (xc - a)
        )
        left = ik**order * np.exp(ik * x) + self.r * (-ik) ** order * np.exp(-ik * x)
        right = self.t * ik**order * np.exp(ik * x)
        return np.where(x < 0.0, left, np.where(x > a, right, inner))

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)


Solution = Union[StepSolution, BarrierSolution]


def solve_step(p: ScatteringProblem) -> StepSolution:
    """Reflection and transmitted-evanescent amplitudes for the step."""
    if not p.is_step:
        raise InvalidGeometryError("solve_step needs a step problem (no barrier width)")
    k, kap = p.k, p.kappa
    r = (k - 1j * kap) / (k + 1j * kap)
    A = 2.0 * k / (k + 1j * kap)
    return StepSolution(p, complex(r), complex(A))


def _barrier_system(k: float, kap: float, a: float):
    """Equilibrated matching system for unknowns ``(r, A e^{-kappa a}, B e^{kappa a}, t e^{ika})``."""
    e = math.exp(-kap * a)
    e2 = e * e
    g = 1j * k / kap
    M = np.array(
        [
            # psi(0): 1 + r = A + B, times e^{-kappa a}
            [-e, 1.0, e2, 0.0],
            # psi'(0)/kappa: ik/kappa (1 - r) = -A + B, times e^{-kappa a}
            [g * e, -1.0, e2, 0.0],
            # psi(a): A e^{-kappa a} + B e^{kappa a} = t e^{ika}
            [0.0, 1.0, 1.0, -1.0],
            # psi'(a)/kappa
            [0.0, -1.0, 1.0, -g],
        ],
        dtype=complex,
    )
    rhs = np.array([e, g * e, 0.0, 0.0], dtype=complex)
    return M, rhs


def solve_barrier(p: ScatteringProblem, overflow_threshold: float = 300.0) -> BarrierSolution:
    """Solve the four matching conditions of the rectangular barrier.

    Raises
    ------
    InvalidGeometryError
        For a step problem or zero width.
    ThickBarrierOverflowError
        When ``kappa*a`` exceeds ``overflow_threshold``; use
        :func:`log_transmission` there.
    """
    if p.is_step or p.a <= 0.0:
        raise InvalidGeometryError(f"solve_barrier needs 0 < a < inf, got a={p.a}")
    k, kap, a = p.k, p.kappa, p.a
    if kap * a > overflow_threshold:
        raise ThickBarrierOverflowError(
            f"kappa*a = {kap * a:.4g} exceeds {overflow_threshold}; "
            "use log_transmission for opaque barriers"
        )
    M, rhs = _barrier_system(k, kap, a)
    r, a_s, b_s, t_s = np.linalg.solve(M, rhs)
    A = a_s * math.exp(kap * a)
    B = b_s * math.exp(-kap * a)
    t = t_s * np.exp(-1j * k * a)
    return BarrierSolution(p, complex(r), complex(t), complex(A), complex(B))


def interior_amplitudes_from_t(p: ScatteringProblem, t: complex) -> tuple[complex, complex]:
    """Closed forms ``A = (t e^{ika}/2)(1 - ik/kappa) e^{kappa a}`` and ``B = (t e^{ika}/2)(1 + ik/kappa) e^{-kappa a}``."""
    k, kap, a = p.k, p.kappa, p.a
    base = t * np.exp(1j * k * a) / 2.0
    A = base * (1.0 - 1j * k / kap) * math.exp(kap * a)
    B = base * (1.0 + 1j * k / kap) * math.exp(-kap * a)
    return complex(A), complex(B)


def _opacity_factor(p: ScatteringProblem) -> float:
    k, kap = p.k, p.kappa
    return (k * k + kap * kap) ** 2 / (4.0 * k * k * kap * kap)


def log_transmission(p: ScatteringProblem) -> float:
    """Natural log of the barrier transmission, finite for any opacity."""
    if p.is_step:
        return -math.inf
    x = p.opacity
    if x == 0.0:
        return 0.0
    c = _opacity_factor(p)
    if x <= LOG_DOMAIN_THRESHOLD:
        return -math.log1p(c * math.sinh(x) ** 2)
    log_cs2 = math.log(c) + 2.0 * x - 2.0 * math.log(2.0) + 2.0 * math.log1p(-math.exp(-2.0 * x))
    return -float(np.logaddexp(0.0, log_cs2))


def transmission(p: ScatteringProblem) -> float:
    """Barrier transmission ``[1 + c sinh^2(kappa a)]^{-1}``, ``c = (k^2+kappa^2)^2/(4k^2 kappa^2)``."""
    if p.is_step:
        return 0.0
    x = p.opacity
    if x <= LOG_DOMAIN_THRESHOLD:
        return 1.0 / (1.0 + _opacity_factor(p) * math.sinh(x) ** 2)
    return math.exp(log_transmission(p))


def thick_barrier_transmission(p: ScatteringProblem) -> float:
    """Opaque-barrier asymptote ``16 k^2 kappa^2/(k^2+kappa^2)^2 e^{-2 kappa a}``."""
    k, kap = p.k, p.kappa
    return 16.0 * k * k * kap * kap / (k * k + kap * kap) ** 2 * math.exp(-2.0 * p.opacity)


def log_thick_barrier_transmission(p: ScatteringProblem) -> float:
    k, kap = p.k, p.kappa
    return math.log(16.0 * k * k * kap * kap / (k * k + kap * kap) ** 2) - 2.0 * p.opacity


def evaluate_wavefunction(
    sol: Solution, grid: Grid1D, derivative: int = 0, time: Optional[float] = None
) -> ComplexField:
    """Sample ``psi`` (or its first/second derivative) on ``grid``.

    ``time`` multiplies by ``exp(-i E t / hbar)``.
    """
    vals = sol.derivative(grid.x, derivative)
    if time is not None:
        p = sol.problem
        vals = vals * np.exp(-1j * p.E * time / p.hbar)
    return ComplexField(grid, vals)


def probability_current(sol: Solution, x) -> np.ndarray:
    """``j = (hbar/m) Im(psi* psi')`` from the exact derivative."""
    p = sol.problem
    psi = sol.derivative(x, 0)
    dpsi = sol.derivative(x, 1)
    return (p.hbar / p.m) * np.imag(np.conj(psi) * dpsi)
