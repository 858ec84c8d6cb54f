"""Madelung decomposition of sampled wave functions.

``psi = sqrt(rho) e^{iS/hbar}`` gives the density ``rho``, the phase ``S``,
the velocity ``v = S'/m`` and the quantum potential
``Q = -(hbar^2/2m) (sqrt rho)''/sqrt rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qbranch.errors import DegenerateInputError, DomainError
from qbranch.gridfield import ComplexField, Grid1D, RealField, as_samples, second_difference
from qbranch.scattering1d import BarrierSolution
from qbranch.serialize import Table

NODE_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class MadelungField:
    """Sampled Madelung fields.

    ``v`` and ``Q`` are NaN where ``node_mask`` is set (``rho`` below
    ``NODE_THRESHOLD * max rho``); there they are undefined.
    """

    grid: Grid1D
    rho: np.ndarray
    S: np.ndarray
    v: np.ndarray
    Q: np.ndarray
    node_mask: np.ndarray
    m: float = 1.0
    hbar: float = 1.0

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def current(self) -> np.ndarray:
        """Probability current ``rho v``."""
        return self.rho * self.v

    def to_table(self, xname: str = "x") -> Table:
        return Table({xname: self.x, "rho": self.rho, "S": self.S, "v": self.v, "Q": self.Q,
                      "node": self.node_mask})

    def recompose(self) -> ComplexField:
        """``sqrt(rho) exp(iS/hbar)``."""
        return ComplexField(self.grid, np.sqrt(self.rho) * np.exp(1j * self.S / self.hbar))


def unwrap_phase(psi: np.ndarray):
    """Continuous phase of ``psi`` and the signed amplitude that goes with it.

    Steps of arg psi are reduced modulo pi into ``(-pi/2, pi/2]``. A step that
    needed an odd multiple of pi is a sign change of a real amplitude through
    a density node; the returned amplitude flips sign there, so
    ``psi = amp * exp(i phase)`` holds with a smooth ``amp``. Assumes the phase
    changes by less than pi/2 per grid step.
    """
    ang = np.angle(psi)
    d = np.diff(ang)
    turns = np.round(d / math.pi)
    d = d - turns * math.pi
    flips = np.mod(turns, 2) != 0
    phase = np.concatenate(([ang[0]], ang[0] + np.cumsum(d)))
    sign = np.concatenate(([1.0], np.where(np.cumsum(flips) % 2 == 0, 1.0, -1.0)))
    amp = sign * np.abs(psi)
    return phase, amp


def decompose(
    psi: ComplexField,
    m: float = 1.0,
    hbar: float = 1.0,
    *,
    dpsi=None,
    d2psi=None,
    node_threshold: float = NODE_THRESHOLD,
) -> MadelungField:
    """Madelung fields of a sampled wave function.

    ``S`` jumps by ``pi hbar`` across density nodes, so that
    ``sqrt(rho) exp(iS/hbar)`` reproduces ``psi``.

    By default ``v`` and ``Q`` come from finite differences of the unwrapped
    phase and of the amplitude. When the exact derivatives ``dpsi`` and
    ``d2psi`` are supplied (same grid), ``v`` and ``(sqrt rho)''`` are
    evaluated from them by the chain rule instead, which removes the
    truncation error:

    ``v = (hbar/m) Im(psi'/psi)``,
    ``(sqrt rho)''/sqrt rho = Re(psi''/psi) + Im(psi'/psi)^2``.

    Raises
    ------
    DegenerateInputError
        If ``psi`` vanishes identically.
    """
    vals = psi.values
    rho = np.abs(vals) ** 2
    peak = rho.max()
    if not peak > 0:
        raise DegenerateInputError("cannot decompose an all-zero field")
    nodes = rho < node_threshold * peak
    phase, amp = unwrap_phase(vals)
    # S carries the pi jump at each node so that sqrt(rho) e^{iS/hbar} = psi;
    # v and Q use the smooth phase and the signed amplitude
    S = hbar * (phase + math.pi * (amp < 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        if dpsi is not None and d2psi is not None:
            l1 = as_samples(dpsi, psi.grid) / vals
            l2 = as_samples(d2psi, psi.grid) / vals
            v = (hbar / m) * l1.imag
            Q = -(hbar**2 / (2.0 * m)) * (l2.real + l1.imag**2)
        else:
            v = hbar * np.gradient(phase, psi.grid.h, edge_order=2) / m
            Q = -(hbar**2 / (2.0 * m)) * second_difference(amp, psi.grid.h) / amp
    v = np.where(nodes, np.nan, v)
    Q = np.where(nodes, np.nan, Q)
    return MadelungField(psi.grid, rho, S, v, Q, nodes, m, hbar)


def continuity_residual(f: MadelungField) -> RealField:
    """``d(rho v)/dx`` by central differences; NaN next to nodes."""
    j = f.rho * np.where(f.node_mask, 0.0, f.v)
    res = np.gradient(j, f.grid.h, edge_order=2)
    bad = f.node_mask.copy()
    bad[1:] |= f.node_mask[:-1]
    bad[:-1] |= f.node_mask[1:]
    return RealField(f.grid, np.where(bad, np.nan, res))


def hj_closure_residual(f: MadelungField, V, E: float) -> RealField:
    """Stationary quantum Hamilton-Jacobi residual ``m v^2/2 + V + Q - E``."""
    v = as_samples(V, f.grid).real
    return RealField(f.grid, 0.5 * f.m * f.v**2 + v + f.Q - E)


def _barrier_parts(sol: BarrierSolution, x):
    p = sol.problem
    if p.a is None:
        raise DomainError("closed-form Q_II needs a barrier solution")
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > p.a)):
        raise DomainError(f"x must lie inside the barrier [0, {p.a}]")
    kap = p.kappa
    a2 = abs(sol.A) ** 2 * np.exp(-2.0 * kap * x)
    b2 = (abs(sol.B) * math.exp(kap * p.a)) ** 2 * np.exp(2.0 * kap * (x - p.a))
    cross = 2.0 * abs(sol.A) * abs(sol.B) * math.cos(sol.alpha - sol.beta)
    rho = a2 + b2 + cross
    return p, kap, a2, b2, rho


def quantum_potential_closed_form(sol: BarrierSolution, x) -> np.ndarray:
    """Interior quantum potential from ``|A|``, ``|B|``, ``kappa`` and ``rho_II``.

    ``Q = -(hbar^2/2m) [4 kappa^2 (a2 + b2) rho - 2 kappa^2 (a2 - b2)^2] / (2 rho^2)``
    with ``a2 = |A|^2 e^{-2 kappa x}`` and ``b2 = |B|^2 e^{2 kappa x}``.

    Raises
    ------
    DomainError
        If any ``x`` lies outside ``[0, a]``.
    """
    p, kap, a2, b2, rho = _barrier_parts(sol, x)
    bracket = 4.0 * kap**2 * (a2 + b2) * rho - 2.0 * kap**2 * (a2 - b2) ** 2
    return -(p.hbar**2 / (2.0 * p.m)) * bracket / (2.0 * rho**2)


def quantum_potential_excess(sol: BarrierSolution, x) -> np.ndarray:
    """``Q_II(x) + (V0 - E)`` without cancellation.

    Algebraically equal to the closed form plus ``hbar^2 kappa^2/2m``:
    ``-(hbar^2/2m) 4 kappa^2 |A|^2 |B|^2 sin^2(alpha - beta) / rho^2``,
    which is ``-m v^2/2``.
    """
    p, kap, a2, b2, rho = _barrier_parts(sol, x)
    ab = abs(sol.A) * abs(sol.B)
    s = math.sin(sol.alpha - sol.beta)
    return -(p.hbar**2 / (2.0 * p.m)) * 4.0 * kap**2 * (ab * s) ** 2 / rho**2


__all__ = [
    "MadelungField",
    "continuity_residual",
    "decompose",
    "hj_closure_residual",
    "quantum_potential_closed_form",
    "quantum_potential_excess",
    "unwrap_phase",
]
