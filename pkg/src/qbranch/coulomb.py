"""Coulomb wave functions and the Madelung fields of Coulomb decay and fusion.

``F_L(eta, rho)`` and ``G_L(eta, rho)`` solve
``u'' + (1 - 2 eta/rho - L(L+1)/rho^2) u = 0`` with ``F'G - FG' = 1``;
``H^+- = G +- iF``.

Evaluation strategy, per point:

* ``rho >= max(turning point, 2)``: Steed's method. The continued fraction
  for ``F'/F`` and the complex one for ``H^+'/H^+`` fix all four values
  through the Wronskian.
* below that switch point: ``F`` from its power series about the origin and
  ``G`` from the Wronskian quadrature
  ``G(rho) = F(rho) [G/F(rho_1) + int_rho^rho_1 ds / F(s)^2]``, anchored on
  Steed's ratio at the switch point. Every term of the quadrature is
  positive, so the exponentially growing ``G`` carries no cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from qbranch.errors import (
    DomainError,
    NonphysicalAbsorptionError,
    OutOfRegimeError,
    PrecisionFailureError,
)
from qbranch.gridfield import ComplexField, Grid1D
from qbranch.madelung import MadelungField
from qbranch.serialize import Table

_TINY = 1e-300
_EPS = 1e-16
_MAXIT = 200000
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
_PANEL_WIDTH = 0.05  # in log(rho)


# ---------------------------------------------------------------------------
# Steed's method (vectorized over rho)
# ---------------------------------------------------------------------------


def _cf1(eta: float, rho: np.ndarray, L: int):
    """``F'/F`` by modified Lentz, with the sign of ``F`` from the denominators."""
    x = 1.0 / rho
    pk = L + 1.0
    f = pk * x + eta / pk
    f = np.where(np.abs(f) < _TINY, _TINY, f)
    C = f.copy()
    D = np.zeros_like(rho)
    sign = np.ones_like(rho)
    active = np.ones(rho.shape, dtype=bool)
    delta = np.ones_like(rho)
    for _ in range(_MAXIT):
        pk1 = pk + 1.0
        rk2 = 1.0 + (eta / pk) ** 2
        tk = (pk + pk1) * (x + eta / (pk * pk1))
        Dn = tk - rk2 * D
        Cn = tk - rk2 / C
        Cn = np.where(np.abs(Cn) < _TINY, _TINY, Cn)
        Dn = np.where(np.abs(Dn) < _TINY, _TINY, Dn)
        Dn = 1.0 / Dn
        dn = Cn * Dn
        f = np.where(active, f * dn, f)
        sign = np.where(active & (Dn < 0), -sign, sign)
        C = np.where(active, Cn, C)
        D = np.where(active, Dn, D)
        delta = np.where(active, dn, delta)
        pk = pk1
        active = active & (np.abs(dn - 1.0) >= _EPS)
        if not active.any():
            return f, sign
    err = float(np.max(np.abs(delta - 1.0)))
    raise PrecisionFailureError("continued fraction for F'/F did not converge",
                                -math.log10(max(err, _EPS)))


def _cf2(eta: float, rho: np.ndarray, L: int):
    """``H^+'/H^+ = p + iq`` by modified Lentz."""
    a = complex(1 + L, eta)
    b = complex(-L, eta)
    c0 = 1j * (1.0 - eta / rho)
    f = np.full(rho.shape, _TINY, dtype=complex)
    C = f.copy()
    D = np.zeros(rho.shape, dtype=complex)
    an = a * b
    active = np.ones(rho.shape, dtype=bool)
    delta = np.ones(rho.shape, dtype=complex)
    for n in range(1, _MAXIT):
        bn = 2.0 * (rho - eta + 1j * n)
        Dn = bn + an * D
        Dn = np.where(np.abs(Dn) < _TINY, _TINY, Dn)
        Cn = bn + an / C
        Cn = np.where(np.abs(Cn) < _TINY, _TINY, Cn)
        Dn = 1.0 / Dn
        dn = Cn * Dn
        f = np.where(active, f * dn, f)
        C = np.where(active, Cn, C)
        D = np.where(active, Dn, D)
        delta = np.where(active, dn, delta)
        an = (a + n) * (b + n)
        active = active & (np.abs(dn - 1.0) >= _EPS)
        if not active.any():
            return c0 + 1j / rho * f
    err = float(np.max(np.abs(delta - 1.0)))
    raise PrecisionFailureError("continued fraction for H+'/H+ did not converge",
                                -math.log10(max(err, _EPS)))


def _steed(eta: float, rho: np.ndarray, L: int):
    f, sign = _cf1(eta, rho, L)
    pq = _cf2(eta, rho, L)
    p, q = pq.real, pq.imag
    gam = (f - p) / q
    F = sign / np.sqrt(q * (1.0 + gam * gam))
    G = gam * F
    return F, G, f * F, (p * gam - q) * F


# ---------------------------------------------------------------------------
# Power series and Wronskian quadrature (vectorized over rho)
# ---------------------------------------------------------------------------


def _log_norm(eta: float, L: int) -> float:
    return (L * math.log(2.0) - 0.5 * math.pi * eta
            + float(loggamma(complex(L + 1, eta)).real) - float(loggamma(2 * L + 2).real))


def _series(eta: float, L: int, rho: np.ndarray):
    """``log F`` and ``F'/F`` from the regular power series."""
    t1 = np.ones_like(rho)
    t2 = np.zeros_like(rho)
    s = np.ones_like(rho)
    ds = np.full_like(rho, L + 1.0)
    for j in range(1, 20000):
        t = (2.0 * eta * rho * t1 - rho * rho * t2) / (j * (2 * L + 1 + j))
        s = s + t
        ds = ds + (L + 1 + j) * t
        t2, t1 = t1, t
        if np.all(np.abs(t) <= 1e-17 * np.abs(s)) and np.all(np.abs(t2) <= 1e-17 * np.abs(s)):
            break
    else:
        raise PrecisionFailureError("power series for F did not converge")
    if np.any(s <= 0):
        raise PrecisionFailureError("power series used beyond the first zero of F")
    logF = _log_norm(eta, L) + (L + 1) * np.log(rho) + np.log(s)
    return logF, ds / (rho * s)


def _log_inverse_square_integrals(eta: float, L: int, rho: np.ndarray, rho1: float) -> np.ndarray:
    """``log int_rho^rho1 ds / F(s)^2`` for each ``rho`` (all below ``rho1``)."""
    order = np.argsort(rho)
    pts = np.append(rho[order], rho1)
    u = np.log(pts)
    # subdivide every gap into panels no wider than _PANEL_WIDTH in log(rho)
    n_pan = np.maximum(1, np.ceil(np.diff(u) / _PANEL_WIDTH).astype(int))
    seg_logs = np.full(len(pts) - 1, -np.inf)
    nonzero = np.diff(u) > 0
    edges, owner = [], []
    for i in np.nonzero(nonzero)[0]:
        e = np.linspace(u[i], u[i + 1], n_pan[i] + 1)
        edges.append(np.column_stack((e[:-1], e[1:])))
        owner.append(np.full(n_pan[i], i))
    if edges:
        edges = np.vstack(edges)
        owner = np.concatenate(owner)
        mid = 0.5 * (edges[:, 0] + edges[:, 1])
        half = 0.5 * (edges[:, 1] - edges[:, 0])
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        s = np.exp(nodes)
        logF, _ = _series(eta, L, s.ravel())
        # integrand in u: e^u / F^2
        log_terms = (nodes.ravel() - 2.0 * logF).reshape(nodes.shape) + np.log(half[:, None] * _GL_W[None, :])
        panel_log = np.logaddexp.reduce(log_terms, axis=1)
        for i in np.unique(owner):
            seg_logs[i] = np.logaddexp.reduce(panel_log[owner == i])
    # cumulative from the top: J(pts[i]) = sum_{j >= i} seg_j
    cum = np.logaddexp.accumulate(seg_logs[::-1])[::-1]
    out = np.empty_like(rho)
    out[order] = cum
    return out


# ---------------------------------------------------------------------------
# Public evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoulombSolution:
    """``F``, ``G`` and their ``rho`` derivatives at ``(eta, rho, L)`` (scalars or arrays)."""

    eta: float
    rho: np.ndarray
    L: int
    F: np.ndarray
    G: np.ndarray
    Fp: np.ndarray
    Gp: np.ndarray

    @property
    def Hplus(self):
        return self.G + 1j * self.F

    @property
    def Hminus(self):
        return self.G - 1j * self.F

    @property
    def dHplus(self):
        return self.Gp + 1j * self.Fp

    @property
    def dHminus(self):
        return self.Gp - 1j * self.Fp

    @property
    def wronskian(self):
        return self.Fp * self.G - self.F * self.Gp


def turning_point(eta: float, L: int) -> float:
    """Outer classical turning point ``eta + sqrt(eta^2 + L(L+1))`` in ``rho``."""
    return eta + math.sqrt(eta * eta + L * (L + 1))


def coulomb_fg(eta: float, rho, L: int = 0) -> CoulombSolution:
    """Regular and irregular Coulomb functions and derivatives.

    Accurate to at least 10 significant digits (relative to ``|H|`` in the
    allowed region and to each function separately under the barrier) for
    ``0 <= eta <= 30``, ``0 < rho <= 200``, ``L <= 20``.

    Raises
    ------
    DomainError
        For ``rho <= 0``, negative ``eta`` or a non-integer / negative ``L``.
    PrecisionFailureError
        When a continued fraction or series fails to converge or the values
        overflow.
    """
    if int(L) != L or L < 0:
        raise DomainError(f"L must be a non-negative integer, got {L}")
    L = int(L)
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0:
        raise DomainError(f"eta must be finite and >= 0, got {eta}")
    scalar = np.ndim(rho) == 0
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("rho must be positive and finite")
    F = np.empty_like(r)
    G = np.empty_like(r)
    Fp = np.empty_like(r)
    Gp = np.empty_like(r)
    rho1 = max(2.0, turning_point(eta, L))
    hi = r >= rho1
    with np.errstate(over="ignore", invalid="ignore"):
        if hi.any():
            F[hi], G[hi], Fp[hi], Gp[hi] = _steed(eta, r[hi], L)
        lo = ~hi
        if lo.any():
            F1, G1, _, _ = _steed(eta, np.array([rho1]), L)
            gam1 = G1[0] / F1[0]
            rl = r[lo]
            logF, dlog = _series(eta, L, rl)
            logJ = _log_inverse_square_integrals(eta, L, rl, rho1)
            Fl = np.exp(logF)
            Gl = Fl * gam1 + np.exp(logF + logJ)
            F[lo] = Fl
            Fp[lo] = dlog * Fl
            G[lo] = Gl
            Gp[lo] = dlog * Gl - np.exp(-logF)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G))
            and np.all(np.isfinite(Fp)) and np.all(np.isfinite(Gp))):
        raise PrecisionFailureError("Coulomb functions overflowed outside the representable range", 0.0)
    if scalar:
        return CoulombSolution(eta, float(r[0]), L, float(F[0]), float(G[0]), float(Fp[0]), float(Gp[0]))
    return CoulombSolution(eta, r, L, F, G, Fp, Gp)


# ---------------------------------------------------------------------------
# Physical parametrization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoulombParams:
    """Two charges at relative energy ``E`` in partial wave ``L``.

    ``V_eff(r) = Z1 Z2 e2 / r + hbar^2 L(L+1) / (2 m r^2)``; ``m`` is the
    (reduced) mass.
    """

    E: float
    L: int = 0
    Z1: float = 1.0
    Z2: float = 1.0
    m: float = 1.0
    hbar: float = 1.0
    e2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.E) and self.E > 0):
            raise OutOfRegimeError(f"scattering energy must be positive, got {self.E}")
        if int(self.L) != self.L or self.L < 0:
            raise DomainError(f"L must be a non-negative integer, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if self.m <= 0 or self.hbar <= 0 or self.e2 <= 0:
            raise DomainError("mass, hbar and e2 must be positive")
        if self.Z1 * self.Z2 < 0:
            raise DomainError("attractive Coulomb fields (eta < 0) are not supported")

    @classmethod
    def from_eta(cls, eta: float, L: int = 0, k: float = 1.0, m: float = 1.0,
                 hbar: float = 1.0) -> "CoulombParams":
        """Parameters with given ``eta`` and ``k`` (charge product absorbed in ``Z1``)."""
        E = (hbar * k) ** 2 / (2.0 * m)
        strength = eta * hbar * math.sqrt(2.0 * E / m)
        return cls(E=E, L=L, Z1=strength, Z2=1.0, m=m, hbar=hbar, e2=1.0)

    @property
    def strength(self) -> float:
        """``Z1 Z2 e^2``."""
        return self.Z1 * self.Z2 * self.e2

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * self.m * self.E) / self.hbar

    @property
    def eta(self) -> float:
        return self.strength / self.hbar * math.sqrt(self.m / (2.0 * self.E))

    def rho_var(self, r):
        return self.k * np.asarray(r, dtype=float)

    def V_eff(self, r):
        r = np.asarray(r, dtype=float)
        return self.strength / r + self.hbar**2 * self.L * (self.L + 1) / (2.0 * self.m * r * r)

    def turning_points(self) -> tuple[float, ...]:
        """Radii where ``E = V_eff`` (empty for a free particle with ``L = 0``)."""
        s = self.strength
        c = self.hbar**2 * self.L * (self.L + 1) / (2.0 * self.m)
        if s == 0 and c == 0:
            return ()
        return ((s + math.sqrt(s * s + 4.0 * self.E * c)) / (2.0 * self.E),)

    def functions(self, r) -> CoulombSolution:
        return coulomb_fg(self.eta, self.rho_var(r), self.L)


def _radial_grid(grid: Grid1D) -> np.ndarray:
    if grid.x_min <= 0:
        raise DomainError("radial grids must lie strictly outside the origin")
    return grid.x


def _unwrap_from_outside(theta: np.ndarray) -> np.ndarray:
    """Unwrap a phase sequence keeping the outermost sample at its principal value."""
    return np.unwrap(theta[::-1])[::-1]


def decay_wave(p: CoulombParams, grid: Grid1D) -> tuple[ComplexField, ComplexField]:
    """Outgoing wave ``u = H^+(eta, kr)`` and ``du/dr`` on a radial grid."""
    r = _radial_grid(grid)
    cs = p.functions(r)
    return ComplexField(grid, cs.Hplus), ComplexField(grid, p.k * cs.dHplus)


def decay_fields(p: CoulombParams, grid: Grid1D) -> MadelungField:
    """Madelung fields of the outgoing decay wave ``H^+``.

    ``rho = F^2 + G^2``, ``S = hbar arctan(F/G)`` (unwrapped from the
    outermost point inward), ``v_r = hbar k / (m rho)`` and
    ``Q = E - V_eff - hbar^2 k^2 / (2 m rho^2)``.
    """
    r = _radial_grid(grid)
    cs = p.functions(r)
    rho = cs.F**2 + cs.G**2
    S = p.hbar * _unwrap_from_outside(np.arctan2(cs.F, cs.G))
    v = p.hbar * p.k / (p.m * rho)
    Q = p.E - p.V_eff(r) - (p.hbar * p.k) ** 2 / (2.0 * p.m * rho**2)
    return MadelungField(grid, rho, S, v, Q, np.zeros(r.shape, dtype=bool), p.m, p.hbar)


@dataclass(frozen=True)
class FusionChannel:
    """Elastic S-matrix element ``S_L`` (``|S_L| <= 1``) with absorption radius ``R``."""

    S_L: complex
    R: float

    def __post_init__(self):
        object.__setattr__(self, "S_L", complex(self.S_L))
        if not math.isfinite(abs(self.S_L)) or abs(self.S_L) > 1.0 + 1e-15:
            raise NonphysicalAbsorptionError(f"|S_L| = {abs(self.S_L)} exceeds 1")
        if not (math.isfinite(self.R) and self.R > 0):
            raise DomainError(f"channel radius must be positive, got {self.R}")

    @property
    def T_L(self) -> float:
        """Fusion probability ``1 - |S_L|^2`` (exactly 0 for unitary ``S_L``)."""
        s2 = self.S_L.real**2 + self.S_L.imag**2
        if abs(math.sqrt(s2) - 1.0) <= 1e-15:
            return 0.0
        return 1.0 - s2


@dataclass(frozen=True, eq=False)
class FusionResult:
    field: MadelungField
    T_L: float
    dS_dr: np.ndarray
    current: np.ndarray

    def to_table(self) -> Table:
        t = self.field.to_table("r")
        cols = dict(t.columns)
        del cols["node"]
        cols["dS_dr"] = self.dS_dr
        cols["current"] = self.current
        return Table(cols, {"T_L": self.T_L})


def fusion_wave(p: CoulombParams, ch: FusionChannel, grid: Grid1D) -> tuple[ComplexField, ComplexField]:
    """``u = H^- - S_L H^+`` and ``du/dr`` on a grid outside ``R``."""
    r = _radial_grid(grid)
    if grid.x_min < ch.R:
        raise DomainError(f"fusion fields are defined only for r >= R = {ch.R}")
    cs = p.functions(r)
    u = cs.Hminus - ch.S_L * cs.Hplus
    du = p.k * (cs.dHminus - ch.S_L * cs.dHplus)
    return ComplexField(grid, u), ComplexField(grid, du)


def fusion_fields(p: CoulombParams, ch: FusionChannel, grid: Grid1D) -> FusionResult:
    """Madelung fields of the fusion wave and the fusion probability.

    ``rho = |u|^2``, ``S = hbar arg u`` unwrapped from the outside,
    ``v_r = (hbar/m) Im(u'/u)`` (exact derivative), and
    ``Q = E - V_eff - hbar^2 k^2 (1 - |S_L|^2)^2 / (2 m |u|^4)``. Also
    returns ``dS/dr = -hbar k (1 - |S_L|^2)/rho``.
    """
    u, du = fusion_wave(p, ch, grid)
    uv, duv = u.values, du.values
    r = grid.x
    rho = np.abs(uv) ** 2
    S = p.hbar * _unwrap_from_outside(np.angle(uv))
    v = (p.hbar / p.m) * np.imag(duv / uv)
    absorb = 1.0 - abs(ch.S_L) ** 2
    Q = p.E - p.V_eff(r) - (p.hbar * p.k) ** 2 * absorb**2 / (2.0 * p.m * rho**2)
    nodes = rho < 1e-300
    field = MadelungField(grid, rho, S, v, Q, nodes, p.m, p.hbar)
    dS = -p.hbar * p.k * absorb / rho
    return FusionResult(field, ch.T_L, dS, rho * v)


@dataclass(frozen=True, eq=False)
class RegionReport:
    r: np.ndarray
    allowed: np.ndarray
    momentum_squared: np.ndarray
    turning_points: tuple
    forbidden_has_no_real_momentum: bool

    @property
    def has_forbidden_region(self) -> bool:
        return bool(np.any(~self.allowed))


def forbidden_region_check(p: CoulombParams, grid: Grid1D) -> RegionReport:
    """Classify radii as classically allowed (``E > V_eff``) or forbidden."""
    r = _radial_grid(grid)
    p2 = 2.0 * p.m * (p.E - p.V_eff(r))
    allowed = p2 > 0
    return RegionReport(r, allowed, p2, p.turning_points(), bool(np.all(p2[~allowed] <= 0)))


def radial_equation_residual(eta: float, L: int, u: np.ndarray, h: float, rho: np.ndarray) -> np.ndarray:
    """Finite-difference residual ``u'' + (1 - 2 eta/rho - L(L+1)/rho^2) u`` on interior points."""
    lap = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    rr = rho[1:-1]
    return lap + (1.0 - 2.0 * eta / rr - L * (L + 1) / rr**2) * u[1:-1]


__all__ = [
    "CoulombParams",
    "CoulombSolution",
    "FusionChannel",
    "FusionResult",
    "RegionReport",
    "coulomb_fg",
    "decay_fields",
    "decay_wave",
    "forbidden_region_check",
    "fusion_fields",
    "fusion_wave",
    "radial_equation_residual",
    "turning_point",
]
