"""Geometric and global phases: discrete Berry holonomy, solid angles, flux
quantization, Josephson current and dc SQUID modulation.

Units for the superconducting quantities are natural (``hbar = e = 1`` by
default), so the flux quantum ``h/(2e) = pi hbar/e`` equals ``pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qbranch.errors import ClosureError, DomainError, IllDefinedGeodesicError, OutOfRegimeError
from qbranch.oracle import dense_maximize

_CLOSURE_TOL = 1e-12
_ANTIPODAL_TOL = 1e-12


# ---------------------------------------------------------------------------
# Bloch-sphere loops
# ---------------------------------------------------------------------------


def _direction(theta, phi) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack((st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1)


@dataclass(frozen=True, eq=False)
class LoopPath:
    """Closed sequence of Bloch-sphere directions ``(theta_i, phi_i)``.

    The last sample repeats the first; ``n_points`` counts the distinct
    samples (the closing one excluded).

    Raises
    ------
    ClosureError
        If the path is not closed or has fewer than four samples.
    """

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float).ravel()
        ph = np.asarray(self.phi, dtype=float).ravel()
        if th.shape != ph.shape:
            raise ClosureError("theta and phi must have the same length")
        if th.size < 4:
            raise ClosureError("a loop needs at least four samples including the closing one")
        if np.any((th < 0) | (th > math.pi)) or not np.all(np.isfinite(ph)):
            raise DomainError("theta must lie in [0, pi] and phi must be finite")
        v = _direction(th[[0, -1]], ph[[0, -1]])
        if np.linalg.norm(v[0] - v[1]) > _CLOSURE_TOL:
            raise ClosureError("loop is not closed: last sample differs from the first")
        th.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", ph)

    @property
    def n_points(self) -> int:
        return self.theta.size - 1

    @property
    def vectors(self) -> np.ndarray:
        """Unit vectors of the samples, closing sample included."""
        return _direction(self.theta, self.phi)

    @classmethod
    def latitude(cls, theta: float, n_points: int, phi0: float = 0.0,
                 reverse: bool = False) -> "LoopPath":
        """Constant-latitude loop traversed with increasing (or decreasing) ``phi``."""
        s = -1.0 if reverse else 1.0
        ph = phi0 + s * 2.0 * math.pi * np.arange(n_points + 1) / n_points
        ph[-1] = ph[0]
        return cls(np.full(n_points + 1, float(theta)), ph)

    @classmethod
    def from_vectors(cls, vectors) -> "LoopPath":
        v = np.asarray(vectors, dtype=float)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        th = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
        ph = np.arctan2(v[:, 1], v[:, 0])
        return cls(th, ph)

    @classmethod
    def geodesic_polygon(cls, vertices: Sequence, n_per_edge: int = 1) -> "LoopPath":
        """Polygon through ``vertices`` with great-circle edges sampled ``n_per_edge`` times."""
        vs = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in vertices]
        pts = []
        for a, b in zip(vs, vs[1:] + vs[:1]):
            ang = math.acos(max(-1.0, min(1.0, float(a @ b))))
            if abs(ang - math.pi) < _ANTIPODAL_TOL:
                raise IllDefinedGeodesicError("antipodal vertices have no unique geodesic")
            for j in range(n_per_edge):
                s = j / n_per_edge
                if ang == 0:
                    pts.append(a)
                else:
                    pts.append((math.sin((1 - s) * ang) * a + math.sin(s * ang) * b) / math.sin(ang))
        pts.append(vs[0])
        return cls.from_vectors(pts)


def spin_half_state(theta: float, phi: float, band: int = +1) -> np.ndarray:
    """Eigenstate of ``n.sigma`` with eigenvalue ``band`` in a fixed gauge.

    ``+1``: ``(cos(theta/2), e^{i phi} sin(theta/2))``;
    ``-1``: ``(sin(theta/2), -e^{i phi} cos(theta/2))``.
    """
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    e = complex(math.cos(phi), math.sin(phi))
    if band == +1:
        return np.array([c, e * s])
    if band == -1:
        return np.array([s, -e * c])
    raise DomainError(f"band must be +1 or -1, got {band}")


def _states(loop: LoopPath, band: int) -> np.ndarray:
    return np.array([spin_half_state(t, p, band) for t, p in zip(loop.theta[:-1], loop.phi[:-1])])


def discrete_holonomy(states: np.ndarray) -> float:
    """``-arg prod <n_i|n_{i+1}>`` around the cyclic list ``states`` (wrapped to ``(-pi, pi]``)."""
    states = np.asarray(states, dtype=complex)
    ov = np.sum(np.conj(states) * np.roll(states, -1, axis=0), axis=1)
    # sum of arguments keeps the product from underflowing on long loops
    total = -float(np.sum(np.angle(ov)))
    return _wrap_pi(total)


def _wrap_pi(x: float) -> float:
    y = math.remainder(x, 2.0 * math.pi)
    return math.pi if y == -math.pi else y


def berry_phase_discrete(loop: LoopPath, band: int = +1) -> float:
    """Gauge-invariant discrete Berry phase of the spin-1/2 ``band`` eigenstate.

    Converges to ``-band * Omega/2`` (``Omega`` the enclosed solid angle) as
    ``O(n_points^-2)``; reported in ``(-pi, pi]``.
    """
    return discrete_holonomy(_states(loop, band))


def solid_angle(loop: LoopPath) -> float:
    """Signed solid angle of the spherical polygon through the samples.

    Consecutive samples are joined by great-circle arcs; the region to the
    left of the direction of travel counts positive. The result lies in
    ``(-2 pi, 2 pi]``.

    Raises
    ------
    IllDefinedGeodesicError
        If two consecutive samples are antipodal.
    """
    v = loop.vectors
    a, b = v[:-1], v[1:]
    dots = np.sum(a * b, axis=1)
    if np.any(dots < -1.0 + _ANTIPODAL_TOL):
        raise IllDefinedGeodesicError("consecutive antipodal samples have no unique geodesic")
    # reference point: the coordinate axis farthest from every sample's antipode
    axes = np.vstack((np.eye(3), -np.eye(3)))
    ref = axes[np.argmax(np.min(axes @ v.T, axis=1))]
    num = np.einsum("j,ij->i", ref, np.cross(a, b))
    den = 1.0 + a @ ref + b @ ref + dots
    total = float(np.sum(2.0 * np.arctan2(num, den)))
    y = math.remainder(total, 4.0 * math.pi)
    # a loop splitting the sphere in halves sits on the branch cut; report +2 pi
    return 2.0 * math.pi if y <= -2.0 * math.pi + 1e-9 else y


# ---------------------------------------------------------------------------
# Flux quantization and Josephson physics
# ---------------------------------------------------------------------------


def flux_quantum(hbar: float = 1.0, e: float = 1.0) -> float:
    """``h/(2e) = pi hbar / e``."""
    return math.pi * hbar / e


def winding_to_flux(n: int, hbar: float = 1.0, e: float = 1.0) -> float:
    """Flux ``n h/(2e)`` of a ring state with phase winding ``n``."""
    if int(n) != n:
        raise DomainError(f"winding number must be an integer, got {n}")
    return int(n) * flux_quantum(hbar, e)


@dataclass(frozen=True)
class RingState:
    n_winding: int
    hbar: float = 1.0
    e: float = 1.0

    @property
    def Phi0(self) -> float:
        return flux_quantum(self.hbar, self.e)

    @property
    def Phi(self) -> float:
        return winding_to_flux(self.n_winding, self.hbar, self.e)


@dataclass(frozen=True)
class JunctionSpec:
    """Insulating barrier of height ``U0`` and thickness ``d`` between two superconductors.

    Interior field ``a e^{-kappa x} e^{i theta_L} + b e^{-kappa (d - x)} e^{i theta_R}``
    with ``delta = theta_R - theta_L``. ``Mstar`` is the pair mass (``2 m_e``)
    and ``q_pair`` the pair charge.
    """

    U0: float
    E: float
    d: float
    a_amp: float = 1.0
    b_amp: float = 1.0
    delta: float = 0.0
    Mstar: float = 2.0
    q_pair: float = 2.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.U0) and math.isfinite(self.E) and self.U0 > self.E):
            raise OutOfRegimeError(f"need an insulating barrier U0 > E (U0={self.U0}, E={self.E})")
        if not self.d >= 0:
            raise DomainError("barrier thickness must be non-negative")
        if self.Mstar <= 0 or self.hbar <= 0:
            raise DomainError("Mstar and hbar must be positive")

    @property
    def kappa_sc(self) -> float:
        return math.sqrt(2.0 * self.Mstar * (self.U0 - self.E)) / self.hbar

    @property
    def j_c(self) -> float:
        """Critical current density ``(2 hbar kappa / M*) a b e^{-kappa d}``."""
        k = self.kappa_sc
        return 2.0 * self.hbar * k / self.Mstar * self.a_amp * self.b_amp * math.exp(-k * self.d)

    def field(self, x, order: int = 0) -> np.ndarray:
        """Interior order parameter (``order=0``) or its derivative (``order=1``)."""
        x = np.asarray(x, dtype=float)
        k = self.kappa_sc
        left = self.a_amp * np.exp(-k * x)
        right = self.b_amp * np.exp(-k * (self.d - x)) * np.exp(1j * self.delta)
        if order == 0:
            return left + right
        if order == 1:
            return -k * left + k * right
        raise DomainError("order must be 0 or 1")


def josephson_current(j: JunctionSpec) -> float:
    """Supercurrent density ``j_c sin(delta)``."""
    return j.j_c * math.sin(j.delta)


def josephson_current_from_field(j: JunctionSpec, x=None) -> np.ndarray:
    """``(hbar/M*) Im(Psi* dPsi/dx)`` of the interior field at ``x`` (default: 11 points across)."""
    x = np.linspace(0.0, j.d, 11) if x is None else np.asarray(x, dtype=float)
    psi = j.field(x, 0)
    return (j.hbar / j.Mstar) * np.imag(np.conj(psi) * j.field(x, 1))


def squid_critical_current(Ic_single: float, Phi, Phi0: float = math.pi):
    """``2 Ic |cos(pi Phi/Phi0)|`` for two identical junctions without loop inductance."""
    if not Ic_single > 0:
        raise DomainError("single-junction critical current must be positive")
    Phi = np.asarray(Phi, dtype=float)
    frac = np.remainder(Phi / Phi0, 1.0)
    out = 2.0 * Ic_single * np.abs(np.cos(math.pi * frac))
    return float(out) if out.ndim == 0 else out


def squid_critical_current_brute(Ic_single: float, Phi: float, Phi0: float = math.pi,
                                 n_samples: int = 4001) -> float:
    """Maximum over ``delta_1`` of ``Ic sin(delta_1) + Ic sin(delta_1 + 2 pi Phi/Phi0)``."""
    shift = 2.0 * math.pi * Phi / Phi0

    def total(d1):
        return Ic_single * (np.sin(d1) + np.sin(d1 + shift))

    _, best = dense_maximize(total, 0.0, 2.0 * math.pi, n_samples=n_samples)
    return max(0.0, float(best))


@dataclass(frozen=True)
class FluxReport:
    constraint: str
    allowed: str
    quantized: bool

    def allowed_fluxes(self, n_max: int = 3, Phi0: float = math.pi):
        """Sample of permitted fluxes; ``None`` for a continuum."""
        if self.allowed == "zero":
            return [0.0]
        if self.allowed == "quantized":
            return [n * Phi0 for n in range(-n_max, n_max + 1)]
        return None


_FLUX_CLASSES = {
    "single_valued_action": ("zero", False),
    "multivalued_action": ("continuum", False),
    "single_valued_phase_factor": ("quantized", True),
}


def classical_flux_obstruction(constraint: str) -> FluxReport:
    """Flux permitted around a ring under a single-valuedness constraint.

    ``"single_valued_action"``: the circulation of the action vanishes, so
    only zero flux. ``"multivalued_action"``: no constraint, any flux.
    ``"single_valued_phase_factor"``: the action may change by ``n h``
    around the ring, so the flux is a multiple of ``h/(2e)``.
    """
    try:
        allowed, q = _FLUX_CLASSES[constraint]
    except KeyError:
        raise DomainError(f"unknown constraint {constraint!r}; choose from {sorted(_FLUX_CLASSES)}") from None
    return FluxReport(constraint, allowed, q)


__all__ = [
    "FluxReport",
    "JunctionSpec",
    "LoopPath",
    "RingState",
    "berry_phase_discrete",
    "classical_flux_obstruction",
    "discrete_holonomy",
    "flux_quantum",
    "josephson_current",
    "josephson_current_from_field",
    "solid_angle",
    "spin_half_state",
    "squid_critical_current",
    "squid_critical_current_brute",
    "winding_to_flux",
]
