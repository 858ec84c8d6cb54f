"""Kustaanheimo-Stiefel map of the Coulomb problem to a 4D oscillator.

With ``r = q^T q`` and ``dt' = dt/r`` the Coulomb problem at energy ``E``
becomes an oscillator of mass ``M = 4m`` obeying the pseudo-energy constraint
``p^2/(8m) + |E| q^2 = G`` (bound, ``E < 0``) or ``p^2/(8m) - E q^2 = -G``
(repulsive, ``E > 0``, inverted oscillator). The frequency is
``omega = sqrt(|E|/(2m))``; the inverted case follows from ``omega -> i Omega``.

Gaussians ``exp(-a q^2 + b.q + c)`` stay Gaussian under the oscillator
kernel, so every integral over initial points is done in closed form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from qbranch.errors import CausticError, DomainError, OutOfRegimeError, UnsupportedInitialStateError
from qbranch.serialize import Table

KS_DIM = 4
_CAUSTIC_TOL = 1e-12


@dataclass(frozen=True)
class KSConfig:
    """Coulomb strength ``G`` (``Z e^2`` bound, ``Z1 Z2 e^2`` repulsive) and energy ``E``.

    ``omega_override`` replaces the derived frequency ``sqrt(|E|/(2m))``.
    """

    G_strength: float
    E: float
    m: float = 1.0
    hbar: float = 1.0
    omega_override: Optional[float] = None
    d: int = KS_DIM

    def __post_init__(self):
        for name in ("G_strength", "E", "m", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.E == 0:
            raise OutOfRegimeError("E = 0 has no oscillator frequency")
        if self.m <= 0 or self.hbar <= 0 or self.G_strength <= 0:
            raise DomainError("m, hbar and G_strength must be positive")
        if self.omega_override is not None and not self.omega_override > 0:
            raise DomainError("omega_override must be positive")

    @property
    def bound(self) -> bool:
        return self.E < 0

    @property
    def M(self) -> float:
        """Oscillator mass ``4m``."""
        return 4.0 * self.m

    @property
    def omega(self) -> float:
        """Real frequency: ``omega`` (bound) or ``Omega`` (inverted)."""
        if self.omega_override is not None:
            return float(self.omega_override)
        return math.sqrt(abs(self.E) / (2.0 * self.m))

    @property
    def complex_omega(self) -> complex:
        """``omega`` for bound states, ``i Omega`` for the inverted oscillator."""
        return complex(self.omega) if self.bound else 1j * self.omega

    @property
    def ground_state_width(self) -> float:
        """Width ``M omega/(2 hbar)`` of the 4D oscillator ground state (bound case)."""
        return self.M * self.omega / (2.0 * self.hbar)


@dataclass(frozen=True)
class OscillatorBranch:
    """A classical branch from initial point ``q0`` after pseudo-time ``tprime``.

    ``winding`` is the integer ``k`` in ``t'' = t' + 2 pi k / omega``.
    """

    q0: tuple
    tprime: float
    winding: int = 0

    def __post_init__(self):
        q0 = tuple(float(v) for v in np.ravel(self.q0))
        object.__setattr__(self, "q0", q0)
        if int(self.winding) != self.winding:
            raise DomainError("winding must be an integer")


def ks_radius(q) -> float:
    """``r = q^T q``."""
    q = np.asarray(q, dtype=float)
    return float(np.sum(q * q))


def _trig(cfg: KSConfig, tprime: float):
    """``(cos, sin)`` of ``omega t'`` continued to ``omega = i Omega`` when inverted.

    For the inverted case returns ``(cosh, sinh)`` so that ``omega/sin`` and
    ``omega cot`` become ``Omega/sinh`` and ``Omega coth``.
    """
    w = cfg.omega
    if cfg.bound:
        s, c = math.sin(w * tprime), math.cos(w * tprime)
        if abs(s) < _CAUSTIC_TOL:
            raise CausticError(f"sin(omega t') = 0 at t' = {tprime}: caustic")
    else:
        if not tprime > 0:
            raise CausticError("inverted-oscillator branches need t' > 0")
        s, c = math.sinh(w * tprime), math.cosh(w * tprime)
    return c, s


def action_constant(cfg: KSConfig, b: OscillatorBranch) -> complex:
    """``q``-independent terms ``(M omega^2/2) t' + G t''`` continued to ``omega -> i Omega``."""
    w = cfg.complex_omega
    t2 = b.tprime + 2.0 * math.pi * b.winding / w
    return complex(0.5 * cfg.M * w * w * b.tprime + cfg.G_strength * t2)


def oscillator_action(cfg: KSConfig, q, b: OscillatorBranch) -> complex:
    """Two-point action of the (inverted) oscillator plus the constant terms.

    Bound: ``(M omega/2)[(q^2 + q0^2) cot(omega t') - 2 q.q0 / sin(omega t')]``.
    Inverted: the same with ``cot -> coth``, ``sin -> sinh``, ``omega -> Omega``.

    Raises
    ------
    CausticError
        At ``sin(omega t') = 0`` (bound) or ``t' <= 0`` (inverted).
    """
    q = np.asarray(q, dtype=float)
    q0 = np.asarray(b.q0, dtype=float)
    if q.shape != q0.shape:
        raise DomainError("q and q0 must have the same dimension")
    c, s = _trig(cfg, b.tprime)
    w = cfg.omega
    quad = 0.5 * cfg.M * w * ((q @ q + q0 @ q0) * c / s - 2.0 * (q @ q0) / s)
    return quad + action_constant(cfg, b)


def continued_action(cfg: KSConfig, q, b: OscillatorBranch) -> complex:
    """The bound-case formula evaluated at complex ``omega`` (``i Omega`` when ``E > 0``).

    Independent of :func:`oscillator_action`'s hyperbolic branch; the two
    agree by analytic continuation.
    """
    q = np.asarray(q, dtype=float)
    q0 = np.asarray(b.q0, dtype=float)
    w = cfg.complex_omega
    wt = w * b.tprime
    s, c = cmath.sin(wt), cmath.cos(wt)
    if abs(s) < _CAUSTIC_TOL:
        raise CausticError("caustic")
    quad = 0.5 * cfg.M * w * ((q @ q + q0 @ q0) * c / s - 2.0 * (q @ q0) / s)
    return complex(quad) + action_constant(cfg, b)


def branch_quantum_potential_4d(alpha, beta, q, cfg: KSConfig):
    """Quantum potential of the amplitude ``exp(-alpha q^2 + beta.q)`` in ``d`` dimensions.

    ``Q = -(hbar^2/2M)[|beta - 2 alpha q|^2 - 2 alpha d]``; accepts complex
    coefficients for the continued coefficients of the inverted case.
    ``q`` may be a single point or an array of points (last axis ``d``).
    """
    q = np.asarray(q, dtype=float)
    beta = np.broadcast_to(np.asarray(beta), (cfg.d,))
    g = beta - 2.0 * alpha * q
    sq = np.sum(g * g, axis=-1)
    return -(cfg.hbar**2 / (2.0 * cfg.M)) * (sq - 2.0 * alpha * cfg.d)


# ---------------------------------------------------------------------------
# Gaussian propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian4D:
    """``exp(-a q^2 + b.q + c)`` with complex ``a``, ``b`` (length ``d``) and ``c``."""

    a: complex
    b: tuple
    c: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", tuple(complex(v) for v in np.ravel(self.b)))
        object.__setattr__(self, "c", complex(self.c))

    @property
    def d(self) -> int:
        return len(self.b)

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        b = np.asarray(self.b)
        return np.exp(-self.a * np.sum(q * q, axis=-1) + q @ b + self.c)

    def gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return (np.asarray(self.b) - 2.0 * self.a * q) * self(q)[..., None]

    def laplacian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        g = np.asarray(self.b) - 2.0 * self.a * q
        return (np.sum(g * g, axis=-1) - 2.0 * self.a * self.d) * self(q)

    @property
    def amplitude_coefficients(self) -> tuple[float, np.ndarray]:
        """``(alpha, beta)`` of ``|psi| = exp(-alpha q^2 + beta.q + const)``."""
        return self.a.real, np.real(np.asarray(self.b))


def _kernel_parameters(cfg: KSConfig, tprime: float):
    c, s = _trig(cfg, tprime)
    P = cfg.M * cfg.omega / (2.0 * cfg.hbar * s)
    return P, c


def propagate_gaussian(cfg: KSConfig, g: Gaussian4D, tprime: float) -> Gaussian4D:
    """Exact image of a Gaussian under the oscillator kernel at pseudo-time ``t'``.

    With ``P = M omega/(2 hbar sin omega t')`` and ``A = a - i P cos omega t'``:
    ``a' = -i P cos + P^2/A``, ``b' = -i P b/A``,
    ``c' = c + b.b/(4A) + (d/2) log(P/(iA))`` (hyperbolic functions for the
    inverted oscillator). Requires ``Re a > 0``.
    """
    if not g.a.real > 0:
        raise UnsupportedInitialStateError("initial Gaussian must be normalizable (Re a > 0)")
    P, co = _kernel_parameters(cfg, tprime)
    A = g.a - 1j * P * co
    b = np.asarray(g.b)
    a_new = -1j * P * co + P * P / A
    b_new = -1j * P * b / A
    c_new = g.c + (b @ b) / (4.0 * A) + 0.5 * g.d * cmath.log(P / (1j * A))
    return Gaussian4D(a_new, b_new, c_new)


@dataclass(frozen=True)
class InitialGaussian:
    """Initial state ``amplitude * exp(-width |q0 - center|^2)``.

    ``width=None`` selects the oscillator ground-state width. Only
    ``kind="gaussian"`` is supported.
    """

    width: Optional[float] = None
    center: tuple = (0.0, 0.0, 0.0, 0.0)
    amplitude: complex = 1.0
    kind: str = "gaussian"

    def to_gaussian(self, cfg: KSConfig) -> Gaussian4D:
        if self.kind != "gaussian":
            raise UnsupportedInitialStateError(f"initial state {self.kind!r} is not a Gaussian")
        a = cfg.ground_state_width if self.width is None else float(self.width)
        if not a > 0:
            raise UnsupportedInitialStateError("Gaussian width must be positive")
        x0 = np.asarray(self.center, dtype=float)
        if x0.shape != (cfg.d,):
            raise UnsupportedInitialStateError(f"center must have {cfg.d} components")
        if self.amplitude == 0:
            raise UnsupportedInitialStateError("zero initial state")
        return Gaussian4D(a, 2.0 * a * x0, -a * (x0 @ x0) + cmath.log(complex(self.amplitude)))


@dataclass(frozen=True)
class Quadrature:
    """Integration over initial points: ``"closed"`` form or ``"hermite"`` with ``n`` nodes per axis."""

    scheme: str = "closed"
    n: int = 96

    def __post_init__(self):
        if self.scheme not in ("closed", "hermite"):
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if self.n < 2:
            raise DomainError("need at least two quadrature nodes")


def _hermite_propagate(cfg: KSConfig, g: Gaussian4D, tprime: float, q: np.ndarray, n: int) -> np.ndarray:
    """``psi(q, t')`` by Gauss-Hermite quadrature of the factorized kernel integral."""
    P, co = _kernel_parameters(cfg, tprime)
    ar = g.a.real
    y, w = np.polynomial.hermite.hermgauss(n)
    x0 = y / math.sqrt(ar)
    pref = cmath.sqrt(P / (1j * math.pi))  # per-axis kernel normalization
    out = np.full(q.shape[:-1], cmath.exp(g.c), dtype=complex)
    for i in range(g.d):
        qi = q[..., i][..., None]
        # integrand without the weight exp(-Re a x0^2)
        expo = (-1j * g.a.imag * x0**2 + g.b[i] * x0
                + 1j * P * ((qi**2 + x0**2) * co - 2.0 * qi * x0))
        out = out * pref * (np.exp(expo) @ w) / math.sqrt(ar)
    return out


@dataclass(frozen=True, eq=False)
class GroundStateProfile:
    r: np.ndarray
    log_abs_psi: np.ndarray
    slope: float
    intercept: float
    fit_residual: float
    expected_rate: float

    @property
    def decay_rate(self) -> float:
        return -self.slope

    def to_table(self) -> Table:
        return Table({"r": self.r, "log_abs_psi": self.log_abs_psi},
                     {"slope": self.slope, "intercept": self.intercept,
                      "fit_residual": self.fit_residual, "decay_rate": self.decay_rate,
                      "expected_rate": self.expected_rate})


def reconstruct_ground_state(
    cfg: KSConfig,
    psi0: InitialGaussian = InitialGaussian(),
    quadrature: Quadrature = Quadrature(),
    r: Optional[Sequence[float]] = None,
    tprime: Optional[float] = None,
) -> GroundStateProfile:
    """Integrate the oscillator kernel against ``psi0`` and map back with ``r = q^2``.

    Returns ``log|psi|`` on ``r`` (default 200 points on ``[0.1, 10]``)
    together with a straight-line fit; the decay rate is expected to equal
    ``M omega/(2 hbar)``. ``tprime`` defaults to a quarter period.

    Raises
    ------
    OutOfRegimeError
        For ``E >= 0``.
    UnsupportedInitialStateError
        For a non-Gaussian or off-center initial state.
    CausticError
        At ``sin(omega t') = 0``.
    """
    if not cfg.bound:
        raise OutOfRegimeError("ground-state reconstruction needs a bound state (E < 0)")
    if np.any(np.asarray(psi0.center, dtype=float) != 0):
        raise UnsupportedInitialStateError("the ground-state reconstruction needs a centered Gaussian")
    g0 = psi0.to_gaussian(cfg)
    if tprime is None:
        tprime = math.pi / (2.0 * cfg.omega)
    r = np.linspace(0.1, 10.0, 200) if r is None else np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radii must be non-negative")
    q = np.zeros((r.size, cfg.d))
    q[:, 0] = np.sqrt(r)
    if quadrature.scheme == "closed":
        psi = propagate_gaussian(cfg, g0, tprime)(q)
    else:
        psi = _hermite_propagate(cfg, g0, tprime, q, quadrature.n)
    logabs = np.log(np.abs(psi))
    slope, intercept = np.polyfit(r, logabs, 1)
    resid = float(np.max(np.abs(logabs - (slope * r + intercept))))
    return GroundStateProfile(r, logabs, float(slope), float(intercept), resid, cfg.ground_state_width)


# ---------------------------------------------------------------------------
# Inverted oscillator: branch quantum potentials and interference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchSample:
    """Branches launched from narrow Gaussians at ``centers`` and evaluated at ``tprime``."""

    centers: np.ndarray
    tprime: float = 1.0
    width: float = 1.0
    probe_points: Optional[np.ndarray] = None

    @classmethod
    def random(cls, n_branches: int = 6, seed: int = 0, spread: float = 1.0,
               tprime: float = 1.0, width: float = 1.0, n_probe: int = 8) -> "BranchSample":
        rng = np.random.default_rng(seed)
        centers = spread * rng.standard_normal((n_branches, KS_DIM))
        probes = 0.5 * rng.standard_normal((n_probe, KS_DIM))
        return cls(centers, tprime, width, probes)


@dataclass(frozen=True, eq=False)
class InterferenceReport:
    """``branch_max_abs_Q[j]`` is ``max |Q_j|`` over the probe points for branch ``j``."""

    branch_max_abs_Q: np.ndarray
    integrated_Q: np.ndarray
    hj_residual: np.ndarray
    probe_points: np.ndarray
    threshold: float

    @property
    def branches_nonzero(self) -> bool:
        return bool(np.all(self.branch_max_abs_Q > self.threshold))

    @property
    def hj_residual_max(self) -> float:
        return float(np.max(np.abs(self.hj_residual)))

    def to_table(self) -> Table:
        return Table({"probe": np.arange(len(self.integrated_Q)), "integrated_Q": self.integrated_Q,
                      "hj_residual": self.hj_residual},
                     {"n_branches": len(self.branch_max_abs_Q),
                      "min_branch_max_abs_Q": float(self.branch_max_abs_Q.min()),
                      "max_branch_max_abs_Q": float(self.branch_max_abs_Q.max()),
                      "branches_nonzero": self.branches_nonzero,
                      "hj_residual_max": self.hj_residual_max})


def _branch_gaussians(cfg: KSConfig, sample: BranchSample, tprime: float) -> list[Gaussian4D]:
    out = []
    for c in np.atleast_2d(sample.centers):
        g0 = InitialGaussian(sample.width, tuple(c)).to_gaussian(cfg)
        out.append(propagate_gaussian(cfg, g0, tprime))
    return out


def superposed_field(cfg: KSConfig, sample: BranchSample, q, tprime: Optional[float] = None) -> np.ndarray:
    """Sum of the propagated branch Gaussians at ``q``."""
    t = sample.tprime if tprime is None else tprime
    q = np.asarray(q, dtype=float)
    return sum(g(q) for g in _branch_gaussians(cfg, sample, t))


def quantum_hj_residual_fd(cfg: KSConfig, sample: BranchSample, q: np.ndarray,
                           h: float = 1e-3, dt: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference quantum HJ residual of the superposed field.

    ``dS/dt' + |grad S|^2/(2M) + V + Q`` with ``V = +/- (M omega^2/2) q^2``
    and ``Q = -(hbar^2/2M) lap(|psi|)/|psi|``, all from central differences.
    Returns ``(residual, Q)``.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    hb, M = cfg.hbar, cfg.M

    def psi(pts, t):
        return superposed_field(cfg, sample, pts, t)

    p0 = psi(q, sample.tprime)
    amp0 = np.abs(p0)
    lap = -2.0 * cfg.d * amp0
    grad_S = np.zeros_like(q)
    for i in range(cfg.d):
        e = np.zeros(cfg.d)
        e[i] = h
        pp, pm = psi(q + e, sample.tprime), psi(q - e, sample.tprime)
        lap = lap + np.abs(pp) + np.abs(pm)
        grad_S[:, i] = hb * np.angle(pp / pm) / (2.0 * h)
    lap = lap / h**2
    Q = -(hb**2 / (2.0 * M)) * lap / amp0
    dS = hb * np.angle(psi(q, sample.tprime + dt) / psi(q, sample.tprime - dt)) / (2.0 * dt)
    sign = 1.0 if cfg.bound else -1.0
    V = sign * 0.5 * M * cfg.omega**2 * np.sum(q * q, axis=1)
    res = dS + np.sum(grad_S**2, axis=1) / (2.0 * M) + V + Q
    return res, Q


def inverted_branch_interference_check(cfg: KSConfig, sample: Optional[BranchSample] = None,
                                       threshold: float = 0.01) -> InterferenceReport:
    """Individual-branch quantum potentials versus the superposed field's closure.

    Each branch is a Gaussian launched at one centre; its amplitude
    coefficients give ``Q_j`` via :func:`branch_quantum_potential_4d`. The
    superposition is checked against its own quantum HJ equation by finite
    differences.

    Raises
    ------
    OutOfRegimeError
        For ``E <= 0``.
    """
    if cfg.bound:
        raise OutOfRegimeError("the inverted-oscillator check needs E > 0")
    sample = BranchSample.random() if sample is None else sample
    probes = sample.probe_points
    if probes is None:
        probes = np.zeros((1, cfg.d))
    qmax = []
    for g in _branch_gaussians(cfg, sample, sample.tprime):
        alpha, beta = g.amplitude_coefficients
        qmax.append(np.max(np.abs(branch_quantum_potential_4d(alpha, beta, probes, cfg))))
    res, Q = quantum_hj_residual_fd(cfg, sample, probes)
    return InterferenceReport(np.array(qmax), Q, res, probes, threshold)


# ---------------------------------------------------------------------------
# Classical trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    tprime: np.ndarray
    q: np.ndarray
    p: np.ndarray


def classical_trajectory(cfg: KSConfig, q0, direction, tprime) -> Trajectory:
    """Oscillator trajectory from ``q0`` on the constraint surface.

    The initial momentum points along ``direction`` with the magnitude fixed
    by ``p^2/(8m) + |E| q^2 = G`` (bound) or ``p^2/(8m) - E q^2 = -G``.

    Raises
    ------
    DomainError
        If ``q0`` lies outside the classically reachable set.
    """
    q0 = np.asarray(q0, dtype=float)
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    t = np.atleast_1d(np.asarray(tprime, dtype=float))
    G, E, m, M, w = cfg.G_strength, cfg.E, cfg.m, cfg.M, cfg.omega
    p2 = 8.0 * m * (G - abs(E) * (q0 @ q0)) if cfg.bound else 8.0 * m * (E * (q0 @ q0) - G)
    if p2 < 0:
        raise DomainError("q0 is not reachable at this energy")
    p0 = math.sqrt(p2) * n
    wt = w * t[:, None]
    if cfg.bound:
        q = q0 * np.cos(wt) + p0 / (M * w) * np.sin(wt)
        p = -M * w * q0 * np.sin(wt) + p0 * np.cos(wt)
    else:
        q = q0 * np.cosh(wt) + p0 / (M * w) * np.sinh(wt)
        p = M * w * q0 * np.sinh(wt) + p0 * np.cosh(wt)
    return Trajectory(t, q, p)


def ks_pseudo_energy(cfg: KSConfig, q, p) -> np.ndarray:
    """``p^2/(8m) + |E| q^2`` (bound) or ``p^2/(8m) - E q^2`` (inverted)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    kin = np.sum(p * p, axis=-1) / (8.0 * cfg.m)
    pot = np.sum(q * q, axis=-1)
    return kin + abs(cfg.E) * pot if cfg.bound else kin - cfg.E * pot


__all__ = [
    "BranchSample",
    "Gaussian4D",
    "GroundStateProfile",
    "InitialGaussian",
    "InterferenceReport",
    "KSConfig",
    "OscillatorBranch",
    "Quadrature",
    "Trajectory",
    "action_constant",
    "branch_quantum_potential_4d",
    "classical_trajectory",
    "continued_action",
    "inverted_branch_interference_check",
    "ks_pseudo_energy",
    "ks_radius",
    "oscillator_action",
    "propagate_gaussian",
    "quantum_hj_residual_fd",
    "reconstruct_ground_state",
    "superposed_field",
]
