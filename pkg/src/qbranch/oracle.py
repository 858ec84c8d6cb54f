"""Brute-force reference solvers.

Nothing here imports the closed-form physics modules; agreement between the
two paths is evidence, not a tautology. Contents:

* transfer-matrix transmission through piecewise-constant potentials,
* a Numerov integrator for the stationary 1D equation,
* an adaptive ODE integrator for the radial Coulomb equation anchored on its
  own power series (regular solution) and large-rho expansion (outgoing wave),
* dense-sampling maximization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar
from scipy.special import loggamma

from qbranch.errors import IllPosedError, ReducedAccuracyWarning
from qbranch.gridfield import ComplexField, Grid1D, as_samples


# ---------------------------------------------------------------------------
# Transfer matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewisePotential:
    """Piecewise-constant potential.

    ``levels[0]`` holds on ``x < breakpoints[0]``, ``levels[j]`` on
    ``breakpoints[j-1] <= x < breakpoints[j]`` and ``levels[-1]`` beyond the
    last breakpoint.
    """

    breakpoints: tuple
    levels: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        if len(lv) != len(bp) + 1:
            raise ValueError("need exactly one more level than breakpoints")
        if any(b2 < b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    @classmethod
    def barrier(cls, V0: float, a: float) -> "PiecewisePotential":
        return cls((0.0, a), (0.0, V0, 0.0))

    def without_empty_segments(self) -> "PiecewisePotential":
        """Drop zero-width segments (warns if any were present)."""
        bp, lv = [], [self.levels[0]]
        dropped = 0
        for j, b in enumerate(self.breakpoints):
            if bp and b == bp[-1]:
                # segment between identical breakpoints has zero width
                lv[-1] = self.levels[j + 1]
                dropped += 1
                continue
            bp.append(b)
            lv.append(self.levels[j + 1])
        if dropped:
            warnings.warn(f"removed {dropped} zero-width segment(s)", stacklevel=3)
        return PiecewisePotential(tuple(bp), tuple(lv))

    def __call__(self, x) -> np.ndarray:
        """Sample the potential; exactly at a breakpoint the two levels are averaged."""
        x = np.asarray(x, dtype=float)
        bp = np.asarray(self.breakpoints)
        lv = np.asarray(self.levels)
        right = lv[np.searchsorted(bp, x, side="right")]
        left = lv[np.searchsorted(bp, x, side="left")]
        return 0.5 * (left + right)


@dataclass(frozen=True)
class TransferResult:
    T: float
    R: float
    r: complex
    t: complex


def transfer_matrix_transmission(
    V: PiecewisePotential, E: float, m: float = 1.0, hbar: float = 1.0
) -> TransferResult:
    """Transmission through ``V`` for a unit wave incident from the left.

    Phases follow the global convention ``psi = e^{ik x} + r e^{-ik x}`` on the
    left and ``t e^{ik' x}`` on the right. Each segment is expanded about its
    own left edge and the exponential growth of evanescent segments is
    carried in a separate log scale, so opacities far beyond ``e^{-300}``
    stay finite.
    """
    V = V.without_empty_segments()
    levels = list(V.levels)
    if E <= levels[0] or E <= levels[-1]:
        raise IllPosedError("energy must exceed both exterior potential levels")
    for j, lv in enumerate(levels):
        if lv == E:
            warnings.warn("energy equals a potential level; shifting the level by 1e-12", stacklevel=2)
            levels[j] = lv - 1e-12 * max(abs(E), 1.0)
    K = [np.sqrt(complex(2.0 * m * (E - lv))) / hbar for lv in levels]
    bp = V.breakpoints
    nseg = len(levels)
    if nseg == 1:
        return TransferResult(1.0, 0.0, 0j, 1.0 + 0j)

    M = np.eye(2, dtype=complex)
    log_scale = 0.0
    for j in range(nseg - 1):
        Kj, Kn = K[j], K[j + 1]
        L = 0.0 if j == 0 else bp[j] - bp[j - 1]
        # coefficients of segment j at its right edge in terms of segment j+1 at its left edge
        s = Kn / Kj
        D = 0.5 * np.array([[1 + s, 1 - s], [1 - s, 1 + s]], dtype=complex)
        ep, em = 1j * Kj * L, -1j * Kj * L
        shift = max(ep.real, em.real)
        P = np.array([[np.exp(em - shift), 0], [0, np.exp(ep - shift)]], dtype=complex)
        log_scale += shift
        M = M @ P @ D
        norm = np.abs(M).max()
        M /= norm
        log_scale += math.log(norm)
    # [1, r_loc] = e^{log_scale} M [t_loc, 0]
    r_loc = M[1, 0] / M[0, 0]
    log_t = -log_scale - np.log(M[0, 0])
    x0, xn = bp[0], bp[-1]
    K0, Kn = K[0], K[-1]
    r = r_loc * np.exp(2j * K0 * x0)
    t = np.exp(log_t + 1j * K0 * x0 - 1j * Kn * xn)
    flux = (Kn / K0).real
    T = flux * float(np.exp(2.0 * log_t.real))
    return TransferResult(T=T, R=abs(r_loc) ** 2, r=complex(r), t=complex(t))


# ---------------------------------------------------------------------------
# Numerov
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Boundary:
    """Boundary data for :func:`numerov_solve`.

    Parameters
    ----------
    kind : {"outgoing", "decaying"}
        ``e^{+iKx}`` (needs ``E`` above the edge potential) or an exponential
        decaying away from the domain (needs ``E`` below it).
    side : {"right", "left"}
        Edge where the condition is imposed; integration runs inward from it.
    amplitude : complex
        Value of the solution at that edge.
    """

    kind: str = "outgoing"
    side: str = "right"
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("outgoing", "decaying"):
            raise IllPosedError(f"unknown boundary kind {self.kind!r}")
        if self.side not in ("right", "left"):
            raise IllPosedError(f"unknown boundary side {self.side!r}")


def numerov_solve(V, grid: Grid1D, E: float, m: float = 1.0, hbar: float = 1.0,
                  boundary: Boundary = Boundary()) -> ComplexField:
    """Integrate ``psi'' = (2m/hbar^2)(V - E) psi`` with the Numerov scheme.

    The two starting samples at the boundary edge are the exact local
    solution for a constant potential equal to the edge value.

    Raises
    ------
    IllPosedError
        If the boundary kind does not match the sign of ``E - V`` at the edge.
    """
    v = np.asarray(as_samples(V, grid), dtype=float)
    n = grid.n_points
    h = grid.h
    if boundary.side == "left":
        v = v[::-1]
    g = (2.0 * m / hbar**2) * (v - E)
    edge = g[-1]
    if boundary.kind == "outgoing":
        if edge >= 0:
            raise IllPosedError("outgoing boundary needs E above the edge potential")
        K = math.sqrt(-edge)
        # one step inward from the edge (the left edge is handled by mirroring)
        step = np.exp(-1j * K * h)
    else:
        if edge <= 0:
            raise IllPosedError("decaying boundary needs E below the edge potential")
        step = math.exp(math.sqrt(edge) * h)
    psi = np.empty(n, dtype=complex)
    psi[-1] = boundary.amplitude
    psi[-2] = boundary.amplitude * step
    c = h * h / 12.0
    w = 1.0 - c * g
    for i in range(n - 2, 0, -1):
        psi[i - 1] = (2.0 * (1.0 + 5.0 * c * g[i]) * psi[i] - w[i + 1] * psi[i + 1]) / w[i - 1]
    if boundary.side == "left":
        psi = psi[::-1]
    return ComplexField(grid, psi)


def numerov_transmission(V: PiecewisePotential, E: float, x_left: float, x_right: float,
                         n_points: int = 20001, m: float = 1.0, hbar: float = 1.0) -> float:
    """Transmission from a Numerov solution with an outgoing wave on the right.

    The left exterior solution is split into incident and reflected waves
    using two samples; ``x_left`` and ``x_right`` must lie in the exterior
    regions.
    """
    grid = Grid1D(x_left, x_right, n_points)
    psi = numerov_solve(V(grid.x), grid, E, m, hbar, Boundary("outgoing", "right", 1.0)).values
    k0 = math.sqrt(2.0 * m * (E - V.levels[0])) / hbar
    kn = math.sqrt(2.0 * m * (E - V.levels[-1])) / hbar
    x = grid.x
    i, j = 0, 1
    # psi = alpha e^{ik0 x} + beta e^{-ik0 x} on the two left-most samples
    mat = np.array([[np.exp(1j * k0 * x[i]), np.exp(-1j * k0 * x[i])],
                    [np.exp(1j * k0 * x[j]), np.exp(-1j * k0 * x[j])]])
    alpha, _ = np.linalg.solve(mat, psi[[i, j]])
    return (kn / k0) / abs(alpha) ** 2


# ---------------------------------------------------------------------------
# Radial Coulomb integration
# ---------------------------------------------------------------------------


def _log_coulomb_norm(eta: float, L: int) -> float:
    """log C_L(eta) = L ln 2 - pi eta / 2 + Re ln Gamma(L+1+i eta) - ln Gamma(2L+2)."""
    return (L * math.log(2.0) - 0.5 * math.pi * eta
            + float(loggamma(L + 1 + 1j * eta).real) - float(loggamma(2 * L + 2).real))


def _regular_series(eta: float, L: int, rho: float, max_terms: int = 4000):
    """Regular solution and derivative from the power series about the origin."""
    a_prev2, a_prev = 0.0, 1.0
    s, ds = 1.0, (L + 1.0)
    pw = 1.0
    for j in range(1, max_terms):
        a = (2.0 * eta * a_prev - a_prev2) / (j * (j + 2 * L + 1))
        pw *= rho
        term = a * pw
        s += term
        ds += (L + 1 + j) * term
        if abs(term) < 1e-18 * abs(s) and abs(a_prev * pw / rho) < 1e-18 * abs(s):
            break
        a_prev2, a_prev = a_prev, a
    else:
        raise ArithmeticError("regular series did not converge")
    logc = _log_coulomb_norm(eta, L)
    base = math.exp(logc + (L + 1) * math.log(rho))
    return base * s, base * ds / rho


def _outgoing_asymptotic(eta: float, L: int, rho: float, tol: float = 1e-16):
    """``H^+`` and its derivative from the large-rho expansion, or ``None`` if it diverges."""
    theta = rho - eta * math.log(2.0 * rho) - 0.5 * L * math.pi + float(loggamma(L + 1 + 1j * eta).imag)
    a = 1j * eta - L
    b = 1j * eta + L + 1
    term = 1.0 + 0j
    s = term
    ds = 0j
    prev = math.inf
    for n in range(0, 400):
        term_next = term * (a + n) * (b + n) / ((n + 1) * 2j * rho)
        mag = abs(term_next)
        if mag > prev:
            return None
        prev = mag
        s += term_next
        ds += term_next * (-(n + 1) / rho)
        term = term_next
        if mag < tol * abs(s):
            break
    else:
        return None
    ph = np.exp(1j * theta)
    H = ph * s
    dtheta = 1.0 - eta / rho
    dH = ph * (1j * dtheta * s + ds)
    return H, dH


def _rhs(rho, y, eta, L):
    f = 1.0 - 2.0 * eta / rho - L * (L + 1) / rho**2
    return np.array([y[1], -f * y[0], y[3], -f * y[2]])


@dataclass(frozen=True)
class RadialSamples:
    rho: np.ndarray
    F: np.ndarray
    G: np.ndarray
    Fp: np.ndarray
    Gp: np.ndarray

    @property
    def wronskian(self) -> np.ndarray:
        return self.Fp * self.G - self.F * self.Gp


def radial_coulomb_integrate(eta: float, L: int, rho_samples: Sequence[float],
                             rtol: float = 1e-12) -> RadialSamples:
    """Regular and irregular Coulomb functions by direct ODE integration.

    ``F`` is integrated outward from its power series at a small radius;
    ``H^+ = G + iF`` is integrated inward from its large-radius expansion. The
    two results are independent; the Wronskian ``F'G - FG'`` checks both.

    Warns
    -----
    ReducedAccuracyWarning
        When the Wronskian drifts from 1 by more than 1e-9.
    """
    rho = np.asarray(rho_samples, dtype=float)
    if rho.ndim != 1 or rho.size == 0 or np.any(rho <= 0):
        raise ValueError("rho samples must be a non-empty 1D array of positive values")
    order = np.argsort(rho)
    rs = rho[order]
    tp = eta + math.sqrt(eta * eta + L * (L + 1))
    opts = dict(method="DOP853", rtol=rtol, atol=1e-300)

    # regular solution: outward from the series region
    r0 = min(0.5 * rs[0], 1.0)
    F0, dF0 = _regular_series(eta, L, r0)
    scale = abs(F0) if F0 != 0 else 1.0
    solF = solve_ivp(lambda x, y: np.array([y[1], -(1 - 2 * eta / x - L * (L + 1) / x**2) * y[0]]),
                     (r0, rs[-1]), [F0 / scale, dF0 / scale], t_eval=rs, **opts)
    if not solF.success:
        raise ArithmeticError(solF.message)
    F = solF.y[0] * scale
    Fp = solF.y[1] * scale

    # outgoing solution: inward from the asymptotic region
    far = max(rs[-1], 2.0 * tp, 30.0)
    start = None
    for _ in range(60):
        start = _outgoing_asymptotic(eta, L, far)
        if start is not None:
            break
        far *= 1.5
    if start is None:
        raise ArithmeticError("asymptotic expansion did not converge")
    H, dH = start
    y0 = [H.real, dH.real, H.imag, dH.imag]
    t_eval = rs[::-1]
    if far == t_eval[0]:
        t_eval = t_eval.copy()
    solH = solve_ivp(_rhs, (far, rs[0]), y0, t_eval=t_eval, args=(eta, L), **opts)
    if not solH.success:
        raise ArithmeticError(solH.message)
    G = solH.y[0][::-1]
    Gp = solH.y[1][::-1]

    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    out = RadialSamples(rho=rho, F=F[inv], G=G[inv], Fp=Fp[inv], Gp=Gp[inv])
    drift = float(np.max(np.abs(out.wronskian - 1.0)))
    if drift > 1e-9:
        digits = -math.log10(drift)
        warnings.warn(f"radial integration reached only ~{digits:.1f} digits", ReducedAccuracyWarning,
                      stacklevel=2)
    return out


# ---------------------------------------------------------------------------
# Dense sampling
# ---------------------------------------------------------------------------


def dense_maximize(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                   n_samples: int = 4001, polish: bool = True) -> tuple[float, float]:
    """Maximize a 1D function by dense sampling, optionally polished by Brent's method.

    Returns ``(x_best, f_best)``.
    """
    x = np.linspace(lo, hi, n_samples)
    y = func(x)
    i = int(np.argmax(y))
    xb, yb = float(x[i]), float(y[i])
    if polish:
        step = (hi - lo) / (n_samples - 1)
        a, b = max(lo, xb - step), min(hi, xb + step)
        res = minimize_scalar(lambda s: -float(func(np.array([s]))[0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-14})
        if -res.fun > yb:
            xb, yb = float(res.x), float(-res.fun)
    return xb, yb
