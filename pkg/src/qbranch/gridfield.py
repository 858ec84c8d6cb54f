"""Uniform 1D grids, sampled fields and finite-difference operators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from qbranch.errors import GridMismatchError, InvalidGridError
from qbranch.serialize import Table


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_i = x_min + i*h`` for ``i = 0 .. n_points-1``.

    Parameters
    ----------
    x_min, x_max : float
        Interval end points, ``x_max > x_min``.
    n_points : int
        Number of samples, at least 3.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if isinstance(self.n_points, bool) or int(self.n_points) != self.n_points:
            raise InvalidGridError(f"n_points must be an integer, got {self.n_points!r}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        if self.n_points < 3:
            raise InvalidGridError(f"a grid needs at least 3 points, got {self.n_points}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise InvalidGridError("grid end points must be finite")
        if not self.x_max > self.x_min:
            raise InvalidGridError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.h * np.arange(self.n_points)
        x.setflags(write=False)
        return x

    def refined(self, factor: int = 2) -> "Grid1D":
        """Same interval with the spacing divided by ``factor``."""
        return Grid1D(self.x_min, self.x_max, (self.n_points - 1) * factor + 1)

    @classmethod
    def parse(cls, spec: str) -> "Grid1D":
        """Build a grid from ``"x_min:x_max:n_points"``."""
        try:
            a, b, n = spec.split(":")
            return cls(float(a), float(b), int(n))
        except ValueError as exc:
            if isinstance(exc, InvalidGridError):
                raise
            raise InvalidGridError(f"grid spec must look like 'x_min:x_max:n', got {spec!r}") from exc


@dataclass(frozen=True, eq=False)
class _SampledField:
    grid: Grid1D
    values: np.ndarray

    _dtype = complex

    def __post_init__(self):
        vals = np.array(self.values, dtype=self._dtype)
        if vals.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"field has shape {vals.shape}, grid has {self.grid.n_points} points"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def __len__(self) -> int:
        return self.grid.n_points

    @classmethod
    def from_function(cls, grid: Grid1D, func: Callable[[np.ndarray], np.ndarray]):
        return cls(grid, np.broadcast_to(func(grid.x), grid.x.shape))

    def _combine(self, other, op):
        if isinstance(other, _SampledField):
            _check_same_grid(self.grid, other.grid)
            vals = op(self.values, other.values)
        else:
            vals = op(self.values, other)
        return _wrap(self.grid, vals)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return _wrap(self.grid, -self.values)


class ComplexField(_SampledField):
    """Complex samples of a function on a :class:`Grid1D`."""

    _dtype = complex

    def to_table(self) -> Table:
        return Table({"x": self.x, "Re": self.values.real, "Im": self.values.imag})


class RealField(_SampledField):
    """Real samples of a function on a :class:`Grid1D`. NaN marks excluded points."""

    _dtype = float

    def to_table(self, name: str = "value") -> Table:
        return Table({"x": self.x, name: self.values})


FieldLike = Union[_SampledField, np.ndarray, float]


def _wrap(grid, vals):
    vals = np.asarray(vals)
    if np.iscomplexobj(vals):
        return ComplexField(grid, vals)
    return RealField(grid, vals)


def _check_same_grid(g1: Grid1D, g2: Grid1D) -> None:
    if g1 != g2:
        raise GridMismatchError(f"fields live on different grids: {g1} vs {g2}")


def as_samples(v: FieldLike, grid: Grid1D) -> np.ndarray:
    """Return the samples of ``v`` on ``grid`` (fields, arrays or scalars)."""
    if isinstance(v, _SampledField):
        _check_same_grid(v.grid, grid)
        return v.values
    arr = np.asarray(v)
    if arr.ndim == 0:
        return np.full(grid.n_points, arr[()])
    if arr.shape != (grid.n_points,):
        raise GridMismatchError(f"samples have shape {arr.shape}, grid has {grid.n_points} points")
    return arr


def first_derivative(f: _SampledField) -> _SampledField:
    """Second-order first derivative (central inside, one-sided at the ends)."""
    return _wrap(f.grid, np.gradient(f.values, f.grid.h, edge_order=2))


def second_difference(y: np.ndarray, h: float) -> np.ndarray:
    """Second derivative of uniform samples ``y`` with spacing ``h``.

    Central differences inside. The end points use the second-order
    one-sided stencil ``(2f0 - 5f1 + 4f2 - f3)/h^2``, or the 3-point one
    when only three samples exist.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if n < 3:
        raise InvalidGridError(f"need at least 3 samples, got {n}")
    out = np.empty_like(y, dtype=np.result_type(y, float))
    out[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h**2
    if n >= 4:
        out[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h**2
        out[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / h**2
    else:
        out[0] = out[1]
        out[-1] = out[1]
    return out


def second_derivative(f: _SampledField) -> _SampledField:
    """Second derivative of a sampled field; exact for quadratics up to rounding."""
    return _wrap(f.grid, second_difference(f.values, f.grid.h))


def potential_jumps(V: np.ndarray, jump_fraction: float = 0.25) -> np.ndarray:
    """Flag points whose 3-point stencil straddles a discontinuity of ``V``.

    An interval ``[x_i, x_{i+1}]`` counts as a jump when ``|V_{i+1} - V_i|``
    exceeds ``jump_fraction`` times the total range of ``V``.
    """
    V = np.asarray(V, dtype=float)
    flags = np.zeros(V.shape, dtype=bool)
    span = np.ptp(V)
    if span == 0.0:
        return flags
    jump = np.abs(np.diff(V)) > jump_fraction * span
    flags[:-1] |= jump
    flags[1:] |= jump
    return flags


def schrodinger_residual(
    psi: ComplexField,
    V: FieldLike,
    E: float,
    m: float = 1.0,
    hbar: float = 1.0,
    floor: float = 1e-12,
    exclude_jumps: bool = True,
) -> RealField:
    """Relative stationary Schrodinger residual of sampled ``psi``.

    Returns ``|-(hbar^2/2m) psi'' + V psi - E psi| / max(|psi| |E|, floor)``.
    End points are NaN, and so are points whose stencil crosses a jump of a
    piecewise-constant ``V`` (the exact solution is only C1 there).

    Raises
    ------
    GridMismatchError
        If ``V`` is sampled on a different grid.
    """
    v = as_samples(V, psi.grid).real
    lap = second_difference(psi.values, psi.grid.h)
    res = np.abs(-(hbar**2 / (2.0 * m)) * lap + (v - E) * psi.values)
    res = res / np.maximum(np.abs(psi.values) * abs(E), floor)
    res[0] = np.nan
    res[-1] = np.nan
    if exclude_jumps:
        res[potential_jumps(v)] = np.nan
    return RealField(psi.grid, res)
