"""Uniform grids, sampled-function containers and basic quadrature.

Every container is an immutable view over a float64 (or complex128) array
tied to the grid it was sampled on.  The operations here are the plumbing
shared by the fractional-calculus, spectral and inverse modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Union

import numpy as np

from .errors import DomainError, InvalidGridError, NodeLookupError, ShapeError

__all__ = [
    "FractionalOrder",
    "LaplaceValue",
    "SpaceGrid",
    "SpaceProfile",
    "SpaceTimeField",
    "TimeGrid",
    "TimeSeries",
    "central_space_derivative",
    "laplace_transform",
    "laplace_transform_field",
    "trapezoid_integrate",
]

_NODE_TOL = 1e-9


def _frozen(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if dtype is None and not np.iscomplexobj(arr):
        arr = arr.astype(np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FractionalOrder:
    """Order of the time derivative, strictly inside (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"fractional order must lie in (0, 1): got {self.alpha}")

    def __float__(self) -> float:
        return float(self.alpha)


def as_alpha(alpha: FractionalOrder | float) -> float:
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError(f"fractional order must lie in (0, 1): got {a}")
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * dt`` on ``[0, t_end]`` with ``steps`` intervals."""

    t_end: float
    steps: int

    def __post_init__(self) -> None:
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise InvalidGridError(f"t_end must be positive: got {self.t_end}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidGridError(f"steps must be a positive integer: got {self.steps}")

    @property
    def dt(self) -> float:
        return self.t_end / self.steps

    @property
    def size(self) -> int:
        return self.steps + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen(np.arange(self.steps + 1) * self.dt)

    def index_of(self, t: float) -> int:
        k = round(t / self.dt)
        if not 0 <= k <= self.steps or abs(k * self.dt - t) > _NODE_TOL * max(1.0, abs(t)):
            raise NodeLookupError(f"t={t} is not a node of {self}")
        return k

    def refined(self, factor: int = 2) -> TimeGrid:
        return TimeGrid(self.t_end, self.steps * factor)


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid on ``[x_left, x_right]`` inside ``[0, 1]`` with ``cells`` cells."""

    x_left: float
    x_right: float
    cells: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.x_left < self.x_right <= 1.0:
            raise InvalidGridError(
                f"need 0 <= x_left < x_right <= 1: got [{self.x_left}, {self.x_right}]"
            )
        if int(self.cells) != self.cells or self.cells < 1:
            raise InvalidGridError(f"cells must be a positive integer: got {self.cells}")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.cells

    @property
    def size(self) -> int:
        return self.cells + 1

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.x_left + np.arange(self.cells + 1) * self.dx
        x[-1] = self.x_right
        return _frozen(x)

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.cells + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return _frozen(w)

    def index_of(self, x: float) -> int:
        k = round((x - self.x_left) / self.dx)
        if not 0 <= k <= self.cells or abs(self.nodes[k] - x) > _NODE_TOL:
            raise NodeLookupError(f"x={x} is not a node of {self}")
        return k

    def refined(self, factor: int = 2) -> SpaceGrid:
        return SpaceGrid(self.x_left, self.x_right, self.cells * factor)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.size,):
            raise ShapeError(
                f"expected {self.grid.size} samples, got shape {self.values.shape}"
            )

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> TimeSeries:
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.size,)))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class SpaceProfile:
    grid: SpaceGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.grid.size,):
            raise ShapeError(
                f"expected {self.grid.size} samples, got shape {self.values.shape}"
            )

    @classmethod
    def from_function(cls, grid: SpaceGrid, func) -> SpaceProfile:
        return cls(grid, np.broadcast_to(func(grid.nodes), (grid.size,)))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.grid.weights * np.abs(self.values) ** 2)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Samples ``values[i, k] = F(x_i, t_k)``."""

    sgrid: SpaceGrid
    tgrid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen(self.values))
        expected = (self.sgrid.size, self.tgrid.size)
        if self.values.shape != expected:
            raise ShapeError(f"expected shape {expected}, got {self.values.shape}")

    @classmethod
    def zeros(cls, sgrid: SpaceGrid, tgrid: TimeGrid) -> SpaceTimeField:
        return cls(sgrid, tgrid, np.zeros((sgrid.size, tgrid.size)))

    @classmethod
    def from_function(cls, sgrid: SpaceGrid, tgrid: TimeGrid, func) -> SpaceTimeField:
        X, T = np.meshgrid(sgrid.nodes, tgrid.nodes, indexing="ij")
        return cls(sgrid, tgrid, np.broadcast_to(func(X, T), X.shape))

    def at_x(self, x: float) -> TimeSeries:
        return TimeSeries(self.tgrid, self.values[self.sgrid.index_of(x)])

    def at_step(self, k: int) -> SpaceProfile:
        return SpaceProfile(self.sgrid, self.values[:, k])

    def l2l2_norm(self) -> float:
        """Discrete L2(0,T; L2) norm with trapezoid weights in both variables."""
        wt = np.full(self.tgrid.size, self.tgrid.dt)
        wt[0] = wt[-1] = 0.5 * self.tgrid.dt
        return math.sqrt(float(self.sgrid.weights @ (np.abs(self.values) ** 2) @ wt))


Sampled = Union[TimeSeries, SpaceProfile]


def trapezoid_integrate(w: Sampled) -> float:
    """Composite trapezoid value of the integral of ``w`` over its grid."""
    if len(w.values) < 2:
        raise InvalidGridError("trapezoid rule needs at least 2 nodes")
    h = w.grid.dt if isinstance(w, TimeSeries) else w.grid.dx
    v = w.values
    return h * (v.sum() - 0.5 * (v[0] + v[-1]))


class LaplaceValue(NamedTuple):
    value: float
    tail_bound: float


def _check_s(s: float) -> None:
    if not s > 0.0:
        raise DomainError(f"Laplace variable must be positive: got {s}")


def laplace_transform(w: TimeSeries, s: float) -> LaplaceValue:
    """Truncated Laplace transform of ``w`` at real ``s > 0``.

    The integral is cut at the grid horizon; ``tail_bound`` is the crude
    estimate ``|w(t_end)| exp(-s t_end) / s`` of the neglected part.
    """
    _check_s(s)
    t = w.grid.nodes
    kernel = np.exp(-s * t)
    value = trapezoid_integrate(TimeSeries(w.grid, w.values * kernel))
    tail = abs(w.values[-1]) * math.exp(-s * w.grid.t_end) / s
    return LaplaceValue(value, tail)


def laplace_transform_field(F: SpaceTimeField, s: float) -> np.ndarray:
    """Row-wise truncated Laplace transform; returns one value per space node."""
    _check_s(s)
    dt = F.tgrid.dt
    g = F.values * np.exp(-s * F.tgrid.nodes)[None, :]
    return dt * (g.sum(axis=1) - 0.5 * (g[:, 0] + g[:, -1]))


def central_space_derivative(F: SpaceTimeField, x_star: float) -> TimeSeries:
    """Second-order central difference in x at the interior node ``x_star``."""
    i = F.sgrid.index_of(x_star)
    if i == 0 or i == F.sgrid.cells:
        raise NodeLookupError(f"x={x_star} is a boundary node; need an interior node")
    d = (F.values[i + 1] - F.values[i - 1]) / (2.0 * F.sgrid.dx)
    return TimeSeries(F.tgrid, d)
