r"""Sturm-Liouville machinery for :math:`A v = -v'' + p(x) v` on ``[x_left, x_right]``.

* :func:`solve_phi` integrates the initial-value problem
  :math:`\varphi'' + z^2\varphi = p\varphi`, :math:`\varphi(x_l)=1`,
  :math:`\varphi'(x_l)=0` with classical RK4 (vectorized over ``z``);
* :func:`eigen_neumann` / :func:`eigen_dirichlet` compute the lowest
  eigenpairs of the three-point finite-difference operator;
* :func:`verify_phi_eigen_link` and :func:`asymptotic_report` are the
  diagnostics tying the two together.

Finite-difference eigenvalues carry the error ``-(k pi h / L)^2 lambda / 12``
that grows with the mode number.  Since the discrete spectrum of the ``p = 0``
operator is known in closed form, its error is subtracted from every computed
eigenvalue (asymptotic correction); the raw values are kept in
:attr:`EigenSystem.fd_lambdas`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    DomainError,
    GrowthOverflowError,
    PreconditionError,
    ResolutionError,
    ShapeError,
)
from .grids import SpaceGrid, SpaceProfile

__all__ = [
    "AsymptoticRow",
    "EigenSystem",
    "PhiSolution",
    "Potential",
    "asymptotic_report",
    "eigen_dirichlet",
    "eigen_neumann",
    "solve_phi",
    "verify_phi_eigen_link",
]

OVERFLOW_LIMIT = 1e300


# {{{ potential


@dataclass(frozen=True, eq=False)
class Potential:
    """Samples of ``p`` plus, optionally, the exact function.

    Off-grid values (RK4 midpoints, other grids) come from ``func`` when it
    is given and from linear interpolation of ``profile`` otherwise.
    """

    profile: SpaceProfile
    sup_bound: float
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self) -> None:
        vmax = float(np.max(np.abs(self.profile.values)))
        if not self.sup_bound >= vmax * (1.0 - 1e-14):
            raise DomainError(
                f"sup_bound {self.sup_bound} is below max |p| = {vmax}"
            )

    @classmethod
    def from_function(cls, grid: SpaceGrid, func) -> Potential:
        prof = SpaceProfile.from_function(grid, func)
        # sample more finely than the grid so the bound is honest between nodes
        xs = np.linspace(grid.x_left, grid.x_right, 8 * grid.cells + 1)
        bound = float(max(np.max(np.abs(prof.values)), np.max(np.abs(func(xs)))))
        return cls(prof, bound, func)

    @classmethod
    def constant(cls, grid: SpaceGrid, c: float) -> Potential:
        return cls.from_function(grid, lambda x: np.full(np.shape(x), float(c)))

    @property
    def grid(self) -> SpaceGrid:
        return self.profile.grid

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.func is not None:
            return np.broadcast_to(self.func(x), x.shape).astype(float)
        return np.interp(x, self.profile.x, self.profile.values)

    def on(self, grid: SpaceGrid) -> Potential:
        """The same potential sampled on another grid."""
        if grid == self.grid:
            return self
        vals = self(grid.nodes)
        return Potential(SpaceProfile(grid, vals), self.sup_bound, self.func)

    def shifted(self, c: float) -> Potential:
        func = None if self.func is None else (lambda x, f=self.func: f(x) + c)
        return Potential(
            SpaceProfile(self.grid, self.profile.values + c),
            self.sup_bound + abs(c),
            func,
        )


# }}}


# {{{ phi


@dataclass(frozen=True, eq=False)
class PhiSolution:
    z: complex
    grid: SpaceGrid
    phi: SpaceProfile
    phi_prime: SpaceProfile

    @property
    def right_derivative(self) -> complex:
        """``phi'(x_right, z)``."""
        return complex(self.phi_prime.values[-1])


def _phi_rk4(p: Potential, z2: np.ndarray, grid: SpaceGrid) -> tuple[np.ndarray, np.ndarray]:
    """RK4 for ``(phi, phi')' = (phi', (p - z^2) phi)``; rows of the result
    correspond to entries of ``z2``."""
    h = grid.dx
    x = grid.nodes
    pn = p(x)
    pm = p(x[:-1] + 0.5 * h)
    nz = z2.size
    y = np.empty((nz, x.size), dtype=complex)
    dy = np.empty((nz, x.size), dtype=complex)
    y[:, 0] = 1.0
    dy[:, 0] = 0.0
    u = np.ones(nz, dtype=complex)
    v = np.zeros(nz, dtype=complex)
    for i in range(grid.cells):
        q0 = pn[i] - z2
        qm = pm[i] - z2
        q1 = pn[i + 1] - z2
        k1u, k1v = v, q0 * u
        k2u, k2v = v + 0.5 * h * k1v, qm * (u + 0.5 * h * k1u)
        k3u, k3v = v + 0.5 * h * k2v, qm * (u + 0.5 * h * k2u)
        k4u, k4v = v + h * k3v, q1 * (u + h * k3u)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if np.any(np.abs(u) > OVERFLOW_LIMIT) or not np.all(np.isfinite(u)):
            raise GrowthOverflowError(
                f"|phi| exceeded {OVERFLOW_LIMIT:.0e} at x = {x[i + 1]:.6g}"
            )
        y[:, i + 1] = u
        dy[:, i + 1] = v
    return y, dy


def solve_phi(p: Potential, z: complex, grid: SpaceGrid) -> PhiSolution:
    """Solve ``phi'' = (p - z^2) phi`` from ``phi = 1, phi' = 0`` at ``x_left``."""
    return solve_phi_many(p, [z], grid)[0]


def solve_phi_many(p: Potential, zs: Sequence[complex], grid: SpaceGrid) -> list[PhiSolution]:
    """:func:`solve_phi` for several ``z`` in one sweep."""
    zarr = np.asarray(zs, dtype=complex).ravel()
    y, dy = _phi_rk4(p, zarr * zarr, grid)
    return [
        PhiSolution(complex(zz), grid, SpaceProfile(grid, y[i]), SpaceProfile(grid, dy[i]))
        for i, zz in enumerate(zarr)
    ]


# }}}


# {{{ eigensystem


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Lowest eigenpairs of ``-d^2/dx^2 + p`` with the given boundary closure.

    ``matrix[n]`` holds mode ``n`` (0-based) sampled on ``grid``; the modes
    are orthonormal in the trapezoid inner product.  ``n0`` is the 1-based
    index of the first nonnegative eigenvalue.
    """

    grid: SpaceGrid
    lambdas: np.ndarray
    fd_lambdas: np.ndarray
    matrix: np.ndarray
    bc: str = "neumann"
    potential: Optional[Potential] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for name in ("lambdas", "fd_lambdas", "matrix"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.matrix.shape != (self.lambdas.size, self.grid.size):
            raise ShapeError("mode matrix does not match eigenvalues and grid")

    @property
    def count(self) -> int:
        return self.lambdas.size

    @property
    def modes(self) -> list[SpaceProfile]:
        return [SpaceProfile(self.grid, row) for row in self.matrix]

    @property
    def n0(self) -> int:
        nonneg = np.nonzero(self.lambdas >= 0.0)[0]
        return int(nonneg[0]) + 1 if nonneg.size else self.count + 1

    def project(self, values) -> np.ndarray:
        """Trapezoid inner products ``(a, phi_n)``; works along the first
        axis of ``values`` so fields of shape ``(nx, nt)`` are accepted."""
        v = np.asarray(values)
        if v.shape[0] != self.grid.size:
            raise ShapeError(f"expected {self.grid.size} spatial samples, got {v.shape[0]}")
        return (self.matrix * self.grid.weights) @ v

    def synthesize(self, coeffs) -> np.ndarray:
        return self.matrix.T @ np.asarray(coeffs)

    def tail_indicator(self, a: SpaceProfile) -> float:
        """``||a - P_N a|| / ||a||`` (0 for ``a = 0``)."""
        norm = a.norm()
        if norm == 0.0:
            return 0.0
        rest = SpaceProfile(self.grid, a.values - self.synthesize(self.project(a.values)))
        return rest.norm() / norm

    def orthonormality_defect(self) -> float:
        gram = (self.matrix * self.grid.weights) @ self.matrix.T
        return float(np.max(np.abs(gram - np.eye(self.count))))

    def fd_residuals(self) -> np.ndarray:
        """``||A_h phi_n - lambda_n^h phi_n|| / (1 + |lambda_n^h|)`` per mode."""
        if self.potential is None:
            raise PreconditionError("eigensystem was built without its potential")
        out = np.empty(self.count)
        h = self.grid.dx
        pv = self.potential.on(self.grid).profile.values
        for n, u in enumerate(self.matrix):
            Au = _apply_fd(u, pv, h, self.bc)
            r = Au - self.fd_lambdas[n] * u
            if self.bc == "dirichlet":
                r[0] = r[-1] = 0.0
            out[n] = SpaceProfile(self.grid, r).norm() / (1.0 + abs(self.fd_lambdas[n]))
        return out


def _apply_fd(u: np.ndarray, pv: np.ndarray, h: float, bc: str) -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = (-u[:-2] + 2.0 * u[1:-1] - u[2:]) / h**2
    if bc == "neumann":
        out[0] = 2.0 * (u[0] - u[1]) / h**2
        out[-1] = 2.0 * (u[-1] - u[-2]) / h**2
    else:
        out[0] = out[-1] = 0.0
    return out + pv * u


def _fd_free_spectrum(k: np.ndarray, h: float, length: float) -> np.ndarray:
    # exact eigenvalues of the p = 0 difference operator (both closures)
    return (2.0 / h) ** 2 * np.sin(0.5 * k * math.pi * h / length) ** 2


def _fix_signs(vecs: np.ndarray, first: int) -> np.ndarray:
    for row in vecs:
        ref = row[first]
        if abs(ref) <= 1e-8 * np.max(np.abs(row)):
            ref = row[np.argmax(np.abs(row))]
        if ref < 0.0:
            row *= -1.0
    return vecs


def _check_count(grid: SpaceGrid, count: int) -> None:
    if count < 1:
        raise ResolutionError(f"need at least one mode: got {count}")
    if count > grid.cells / 4:
        raise ResolutionError(
            f"{count} modes on {grid.cells} cells: at most cells/4 = {grid.cells // 4} are resolved"
        )


def eigen_neumann(p: Potential, grid: SpaceGrid, count: int, corrected: bool = True) -> EigenSystem:
    """Lowest ``count`` Neumann eigenpairs on ``grid``.

    Mirror ghost nodes give a matrix that becomes symmetric after scaling by
    the square roots of the trapezoid weights, so eigenvectors come out
    orthonormal in the trapezoid inner product.  Modes are signed with
    ``phi_n(x_left) >= 0``.
    """
    _check_count(grid, count)
    pv = p.on(grid).profile.values
    h = grid.dx
    n = grid.size
    d = 2.0 / h**2 + pv
    e = np.full(n - 1, -1.0 / h**2)
    e[0] = e[-1] = -math.sqrt(2.0) / h**2
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    w = grid.weights
    modes = (vecs / np.sqrt(w)[:, None]).T.copy()
    modes = _fix_signs(modes, 0)

    k = np.arange(count, dtype=float)
    lam = vals.copy()
    if corrected:
        lam += (k * math.pi / grid.length) ** 2 - _fd_free_spectrum(k, h, grid.length)
    return EigenSystem(grid, lam, vals, modes, "neumann", p.on(grid))


def eigen_dirichlet(p: Potential, grid: SpaceGrid, count: int, corrected: bool = True) -> EigenSystem:
    """Lowest ``count`` Dirichlet eigenpairs; modes vanish at both ends and
    are signed so that their first interior value is nonnegative."""
    _check_count(grid, count)
    pv = p.on(grid).profile.values
    h = grid.dx
    d = 2.0 / h**2 + pv[1:-1]
    e = np.full(grid.cells - 2, -1.0 / h**2)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    modes = np.zeros((count, grid.size))
    modes[:, 1:-1] = vecs.T / math.sqrt(h)
    modes = _fix_signs(modes, 1)

    k = np.arange(1, count + 1, dtype=float)
    lam = vals.copy()
    if corrected:
        lam += (k * math.pi / grid.length) ** 2 - _fd_free_spectrum(k, h, grid.length)
    return EigenSystem(grid, lam, vals, modes, "dirichlet", p.on(grid))


def eigensystem(
    p: Potential, grid: SpaceGrid, count: int, bc: str = "neumann", corrected: bool = True
) -> EigenSystem:
    if bc == "neumann":
        return eigen_neumann(p, grid, count, corrected)
    if bc == "dirichlet":
        return eigen_dirichlet(p, grid, count, corrected)
    raise DomainError(f"unknown boundary closure {bc!r}")


# }}}


# {{{ diagnostics


def verify_phi_eigen_link(p: Potential, grid: SpaceGrid, p0: float, count: int) -> np.ndarray:
    """``|phi'(x_right, sqrt(mu_n - p0))|`` for the Neumann eigenvalues
    ``mu_n`` of ``-d^2/dx^2 + p + p0``; zero for exact eigenparameters."""
    eig = eigen_neumann(p.shifted(p0), grid, count)
    if np.any(eig.lambdas <= 0.0):
        bad = int(np.argmax(eig.lambdas <= 0.0)) + 1
        raise PreconditionError(
            f"shifted eigenvalue mu_{bad} = {eig.lambdas[bad - 1]:.6g} is not positive; increase p0"
        )
    zs = np.sqrt((eig.lambdas - p0).astype(complex))
    sols = solve_phi_many(p, zs, grid)
    return np.array([abs(s.right_derivative) for s in sols])


@dataclass(frozen=True)
class AsymptoticRow:
    z: complex
    r0: float
    r1: float
    r2: float  # nan unless z is purely imaginary


def asymptotic_report(p: Potential, grid: SpaceGrid, z_list: Sequence[complex]) -> list[AsymptoticRow]:
    """Normalized growth ratios of ``phi(x, z)``.

    ``r0 = sup |phi| e^{-|Im z| (x - x_l)}``,
    ``r1 = sup |phi - cos(z (x - x_l))| |z| e^{-|Im z| (x - x_l)}`` and, for
    purely imaginary ``z``, ``r2 = |phi'(x_r, z)| / (|z| e^{|z|})``.
    """
    zs = np.asarray(z_list, dtype=complex).ravel()
    if zs.size == 0:
        raise DomainError("z_list must not be empty")
    if np.any(np.abs(zs) < 1.0):
        raise DomainError("asymptotic diagnostics need |z| >= 1")
    sols = solve_phi_many(p, zs, grid)
    s = grid.nodes - grid.x_left
    rows = []
    for zz, sol in zip(zs, sols):
        damp = np.exp(-abs(zz.imag) * s)
        phi = sol.phi.values
        r0 = float(np.max(np.abs(phi) * damp))
        r1 = float(np.max(np.abs(phi - np.cos(zz * s)) * damp) * abs(zz))
        if zz.real == 0.0:
            r2 = abs(sol.right_derivative) / (abs(zz) * math.exp(abs(zz)))
        else:
            r2 = math.nan
        rows.append(AsymptoticRow(complex(zz), r0, r1, r2))
    return rows


# }}}
