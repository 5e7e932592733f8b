r"""Inverse-source machinery for :math:`\partial_t^\alpha y = y_{xx} - p y + \rho(t) f(x)`.

* :class:`SourceSpec` / :func:`mu_from_rho`: the kernel ``mu`` with
  ``J^{1-alpha} mu = rho``, kept in split form
  ``mu = rho(0) t^(alpha-1) / Gamma(alpha) + J^alpha rho'``;
* :func:`duhamel_convolve`: ``y = mu * u`` for the homogeneous solution ``u``
  with initial value ``f``;
* :func:`volterra_deconvolve`: solves ``mu * w = h`` for ``w``;
* :func:`generate_synthetic_data`, :func:`reconstruct_f`,
  :func:`uniqueness_gap`: the data side on ``(0, 1)``;
* :func:`compute_F_entire`, :func:`laplace_identity_residual`: the
  Laplace-domain identity for the lifted problem on ``(x_l, x_r)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    ConditioningWarning,
    DomainError,
    HypothesisViolationError,
    PreconditionError,
    ShapeError,
)
from .forward import (
    BoundaryCondition,
    build_cache,
    extend_boundary_data,
    power_source,
    run_spectral,
    solve_ibvp_l1fd,
)
from .fracalc import _rl_unit, _starting_weights, caputo_l1_values, rl_integral_values
from .grids import (
    SpaceGrid,
    SpaceProfile,
    SpaceTimeField,
    TimeGrid,
    TimeSeries,
    as_alpha,
    laplace_transform,
    laplace_transform_field,
)
from .sturm_liouville import Potential, eigensystem, solve_phi, solve_phi_many

__all__ = [
    "CauchyData",
    "GapReport",
    "LaplaceIdentityConfig",
    "LaplaceRow",
    "LaplaceScenario",
    "MuSplit",
    "Reconstruction",
    "ReconstructionConfig",
    "SourceSpec",
    "UniquenessScenario",
    "compute_F_entire",
    "duhamel_convolve",
    "entire_growth_exponent",
    "generate_synthetic_data",
    "homogeneous_solution",
    "laplace_identity_residual",
    "mu_convolve",
    "mu_from_rho",
    "singular_exponents",
    "reconstruct_f",
    "smallest_m",
    "uniqueness_gap",
    "volterra_deconvolve",
]


# {{{ source and kernel


@dataclass(frozen=True, eq=False)
class MuSplit:
    r"""``mu(t) = singular_coeff * t^(alpha-1) + regular(t)`` for ``t > 0``."""

    alpha: float
    singular_coeff: float
    regular: TimeSeries

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0):
            raise DomainError("mu is evaluated only at t > 0")
        reg = np.interp(t, self.regular.t, self.regular.values)
        return self.singular_coeff * t ** (self.alpha - 1.0) + reg

    def reproduce_rho(self) -> TimeSeries:
        """``J^{1-alpha} mu``: the singular part integrates to the constant
        ``rho(0)`` in closed form."""
        a = self.alpha
        # the regular part starts like t^alpha
        reg = rl_integral_values(1.0 - a, self.regular.values, self.regular.grid.dt, (a,))
        const = self.singular_coeff * math.gamma(a)
        return TimeSeries(self.regular.grid, const + reg)


def _rho0_check(rho: TimeSeries) -> float:
    r0 = float(rho.values[0])
    scale = float(np.max(np.abs(rho.values)))
    if r0 == 0.0 or abs(r0) <= 1e-14 * scale:
        raise HypothesisViolationError("rho(0) must be nonzero")
    return r0


def mu_from_rho(
    rho: TimeSeries, alpha: float, correction_exponents: Sequence[float] = ()
) -> MuSplit:
    """Split kernel for ``rho``; the regular part ``J^alpha rho'`` is the
    Caputo derivative of order ``1 - alpha`` of ``rho``."""
    a = as_alpha(alpha)
    r0 = _rho0_check(rho)
    reg = caputo_l1_values(1.0 - a, rho.values, rho.grid.dt, correction_exponents)
    reg[0] = 0.0  # J^alpha of a bounded function vanishes at 0
    return MuSplit(a, r0 / math.gamma(a), TimeSeries(rho.grid, reg))


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Separable source ``rho(t) f(x)`` with ``rho(0) != 0``."""

    rho: TimeSeries
    f: Optional[SpaceProfile]
    alpha: float
    mu: MuSplit = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_alpha(self.alpha))
        object.__setattr__(self, "mu", mu_from_rho(self.rho, self.alpha))

    @property
    def rho0(self) -> float:
        return float(self.rho.values[0])

    def rho_defect(self) -> float:
        """``max |J^{1-alpha} mu - rho| / max |rho|`` over ``t >= dt``."""
        rep = self.mu.reproduce_rho().values
        r = self.rho.values
        return float(np.max(np.abs(rep[1:] - r[1:])) / np.max(np.abs(r)))


def _trapezoid_starting_weights(nt: int, exponents: Sequence[float]) -> np.ndarray:
    return _starting_weights(
        lambda w: _rl_unit(1.0, w),
        lambda s, n: n ** (s + 1.0) / (s + 1.0),
        nt,
        exponents,
    )


def _trap_conv(
    kernel: np.ndarray, values: np.ndarray, dt: float, correction_exponents: Sequence[float] = ()
) -> np.ndarray:
    """``int_0^t kernel(t - s) w(s) ds`` by the trapezoid rule in ``s``
    (last axis).  Starting weights of the plain trapezoid for the powers
    ``correction_exponents`` are applied with the kernel frozen at the
    nodes ``t_k - t_j``."""
    v = np.asarray(values)
    nt = v.shape[-1]
    flat = v.reshape(-1, nt)
    out = np.empty(flat.shape, dtype=np.result_type(v, kernel))
    for i, row in enumerate(flat):
        full = np.convolve(kernel, row)[:nt]
        out[i] = full - 0.5 * (kernel[0] * row + kernel[:nt] * row[0])
    m = len(correction_exponents) + 1 if correction_exponents else 0
    if m and nt > m + 1:
        om = _trapezoid_starting_weights(nt, correction_exponents)
        k = np.arange(nt)
        for j in range(1, m + 1):
            kj = kernel[np.maximum(k - j, 0)] * om[j - 1]
            out += (flat[:, j : j + 1] - flat[:, :1]) * kj[None, :]
    out[:, 0] = 0.0
    return (out * dt).reshape(v.shape)


def mu_convolve(
    rho: TimeSeries,
    alpha: float,
    values: np.ndarray,
    correction_exponents: Sequence[float] = (),
) -> np.ndarray:
    """``(mu * w)(t_k)`` along the last axis of ``values``.

    Uses ``mu * w = J^alpha (rho(0) w + rho' * w)``: the inner convolution
    has a smooth kernel (trapezoid rule), the weakly singular kernel is
    integrated exactly against the piecewise-linear interpolant, with
    starting weights for ``correction_exponents``.
    """
    a = as_alpha(alpha)
    r0 = _rho0_check(rho)
    dt = rho.grid.dt
    v = np.asarray(values)
    if v.shape[-1] != rho.grid.size:
        raise ShapeError("values and rho are on different time grids")
    drho = np.gradient(rho.values, dt, edge_order=2)
    inner = r0 * v + _trap_conv(drho, v, dt, correction_exponents)
    return rl_integral_values(a, inner, dt, correction_exponents)


def singular_exponents(alpha: float, limit: float = 1.0, count: int = 4) -> tuple[float, ...]:
    """Non-integer powers ``k alpha + j < limit`` (``k >= 1``, ``j >= 0``),
    smallest first and at most ``count`` of them: the small-time expansion
    of relaxation and Duhamel fields that product rules correct for."""
    a = as_alpha(alpha)
    out = set()
    k = 1
    while k * a < limit:
        j = 0
        while k * a + j < limit:
            e = k * a + j
            if abs(e - round(e)) > 1e-8:
                out.add(round(e, 12))
            j += 1
        k += 1
    return tuple(sorted(out)[:count])


def duhamel_convolve(spec: SourceSpec, u: SpaceTimeField) -> SpaceTimeField:
    """``y = mu * u`` for ``u`` solving the homogeneous problem with ``u(0) = f``.

    ``u`` carries the singular powers of the relaxation; see
    :func:`singular_exponents`.
    """
    if u.tgrid != spec.rho.grid:
        raise ShapeError("field and rho are on different time grids")
    exps = singular_exponents(spec.alpha)
    return SpaceTimeField(u.sgrid, u.tgrid, mu_convolve(spec.rho, spec.alpha, u.values, exps))


def volterra_deconvolve(
    h: TimeSeries,
    rho: TimeSeries,
    alpha: float,
    correction_exponents: Optional[Sequence[float]] = None,
) -> TimeSeries:
    """Solve ``h = mu * w`` for ``w`` through the second-kind equation
    ``d_t^alpha h = rho(0) w + rho' * w``.

    ``h`` is expected to behave like ``t^alpha`` near 0, so the Caputo
    derivative uses starting weights for ``alpha`` and ``1 + alpha`` by
    default; the node-0 value is extrapolated.
    """
    a = as_alpha(alpha)
    r0 = _rho0_check(rho)
    if h.grid != rho.grid:
        raise ShapeError("h and rho are on different time grids")
    if abs(h.values[0]) > 1e-12 * max(1.0, float(np.max(np.abs(h.values)))):
        raise PreconditionError(f"h(0) must vanish: got {h.values[0]}")
    dt = h.grid.dt
    exps = (a, 1.0 + a) if correction_exponents is None else tuple(correction_exponents)
    nt = h.grid.size
    if nt < len(exps) + 3:
        exps = ()
    r = caputo_l1_values(a, h.values, dt, exps)
    if nt > 3:
        r[0] = 3.0 * r[1] - 3.0 * r[2] + r[3]

    drho = np.gradient(rho.values, dt, edge_order=2)
    w = np.zeros(nt)
    diag = r0 + 0.5 * dt * drho[0]
    w[0] = r[0] / r0
    for k in range(1, nt):
        # trapezoid for int_0^t rho'(t - s) w(s) ds
        s = 0.5 * drho[k] * w[0]
        if k > 1:
            s += drho[k - 1 : 0 : -1] @ w[1:k]
        w[k] = (r[k] - dt * s) / diag
    return TimeSeries(h.grid, w)


# }}}


# {{{ data generation and reconstruction


@dataclass(frozen=True, eq=False)
class CauchyData:
    """``trace0 = y(x0, .)`` and ``trace1 = (J^alpha y)_x(x0, .)``."""

    trace0: TimeSeries
    trace1: TimeSeries
    x0: float
    noise_level: float = 0.0

    def __post_init__(self) -> None:
        if self.trace0.grid != self.trace1.grid:
            raise ShapeError("traces must share one time grid")
        if self.noise_level < 0.0:
            raise DomainError("noise level must be nonnegative")

    @property
    def tgrid(self) -> TimeGrid:
        return self.trace0.grid

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.trace0.values[1:], self.trace1.values[1:]])


def _bc_pair(bc: str) -> tuple[BoundaryCondition, BoundaryCondition]:
    if bc not in ("dirichlet", "neumann"):
        raise DomainError(f"unknown boundary closure {bc!r}")
    return BoundaryCondition(bc), BoundaryCondition(bc)


def _traces(y: np.ndarray, sgrid: SpaceGrid, tgrid: TimeGrid, x0: float, alpha: float):
    i = sgrid.index_of(x0)
    if i == 0 or i == sgrid.cells:
        raise PreconditionError(f"observation point {x0} must be an interior node")
    jy = rl_integral_values(alpha, y[[i - 1, i + 1]], tgrid.dt, singular_exponents(alpha))
    d = (jy[1] - jy[0]) / (2.0 * sgrid.dx)
    return y[i].copy(), d


def generate_synthetic_data(
    p: Potential,
    spec: SourceSpec,
    bc: str,
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    x0: float,
    noise_level: float = 0.0,
    seed: int = 0,
) -> CauchyData:
    """Finite-difference solve on ``sgrid`` with zero initial value, then
    traces at ``x0``.  Noise is Gaussian with standard deviation
    ``noise_level * rms(trace)`` per trace, drawn from ``default_rng(seed)``;
    node 0 stays noise-free."""
    if spec.f is None:
        raise PreconditionError("the source has no spatial factor")
    if spec.rho.grid != tgrid:
        raise ShapeError("rho is not on the time grid")
    left, right = _bc_pair(bc)
    src = SpaceTimeField(sgrid, tgrid, np.outer(spec.f.values, spec.rho.values))
    y = solve_ibvp_l1fd(p, None, left, right, src, sgrid, tgrid, spec.alpha).values
    t0, t1 = _traces(y, sgrid, tgrid, x0, spec.alpha)
    if noise_level > 0.0:
        rng = np.random.default_rng(seed)
        for tr in (t0, t1):
            rms = math.sqrt(float(np.mean(tr**2)))
            tr[1:] += noise_level * rms * rng.standard_normal(tr.size - 1)
    return CauchyData(TimeSeries(tgrid, t0), TimeSeries(tgrid, t1), x0, noise_level)


def homogeneous_solution(
    p: Potential, f: SpaceProfile, bc: str, tgrid: TimeGrid, alpha: float, mode_count: int
) -> SpaceTimeField:
    """``u = sum_n (f, psi_n) E_{a,1}(-lam_n t^a) psi_n`` in the ``bc`` eigenbasis."""
    eig = eigensystem(p, f.grid, mode_count, bc)
    cache = build_cache(eig, alpha, tgrid)
    c = eig.project(f.values)
    return SpaceTimeField(f.grid, tgrid, eig.synthesize(c[:, None] * cache.e1))


@dataclass(frozen=True)
class ReconstructionConfig:
    mode_count: int = 8
    tikhonov_lambda: Optional[float] = None
    bc: str = "dirichlet"
    discrepancy_tau: float = 1.1


@dataclass(frozen=True, eq=False)
class Reconstruction:
    f: SpaceProfile
    coeffs: np.ndarray
    lambda_reg: float
    residual: float
    condition: float
    ill_conditioned: bool


def _forward_matrix(p: Potential, rho: TimeSeries, alpha: float, cfg: ReconstructionConfig, x0: float):
    sgrid = p.grid
    tgrid = rho.grid
    # raw difference eigenvalues: they diagonalize the operator that made the data
    eig = eigensystem(p, sgrid, cfg.mode_count, cfg.bc, corrected=False)
    cache = build_cache(eig, alpha, tgrid)
    y_modal = mu_convolve(rho, alpha, cache.e1, singular_exponents(alpha))  # (N, nt)
    i = sgrid.index_of(x0)
    if i == 0 or i == sgrid.cells:
        raise PreconditionError(f"observation point {x0} must be an interior node")
    psi = eig.matrix
    dpsi = (psi[:, i + 1] - psi[:, i - 1]) / (2.0 * sgrid.dx)
    jy = rl_integral_values(alpha, y_modal, tgrid.dt, singular_exponents(alpha))
    A0 = (psi[:, i][:, None] * y_modal)[:, 1:]
    A1 = (dpsi[:, None] * jy)[:, 1:]
    return np.concatenate([A0, A1], axis=1).T, eig


def reconstruct_f(
    data: CauchyData,
    p: Potential,
    rho: TimeSeries,
    config: ReconstructionConfig,
    alpha: float,
) -> Reconstruction:
    """Tikhonov reconstruction of ``f`` in the eigenbasis on the grid of ``p``.

    ``min ||A c - d||^2 + lam ||c||^2`` via Cholesky on the normal equations.
    With ``tikhonov_lambda=None`` the parameter is ``1e-8 ||A||^2`` for
    noise-free data and chosen by the discrepancy principle otherwise.
    Noisy data are whitened with the per-trace noise level first, so an
    explicit ``tikhonov_lambda`` then refers to the whitened system.
    """
    a = as_alpha(alpha)
    _rho0_check(rho)
    if rho.grid != data.tgrid:
        raise ShapeError("rho and data are on different time grids")
    A, eig = _forward_matrix(p, rho, a, config, data.x0)
    d = data.stacked()
    if data.noise_level > 0.0:
        # whiten: unit noise variance in every row
        K = data.tgrid.steps
        sig = np.repeat([_noise_sigma(data.trace0, data.noise_level), _noise_sigma(data.trace1, data.noise_level)], K)
        A = A / sig[:, None]
        d = d / sig
    nrm2 = float(np.linalg.norm(A, 2)) ** 2

    lam = config.tikhonov_lambda
    if lam is None:
        lam = 1e-8 * nrm2
        if data.noise_level > 0.0:
            lam = _discrepancy_lambda(A, d, config.discrepancy_tau, nrm2)
    if lam < 0.0:
        raise DomainError("Tikhonov parameter must be nonnegative")

    N = A.shape[1]
    M = A.T @ A + lam * np.eye(N)
    cond = float(np.linalg.cond(M))
    bad = cond > 1e12
    if bad:
        warnings.warn(
            ConditioningWarning(f"normal matrix condition number {cond:.3e} exceeds 1e12"),
            stacklevel=2,
        )
    try:
        c = cho_solve(cho_factor(M), A.T @ d)
    except np.linalg.LinAlgError:
        # numerically singular normal matrix: minimum-norm solution, flagged
        c = np.linalg.lstsq(A, d, rcond=None)[0]
        bad = True
    res = float(np.linalg.norm(A @ c - d))
    f = SpaceProfile(p.grid, eig.synthesize(c))
    return Reconstruction(f, c, float(lam), res, cond, bad)


def _noise_sigma(trace: TimeSeries, level: float) -> float:
    # the generator draws noise with std level * rms(clean trace); the noisy
    # rms differs from it by O(level^2)
    return level * math.sqrt(float(np.mean(trace.values**2)))


def _discrepancy_lambda(A: np.ndarray, d: np.ndarray, tau: float, nrm2: float) -> float:
    """Largest ``lam`` on a log grid whose residual in the range of ``A``
    stays below ``tau sqrt(N)``, the expected norm of whitened noise there.

    The component of ``d`` orthogonal to the range does not depend on the
    coefficients, so the principle is applied to the reduced system only.
    """
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    beta = U.T @ d
    target = tau * math.sqrt(s.size)
    for lam in nrm2 * np.logspace(0, -16, 161):
        r = lam / (s**2 + lam) * beta
        if math.sqrt(float(r @ r)) <= target:
            return float(lam)
    return float(nrm2 * 1e-16)


@dataclass(frozen=True, eq=False)
class UniquenessScenario:
    p: Potential
    rho: TimeSeries
    alpha: float
    x0: float
    bc: str = "dirichlet"

    @property
    def sgrid(self) -> SpaceGrid:
        return self.p.grid

    def refined(self) -> UniquenessScenario:
        sg = self.sgrid.refined()
        tg = self.rho.grid.refined()
        rho = TimeSeries(tg, np.interp(tg.nodes, self.rho.t, self.rho.values))
        return UniquenessScenario(self.p.on(sg), rho, self.alpha, self.x0, self.bc)


@dataclass(frozen=True)
class GapReport:
    delta: float
    trace0_gap: float
    trace1_gap: float
    separation: float
    descriptor: str


def _time_norm(v: np.ndarray, dt: float) -> float:
    return math.sqrt(dt * float(np.sum(v**2) - 0.5 * (v[0] ** 2 + v[-1] ** 2)))


def uniqueness_gap(
    f1: SpaceProfile, f2: SpaceProfile, scenario: UniquenessScenario, min_separation: float = 0.0
) -> GapReport:
    """Data gap ``(||dy|| + ||d(J^a y)_x||) / ||f1 - f2||`` at ``x0``
    (``0`` when ``f1 == f2``)."""
    sep = SpaceProfile(f1.grid, f1.values - f2.values).norm()
    desc = (
        f"alpha={scenario.alpha} bc={scenario.bc} x0={scenario.x0} "
        f"cells={scenario.sgrid.cells} steps={scenario.rho.grid.steps}"
    )
    if sep == 0.0:
        return GapReport(0.0, 0.0, 0.0, 0.0, desc)
    if sep < min_separation:
        raise PreconditionError(f"sources are closer ({sep:.3e}) than the required separation")
    tg = scenario.rho.grid
    d1 = generate_synthetic_data(
        scenario.p, SourceSpec(scenario.rho, f1, scenario.alpha), scenario.bc,
        scenario.sgrid, tg, scenario.x0,
    )
    d2 = generate_synthetic_data(
        scenario.p, SourceSpec(scenario.rho, f2, scenario.alpha), scenario.bc,
        scenario.sgrid, tg, scenario.x0,
    )
    g0 = _time_norm(d1.trace0.values - d2.trace0.values, tg.dt)
    g1 = _time_norm(d1.trace1.values - d2.trace1.values, tg.dt)
    return GapReport((g0 + g1) / sep, g0, g1, sep, desc)


# }}}


# {{{ Laplace-domain identity


def compute_F_entire(a: SpaceProfile, p: Potential, z: complex) -> complex:
    """``F(z) = int a(x) phi(x, z) dx`` over the grid of ``a``."""
    sol = solve_phi(p, z, a.grid)
    return complex(np.sum(a.grid.weights * a.values * sol.phi.values))


def smallest_m(alpha: float) -> int:
    """Smallest integer ``m`` with ``(m - 1) alpha > 5/2``."""
    a = as_alpha(alpha)
    return int(math.floor(2.5 / a)) + 2


@dataclass(frozen=True)
class LaplaceIdentityConfig:
    m: int
    s_list: tuple[float, ...]
    branches: tuple[int, ...] = (1, -1)

    def __post_init__(self) -> None:
        s = tuple(float(v) for v in self.s_list)
        object.__setattr__(self, "s_list", s)
        if not s or any(v <= 0.0 for v in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise DomainError("s_list must be ascending positive values")
        if self.m < 1:
            raise DomainError("m must be a positive integer")
        if any(b not in (1, -1) for b in self.branches):
            raise DomainError("branches are +1 / -1")

    def check_alpha(self, alpha: float) -> None:
        if not (self.m - 1) * alpha > 2.5:
            raise PreconditionError(f"(m - 1) alpha = {(self.m - 1) * alpha} must exceed 5/2")


@dataclass(frozen=True, eq=False)
class LaplaceScenario:
    """Lifted problem on ``sgrid = [x_l, x_r]``: source ``J^{(m-1)a} a``,
    Neumann data ``g`` (on ``[0, T]``) and horizon ``t_end`` for the
    truncated Laplace transforms."""

    p: Potential
    a: SpaceProfile
    g: TimeSeries
    alpha: float
    t_end: float
    mode_count: int = 32

    @property
    def sgrid(self) -> SpaceGrid:
        return self.a.grid


@dataclass(frozen=True)
class LaplaceRow:
    s: float
    branch: int
    r_general: float
    r_special: float
    truncation_flag: bool


def laplace_identity_residual(
    scenario: LaplaceScenario, cfg: LaplaceIdentityConfig, z_generic_angle: float = math.pi / 3
) -> list[LaplaceRow]:
    """Residuals of the Laplace identity for ``F(z)`` at ``z = +-i s^{a/2}``
    and at the generic point ``z = s^{a/2} e^{i angle}``.

    Each residual is normalized by the largest term of its identity.  Rows
    whose transform tail ``|V(x_r, t_end)| e^{-s t_end}`` is not below
    ``1e-8`` of that scale carry ``truncation_flag`` and NaN residuals.
    """
    al = as_alpha(scenario.alpha)
    cfg.check_alpha(al)
    sgrid = scenario.sgrid
    dt = scenario.g.grid.dt
    steps = int(round(scenario.t_end / dt))
    if steps < scenario.g.grid.steps:
        raise DomainError("horizon must not be shorter than the data interval")
    tgrid = TimeGrid(steps * dt, steps)

    G = extend_boundary_data(scenario.g)
    order = (cfg.m - 1) * al
    src = power_source(scenario.a, order, tgrid)
    run = run_spectral(scenario.p, None, G, src, sgrid, tgrid, al, scenario.mode_count)
    V = run.V
    Gl = G.sample(tgrid)
    w = sgrid.weights

    rows = []
    for s in cfg.s_list:
        Vhat = laplace_transform_field(V, s)
        Ghat = laplace_transform(Gl, s).value
        tail = abs(V.values[-1, -1]) * math.exp(-s * tgrid.t_end)
        pref = s ** (-order - 1.0)
        for b in cfg.branches:
            zs = b * 1j * s ** (al / 2.0)
            zg = s ** (al / 2.0) * complex(math.cos(z_generic_angle), b * math.sin(z_generic_angle))
            sol_s, sol_g = solve_phi_many(scenario.p, [zs, zg], sgrid)

            F_s = pref * complex(np.sum(w * scenario.a.values * sol_s.phi.values))
            bnd_s = sol_s.right_derivative * Vhat[-1]
            scale_s = max(abs(F_s), abs(bnd_s), abs(Ghat), 1e-300)
            r_special = abs(F_s - bnd_s - Ghat) / scale_s

            F_g = pref * complex(np.sum(w * scenario.a.values * sol_g.phi.values))
            bulk = (s**al + zg * zg) * complex(np.sum(w * Vhat * sol_g.phi.values))
            bnd_g = sol_g.right_derivative * Vhat[-1]
            scale_g = max(abs(F_g), abs(bulk), abs(bnd_g), abs(Ghat), 1e-300)
            r_general = abs(F_g - bulk - Ghat - bnd_g) / scale_g

            flagged = tail > 1e-8 * min(scale_s, scale_g)
            if flagged:
                r_special = r_general = math.nan
            rows.append(LaplaceRow(float(s), int(b), float(r_general), float(r_special), bool(flagged)))
    return rows


def entire_growth_exponent(a: SpaceProfile, p: Potential, s_values: Sequence[float], alpha: float) -> float:
    """Least-squares slope of ``log |F(i s^{a/2})|`` against ``log s``."""
    al = as_alpha(alpha)
    s = np.asarray(s_values, dtype=float)
    sols = solve_phi_many(p, 1j * s ** (al / 2.0), a.grid)
    F = np.array([abs(np.sum(a.grid.weights * a.values * sol.phi.values)) for sol in sols])
    return float(np.polyfit(np.log(s), np.log(F), 1)[0])


# }}}
