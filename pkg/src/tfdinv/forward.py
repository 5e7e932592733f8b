r"""Forward solvers for :math:`\partial_t^\alpha(V - a) = V_{xx} - pV + F`.

Two independent routes:

* a spectral route in the Neumann eigenbasis, where the solution operators

  .. math::

      S(t)a = \sum_n (a,\varphi_n) E_{\alpha,1}(-\lambda_n t^\alpha)\varphi_n,
      \qquad
      K(t)a = t^{\alpha-1}\sum_n (a,\varphi_n)
              E_{\alpha,\alpha}(-\lambda_n t^\alpha)\varphi_n

  act diagonally and inhomogeneous Neumann data ``V_x(x_l) = G`` are removed
  by the quadratic lift ``W = V + q G``;
* an implicit L1 finite-difference stepper (:func:`solve_ibvp_l1fd`) that
  serves as the cross-check and as the data generator on ``(0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import ConfigurationError, DomainError, PreconditionError, ShapeError, SolverError
from .fracalc import _l1_coefficients, _l1_starting_weights, caputo_l1_values
from .grids import SpaceGrid, SpaceProfile, SpaceTimeField, TimeGrid, TimeSeries
from .mittag_leffler import X_MAX, mittag_leffler
from .sturm_liouville import EigenSystem, Potential, eigen_neumann

__all__ = [
    "BoundaryCondition",
    "BoundaryData",
    "LiftedProblem",
    "OperatorCache",
    "SpectralRun",
    "apply_K_convolution",
    "apply_S",
    "build_cache",
    "extend_boundary_data",
    "generator_identity_defect",
    "growth_rate_fit",
    "identity_defects",
    "lift_shape",
    "power_source",
    "run_spectral",
    "solve_ibvp_l1fd",
    "solve_ibvp_spectral",
]


def _check_order(alpha: float) -> float:
    a = float(alpha)
    if not 0.0 < a <= 1.0:
        raise DomainError(f"order must lie in (0, 1]: got {a}")
    return a


# {{{ operator cache


@dataclass(frozen=True, eq=False)
class OperatorCache:
    """Modal tables of the solution operators on one time grid.

    ``e1[n, k] = E_{a,1}(-lam_n t_k^a)``; ``kcum[n, k]`` is the exact
    integral of ``tau^(a-1) E_{a,a}(-lam_n tau^a)`` over ``[0, t_k]`` and
    ``kq = diff(kcum)`` its per-interval increments.
    """

    eig: EigenSystem
    alpha: float
    tgrid: TimeGrid
    e1: np.ndarray
    kcum: np.ndarray

    @property
    def kq(self) -> np.ndarray:
        return np.diff(self.kcum, axis=1)

    @property
    def mode_count(self) -> int:
        return self.eig.count

    def kernel_values(self, t) -> np.ndarray:
        """``t^(a-1) E_{a,a}(-lam_n t^a)`` for every mode (rows) at ``t > 0``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t <= 0.0):
            raise DomainError("kernel values need t > 0")
        lam = self.eig.lambdas[:, None]
        a = self.alpha
        return t[None, :] ** (a - 1.0) * mittag_leffler(a, a, -lam * t[None, :] ** a)

    def e1_values(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lam = self.eig.lambdas[:, None]
        return mittag_leffler(self.alpha, 1.0, -lam * t[None, :] ** self.alpha)


def build_cache(eig: EigenSystem, alpha: float, tgrid: TimeGrid) -> OperatorCache:
    """Fill the modal tables; ``alpha = 1`` is admitted for classical checks.

    The cumulative kernel uses ``t^a E_{a,a+1}(-lam t^a)``, which equals
    ``(1 - E_{a,1}(-lam t^a)) / lam`` without the cancellation of that form.
    """
    a = _check_order(alpha)
    lam = eig.lambdas
    if lam[0] < 0.0 and abs(lam[0]) * tgrid.t_end**a > X_MAX:
        raise ConfigurationError(
            f"|lambda_1| * t_end^alpha = {abs(lam[0]) * tgrid.t_end**a:.4g} exceeds {X_MAX}; "
            "shorten the horizon or raise the potential"
        )
    t = tgrid.nodes
    ta = t[None, :] ** a
    arg = -lam[:, None] * ta
    e1 = mittag_leffler(a, 1.0, arg)
    kcum = ta * mittag_leffler(a, a + 1.0, arg)
    return OperatorCache(eig, a, tgrid, e1, kcum)


def _check_profile(cache: OperatorCache, a: SpaceProfile) -> None:
    if a.grid != cache.eig.grid:
        raise ShapeError("profile grid does not match the eigensystem grid")


def apply_S(cache: OperatorCache, k: int, a: SpaceProfile) -> SpaceProfile:
    """``S(t_k) a`` truncated to the cached modes."""
    _check_profile(cache, a)
    if not 0 <= k < cache.tgrid.size:
        raise ShapeError(f"time index {k} outside the grid")
    c = cache.eig.project(a.values)
    return SpaceProfile(a.grid, cache.eig.synthesize(c * cache.e1[:, k]))


def generator_identity_defect(cache: OperatorCache, times: Sequence[float]) -> np.ndarray:
    """``|lam_n k_n(t) + d/dt e1_n(t)| / |lam_n k_n(t)|`` per mode (rows) and
    time (columns), with ``d/dt`` by a Richardson-extrapolated central
    difference; zero eigenvalues are scaled by ``1`` instead."""
    t = np.asarray(times, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("the identity is checked at t > 0")
    lam = cache.eig.lambdas[:, None]
    lhs = lam * cache.kernel_values(t)

    def central(h):
        return (cache.e1_values(t + h) - cache.e1_values(t - h)) / (2.0 * h[None, :])

    h = 1e-3 * t
    deriv = (4.0 * central(h / 2.0) - central(h)) / 3.0
    scale = np.maximum(np.abs(lhs), np.where(lam == 0.0, 1.0, 0.0))
    return np.abs(lhs + deriv) / scale


def identity_defects(cache: OperatorCache, a: SpaceProfile, count: int) -> np.ndarray:
    """``||S(t_k) P a - P a||`` for ``k = 1..count``, with ``P`` the
    projection onto the cached modes."""
    _check_profile(cache, a)
    c = cache.eig.project(a.values)
    k = np.arange(1, count + 1)
    return np.sqrt(np.sum((c[:, None] * (cache.e1[:, k] - 1.0)) ** 2, axis=0))


def growth_rate_fit(cache: OperatorCache, a: SpaceProfile, t_min: float) -> float:
    """Slope of ``log ||S(t) a||`` against ``t`` over ``t >= t_min``; for a
    negative ``lam_1`` it approaches ``|lam_1|^(1/alpha)``."""
    _check_profile(cache, a)
    c = cache.eig.project(a.values)
    t = cache.tgrid.nodes
    sel = t >= t_min
    if np.count_nonzero(sel) < 2:
        raise DomainError("growth fit needs at least two nodes past t_min")
    norms = np.sqrt(np.sum((c[:, None] * cache.e1[:, sel]) ** 2, axis=0))
    return float(np.polyfit(t[sel], np.log(norms), 1)[0])


def _k_conv_modal(cache: OperatorCache, coeffs: np.ndarray) -> np.ndarray:
    # interval averages of the source against exact interval kernel integrals
    nt = coeffs.shape[1]
    fbar = 0.5 * (coeffs[:, :-1] + coeffs[:, 1:])
    kq = cache.kq
    out = np.zeros_like(coeffs)
    for n in range(coeffs.shape[0]):
        out[n, 1:] = np.convolve(fbar[n], kq[n])[: nt - 1]
    return out


def apply_K_convolution(cache: OperatorCache, F: SpaceTimeField) -> SpaceTimeField:
    r""":math:`W(t) = \int_0^t K(t-\tau) F(\tau)\,d\tau` with piecewise-constant
    (interval-averaged) ``F``."""
    if F.sgrid != cache.eig.grid or F.tgrid != cache.tgrid:
        raise ShapeError("source field is not on the cache grids")
    modal = _k_conv_modal(cache, cache.eig.project(F.values))
    return SpaceTimeField(F.sgrid, F.tgrid, cache.eig.synthesize(modal))


# }}}


# {{{ boundary data


def _sigma(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0.0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def cutoff(t, T: float) -> np.ndarray:
    """Smooth step: 1 for ``t <= T``, 0 for ``t >= T + 1``."""
    t = np.asarray(t, dtype=float)
    up = _sigma(T + 1.0 - t)
    down = _sigma(t - T)
    return up / (up + down)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Neumann data ``g`` on ``[0, T]`` and its smooth extension ``G``.

    Beyond ``T`` the extension is ``G = chi * G0`` with ``G0`` the quadratic
    Taylor polynomial of ``g`` at ``T`` (one-sided second-order differences)
    and ``chi`` a smooth cutoff reaching 0 at ``T + 1``.
    """

    g: TimeSeries
    taylor: tuple[float, float, float]

    @property
    def T(self) -> float:
        return self.g.grid.t_end

    @property
    def G(self) -> TimeSeries:
        """``G`` on ``[0, T+1]`` (rounded up to whole steps)."""
        dt = self.g.grid.dt
        extra = math.ceil(1.0 / dt - 1e-9)
        grid = TimeGrid((self.g.grid.steps + extra) * dt, self.g.grid.steps + extra)
        return self.sample(grid)

    def evaluate_extension(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        g0, g1, g2 = self.taylor
        d = t - self.T
        return cutoff(t, self.T) * (g0 + g1 * d + 0.5 * g2 * d * d)

    def sample(self, tgrid: TimeGrid) -> TimeSeries:
        """``G`` at the nodes of ``tgrid``; must share the step of ``g``."""
        if not math.isclose(tgrid.dt, self.g.grid.dt, rel_tol=1e-12):
            raise ShapeError("boundary data can only be sampled with the step of g")
        t = tgrid.nodes
        out = np.zeros(t.size)
        ng = self.g.grid.size
        m = min(ng, t.size)
        out[:m] = self.g.values[:m]
        if t.size > ng:
            out[ng:] = self.evaluate_extension(t[ng:])
        return TimeSeries(tgrid, out)


def extend_boundary_data(g: TimeSeries) -> BoundaryData:
    """Build ``G`` from ``g`` with ``g(0) = 0``."""
    v = g.values
    if abs(v[0]) > 1e-12:
        raise PreconditionError(f"boundary data must vanish at t = 0: got g(0) = {v[0]}")
    if v.size < 4:
        raise ShapeError("need at least 4 samples of g to extend it")
    dt = g.grid.dt
    d1 = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dt)
    d2 = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dt**2
    return BoundaryData(g, (float(v[-1]), float(d1), float(d2)))


# }}}


# {{{ spectral solver


def lift_shape(grid: SpaceGrid) -> SpaceProfile:
    """``q(x) = (x - x_r)^2 / (2 (x_r - x_l))``: ``q'(x_l) = -1``, ``q(x_r) = q'(x_r) = 0``."""
    return SpaceProfile.from_function(
        grid, lambda x: (x - grid.x_right) ** 2 / (2.0 * grid.length)
    )


def power_source(a: SpaceProfile, order: float, tgrid: TimeGrid) -> SpaceTimeField:
    """``J^order a = t^order / Gamma(order + 1) * a(x)`` as a field."""
    tt = tgrid.nodes**order / math.gamma(order + 1.0)
    return SpaceTimeField(a.grid, tgrid, np.outer(a.values, tt))


@dataclass(frozen=True, eq=False)
class LiftedProblem:
    """Homogeneous-Neumann problem for ``W = V + q G``."""

    F_lift: SpaceTimeField
    q: SpaceProfile
    a: SpaceProfile
    G: TimeSeries


@dataclass(frozen=True, eq=False)
class SpectralRun:
    V: SpaceTimeField
    W: SpaceTimeField
    lifted: LiftedProblem
    cache: OperatorCache
    tail_indicator: float = field(default=0.0)

    def modal_W(self) -> np.ndarray:
        return self.cache.eig.project(self.W.values)


def _sample_G(G: Optional[BoundaryData], tgrid: TimeGrid) -> TimeSeries:
    if G is None:
        return TimeSeries(tgrid, np.zeros(tgrid.size))
    return G.sample(tgrid)


def run_spectral(
    p: Potential,
    a: Optional[SpaceProfile],
    G: Optional[BoundaryData],
    extra_source: Optional[SpaceTimeField],
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    alpha: float,
    mode_count: int = 64,
    cache: Optional[OperatorCache] = None,
) -> SpectralRun:
    """Spectral solve of ``d_t^a (V - a) = V_xx - pV + extra`` with
    ``V_x(x_l) = G``, ``V_x(x_r) = 0`` on ``sgrid``."""
    if cache is None:
        cache = build_cache(eigen_neumann(p, sgrid, mode_count), alpha, tgrid)
    elif cache.eig.grid != sgrid or cache.tgrid != tgrid:
        raise ShapeError("cache grids do not match the requested grids")
    if a is None:
        a = SpaceProfile(sgrid, np.zeros(sgrid.size))
    elif a.grid != sgrid:
        raise ShapeError("initial value is not on the space grid")

    Gt = _sample_G(G, tgrid)
    q = lift_shape(sgrid)
    pv = p.on(sgrid).profile.values
    dG = caputo_l1_values(cache.alpha, Gt.values, tgrid.dt) if cache.alpha < 1.0 else np.gradient(Gt.values, tgrid.dt)
    Fl = q.values[:, None] * (dG[None, :] + pv[:, None] * Gt.values[None, :])
    Fl = Fl - Gt.values[None, :] / sgrid.length
    if extra_source is not None:
        if extra_source.sgrid != sgrid or extra_source.tgrid != tgrid:
            raise ShapeError("extra source is not on the solver grids")
        Fl = Fl + extra_source.values
    F_lift = SpaceTimeField(sgrid, tgrid, Fl)

    eig = cache.eig
    modal = _k_conv_modal(cache, eig.project(Fl))
    modal += eig.project(a.values)[:, None] * cache.e1
    W = eig.synthesize(modal)
    V = W - np.outer(q.values, Gt.values)
    lifted = LiftedProblem(F_lift, q, a, Gt)
    return SpectralRun(
        SpaceTimeField(sgrid, tgrid, V),
        SpaceTimeField(sgrid, tgrid, W),
        lifted,
        cache,
        eig.tail_indicator(a),
    )


def solve_ibvp_spectral(
    p: Potential,
    a: Optional[SpaceProfile],
    G: Optional[BoundaryData],
    extra_source: Optional[SpaceTimeField],
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    alpha: float,
    mode_count: int = 64,
) -> SpaceTimeField:
    """``V`` from :func:`run_spectral`."""
    return run_spectral(p, a, G, extra_source, sgrid, tgrid, alpha, mode_count).V


# }}}


# {{{ L1 finite differences


@dataclass(frozen=True)
class BoundaryCondition:
    """``kind`` is ``"neumann"`` (prescribes ``u_x``) or ``"dirichlet"``;
    ``values=None`` means homogeneous data."""

    kind: str = "neumann"
    values: Optional[TimeSeries] = None

    def __post_init__(self) -> None:
        if self.kind not in ("neumann", "dirichlet"):
            raise DomainError(f"unknown boundary condition kind {self.kind!r}")

    def series(self, tgrid: TimeGrid) -> np.ndarray:
        if self.values is None:
            return np.zeros(tgrid.size)
        if self.values.grid != tgrid:
            raise ShapeError("boundary series is not on the time grid")
        return np.asarray(self.values.values)


def _default_exponents(alpha: float) -> tuple[float, ...]:
    # the singular part of the expansion in powers of t^alpha below t^1
    out = []
    k = 1
    while k * alpha < 0.95 and len(out) < 3:
        out.append(k * alpha)
        k += 1
    return tuple(out)


def _banded_to_dense(ab: np.ndarray) -> np.ndarray:
    n = ab.shape[1]
    A = np.diag(ab[1])
    A += np.diag(ab[0, 1:], 1) + np.diag(ab[2, :-1], -1)
    return A


def _coupled_start(ab, c0, b, om, m, u0, dyn, base_rhs) -> np.ndarray:
    """Steps ``1..m`` at once: their corrected equations involve all of
    ``u^1..u^m``."""
    nx = u0.size
    A = _banded_to_dense(ab)
    M = np.zeros((m * nx, m * nx))
    r = np.zeros(m * nx)
    Dg = np.diag(dyn)
    for i in range(m):
        n = i + 1
        rows = slice(i * nx, (i + 1) * nx)
        M[rows, rows] += A
        rhs = base_rhs(n) + dyn * (c0 * u0 * (1.0 if n == 1 else 0.0))
        # L1 history with unknown differences: c0 * sum_k b_k (u^{n-k} - u^{n-k-1})
        for k in range(1, n):
            j = n - k  # difference u^j - u^{j-1}
            M[rows, (j - 1) * nx : j * nx] += c0 * b[k] * Dg
            if j >= 2:
                M[rows, (j - 2) * nx : (j - 1) * nx] -= c0 * b[k] * Dg
            else:
                rhs += dyn * (c0 * b[k] * u0)
        if n >= 2:
            # c0 * (u^n - u^{n-1}): the u^n part sits in A, the u^{n-1} part here
            M[rows, (n - 2) * nx : (n - 1) * nx] -= c0 * Dg
        for jj in range(m):
            M[rows, jj * nx : (jj + 1) * nx] += om[jj, n] * Dg
            rhs += dyn * (om[jj, n] * u0)
        r[rows] = rhs
    try:
        sol = np.linalg.solve(M, r)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"starting system is singular: {exc}") from exc
    return sol.reshape(m, nx)


def solve_ibvp_l1fd(
    p: Potential,
    a: Optional[SpaceProfile],
    left: BoundaryCondition,
    right: BoundaryCondition,
    source: Optional[SpaceTimeField],
    sgrid: SpaceGrid,
    tgrid: TimeGrid,
    alpha: float,
    correction_exponents: Optional[Sequence[float]] = None,
) -> SpaceTimeField:
    """Implicit L1 / three-point scheme for ``d_t^a (u - a) = u_xx - p u + source``.

    Neumann data enter through mirror ghost nodes
    (``u_{-1} = u_1 - 2h u_x(x_l)``); one tridiagonal solve per step.

    Solutions behave like ``a + c t^a + ...`` near ``t = 0``, which limits
    the plain L1 scheme to about first order.  Starting weights for the
    exponents in ``correction_exponents`` (default: the multiples
    ``k alpha < 0.95``, at most three) remove those terms from the error;
    the first few steps are then solved as one coupled system.  Pass ``()``
    for the plain scheme.
    """
    al = _check_order(alpha)
    nx, nt = sgrid.size, tgrid.size
    h, dt = sgrid.dx, tgrid.dt
    pv = p.on(sgrid).profile.values
    u0 = np.zeros(nx) if a is None else np.asarray(a.values, dtype=float)
    if u0.shape != (nx,):
        raise ShapeError("initial value is not on the space grid")
    if source is not None and (source.sgrid != sgrid or source.tgrid != tgrid):
        raise ShapeError("source field is not on the solver grids")
    f = np.zeros((nx, nt)) if source is None else np.asarray(source.values)
    gl = left.series(tgrid)
    gr = right.series(tgrid)

    c0 = dt**-al / math.gamma(2.0 - al)
    b = _l1_coefficients(al, nt)

    ab = np.zeros((3, nx))
    ab[1] = c0 + 2.0 / h**2 + pv
    ab[0, 1:] = -1.0 / h**2
    ab[2, :-1] = -1.0 / h**2
    if left.kind == "neumann":
        ab[0, 1] = -2.0 / h**2
    else:
        ab[1, 0], ab[0, 1] = 1.0, 0.0
    if right.kind == "neumann":
        ab[2, -2] = -2.0 / h**2
    else:
        ab[1, -1], ab[2, -2] = 1.0, 0.0

    exps = _default_exponents(al) if correction_exponents is None else tuple(correction_exponents)
    m = len(exps) + 1 if exps else 0
    if m and nt < m + 2:
        m, exps = 0, ()
    om = _l1_starting_weights(al, nt, exps) * dt**-al if m else None

    # interior rows only: boundary rows of Dirichlet type carry no dynamics
    dyn = np.ones(nx)
    if left.kind == "dirichlet":
        dyn[0] = 0.0
    if right.kind == "dirichlet":
        dyn[-1] = 0.0

    def base_rhs(n: int) -> np.ndarray:
        rhs = f[:, n].copy()
        if left.kind == "neumann":
            rhs[0] -= 2.0 * gl[n] / h
        else:
            rhs[0] = gl[n]
        if right.kind == "neumann":
            rhs[-1] += 2.0 * gr[n] / h
        else:
            rhs[-1] = gr[n]
        return rhs

    U = np.empty((nt, nx))
    U[0] = u0
    D = np.empty((nt - 1, nx))
    start = 1
    if m:
        U[1 : m + 1] = _coupled_start(ab, c0, b, om, m, U[0], dyn, base_rhs)
        D[:m] = np.diff(U[: m + 1], axis=0)
        start = m + 1
    for n in range(start, nt):
        rhs = base_rhs(n) + dyn * (c0 * U[n - 1])
        if n > 1:
            rhs -= dyn * (c0 * (b[n - 1 : 0 : -1] @ D[: n - 1]))
        if m:
            rhs -= dyn * (om[:, n] @ (U[1 : m + 1] - U[0]))
        try:
            U[n] = solve_banded((1, 1), ab, rhs, check_finite=False)
        except (LinAlgError, ValueError) as exc:
            raise SolverError(f"tridiagonal solve failed at step {n}: {exc}") from exc
        D[n - 1] = U[n] - U[n - 1]
    if not np.all(np.isfinite(U)):
        raise SolverError("non-finite values in the finite-difference solution")
    return SpaceTimeField(sgrid, tgrid, U.T)


# }}}
