r"""Riemann-Liouville integrals, the L1 Caputo derivative and the
Sobolev-Slobodecki norm on uniform time grids.

.. math::

    J^\beta w(t) = \frac{1}{\Gamma(\beta)} \int_0^t (t-\tau)^{\beta-1} w(\tau)\,d\tau

Both operators use product integration: ``w`` is replaced by its piecewise
linear interpolant and the weakly singular kernel is integrated exactly.
The array-level functions (``*_values``) act along the last axis so the
solvers can apply them to whole fields at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gamma

from .errors import DegenerateInputError, DomainError, PreconditionError
from .grids import FractionalOrder, TimeGrid, TimeSeries, as_alpha

__all__ = [
    "FracOperatorSpec",
    "caputo_l1",
    "caputo_l1_values",
    "norm_equivalence_ratio",
    "rl_integral",
    "rl_integral_values",
    "sobolev_slobodecki_norm",
]


@dataclass(frozen=True)
class FracOperatorSpec:
    """An integral ``J^order`` or, when ``derivative`` is set, ``d_t^order``."""

    order: float
    grid: TimeGrid
    derivative: bool = False

    def __post_init__(self) -> None:
        if self.derivative:
            as_alpha(self.order)
        elif not self.order > 0.0:
            raise DomainError(f"integral order must be positive: got {self.order}")

    def apply(self, w: TimeSeries) -> TimeSeries:
        if w.grid != self.grid:
            raise DomainError("series is not sampled on the operator grid")
        if self.derivative:
            return caputo_l1(self.order, w)
        return rl_integral(self.order, w)


def _causal_conv(kernel: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``out[..., n] = sum_{j<=n} kernel[n-j] * values[..., j]``."""
    n = values.shape[-1]
    if values.ndim == 1:
        return np.convolve(kernel[:n], values)[:n]
    flat = values.reshape(-1, n)
    out = np.array([np.convolve(kernel[:n], row)[:n] for row in flat])
    return out.reshape(values.shape)


# {{{ Riemann-Liouville integral


def _rl_unit(beta: float, values: np.ndarray) -> np.ndarray:
    # product trapezoid with dt = 1
    v = np.asarray(values)
    nt = v.shape[-1]
    b1 = beta + 1.0
    m = np.arange(nt, dtype=float)

    # interior weights depend only on the lag m = n - j
    kern = np.empty(nt)
    kern[0] = 1.0
    kern[1:] = (m[1:] + 1.0) ** b1 - 2.0 * m[1:] ** b1 + (m[1:] - 1.0) ** b1

    out = _causal_conv(kern, v)
    # the j = 0 weight differs from the interior pattern
    first = np.zeros(nt)
    first[1:] = (m[1:] - 1.0) ** b1 - (m[1:] - 1.0 - beta) * m[1:] ** beta - kern[1:]
    out = out + first * v[..., :1]
    out[..., 0] = 0.0
    return out / math.gamma(beta + 2.0)


def rl_integral_values(
    beta: float,
    values: np.ndarray,
    dt: float,
    correction_exponents: Sequence[float] = (),
) -> np.ndarray:
    """Product-trapezoid ``J^beta`` of samples on a uniform grid (last axis).

    :arg correction_exponents: exponents ``s`` of singular terms ``t**s``
        expected in the samples; adds starting weights that make the rule
        exact on them.
    """
    if not beta > 0.0:
        raise DomainError(f"integral order must be positive: got {beta}")
    v = np.asarray(values)
    out = _rl_unit(beta, v)
    if correction_exponents:
        m = len(correction_exponents) + 1
        if v.shape[-1] < m + 1:
            raise DomainError(f"corrected rule needs at least {m + 1} nodes")
        om = _starting_weights(
            lambda w: _rl_unit(beta, w),
            lambda s, n: gamma(s + 1.0) / gamma(s + 1.0 + beta) * n ** (s + beta),
            v.shape[-1],
            correction_exponents,
        )
        out = out + (v[..., 1 : m + 1] - v[..., :1]) @ om
        out[..., 0] = 0.0
    return out * dt**beta


def rl_integral(beta: float, w: TimeSeries, correction_exponents: Sequence[float] = ()) -> TimeSeries:
    """``J^beta w`` at every node of the grid of ``w``; the value at 0 is 0."""
    return TimeSeries(w.grid, rl_integral_values(beta, w.values, w.grid.dt, correction_exponents))


# }}}


# {{{ Caputo derivative


def _l1_coefficients(alpha: float, nt: int) -> np.ndarray:
    k = np.arange(nt, dtype=float)
    return (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)


def _l1_unit(alpha: float, values: np.ndarray) -> np.ndarray:
    # L1 scheme with dt = 1
    v = np.asarray(values)
    nt = v.shape[-1]
    d = np.diff(v, axis=-1)
    out = np.zeros(v.shape, dtype=np.result_type(v, float))
    out[..., 1:] = _causal_conv(_l1_coefficients(alpha, nt - 1), d)
    return out / math.gamma(2.0 - alpha)


def _starting_weights(unit_op, exact_op, nt: int, exponents: Sequence[float]) -> np.ndarray:
    """Lubich-type correction weights, shape ``(len(exponents) + 1, nt)``.

    Chosen so that the corrected rule ``unit_op`` (grid spacing 1) is exact
    on ``t**s`` for ``s`` in ``{1} | exponents``; ``exact_op(s, n)`` is the
    exact image of ``t**s`` at the nodes ``n``.  Both base rules are already
    exact for ``s = 1``.
    """
    exps = [1.0, *(float(s) for s in exponents)]
    if any(s <= 0.0 for s in exps) or min(np.diff(sorted(exps)), default=1.0) < 1e-8:
        raise DomainError(f"correction exponents must be positive, distinct and not 1: got {tuple(exponents)}")
    m = len(exps)
    j = np.arange(1, m + 1, dtype=float)
    A = np.array([j**s for s in exps])
    n = np.arange(nt, dtype=float)
    R = np.empty((m, nt))
    for i, s in enumerate(exps):
        R[i] = exact_op(s, n) - unit_op(n**s)
    R[:, 0] = 0.0
    return np.linalg.solve(A, R)


def _l1_starting_weights(alpha: float, nt: int, exponents: Sequence[float]) -> np.ndarray:
    return _starting_weights(
        lambda w: _l1_unit(alpha, w),
        lambda s, n: gamma(s + 1.0) / gamma(s + 1.0 - alpha) * n ** (s - alpha),
        nt,
        exponents,
    )


def caputo_l1_values(
    alpha: float,
    values: np.ndarray,
    dt: float,
    correction_exponents: Sequence[float] = (),
) -> np.ndarray:
    """L1 approximation of ``d_t^alpha (w - w(0))`` along the last axis.

    :arg correction_exponents: optional exponents ``s`` of singular terms
        ``t**s`` expected in ``w``; adds starting weights that make the scheme
        exact on them.  Needs at least ``len + 2`` nodes.
    """
    a = as_alpha(alpha)
    v = np.asarray(values)
    nt = v.shape[-1]
    out = _l1_unit(a, v)
    if correction_exponents:
        m = len(correction_exponents) + 1
        if nt < m + 1:
            raise DomainError(f"corrected L1 scheme needs at least {m + 1} nodes")
        om = _l1_starting_weights(a, nt, correction_exponents)
        jumps = v[..., 1 : m + 1] - v[..., :1]
        out = out + jumps @ om
    out[..., 0] = 0.0
    return out * dt**-a


def caputo_l1(
    alpha: FractionalOrder | float,
    w: TimeSeries,
    correction_exponents: Sequence[float] = (),
) -> TimeSeries:
    """L1 Caputo derivative of ``w - w(0)``; the node-0 value is defined as 0."""
    vals = caputo_l1_values(float(alpha), w.values, w.grid.dt, correction_exponents)
    return TimeSeries(w.grid, vals)


# }}}


# {{{ norms


def _hat_moments(p: float, h: float, nt: int) -> np.ndarray:
    """Exact ``int_0^T r**p * hat_m(r) dr`` for the piecewise-linear hats on
    the nodes ``r_m = m h``, ``p > -1``."""
    m = np.arange(nt, dtype=float)
    q1, q2 = p + 1.0, p + 2.0
    # I1[m] = int_{r_m}^{r_m+1} r^p dr / h**q1, I2 likewise with weight r / h
    I1 = ((m[1:]) ** q1 - m[:-1] ** q1) / q1
    I2 = ((m[1:]) ** q2 - m[:-1] ** q2) / q2
    # on [r_m, r_{m+1}]: hat_m = (m+1) - r/h, hat_{m+1} = r/h - m
    left = m[1:] * I1 - I2
    right = I2 - m[:-1] * I1
    mom = np.zeros(nt)
    mom[:-1] += left
    mom[1:] += right
    return mom * h**q1


def sobolev_slobodecki_norm(alpha: FractionalOrder | float, w: TimeSeries) -> float:
    r"""Discrete :math:`H^\alpha(0,T)` norm.

    .. math::

        \|w\|^2 = \|w\|_{L^2}^2
            + \int_0^T\!\!\int_0^T \frac{|w(t)-w(\tau)|^2}{|t-\tau|^{1+2\alpha}}
            \,dt\,d\tau \;\left(+ \int_0^T \frac{|w(t)|^2}{t}\,dt
            \text{ at } \alpha = 1/2\right)

    The double integral is rewritten over lags ``r``: with
    ``D(r) = int |w(tau + r) - w(tau)|^2 dtau`` the ratio ``D(r)/r^2`` is
    smooth, so it is interpolated linearly (its ``r -> 0`` limit is the
    squared slope sum of the interpolant) and integrated exactly against
    ``r^{1-2 alpha}``.
    """
    a = as_alpha(alpha)
    v = np.asarray(w.values)
    nt = v.size
    h = w.grid.dt
    if nt < 2:
        return float(np.sqrt(np.sum(np.abs(v) ** 2) * h))

    # exact L2 norm of the piecewise-linear interpolant
    l, r = v[:-1], v[1:]
    l2 = float(np.sum(np.abs(l) ** 2 + (l * np.conj(r)).real + np.abs(r) ** 2) * h / 3.0)

    g = np.zeros(nt)
    slopes = np.diff(v) / h
    g[0] = float(np.sum(np.abs(slopes) ** 2) * h)
    for m in range(1, nt - 1):
        d = np.abs(v[m:] - v[:-m]) ** 2
        Dm = h * (d.sum() - 0.5 * (d[0] + d[-1])) if d.size > 1 else 0.0
        g[m] = Dm / (m * h) ** 2
    # D(T) = 0: no overlap left at the largest lag
    double = 2.0 * float(g @ _hat_moments(1.0 - 2.0 * a, h, nt))

    total = l2 + double
    if abs(a - 0.5) < 1e-12:
        total += _hardy_term(v, h)
    return math.sqrt(total)


def _hardy_term(v: np.ndarray, h: float) -> float:
    if v[0] != 0.0:
        return math.inf
    s = abs(v[1]) / h
    first = 0.5 * s**2 * h**2
    t = np.arange(1, v.size) * h
    q = np.abs(v[1:]) ** 2 / t
    rest = h * (q.sum() - 0.5 * (q[0] + q[-1])) if q.size > 1 else 0.0
    return first + rest


def norm_equivalence_ratio(alpha: FractionalOrder | float, w: TimeSeries) -> float:
    """``||d_t^alpha w||_L2 / ||w||_{H^alpha}`` for ``w`` with ``w(0) = 0``."""
    a = as_alpha(alpha)
    v = np.asarray(w.values)
    if v[0] != 0.0:
        raise PreconditionError(f"w(0) must vanish: got {v[0]}")
    if not np.any(v != 0.0):
        raise DegenerateInputError("ratio is undefined for the zero function")
    d = caputo_l1(a, w).values
    h = w.grid.dt
    num = math.sqrt(h * (np.sum(d**2) - 0.5 * (d[0] ** 2 + d[-1] ** 2)))
    return num / sobolev_slobodecki_norm(a, w)


# }}}
