r"""Two-parameter Mittag-Leffler function on the real axis.

.. math::

    E_{\alpha,\beta}(x) = \sum_{k\ge0} \frac{x^k}{\Gamma(\alpha k + \beta)}

Three regimes are combined:

* power series (summed with :func:`math.fsum`) for small ``|x|`` and for all
  admissible positive ``x``;
* the Bromwich inversion of :math:`s^{\alpha-\beta}/(s^\alpha - x)` along a
  Weideman-Trefethen parabola for the intermediate band of negative ``x``;
* the algebraic asymptotic series
  :math:`-\sum_{k\ge1} x^{-k}/\Gamma(\beta-\alpha k)` for large negative ``x``,
  used only where its optimal truncation error is below double precision
  (otherwise the contour is used there too).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, rgamma

from .errors import AccuracyWarning, DomainError

__all__ = ["MLQuery", "mittag_leffler", "ml_kernel_pair"]

X_MAX = 10.0
#: largest |x| on the negative axis where the power series is cancellation-safe
NEG_SERIES_MAX = 1.0

_N_CONTOUR = 32
_N_CHECK = 26
_EPS = np.finfo(float).eps
_WARN_REL = 1e-9


@dataclass(frozen=True)
class MLQuery:
    alpha: float
    beta: float
    x: float

    def __post_init__(self) -> None:
        _check_params(self.alpha, self.beta)

    def evaluate(self) -> float:
        return float(mittag_leffler(self.alpha, self.beta, self.x))


def _check_params(alpha: float, beta: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1]: got {alpha}")
    if not beta > 0.0:
        raise DomainError(f"beta must be positive: got {beta}")


# {{{ regimes


def _series(alpha: float, beta: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    out = np.empty_like(x)
    err = np.zeros_like(x)
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    if xmax == 0.0:
        out[:] = rgamma(beta)
        return out, err

    # number of terms from the worst argument: stop once terms fall below
    # eps relative to the largest term
    kk = np.arange(0, 20000, dtype=float)
    logm = kk * math.log(xmax) - gammaln(alpha * kk + beta)
    peak = np.argmax(logm)
    below = np.nonzero(logm[peak:] < logm[peak] + math.log(_EPS) - 6.0)[0]
    nterms = int(peak + below[0]) + 1 if below.size else kk.size
    k = kk[:nterms]
    lg = gammaln(alpha * k + beta)

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for i, xi in enumerate(x):
            if xi == 0.0:
                out[i] = rgamma(beta)
                continue
            mag = np.exp(k * math.log(abs(xi)) - lg)
            terms = mag if xi > 0 else mag * np.where(k % 2 == 0, 1.0, -1.0)
            if not np.all(np.isfinite(terms)):
                out[i] = np.inf
                err[i] = np.inf
                continue
            out[i] = math.fsum(terms)
            err[i] = _EPS * float(np.max(mag))
    return out, err


def _contour_sum(alpha: float, beta: float, x: np.ndarray, n: int) -> np.ndarray:
    # E_{a,b}(x) = (1/2 pi i) int e^s s^{a-b} / (s^a - x) ds on a parabolic
    # contour, midpoint rule in the contour parameter; the integrand is
    # conjugate-antisymmetric so only the upper half is summed
    th = (np.arange(n // 2) + 0.5) * (2.0 * np.pi / n)
    s = n * (0.1309 - 0.1194 * th**2 + 0.25j * th)
    ds = n * (-0.2388 * th + 0.25j)
    w = np.exp(s) * s ** (alpha - beta) * ds
    g = w[None, :] / (s[None, :] ** alpha - x[:, None])
    return (2.0 / n) * g.sum(axis=1).imag


def _contour(alpha: float, beta: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = _contour_sum(alpha, beta, x, _N_CONTOUR)
    check = _contour_sum(alpha, beta, x, _N_CHECK)
    # the coarse rule overestimates the error of the fine one
    err = np.minimum(np.abs(v - check), 1e3 * _EPS * np.maximum(np.abs(v), 1.0))
    return v, err


def _asymptotic(
    alpha: float, beta: float, x: np.ndarray, kmax: int = 120
) -> tuple[np.ndarray, np.ndarray]:
    ax = np.abs(x)
    logx = np.log(ax)[:, None]
    k = np.arange(1, kmax + 1, dtype=float)
    y = beta - alpha * k
    c = rgamma(y)
    # envelope of |1/Gamma(y)|: near-pole values of rgamma would fake a
    # small remainder, so the truncation point is chosen from the envelope
    with np.errstate(divide="ignore"):
        log_env = np.where(y <= 0.0, gammaln(1.0 - y) - math.log(math.pi), np.log(np.abs(c)))
    log_mag = log_env[None, :] - k[None, :] * logx
    log_mag[:, 0] = np.inf
    cut = np.argmin(log_mag, axis=1)
    err = np.exp(log_mag[np.arange(x.size), cut])

    # the series misses contributions of size exp(|x|^(1/a) cos(pi/a)) coming
    # from the poles of the Laplace symbol on the neighbouring sheets
    r = ax ** (1.0 / alpha)
    decay = min(math.cos(math.pi / alpha), 0.0)
    with np.errstate(over="ignore"):
        err = err + np.exp(r * decay) * r ** (1.0 - beta) / alpha

    with np.errstate(over="ignore", under="ignore"):
        terms = -c[None, :] * np.exp(-k[None, :] * logx) * np.sign(x)[:, None] ** k[None, :]
    keep = np.arange(kmax)[None, :] < cut[:, None]
    out = np.array([math.fsum(row) for row in np.where(keep, terms, 0.0)])
    return out, err


# }}}


def mittag_leffler(
    alpha: float,
    beta: float,
    x,
    *,
    x_lo: float = 5.0,
    x_hi: float = 12.0,
    return_error: bool = False,
    warn: bool = True,
):
    r"""Evaluate :math:`E_{\alpha,\beta}(x)` for real ``x <= 10``.

    :arg x_lo: largest ``|x|`` handled by the power series on the negative
        axis (further capped by :data:`NEG_SERIES_MAX` to avoid cancellation).
    :arg x_hi: smallest ``|x|`` where the asymptotic series is attempted.
    :arg return_error: also return a pointwise absolute error estimate.

    Emits :class:`~tfdinv.errors.AccuracyWarning` when the contour regime
    cannot certify a relative accuracy of about ``1e-9``.
    """
    _check_params(alpha, beta)
    if not 0.0 < x_lo <= x_hi:
        raise DomainError(f"need 0 < x_lo <= x_hi: got {x_lo}, {x_hi}")

    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).ravel()
    if np.any(~np.isfinite(xa)):
        raise DomainError("arguments must be finite")
    if np.any(xa > X_MAX):
        raise DomainError(f"positive arguments are supported only up to x = {X_MAX}")

    out = np.empty_like(xa)
    err = np.zeros_like(xa)

    if alpha == 1.0 and beta in (1.0, 2.0):
        if beta == 1.0:
            out[:] = np.exp(xa)
        else:
            nz = xa != 0.0
            out[:] = 1.0
            out[nz] = np.expm1(xa[nz]) / xa[nz]
        err[:] = _EPS * np.abs(out)
    else:
        neg_cut = min(x_lo, NEG_SERIES_MAX)
        series = xa >= -neg_cut
        rest = ~series
        if np.any(series):
            out[series], err[series] = _series(alpha, beta, xa[series])

        contour = rest & (xa > -x_hi)
        far = rest & ~contour
        if np.any(far) and alpha < 1.0:
            idx = np.nonzero(far)[0]
            v, e = _asymptotic(alpha, beta, xa[idx])
            ok = e <= 4.0 * _EPS * np.abs(v)
            out[idx[ok]], err[idx[ok]] = v[ok], e[ok]
            contour[idx[~ok]] = True
        elif np.any(far):
            contour |= far
        if np.any(contour):
            out[contour], err[contour] = _contour(alpha, beta, xa[contour])

        if warn:
            bad = err > _WARN_REL * np.maximum(np.abs(out), 1e-4)
            if np.any(bad):
                worst = float(np.max(err[bad]))
                warnings.warn(
                    AccuracyWarning(
                        f"E_({alpha},{beta}) accuracy not reached at {int(bad.sum())} "
                        f"argument(s); worst error estimate {worst:.2e}",
                        worst,
                    ),
                    stacklevel=2,
                )

    if scalar:
        return (out[0], err[0]) if return_error else out[0]
    shape = np.shape(x)
    return (out.reshape(shape), err.reshape(shape)) if return_error else out.reshape(shape)


def ml_kernel_pair(alpha, lam, t):
    r"""Modal factors of the solution operators.

    Returns ``e1 = E_{a,1}(-lam t^a)`` and ``k = t^(a-1) E_{a,a}(-lam t^a)``;
    they satisfy ``d/dt e1 = -lam * k``.  ``lam`` and ``t`` broadcast.
    """
    a = float(alpha)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("kernel pair needs t > 0")
    arg = -np.asarray(lam, dtype=float) * t**a
    arg, t = np.broadcast_arrays(arg, t)
    e1 = mittag_leffler(a, 1.0, arg)
    k = t ** (a - 1.0) * mittag_leffler(a, a, arg)
    return e1, k
