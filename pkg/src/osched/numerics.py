"""
Numerical building blocks: principal-branch Lambert W, binomial PMF,
adaptive Gauss-Kronrod quadrature on finite and semi-infinite ranges, and a
brute-force grid maximiser used to cross-check closed-form optima.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from osched.errors import DomainError, InvalidParameterError, NumericFailureError

# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------

LAMBERT_TOL = 1e-12
LAMBERT_MAX_ITER = 50


def lambert_w0(x):
    """Principal branch of the Lambert W function for non-negative arguments.

    Solves ``w * exp(w) = x`` by Halley iteration started from ``log(1 + x)``
    (or ``log(x) - log(log(x))`` once ``x >= e``).

    Parameters
    ----------
    x : float or array_like
        Non-negative argument(s).

    Returns
    -------
    float or ndarray
        ``w >= 0`` with ``w * exp(w) == x``.

    Raises
    ------
    DomainError
        If any argument is negative or NaN.
    NumericFailureError
        If Halley iteration fails to settle within 50 steps.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr >= 0)):
        raise DomainError(f"lambert_w0 is implemented for x >= 0 only, got {x!r}")
    scalar = x_arr.ndim == 0
    xs = np.atleast_1d(x_arr).astype(float)

    w = np.log1p(xs)
    big = xs >= math.e
    if np.any(big):
        lx = np.log(xs[big])
        w[big] = lx - np.log(lx)
    w[np.isinf(xs)] = np.inf

    active = np.isfinite(xs) & (xs > 0)
    w[xs == 0] = 0.0
    for _ in range(LAMBERT_MAX_ITER):
        if not np.any(active):
            break
        wa = w[active]
        ew = np.exp(wa)
        f = wa * ew - xs[active]
        wp1 = wa + 1.0
        step = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        w[active] = wa - step
        done = np.abs(step) <= LAMBERT_TOL * (1.0 + np.abs(w[active]))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if np.any(active):
            bad = xs[active][0]
            raise NumericFailureError(f"lambert_w0 did not converge at x={bad!r}", estimate=w[active][0])

    return float(w[0]) if scalar else w.reshape(x_arr.shape)


# ---------------------------------------------------------------------------
# Binomial PMF
# ---------------------------------------------------------------------------


def binomial_pmf(n: int, m, p):
    """Probability of exactly ``m`` successes in ``n`` Bernoulli(``p``) trials.

    Evaluated in log space so that ``n`` in the thousands neither overflows
    the binomial coefficient nor underflows the powers prematurely. ``m``
    and ``p`` may be arrays; they broadcast against each other.
    """
    if int(n) != n or n < 0:
        raise InvalidParameterError(f"n must be a non-negative integer, got {n!r}")
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr >= 0.0) & (p_arr <= 1.0))):
        raise InvalidParameterError(f"p must lie in [0, 1], got {p!r}")
    m_arr = np.asarray(m)
    if np.any(m_arr != np.floor(m_arr)) or np.any(m_arr < 0) or np.any(m_arr > n):
        raise InvalidParameterError(f"m must be an integer in [0, {n}], got {m!r}")
    m_arr = m_arr.astype(float)
    log_pmf = (
        gammaln(n + 1.0)
        - gammaln(m_arr + 1.0)
        - gammaln(n - m_arr + 1.0)
        + xlogy(m_arr, p_arr)
        + xlog1py(n - m_arr, -p_arr)
    )
    out = np.exp(log_pmf)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

# 15-point Kronrod abscissae (non-negative half) and weights, with the
# embedded 7-point Gauss weights for the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[[9, 11, 13]] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureSpec:
    """Stopping rule for the adaptive quadrature.

    Subdivision stops once the summed error estimate is below
    ``max(abs_tol, rel_tol * |estimate|)``.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise InvalidParameterError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()


def _gk15(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    vals = np.asarray(f(mid + half * _NODES), dtype=float)
    if vals.shape != _NODES.shape:
        vals = np.broadcast_to(vals, _NODES.shape)
    if not np.all(np.isfinite(vals)):
        bad = (mid + half * _NODES)[~np.isfinite(vals)][0]
        raise NumericFailureError(f"integrand is not finite at {bad!r}")
    kronrod = half * float(_KRONROD_W @ vals)
    gauss = half * float(_GAUSS_W @ vals)
    # QUADPACK-style error scaling
    resasc = half * float(_KRONROD_W @ np.abs(vals - kronrod / (2 * half if half else 1.0)))
    err = abs(kronrod - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return kronrod, err


def integrate_interval(f: Callable, lo: float, hi: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integrate a vectorised ``f`` over the finite interval ``[lo, hi]``.

    Globally adaptive: the subinterval with the largest error estimate is
    bisected until the total estimated error meets ``spec``.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidParameterError("integrate_interval needs finite limits")
    if hi == lo:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0

    est, err = _gk15(f, lo, hi)
    heap = [(-err, lo, hi, est)]
    total, total_err = est, err
    n_sub = 1
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n_sub >= spec.max_subdivisions:
            raise NumericFailureError(
                f"quadrature did not reach tolerance in {spec.max_subdivisions} subdivisions "
                f"(estimate {sign * total!r}, error {total_err:.3g})",
                estimate=sign * total,
            )
        neg_err, a, b, val = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not (a < m < b):
            raise NumericFailureError("quadrature subinterval collapsed below float resolution",
                                      estimate=sign * total)
        left, lerr = _gk15(f, a, m)
        right, rerr = _gk15(f, m, b)
        total += left + right - val
        total_err += lerr + rerr + neg_err
        heapq.heappush(heap, (-lerr, a, m, left))
        heapq.heappush(heap, (-rerr, m, b, right))
        n_sub += 1
    # re-sum to shed accumulated cancellation in the running total
    return sign * math.fsum(item[3] for item in heap)


def integrate_semi_infinite(f: Callable, a: float, spec: QuadratureSpec = DEFAULT_QUAD,
                            scale: float = 1.0) -> float:
    """Integrate a vectorised, eventually decaying ``f`` over ``[a, inf)``.

    Uses the map ``x = a + scale * t / (1 - t)`` onto ``t in [0, 1)`` and
    then the adaptive rule of :func:`integrate_interval`. ``scale`` should
    be of the order of the integrand's decay length.
    """
    if not math.isfinite(a):
        raise InvalidParameterError("lower limit must be finite")
    if not scale > 0:
        raise InvalidParameterError("scale must be positive")

    def mapped(t):
        one_minus = 1.0 - t
        x = a + scale * t / one_minus
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(f(x), dtype=float) * (scale / (one_minus * one_minus))
        return vals

    return integrate_interval(mapped, 0.0, 1.0, spec)


# ---------------------------------------------------------------------------
# Grid search oracle
# ---------------------------------------------------------------------------


def grid_argmax(f: Callable, lo: float, hi: float, step: float = 1e-6) -> Tuple[float, float]:
    """Largest value of ``f`` on the grid ``lo, lo + step, ...`` up to ``hi``.

    ``f`` is called once on the whole grid, so it must accept numpy arrays.
    Ties resolve to the smallest grid point.
    """
    if not lo < hi:
        raise InvalidParameterError(f"need lo < hi, got [{lo}, {hi}]")
    if not step > 0:
        raise InvalidParameterError(f"step must be positive, got {step}")
    n = int(math.floor((hi - lo) / step * (1 + 1e-12))) + 1
    grid = lo + step * np.arange(n)
    vals = np.asarray(f(grid), dtype=float)
    if vals.shape != grid.shape:
        vals = np.broadcast_to(vals, grid.shape)
    finite = np.isfinite(vals)
    if not np.all(finite):
        bad = grid[~finite][0]
        raise NumericFailureError(f"objective is not finite at x={bad!r}")
    i = int(np.argmax(vals))
    return float(grid[i]), float(vals[i])
