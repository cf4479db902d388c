"""
Expected throughput of each scheduler, the lower bound on the threshold
scheduler's rate, and its closed-form maximiser.

All expectations are written in the rate domain: for a non-negative rate
``R``, ``E[R] = int_0^inf P(R > r) dr``, and ``P(log2(1 + X) > r)`` is the
SNR survivor evaluated at ``2**r - 1``. Integrals are evaluated with the
adaptive rules in :mod:`osched.numerics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from osched.channel import AvgSnr, SnrLike, as_linear, quantile
from osched.errors import InvalidParameterError
from osched.numerics import (
    DEFAULT_QUAD,
    QuadratureSpec,
    binomial_pmf,
    integrate_interval,
    integrate_semi_infinite,
    lambert_w0,
)
from osched.schedulers import MEDIAN_USER, MULTICAST, THRESHOLD, UNICAST, Policy

_LN2 = math.log(2.0)


def _check_n(n_users):
    if int(n_users) != n_users or n_users < 1:
        raise InvalidParameterError(f"n_users must be a positive integer, got {n_users!r}")
    return int(n_users)


def _check_p(p, upper_open=True):
    ok = 0.0 <= p < 1.0 if upper_open else 0.0 <= p <= 1.0
    if not ok:
        raise InvalidParameterError(f"threshold probability must lie in [0, 1), got {p!r}")
    return float(p)


def _snr_excess(r, base=0.0):
    """``2**r - 1 - base`` without losing digits near ``r = 0``."""
    with np.errstate(over="ignore"):
        return np.expm1(np.asarray(r, dtype=float) * _LN2) - base


def _rate_scale(g):
    # decay length of the rate-domain integrands
    return max(math.log2(1.0 + g), 1e-3)


# ---------------------------------------------------------------------------
# Lower bound and its optimum
# ---------------------------------------------------------------------------


def lower_bound_rate(p, gbar: SnrLike):
    """Guaranteed average rate ``(1 - p) * log2(1 + gamma_th)`` of a threshold scheduler.

    ``gamma_th = -ln(1 - p) * gbar`` is the ``p``-quantile threshold. Accepts
    an array of ``p`` for grid evaluation.
    """
    g = as_linear(gbar)
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0)) or np.any(p_arr >= 1):
        raise InvalidParameterError(f"p must lie in [0, 1), got {p!r}")
    out = (1.0 - p_arr) * np.log1p(-np.log1p(-p_arr) * g) / _LN2
    return float(out) if out.ndim == 0 else out


def optimal_p(gbar: SnrLike) -> float:
    """Threshold quantile that maximises :func:`lower_bound_rate`.

    Setting the derivative to zero gives ``t ln t = gbar`` with
    ``t = 1 - gbar ln(1 - p)``, so ``ln t = W(gbar)`` and

        p* = 1 - exp((1 - e^W(gbar)) / gbar) = -expm1(-expm1(W(gbar)) / gbar)

    The last form stays accurate as ``gbar -> 0`` where ``p* -> 1 - 1/e``.
    """
    g = as_linear(gbar)
    w = lambert_w0(g)
    return float(-np.expm1(-np.expm1(w) / g))


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def exp_log_rate(mean: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E[log2(1 + X)]`` for ``X`` exponential with the given mean."""
    m = as_linear(mean)

    def surv(r):
        return np.exp(-_snr_excess(r) / m)

    return integrate_semi_infinite(surv, 0.0, spec, scale=_rate_scale(m))


def _fallback_mean_rate(n: int, p: float, g: float, spec: QuadratureSpec) -> float:
    """``E[log2(1 + max gamma) | every gamma < gamma_th]``.

    Conditioned on all users missing the threshold, the best SNR has CDF
    ``((1 - exp(-x / g)) / p)**n`` on ``[0, gamma_th]``.
    """
    r_th = math.log2(1.0 + quantile(p, g))

    def surv(r):
        cdf_one = -np.expm1(-_snr_excess(r) / g) / p
        return 1.0 - np.clip(cdf_one, 0.0, 1.0) ** n

    return integrate_interval(surv, 0.0, r_th, spec)


def _threshold_moments(n: int, p: float, g: float, spec: QuadratureSpec):
    """Mean transmit rate and mean goodput of the threshold rule."""
    gamma_th = quantile(p, g)
    r_th = math.log2(1.0 + gamma_th)
    m = np.arange(1, n + 1)
    # number of users passing is Binomial(n, 1 - p)
    pm = binomial_pmf(n, m, 1.0 - p)
    p_none = binomial_pmf(n, 0, 1.0 - p)
    keep = pm > 0
    m, pm = m[keep], pm[keep]

    def conditional_survivor(s):
        # per-user survivor above the threshold, rate offset s >= 0 from r_th
        r = r_th + np.asarray(s, dtype=float)
        return np.exp(-_snr_excess(r, gamma_th) / g)

    def weighted(weights):
        def integrand(s):
            sv = np.clip(conditional_survivor(s), 0.0, 1.0)
            return np.power(sv[..., None], m) @ weights

        return integrate_semi_infinite(integrand, 0.0, spec, scale=_rate_scale(g))

    tx = math.fsum(pm) * r_th + weighted(pm)
    goodput = math.fsum(pm * m) * r_th + weighted(pm * m)
    if p_none > 0:
        fb = p_none * _fallback_mean_rate(n, p, g, spec)
        tx += fb
        goodput += fb
    return tx, goodput


# ---------------------------------------------------------------------------
# Per-policy expectations
# ---------------------------------------------------------------------------


def threshold_avg_tx_rate(n_users: int, p: float, gbar: SnrLike,
                          spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Expected per-slot transmit rate of the threshold scheduler.

    With ``m`` of ``n`` users passing (``m ~ Binomial(n, 1 - p)``), the rate is
    that of the weakest passing user, whose rate survivor above
    ``R_th = log2(1 + gamma_th)`` is ``S(r)**m`` with
    ``S(r) = exp(-(2**r - 1) / gbar) / (1 - p)``. When nobody passes the best
    user is served, which contributes the ``m = 0`` term.
    """
    n = _check_n(n_users)
    p = _check_p(p)
    return _threshold_moments(n, p, as_linear(gbar), spec)[0]


def threshold_avg_goodput(n_users: int, p: float, gbar: SnrLike,
                          spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Expected goodput (served users x transmit rate) of the threshold scheduler."""
    n = _check_n(n_users)
    p = _check_p(p)
    return _threshold_moments(n, p, as_linear(gbar), spec)[1]


def unicast_avg_rate(n_users: int, gbar: SnrLike, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E[log2(1 + max of n exponentials)]``."""
    n = _check_n(n_users)
    g = as_linear(gbar)

    def surv(r):
        # 1 - (1 - e^{-x/g})^n, via log1p to keep the tail
        q = np.exp(-_snr_excess(r) / g)
        return -np.expm1(n * np.log1p(-np.minimum(q, 1.0 - 1e-300)))

    scale = _rate_scale(g * (1.0 + math.log(n)))
    return integrate_semi_infinite(surv, 0.0, spec, scale=scale)


def multicast_avg_goodput(n_users: int, gbar: SnrLike, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``n * E[log2(1 + min gamma)]``; the minimum is exponential with mean ``gbar / n``."""
    n = _check_n(n_users)
    return n * exp_log_rate(as_linear(gbar) / n, spec)


def median_user_avg_goodput(n_users: int, gbar: SnrLike, ceil: bool = True,
                            spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Goodput of always serving the ``k = ceil(n/2)`` strongest users.

    The transmit rate follows the ``k``-th largest SNR, i.e. the
    ``j = n - k + 1``-th smallest, which exceeds ``x`` exactly when fewer
    than ``j`` users fall at or below ``x``.
    """
    k = Policy.median_user(ceil).n_median(_check_n(n_users))
    return k * _median_user_tx(n_users, as_linear(gbar), k, spec)


def _median_user_tx(n: int, g: float, k: int, spec: QuadratureSpec) -> float:
    j = n - k + 1
    below = np.arange(j)

    def surv(r):
        cdf = np.clip(-np.expm1(-_snr_excess(r) / g), 0.0, 1.0)
        # P(fewer than j users at or below x)
        pmf = binomial_pmf(n, below, cdf[..., None])
        return np.minimum(pmf.sum(axis=-1), 1.0)

    return integrate_semi_infinite(surv, 0.0, spec, scale=_rate_scale(g))


# ---------------------------------------------------------------------------
# Unified prediction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatePrediction:
    policy: Policy
    n_users: int
    gbar: AvgSnr
    expected_tx_rate: float
    expected_goodput: float
    expected_served: float
    r_th: Optional[float] = None
    lower_bound: Optional[float] = None


def predict(policy: Policy, n_users: int, gbar: SnrLike,
            spec: QuadratureSpec = DEFAULT_QUAD) -> RatePrediction:
    """Analytic transmit rate, goodput and mean served count for any policy."""
    n = _check_n(n_users)
    g = as_linear(gbar)
    snr = AvgSnr(g)
    policy = policy.resolve(g)

    if policy.kind == UNICAST or (policy.kind == THRESHOLD and policy.p >= 1.0):
        tx = unicast_avg_rate(n, g, spec)
        if policy.kind == UNICAST:
            return RatePrediction(policy, n, snr, tx, tx, 1.0)
        return RatePrediction(policy, n, snr, tx, tx, 1.0, math.inf, 0.0)
    if policy.kind == MULTICAST:
        tx = exp_log_rate(g / n, spec)
        return RatePrediction(policy, n, snr, tx, n * tx, float(n))
    if policy.kind == MEDIAN_USER:
        k = policy.n_median(n)
        tx = _median_user_tx(n, g, k, spec)
        return RatePrediction(policy, n, snr, tx, k * tx, float(k))

    p = policy.p
    tx, goodput = _threshold_moments(n, p, g, spec)
    served = n * (1.0 - p) + p ** n
    r_th = math.log2(1.0 + quantile(p, g))
    return RatePrediction(policy, n, snr, tx, goodput, served, r_th, lower_bound_rate(p, g))
