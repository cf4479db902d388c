import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from osched.analytics import (
    exp_log_rate,
    lower_bound_rate,
    median_user_avg_goodput,
    multicast_avg_goodput,
    optimal_p,
    predict,
    threshold_avg_goodput,
    threshold_avg_tx_rate,
    unicast_avg_rate,
)
from osched.errors import InvalidParameterError
from osched.numerics import grid_argmax
from osched.schedulers import Policy
from osched.sim import SimConfig, run_sim

LN2 = math.log(2)


def e_log_rate_closed(mean):
    """E[log2(1+X)], X ~ Exp(mean): exp(1/mean) E1(1/mean) / ln 2."""
    return float(mpmath.exp(1 / mpmath.mpf(mean)) * mpmath.e1(1 / mpmath.mpf(mean)) / mpmath.log(2))


E1_ORACLE = e_log_rate_closed(1.0)  # 0.8603473822708868


# ---- independent oracles ---------------------------------------------------
# These integrate the rate survivor written via the binomial theorem, e.g.
# P(tx > r) = (p + S(x))^N - p^N above the threshold, instead of the
# binomial-weighted sum over m used by the library, and use scipy.quad.

def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=500)
    return val


def oracle_threshold(n, p, g):
    th = -math.log1p(-p) * g
    r_th = math.log2(1 + th)

    def above(r):
        s = math.exp(-math.expm1(r * LN2) / g)
        return (p + s) ** n - p**n, n * s * (p + s) ** (n - 1)

    def below(r):
        c = -math.expm1(-math.expm1(r * LN2) / g)
        return 1 - c**n, p**n - c**n

    upper = r_th + 60 * max(1.0, math.log2(1 + g))
    tx = _quad(lambda r: below(r)[0], 0, r_th) + _quad(lambda r: above(r)[0], r_th, upper)
    gp = (n * (1 - p) * r_th + _quad(lambda r: below(r)[1], 0, r_th)
          + _quad(lambda r: above(r)[1], r_th, upper))
    return tx, gp


# ---- lower bound & optimum -------------------------------------------------

@pytest.mark.parametrize("p,g,expected", [
    (0.0, 3.0, 0.0),
    (0.5, 1.0, 0.5 * math.log2(1 + math.log(2))),
    (0.9, 10.0, 0.1 * math.log2(1 + math.log(10) * 10)),
])
def test_lower_bound_values(p, g, expected):
    assert lower_bound_rate(p, g) == pytest.approx(expected, abs=1e-12)


def test_lower_bound_domain():
    with pytest.raises(InvalidParameterError):
        lower_bound_rate(1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        lower_bound_rate(-0.1, 1.0)


@pytest.mark.parametrize("g,expected", [
    (1.0, 0.533838),    # grid oracle, step 1e-6
    (100.0, 0.248261),  # grid oracle, step 1e-6
])
def test_optimal_p_values(g, expected):
    assert optimal_p(g) == pytest.approx(expected, abs=2e-6)
    x, _ = grid_argmax(lambda p: lower_bound_rate(p, g), 1e-6, 1 - 1e-6, 1e-6)
    assert optimal_p(g) == pytest.approx(x, abs=2e-6)


def test_optimal_p_low_snr_limit():
    assert optimal_p(1e-6) == pytest.approx(1 - 1 / math.e, abs=1e-6)


def test_optimal_p_satisfies_stationarity():
    for g in (0.01, 1.0, 30.0, 1e4):
        p = optimal_p(g)
        t = 1 - g * math.log1p(-p)
        assert t * math.log(t) == pytest.approx(g, rel=1e-10)


def test_optimal_p_monotone_and_vanishing():
    gs = np.logspace(-3, 12, 200)
    ps = np.array([optimal_p(g) for g in gs])
    assert np.all(np.diff(ps) < 0)
    assert ps[-1] < 0.05


# ---- single-policy expectations --------------------------------------------

def test_exp_log_rate_matches_e1_identity():
    for mean in (1e-3, 0.05, 0.5, 1.0, 7.0, 300.0, 1e5):
        assert exp_log_rate(mean) == pytest.approx(e_log_rate_closed(mean), rel=1e-9, abs=1e-12)


def test_single_user_degeneracy():
    for f in (lambda: threshold_avg_tx_rate(1, 0.0, 1.0), lambda: unicast_avg_rate(1, 1.0),
              lambda: multicast_avg_goodput(1, 1.0), lambda: median_user_avg_goodput(1, 1.0),
              lambda: threshold_avg_goodput(1, 0.0, 1.0)):
        assert f() == pytest.approx(E1_ORACLE, abs=1e-9)


def test_two_user_values():
    # min of two Exp(1) is Exp(1/2)
    two_min = 2 * e_log_rate_closed(0.5)
    assert multicast_avg_goodput(2, 1.0) == pytest.approx(two_min, abs=1e-9)
    assert threshold_avg_goodput(2, 0.0, 1.0) == pytest.approx(two_min, abs=1e-9)
    # max by inclusion-exclusion: 2 E[f(X)] - E[f(min)]
    two_max = 2 * E1_ORACLE - e_log_rate_closed(0.5)
    assert unicast_avg_rate(2, 1.0) == pytest.approx(two_max, abs=1e-9)
    assert median_user_avg_goodput(2, 1.0) == pytest.approx(two_max, abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("g", [0.3, 1.0, 100.0])
def test_p0_threshold_equals_multicast(n, g):
    assert threshold_avg_goodput(n, 0.0, g) == pytest.approx(multicast_avg_goodput(n, g), rel=1e-10)
    assert threshold_avg_tx_rate(n, 0.0, g) == pytest.approx(multicast_avg_goodput(n, g) / n, rel=1e-10)


@pytest.mark.parametrize("n,p,g", [
    (1, 0.3, 1.0), (3, 0.5, 1.0), (5, 0.9, 10.0), (21, 0.5, 100.0),
    (21, 0.2483, 100.0), (50, 0.1, 1e5), (8, 0.6, 1e-2), (100, 0.75, 3.0),
])
def test_threshold_matches_binomial_theorem_oracle(n, p, g):
    tx, gp = oracle_threshold(n, p, g)
    assert threshold_avg_tx_rate(n, p, g) == pytest.approx(tx, rel=1e-8, abs=1e-9)
    assert threshold_avg_goodput(n, p, g) == pytest.approx(gp, rel=1e-8, abs=1e-9)


@pytest.mark.parametrize("n,g", [(3, 1.0), (21, 100.0), (50, 0.5)])
def test_unicast_matches_order_statistic_oracle(n, g):
    # E[max] survivor via the density of the max instead of 1 - F^n
    def dens(r):
        x = math.expm1(r * LN2)
        c = -math.expm1(-x / g)
        return r * n * c ** (n - 1) * math.exp(-x / g) / g * (1 + x) * LN2

    expected = _quad(dens, 0, 80 * max(1.0, math.log2(1 + g)))
    assert unicast_avg_rate(n, g) == pytest.approx(expected, rel=1e-8)


def test_unicast_monotone_in_n():
    vals = [unicast_avg_rate(n, 10.0) for n in range(1, 40)]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("n,g", [(5, 1.0), (21, 100.0), (10, 0.3)])
def test_median_user_matches_order_statistic_density(n, g):
    k = -(-n // 2)
    j = n - k + 1
    coef = math.factorial(n) / (math.factorial(j - 1) * math.factorial(n - j))

    def dens(x):
        c = -math.expm1(-x / g)
        return math.log2(1 + x) * coef * c ** (j - 1) * math.exp(-x / g) ** (n - j + 1) / g

    expected = k * _quad(dens, 0, 60 * g)
    assert median_user_avg_goodput(n, g) == pytest.approx(expected, rel=1e-8)


# ---- bounds and limits -----------------------------------------------------

@pytest.mark.parametrize("n", [1, 4, 21, 100])
@pytest.mark.parametrize("g", [0.1, 1.0, 100.0])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_lower_bound_below_tx_rate(n, p, g):
    tx = threshold_avg_tx_rate(n, p, g)
    assert lower_bound_rate(p, g) <= tx + 1e-6
    assert tx >= (1 - p**n) * math.log2(1 - math.log1p(-p) * g) - 1e-9


def test_large_n_rate_decreases_toward_threshold_rate():
    p, g = 0.5, 100.0
    r_th = math.log2(1 + math.log(2) * g)
    vals = [threshold_avg_tx_rate(n, p, g) for n in (10, 50, 200, 1000)]
    assert np.all(np.diff(vals) < 0)
    gaps = [v - r_th for v in vals]
    assert all(gap > 0 for gap in gaps)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 0.01


def test_prediction_invariants():
    for pol in (Policy.unicast(), Policy.multicast(), Policy.median_user(),
                Policy.median_threshold(), Policy.optimal_threshold(), Policy.threshold(1.0)):
        pred = predict(pol, 9, 5.0)
        assert pred.expected_goodput >= pred.expected_tx_rate
        if pred.lower_bound is not None:
            assert pred.lower_bound <= pred.expected_tx_rate + 1e-6
    assert predict(Policy.threshold(1.0), 9, 5.0).expected_tx_rate == pytest.approx(unicast_avg_rate(9, 5.0))


# ---- Monte Carlo cross-checks (desk scale) ---------------------------------

@pytest.mark.parametrize("pol", ["unicast", "multicast", "median-user", "median-threshold",
                                 "optimal-threshold", "threshold:0.8"])
def test_predictions_match_simulation(pol):
    policy = Policy.parse(pol)
    n, g = 7, 4.0
    pred = predict(policy, n, g)
    res = run_sim(SimConfig(n, g, policy, 200_000, seed=42))
    assert abs(res.mean_tx_rate - pred.expected_tx_rate) < 4 * res.std_err_tx_rate
    assert abs(res.mean_goodput - pred.expected_goodput) < 4 * res.std_err_goodput
    assert abs(res.mean_served - pred.expected_served) < 4 * max(res.std_err_served, 1e-12)


def test_validation_of_arguments():
    with pytest.raises(InvalidParameterError):
        threshold_avg_tx_rate(0, 0.5, 1.0)
    with pytest.raises(InvalidParameterError):
        threshold_avg_tx_rate(3, 1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        unicast_avg_rate(3, 0.0)
