"""
Figure-reproduction sweeps and their CSV serialisation.

Two throughput experiments are provided: an average-SNR sweep with 21 users
(-5 dB to 50 dB in 5 dB steps) and a user-count sweep at 20 dB (5 to 50
users in steps of 5). Each emits one :class:`RateCurvePoint` per
(policy, sweep value).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from osched.analytics import lower_bound_rate, optimal_p, predict
from osched.channel import AvgSnr
from osched.errors import InvalidParameterError, NumericFailureError
from osched.schedulers import Policy
from osched.sim import SimConfig, SweepPoint, run_sweep

FIGURE_POLICIES = ("unicast", "multicast", "median-user", "median-threshold", "optimal-threshold")

FIG2_USERS = 21
FIG2_SNR_DB = tuple(range(-5, 55, 5))
FIG3_SNR_DB = 20.0
FIG3_USERS = tuple(range(5, 55, 5))

CSV_HEADER = ("sweep", "var", "policy", "source", "mean_goodput", "mean_tx_rate", "std_err", "seed")


@dataclass(frozen=True)
class RateCurvePoint:
    """One row of a throughput curve. ``std_err`` refers to ``mean_goodput``."""

    sweep_var_name: str
    sweep_value: float
    policy: str
    mean_goodput: float
    mean_tx_rate: float
    std_err: float
    source: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.source not in ("sim", "analytic"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "analytic" and self.std_err != 0:
            raise ValueError("analytic points carry no standard error")


def _fmt(x) -> str:
    return f"{float(x):.6g}"


def sort_points(points: Iterable[RateCurvePoint]) -> List[RateCurvePoint]:
    return sorted(points, key=lambda r: (r.policy, r.sweep_value, r.source))


def points_to_csv(points: Iterable[RateCurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sort_points(points):
        writer.writerow([
            r.sweep_var_name,
            _fmt(r.sweep_value),
            r.policy,
            r.source,
            _fmt(r.mean_goodput),
            _fmt(r.mean_tx_rate),
            _fmt(r.std_err),
            "" if r.seed is None else str(r.seed),
        ])
    return buf.getvalue()


def _sim_points(results: Sequence[SweepPoint], var_name: str, values):
    failed = [p for p in results if not p.ok]
    if failed:
        msgs = "; ".join(f"point {p.index}: {p.error}" for p in failed)
        raise NumericFailureError(f"{len(failed)} sweep point(s) failed: {msgs}")
    rows = []
    per_policy = len(values)
    for pt in results:
        value = values[pt.index % per_policy]
        res = pt.result
        rows.append(RateCurvePoint(var_name, value, pt.config.policy.name, res.mean_goodput,
                                   res.mean_tx_rate, res.std_err_goodput, "sim", pt.config.seed))
    return rows


def _analytic_point(var_name, value, policy, n_users, gbar):
    pred = predict(policy, n_users, gbar)
    return RateCurvePoint(var_name, value, policy.name, pred.expected_goodput,
                          pred.expected_tx_rate, 0.0, "analytic")


def snr_sweep(slots: int = 100_000, seed: int = 0, parallelism: int = 1, n_users: int = FIG2_USERS,
              snr_db: Sequence[float] = FIG2_SNR_DB, policies: Sequence[str] = FIGURE_POLICIES,
              with_analytic: bool = False) -> List[RateCurvePoint]:
    """Throughput of each policy versus average SNR for a fixed user count."""
    snr_db = [float(v) for v in snr_db]
    pols = [Policy.parse(p) for p in policies]
    base = SimConfig(n_users, AvgSnr.from_db(snr_db[0]), pols[0], slots, seed)
    results = run_sweep(base, [("policy", pols), ("gbar", [AvgSnr.from_db(v) for v in snr_db])],
                        parallelism)
    rows = _sim_points(results, "snr_db", snr_db)
    if with_analytic:
        rows += [_analytic_point("snr_db", v, pol, n_users, AvgSnr.from_db(v))
                 for pol in pols for v in snr_db]
    return sort_points(rows)


def users_sweep(slots: int = 100_000, seed: int = 0, parallelism: int = 1, snr_db: float = FIG3_SNR_DB,
                users: Sequence[int] = FIG3_USERS, policies: Sequence[str] = FIGURE_POLICIES,
                with_analytic: bool = False) -> List[RateCurvePoint]:
    """Throughput of each policy versus user count at a fixed average SNR."""
    users = [int(u) for u in users]
    pols = [Policy.parse(p) for p in policies]
    gbar = AvgSnr.from_db(snr_db)
    base = SimConfig(users[0], gbar, pols[0], slots, seed)
    results = run_sweep(base, [("policy", pols), ("n_users", users)], parallelism)
    rows = _sim_points(results, "n_users", users)
    if with_analytic:
        rows += [_analytic_point("n_users", u, pol, u, gbar) for pol in pols for u in users]
    return sort_points(rows)


def optimal_p_table(snr_min: float = -30.0, snr_max: float = 50.0, step: float = 5.0):
    """Rows of ``(snr_db, p_star, r_low(p_star))`` over an inclusive dB grid."""
    if step <= 0 or snr_max < snr_min:
        raise InvalidParameterError("need step > 0 and snr_max >= snr_min")
    n = int(np.floor((snr_max - snr_min) / step + 1e-9)) + 1
    rows = []
    for i in range(n):
        db = snr_min + i * step
        g = AvgSnr.from_db(db).linear
        p = optimal_p(g)
        rows.append((db, p, lower_bound_rate(p, g)))
    return rows


def optimal_p_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("snr_db", "p_star", "r_low"))
    for db, p, r in rows:
        writer.writerow((_fmt(db), _fmt(p), _fmt(r)))
    return buf.getvalue()
