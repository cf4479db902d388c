"""
Seeded Monte Carlo evaluation of scheduling policies.

Each run draws ``n_slots`` i.i.d. slot realizations from one PCG64 stream
and feeds them through :func:`osched.schedulers.schedule_batch` in chunks.
Chunking does not change the draws: the stream is consumed row by row, so
the result depends only on the config and seed.

Sweeps give every point its own stream. The point seed is the first 8
bytes (little endian) of ``blake2b("{base_seed}:{index}:{policy_name}")``,
which makes results independent of execution order and of the number of
worker processes.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from osched.channel import SEED_MASK, AvgSnr, as_linear, make_rng, sample_snrs
from osched.errors import InvalidParameterError, NumericFailureError
from osched.schedulers import Policy, resolve_threshold, schedule_batch

# floats drawn per chunk; bounds memory at ~16 MB per array
CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class SimConfig:
    n_users: int
    gbar: AvgSnr
    policy: Policy
    n_slots: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if int(self.n_users) != self.n_users or self.n_users < 1:
            raise InvalidParameterError(f"n_users must be a positive integer, got {self.n_users!r}")
        if int(self.n_slots) != self.n_slots or self.n_slots < 1:
            raise InvalidParameterError(f"n_slots must be a positive integer, got {self.n_slots!r}")
        if not isinstance(self.gbar, AvgSnr):
            object.__setattr__(self, "gbar", AvgSnr(as_linear(self.gbar)))
        if not isinstance(self.policy, Policy):
            raise InvalidParameterError(f"policy must be a Policy, got {self.policy!r}")
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise InvalidParameterError(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimResult:
    """Slot averages with their standard errors.

    ``mean_selected`` counts users chosen by the policy rule itself, which
    for threshold policies excludes the single user served in fallback
    slots; for other policies it equals ``mean_served``.
    """

    mean_tx_rate: float
    std_err_tx_rate: float
    mean_goodput: float
    std_err_goodput: float
    mean_served: float
    std_err_served: float
    mean_selected: float
    std_err_selected: float
    fallback_fraction: float
    n_slots: int
    seed: int
    resolved_p: Optional[float] = None


class _Moments:
    """Streaming mean and sum of squared deviations (Chan et al. merge)."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, values: np.ndarray):
        nb = values.size
        if nb == 0:
            return
        mb = float(values.mean())
        m2b = float(np.square(values - mb).sum())
        n = self.count + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * self.count * nb / n
        self.count = n

    def std_err(self) -> float:
        if self.count < 2:
            return 0.0
        var = self.m2 / (self.count - 1)
        return math.sqrt(var / self.count)


def run_sim(config: SimConfig) -> SimResult:
    """Simulate ``config.n_slots`` slots and summarise rate statistics."""
    n = config.n_users
    g = config.gbar.linear
    policy = config.policy.resolve(g)
    gamma_th = resolve_threshold(policy, g) if policy.is_threshold else None

    rng = make_rng(config.seed)
    chunk = max(1, CHUNK_ELEMENTS // n)
    tx_stats, gp_stats, served_stats, sel_stats = _Moments(), _Moments(), _Moments(), _Moments()
    served_total = 0
    fallbacks = 0
    remaining = config.n_slots
    while remaining:
        t = min(chunk, remaining)
        snrs = sample_snrs((t, n), g, rng)
        tx, served, fb = schedule_batch(policy, snrs, gamma_th)
        if not np.all(np.isfinite(tx)):
            raise NumericFailureError("non-finite transmit rate in simulation")
        tx_stats.add(tx)
        gp_stats.add(served * tx)
        served_stats.add(served.astype(float))
        sel_stats.add(np.where(fb, 0.0, served.astype(float)))
        served_total += int(served.sum())
        fallbacks += int(fb.sum())
        remaining -= t

    return SimResult(
        mean_tx_rate=tx_stats.mean,
        std_err_tx_rate=tx_stats.std_err(),
        mean_goodput=gp_stats.mean,
        std_err_goodput=gp_stats.std_err(),
        mean_served=served_total / config.n_slots,
        std_err_served=served_stats.std_err(),
        mean_selected=sel_stats.mean,
        std_err_selected=sel_stats.std_err(),
        fallback_fraction=fallbacks / config.n_slots,
        n_slots=config.n_slots,
        seed=int(config.seed),
        resolved_p=policy.p if policy.is_threshold else None,
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_FIELDS = ("n_users", "gbar", "policy")


def derive_seed(base_seed: int, index: int, tag: str) -> int:
    """64-bit substream seed for sweep point ``index`` (see module docstring)."""
    key = f"{int(base_seed) & SEED_MASK}:{int(index)}:{tag}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SweepPoint:
    index: int
    config: SimConfig
    result: Optional[SimResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _coerce(field: str, value):
    if field == "gbar":
        return value if isinstance(value, AvgSnr) else AvgSnr(float(value))
    if field == "policy":
        return value if isinstance(value, Policy) else Policy.parse(str(value))
    return int(value)


def expand_sweep(base: SimConfig, sweep: Sequence[Tuple[str, Iterable]]) -> List[SimConfig]:
    """Cartesian product of the sweep axes, first axis varying slowest."""
    axes = []
    for field, values in sweep:
        if field not in SWEEP_FIELDS:
            raise InvalidParameterError(f"cannot sweep {field!r}; choose from {SWEEP_FIELDS}")
        axes.append([(field, _coerce(field, v)) for v in values])
    configs = []
    for index, combo in enumerate(itertools.product(*axes)):
        cfg = replace(base, **dict(combo))
        cfg = replace(cfg, seed=derive_seed(base.seed, index, cfg.policy.name))
        configs.append(cfg)
    return configs


def _run_point(args):
    index, cfg = args
    try:
        return SweepPoint(index, cfg, run_sim(cfg))
    except (NumericFailureError, InvalidParameterError, FloatingPointError) as exc:
        return SweepPoint(index, cfg, error=f"{type(exc).__name__}: {exc}")


def run_sweep(base: SimConfig, sweep: Sequence[Tuple[str, Iterable]],
              parallelism: int = 1) -> List[SweepPoint]:
    """Run every point of a sweep, optionally across worker processes.

    Failed points are returned with ``error`` set rather than aborting the
    sweep. Output order follows point index regardless of ``parallelism``.
    """
    if parallelism < 1:
        raise InvalidParameterError("parallelism must be at least 1")
    jobs = list(enumerate(expand_sweep(base, sweep)))
    if parallelism == 1 or len(jobs) <= 1:
        return [_run_point(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_point, jobs))
