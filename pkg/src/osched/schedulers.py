"""
Scheduling policies and the per-slot scheduling decision.

Every policy serves a set of users with a single transmission whose rate is
limited by the weakest served channel, ``log2(1 + min gamma)`` (bandwidth
fixed at 1, so rates are in bits/s/Hz). Goodput counts that rate once per
served user.

Threshold policies serve every user at or above the ``p``-quantile of the
SNR distribution and fall back to the single best user when nobody passes.
``p = 0`` therefore reduces to multicast and ``p = 1`` to unicast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import FrozenSet, Optional

import numpy as np

from osched.channel import SlotRealization, SnrLike, as_linear, quantile
from osched.errors import InvalidParameterError

UNICAST = "unicast"
MULTICAST = "multicast"
MEDIAN_USER = "median_user"
THRESHOLD = "threshold"

_KINDS = (UNICAST, MULTICAST, MEDIAN_USER, THRESHOLD)
_LN2 = math.log(2.0)


def shannon_rate(gamma):
    """Spectral efficiency ``log2(1 + gamma)`` in bits/s/Hz."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g >= 0)):
        raise InvalidParameterError(f"SNR must be non-negative, got {gamma!r}")
    out = np.log1p(g) / _LN2
    return float(out) if out.ndim == 0 else out


def _rate(g):
    # unchecked twin of shannon_rate for hot loops
    return np.log1p(g) / _LN2


@dataclass(frozen=True)
class Policy:
    """A scheduling rule.

    ``kind`` is one of ``unicast``, ``multicast``, ``median_user`` or
    ``threshold``. Threshold policies carry the quantile ``p``; when
    ``optimal`` is set, ``p`` is left unset and resolved per average SNR
    through :func:`osched.analytics.optimal_p`. ``median_ceil`` picks the
    rounding of ``N/2`` for the median-user rule with odd ``N``.
    """

    kind: str
    p: Optional[float] = None
    optimal: bool = False
    median_ceil: bool = True

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown policy kind {self.kind!r}")
        if self.kind == THRESHOLD:
            if self.optimal:
                if self.p is not None and not (0.0 <= self.p <= 1.0):
                    raise InvalidParameterError(f"threshold p must lie in [0, 1], got {self.p!r}")
            elif self.p is None or not (0.0 <= self.p <= 1.0):
                raise InvalidParameterError(f"threshold p must lie in [0, 1], got {self.p!r}")
        elif self.p is not None or self.optimal:
            raise InvalidParameterError(f"{self.kind} policy takes no threshold")

    # constructors -----------------------------------------------------------

    @classmethod
    def unicast(cls):
        return cls(UNICAST)

    @classmethod
    def multicast(cls):
        return cls(MULTICAST)

    @classmethod
    def median_user(cls, ceil=True):
        return cls(MEDIAN_USER, median_ceil=ceil)

    @classmethod
    def threshold(cls, p: float):
        return cls(THRESHOLD, p=float(p))

    @classmethod
    def median_threshold(cls):
        return cls(THRESHOLD, p=0.5)

    @classmethod
    def optimal_threshold(cls):
        return cls(THRESHOLD, optimal=True)

    @classmethod
    def parse(cls, text: str) -> "Policy":
        """Parse a CLI policy name such as ``median-user`` or ``threshold:0.3``."""
        key = text.strip().lower()
        named = {
            "unicast": cls.unicast,
            "multicast": cls.multicast,
            "median-user": cls.median_user,
            "median-threshold": cls.median_threshold,
            "optimal-threshold": cls.optimal_threshold,
        }
        if key in named:
            return named[key]()
        if key.startswith("threshold:"):
            try:
                p = float(key.split(":", 1)[1])
            except ValueError:
                raise InvalidParameterError(f"bad threshold probability in {text!r}") from None
            return cls.threshold(p)
        raise InvalidParameterError(f"unknown policy {text!r}")

    # naming -----------------------------------------------------------------

    @property
    def name(self) -> str:
        if self.kind == UNICAST:
            return "unicast"
        if self.kind == MULTICAST:
            return "multicast"
        if self.kind == MEDIAN_USER:
            return "median-user" if self.median_ceil else "median-user-floor"
        if self.optimal:
            return "optimal-threshold"
        if self.p == 0.5:
            return "median-threshold"
        return f"threshold:{self.p:g}"

    def __str__(self):
        return self.name

    @property
    def is_threshold(self) -> bool:
        return self.kind == THRESHOLD

    def resolve(self, gbar: SnrLike) -> "Policy":
        """Fix the threshold quantile of an optimal-threshold policy for ``gbar``."""
        if not (self.is_threshold and self.optimal):
            return self
        from osched.analytics import optimal_p

        return Policy(THRESHOLD, p=optimal_p(gbar), optimal=True)

    def n_median(self, n_users: int) -> int:
        """Number of users the median-user rule serves out of ``n_users``."""
        k = -(-n_users // 2) if self.median_ceil else n_users // 2
        return max(1, k)


@dataclass(frozen=True)
class SlotOutcome:
    served: FrozenSet[int]
    tx_rate: float
    goodput: float
    fallback_used: bool = False

    @property
    def n_served(self) -> int:
        return len(self.served)


def _threshold_p(policy: Policy, gbar: SnrLike) -> float:
    if not policy.is_threshold:
        raise InvalidParameterError(f"{policy.name} has no threshold")
    if policy.p is None:
        policy = policy.resolve(gbar)
    return policy.p


def resolve_threshold(policy: Policy, gbar: SnrLike) -> float:
    """Absolute SNR threshold of a threshold policy; ``inf`` when ``p == 1``."""
    p = _threshold_p(policy, gbar)
    g = as_linear(gbar)
    if p >= 1.0:
        return math.inf
    return quantile(p, g)


def schedule_slot(policy: Policy, realization, gbar: SnrLike) -> SlotOutcome:
    """Decide which users one slot serves and at what rate.

    Ties for the best user, and among equal SNRs at the median-user
    boundary, go to the lowest user index.
    """
    if not isinstance(realization, SlotRealization):
        realization = SlotRealization(np.asarray(realization, dtype=float))
    g = realization.snrs
    n = g.size
    best = int(np.argmax(g))

    if policy.kind == UNICAST:
        served = (best,)
        rate = _rate(g[best])
        fallback = False
    elif policy.kind == MULTICAST:
        served = tuple(range(n))
        rate = _rate(g.min())
        fallback = False
    elif policy.kind == MEDIAN_USER:
        k = policy.n_median(n)
        # stable sort on -g keeps lower indices first among equal SNRs
        order = np.argsort(-g, kind="stable")[:k]
        served = tuple(sorted(int(i) for i in order))
        rate = _rate(g[order].min())
        fallback = False
    else:
        th = resolve_threshold(policy, gbar)
        passing = np.flatnonzero(g >= th)
        if passing.size:
            served = tuple(int(i) for i in passing)
            rate = _rate(g[passing].min())
            fallback = False
        else:
            served = (best,)
            rate = _rate(g[best])
            fallback = True

    rate = float(rate)
    return SlotOutcome(frozenset(served), rate, len(served) * rate, fallback)


def schedule_batch(policy: Policy, snrs: np.ndarray, gamma_th: Optional[float] = None):
    """Vectorised scheduling of many slots at once.

    Parameters
    ----------
    policy : Policy
        Rule to apply; threshold policies need ``gamma_th``.
    snrs : ndarray, shape (n_slots, n_users)
        Instantaneous SNRs, one row per slot.
    gamma_th : float, optional
        Absolute threshold for threshold policies (see :func:`resolve_threshold`).

    Returns
    -------
    tx_rate : ndarray of float
    n_served : ndarray of int
    fallback : ndarray of bool
    """
    snrs = np.asarray(snrs, dtype=float)
    t, n = snrs.shape
    if policy.kind == UNICAST:
        return _rate(snrs.max(axis=1)), np.ones(t, dtype=np.int64), np.zeros(t, dtype=bool)
    if policy.kind == MULTICAST:
        return _rate(snrs.min(axis=1)), np.full(t, n, dtype=np.int64), np.zeros(t, dtype=bool)
    if policy.kind == MEDIAN_USER:
        k = policy.n_median(n)
        kth_largest = np.partition(snrs, n - k, axis=1)[:, n - k]
        return _rate(kth_largest), np.full(t, k, dtype=np.int64), np.zeros(t, dtype=bool)

    if gamma_th is None:
        raise InvalidParameterError("threshold policy needs gamma_th")
    passing = snrs >= gamma_th
    n_pass = passing.sum(axis=1)
    fallback = n_pass == 0
    weakest = np.where(passing, snrs, np.inf).min(axis=1)
    chosen = np.where(fallback, snrs.max(axis=1), weakest)
    served = np.where(fallback, 1, n_pass).astype(np.int64)
    return _rate(chosen), served, fallback
