"""
Flat Rayleigh fading channel with i.i.d. users.

Under Rayleigh fading the instantaneous SNR of each user is exponentially
distributed with mean ``gbar`` (the average SNR, linear scale). All math in
the package is done on linear SNR; dB only appears at the CLI boundary.

Random numbers come from numpy's ``PCG64`` bit generator seeded with a
64-bit integer. Exponential variates are produced by the inverse-CDF
transform ``-gbar * log1p(-u)`` of uniform doubles, so a given seed yields
the same realizations on every run of the same release.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from osched.errors import InvalidParameterError

#: Name of the bit generator used for every random stream in the package.
RNG_ALGORITHM = "numpy.random.PCG64"

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class AvgSnr:
    """Average SNR of a user population, stored in linear scale."""

    linear: float

    def __post_init__(self):
        if not (math.isfinite(self.linear) and self.linear > 0):
            raise InvalidParameterError(f"average SNR must be positive and finite, got {self.linear!r}")

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.linear)

    @classmethod
    def from_db(cls, db: float) -> "AvgSnr":
        return cls(10.0 ** (db / 10.0))

    def __float__(self):
        return float(self.linear)


SnrLike = Union[AvgSnr, float]


def as_linear(gbar: SnrLike) -> float:
    """Return the linear average SNR, validating that it is positive."""
    if isinstance(gbar, AvgSnr):
        return gbar.linear
    g = float(gbar)
    if not (math.isfinite(g) and g > 0):
        raise InvalidParameterError(f"average SNR must be positive and finite, got {gbar!r}")
    return g


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(linear):
    return 10.0 * np.log10(linear)


@dataclass(frozen=True)
class SlotRealization:
    """Instantaneous linear SNR of every user in one time slot."""

    snrs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.snrs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise InvalidParameterError("a slot realization needs a 1-D array with at least one user")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0):
            raise InvalidParameterError("instantaneous SNRs must be finite and non-negative")
        object.__setattr__(self, "snrs", arr)

    @property
    def n_users(self) -> int:
        return int(self.snrs.size)

    def __len__(self):
        return self.n_users


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def snr_pdf(x, gbar: SnrLike):
    """Exponential SNR density ``exp(-x/gbar)/gbar`` for ``x >= 0``, else 0."""
    g = as_linear(gbar)
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        out = np.where(x >= 0, np.exp(-np.maximum(x, 0.0) / g) / g, 0.0)
    return _scalar_or_array(out)


def snr_cdf(x, gbar: SnrLike):
    """Exponential SNR distribution function ``1 - exp(-x/gbar)``."""
    g = as_linear(gbar)
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, -np.expm1(-np.maximum(x, 0.0) / g), 0.0)
    return _scalar_or_array(out)


def snr_survival(x, gbar: SnrLike):
    """Complement of :func:`snr_cdf`."""
    g = as_linear(gbar)
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, np.exp(-np.maximum(x, 0.0) / g), 1.0)
    return _scalar_or_array(out)


def quantile(p, gbar: SnrLike):
    """SNR level below which a user falls with probability ``p``.

    ``-ln(1 - p) * gbar``; defined for ``0 <= p < 1``.
    """
    g = as_linear(gbar)
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0)) or np.any(p_arr >= 1):
        raise InvalidParameterError(f"quantile probability must lie in [0, 1), got {p!r}")
    return _scalar_or_array(-np.log1p(-p_arr) * g)


def make_rng(seed: int) -> np.random.Generator:
    """Build the package's random stream from a 64-bit seed."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise InvalidParameterError(f"seed must be an integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))


def sample_snrs(shape, gbar: SnrLike, rng: np.random.Generator) -> np.ndarray:
    """Draw i.i.d. exponential SNRs of the given shape by inverse-CDF transform."""
    g = as_linear(gbar)
    u = rng.random(shape)
    return -g * np.log1p(-u)


def sample_slot(n_users: int, gbar: SnrLike, rng: np.random.Generator) -> SlotRealization:
    """Draw one slot of ``n_users`` independent SNR values."""
    if int(n_users) != n_users or n_users < 1:
        raise InvalidParameterError(f"n_users must be a positive integer, got {n_users!r}")
    return SlotRealization(sample_snrs(int(n_users), gbar, rng))
