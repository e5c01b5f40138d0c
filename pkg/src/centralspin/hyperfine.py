"""Hyperfine coupling distributions for the central spin problem.

All couplings are stored as the dimensionless products ``a_j * tau``, where
``tau = (sum_j a_j**2) ** -0.5`` is the electron spin precession time, so every
time in this package is measured in units of ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HyperfineDistribution:
    """An ordered set of N hyperfine couplings in units of 1/tau."""

    couplings: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(a) for a in self.couplings))
        if not self.couplings:
            raise ValueError("a hyperfine distribution needs at least one coupling")
        if not all(math.isfinite(a) for a in self.couplings):
            raise ValueError("couplings must be finite")

    @property
    def n(self) -> int:
        return len(self.couplings)

    def as_array(self) -> np.ndarray:
        return np.array(self.couplings, dtype=float)

    def normalized(self) -> HyperfineDistribution:
        """Rescale so that the second moment is exactly one (times in units of tau)."""
        scale = math.sqrt(moment(self, 2))
        if scale == 0.0:
            raise ValueError("cannot normalise an all-zero coupling set")
        return HyperfineDistribution(tuple(a / scale for a in self.couplings))


def uniform_couplings(n: int) -> HyperfineDistribution:
    """Model I: couplings decreasing linearly from the largest to 1/N of it."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    fac = math.sqrt((6.0 * n) / (2.0 * n * n + 3.0 * n + 1.0))
    return HyperfineDistribution(tuple(fac * (n - (j - 1.0)) / n for j in range(1, n + 1)))


def exponential_couplings(n0: int, n: int) -> HyperfineDistribution:
    """Model II: couplings decaying geometrically, ``n0`` spins within one Bohr radius.

    ``n0`` must be at least 2; ``n0 = 1`` gives a zero-width wavefunction.
    """
    if n0 < 2:
        raise ValueError(f"invalid N0 = {n0}: the exponential model requires N0 >= 2")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    top = 1.0 - math.exp(-2.0 / (n0 - 1.0))
    btm = 1.0 - math.exp(-(2.0 * n) / (n0 - 1.0))
    fac = math.sqrt(top / btm)
    return HyperfineDistribution(
        tuple(fac * math.exp(-(j - 1.0) / (n0 - 1.0)) for j in range(1, n + 1))
    )


def moment(dist: HyperfineDistribution, k: int) -> float:
    """Power sum ``mu_k = sum_j a_j**k`` with compensated summation."""
    if k < 0:
        raise ValueError(f"moment order must be nonnegative, got {k}")
    if k == 0:
        return float(dist.n)
    return math.fsum(a**k for a in dist.couplings)


def moments(dist: HyperfineDistribution, kmax: int) -> np.ndarray:
    """``mu_0 .. mu_kmax`` as an array."""
    return np.array([moment(dist, k) for k in range(kmax + 1)])
