"""Schulten-Wolynes semiclassical reference for the central spin.

The nuclear spins are frozen into a static Overhauser field drawn from an
isotropic Gaussian with per-component standard deviation 1/2 (time unit tau,
so the variance is mu_2 / 4). For a single field the electron precesses as

    S(t) = cos(wt) S + (1 - cos(wt)) n (n . S) + sin(wt) n x S,

with w = |B z + omega| and n the unit field direction. Hence

    (1/2) tr[S_a S_b(t)] = R_ba(wt, n) / 4,

and R_ab(t) is its average over fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import CorrelationTensor

FIELD_SIGMA = 0.5
CHUNK = 4096

_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


@dataclass(frozen=True)
class SWConfig:
    n_samples: int = 100_000
    seed: int = 0
    b_field: float = 0.0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples!r}")


def sample_fields(config: SWConfig, chunk: int) -> np.ndarray:
    """Fields (including B along z) for one chunk of samples.

    Chunk c draws from its own Philox stream keyed by (seed, c), so the set of
    samples depends only on (seed, n_samples).
    """
    start = chunk * CHUNK
    size = min(CHUNK, config.n_samples - start)
    ss = np.random.SeedSequence(entropy=int(config.seed), spawn_key=(chunk,))
    rng = np.random.Generator(np.random.Philox(ss))
    omega = rng.normal(0.0, FIELD_SIGMA, size=(size, 3))
    omega[:, 2] += config.b_field
    return omega


def precession_correlation(fields: np.ndarray, times) -> np.ndarray:
    """Per-sample (1/2) tr[S_a S_b(t)] for static fields; shape (n, T, 3, 3)."""
    fields = np.asarray(fields, dtype=float)
    times = np.asarray(times, dtype=float)
    w = np.linalg.norm(fields, axis=1)
    n = np.zeros_like(fields)
    n[:, 2] = 1.0
    nz = w > 0
    n[nz] = fields[nz] / w[nz, None]

    theta = w[:, None] * times[None, :]
    c, s = np.cos(theta), np.sin(theta)
    nn = n[:, :, None] * n[:, None, :]
    cross = np.einsum("bag,na->nbg", _LEVI_CIVITA, n)
    rot = (
        c[:, :, None, None] * np.eye(3)
        + (1.0 - c)[:, :, None, None] * nn[:, None]
        + s[:, :, None, None] * cross[:, None]
    )
    # R_ab = rot_ba / 4
    return 0.25 * np.swapaxes(rot, -1, -2)


def sw_correlation(config: SWConfig, times) -> CorrelationTensor:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a one-dimensional ascending array")
    total = np.zeros((len(times), 3, 3))
    total_sq = np.zeros_like(total)
    n_chunks = -(-config.n_samples // CHUNK)
    for chunk in range(n_chunks):
        r = precession_correlation(sample_fields(config, chunk), times)
        total += r.sum(axis=0)
        total_sq += (r * r).sum(axis=0)
    n = config.n_samples
    mean = total / n
    if n > 1:
        var = np.maximum(total_sq / n - mean * mean, 0.0) * n / (n - 1)
        err = np.sqrt(var / n)
    else:
        err = np.zeros_like(mean)
    return CorrelationTensor(times=times, values=mean, stderr=err)
