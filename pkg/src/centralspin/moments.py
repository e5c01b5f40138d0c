"""Compression of N inequivalent couplings into M sets of equivalent spins.

The pipeline is:

1. a discrete Stieltjes procedure turns the N unit-weight couplings into an
   M-point Gaussian quadrature rule (nodes ``Abar_j``, real weights ``W_j``);
2. every way of rounding the weights to integers ``N_j`` that still sums to N
   is enumerated;
3. for each rounding, Newton's method adjusts the couplings ``A_j`` so that
   ``sum_j N_j A_j**k`` reproduces the moments for k = 1..M;
4. the converged candidate with the smallest total moment error over
   k = 1..M+1 wins.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .hyperfine import HyperfineDistribution, moment

MAX_NEWTON_ITERATIONS = 30
MAX_SETS = 63


class NumericalBreakdown(ArithmeticError):
    """The Stieltjes recurrence or the tridiagonal eigensolver failed."""


class NoValidAssignment(ValueError):
    """No rounding of the quadrature weights can sum to N."""


class ReductionFailed(RuntimeError):
    """Newton's method failed for every integer assignment."""


class NewtonStatus(enum.Enum):
    CONVERGED = 0
    DIVERGED = 1
    MAX_ITERATIONS = 2
    SINGULAR = -1


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def m(self) -> int:
        return len(self.nodes)

    def moment(self, k: int) -> float:
        return float(np.sum(self.weights * self.nodes**k))


@dataclass(frozen=True)
class ReducedModel:
    """M sets of equivalent spin-1/2 nuclei: couplings ``A_j`` and counts ``N_j``."""

    couplings: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(a) for a in self.couplings))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        if len(self.couplings) != len(self.counts):
            raise ValueError("couplings and counts must have the same length")
        if any(n < 1 for n in self.counts):
            raise ValueError(f"set sizes must be positive, got {self.counts}")

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    def moment(self, k: int) -> float:
        return float(sum(n * a**k for n, a in zip(self.counts, self.couplings)))


@dataclass(frozen=True)
class MomentReport:
    """Percentage moment errors; ``percent_errors[k - 1]`` belongs to moment k."""

    percent_errors: tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.percent_errors) - 1


def stieltjes_quadrature(dist: HyperfineDistribution, m: int) -> QuadratureRule:
    """M-point Gaussian rule for the unit-weight discrete measure on ``dist.couplings``.

    The Jacobi matrix is built by a Lanczos recurrence in which each new vector
    is orthogonalised against all previous ones, then diagonalised.
    """
    x = dist.as_array()
    npts = len(x)
    if not 1 <= m < npts:
        raise ValueError(f"need 1 <= m < N, got m={m}, N={npts}")
    # relative to max|x|, a residual this small means the measure has < m points
    tiny = 8.0 * npts * np.finfo(float).eps * np.max(np.abs(x))

    p = np.empty((m, npts))
    q = np.ones(npts)
    diag = np.empty(m)
    offdiag = np.empty(m)
    for k in range(m):
        qq = np.sqrt(q @ q)
        if qq == 0.0 or (k > 0 and qq <= tiny):
            raise NumericalBreakdown(
                f"Stieltjes recurrence broke down at step {k + 1}: "
                "the measure has fewer distinct points than requested"
            )
        p[k] = q / qq
        q = x * p[k]
        for j in range(k, -1, -1):
            pq = p[j] @ q
            if j == k:
                diag[k] = pq
                offdiag[k] = qq
            q = q - p[j] * pq

    norm0 = offdiag[0]
    try:
        nodes, vecs = scipy.linalg.eigh_tridiagonal(diag, offdiag[1:])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalBreakdown(f"tridiagonal eigensolver failed: {exc}") from exc
    weights = (norm0 * vecs[0]) ** 2
    return QuadratureRule(nodes=nodes, weights=weights)


def enumerate_assignments(weights, n: int) -> list[tuple[int, ...]]:
    """All floor/ceiling roundings of ``weights`` summing to ``n``.

    Candidates come out in ascending bitmask order, where bit ``i`` of the mask
    raises set ``i`` from its floor to floor + 1.
    """
    m = len(weights)
    if m > MAX_SETS:
        raise ValueError(f"at most {MAX_SETS} sets are supported, got {m}")
    floors = [int(w) for w in weights]
    ndiff = n - sum(floors)
    if not 0 <= ndiff <= m:
        raise NoValidAssignment(
            f"weights {list(weights)} cannot be rounded to sum to {n} (ndiff={ndiff})"
        )
    masks = sorted(
        sum(1 << i for i in raised) for raised in itertools.combinations(range(m), ndiff)
    )
    return [tuple(f + ((mask >> i) & 1) for i, f in enumerate(floors)) for mask in masks]


def newton_refine(target: QuadratureRule, assignment) -> tuple[np.ndarray, NewtonStatus]:
    """Solve ``sum_j N_j A_j**k = sum_j W_j Abar_j**k`` for k = 1..M.

    Starts from ``A_j = Abar_j``. The iteration stops when the relative step
    ``da = sum|dA| / sum|A|`` no longer changes ``1 + da`` in double
    precision, or when ``da`` stops decreasing (the last step is then undone).
    """
    counts = np.asarray(assignment, dtype=float)
    m = target.m
    if counts.shape != (m,):
        raise ValueError(f"assignment must have {m} entries, got {len(counts)}")
    powers = np.arange(1, m + 1)
    rhs = np.array([target.moment(int(k)) for k in powers])
    a = np.array(target.nodes, dtype=float)

    da_prev = np.inf
    for it in range(1, MAX_NEWTON_ITERATIONS + 1):
        f = (counts * a[None, :] ** powers[:, None]).sum(axis=1) - rhs
        jac = powers[:, None] * counts[None, :] * a[None, :] ** (powers[:, None] - 1)
        if np.any(np.all(jac == 0.0, axis=1)):
            return a, NewtonStatus.SINGULAR
        with warnings.catch_warnings():
            # zero pivots are detected below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(jac, check_finite=False)
        if np.any(np.diag(lu) == 0.0):
            return a, NewtonStatus.SINGULAR
        step = scipy.linalg.lu_solve((lu, piv), f, check_finite=False)
        a_old = a
        a = a - step
        da = np.sum(np.abs(step)) / np.sum(np.abs(a_old))
        if not da <= 1.0:
            return a, NewtonStatus.DIVERGED
        if 1.0 + da == 1.0:
            return a, NewtonStatus.CONVERGED
        if it > 1 and da >= da_prev:
            return a_old, NewtonStatus.CONVERGED
        da_prev = da
    return a, NewtonStatus.MAX_ITERATIONS


def moment_report(dist: HyperfineDistribution, model: ReducedModel) -> MomentReport:
    errors = []
    for k in range(1, model.m + 2):
        exact = moment(dist, k)
        errors.append(100.0 * abs(exact - model.moment(k)) / abs(exact))
    return MomentReport(tuple(errors))


def reduce_model(dist: HyperfineDistribution, m: int) -> tuple[ReducedModel, MomentReport]:
    """Best M-set model of ``dist`` and its moment errors for k = 1..M+1."""
    n = dist.n
    if m >= n:
        raise ValueError(f"M must be smaller than N (got M={m}, N={n})")
    if m < 1:
        raise ValueError(f"M must be positive, got {m}")

    rule = stieltjes_quadrature(dist, m)
    exact = [moment(dist, k) for k in range(1, m + 2)]

    best = None
    best_err = np.inf
    for assignment in enumerate_assignments(rule.weights, n):
        a, status = newton_refine(rule, assignment)
        if status is not NewtonStatus.CONVERGED:
            continue
        err = sum(
            abs(sum(nj * aj**k for nj, aj in zip(assignment, a)) - exact[k - 1])
            for k in range(1, m + 2)
        )
        if err < best_err:
            best_err = err
            best = (a, assignment)

    if best is None:
        raise ReductionFailed(f"Newton's method failed for every assignment (N={n}, M={m})")
    a, assignment = best
    if sum(assignment) != n:
        raise AssertionError("selected assignment does not conserve N")
    model = ReducedModel(couplings=tuple(a), counts=tuple(assignment))
    return model, moment_report(dist, model)
