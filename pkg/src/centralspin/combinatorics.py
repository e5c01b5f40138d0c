"""Total-spin multiplicities of equivalent spin-1/2 nuclei and symmetry blocks.

Spin quantum numbers are carried as ``twice_i = 2I`` so half-integers stay exact.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .moments import ReducedModel


def _check(n: int, twice_i: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one spin, got n={n}")
    if twice_i < 0 or twice_i > n or (n - twice_i) % 2:
        raise ValueError(f"I = {twice_i}/2 is not reachable with {n} spin-1/2 nuclei")


def multiplicity(n: int, twice_i: int) -> int:
    """Number of ways W(N, I) that N spin-1/2 nuclei couple to total spin I.

    ``W(N, I) = C(N, N/2 + I) (2I + 1) / (N/2 + I + 1)``, evaluated exactly.
    """
    _check(n, twice_i)
    upper = (n + twice_i) // 2
    num = math.comb(n, upper) * (twice_i + 1)
    w, rem = divmod(num, upper + 1)
    assert rem == 0
    return w


@functools.lru_cache(maxsize=None)
def multiplicity_recurrence(n: int, twice_i: int) -> int:
    """W(N, I) built up one spin at a time; used to cross-check :func:`multiplicity`."""
    _check(n, twice_i)
    if n == 1:
        return 1
    if twice_i == 0:
        return multiplicity_recurrence(n - 1, 1)
    if twice_i == n:
        return multiplicity_recurrence(n - 1, n - 1)
    return multiplicity_recurrence(n - 1, twice_i - 1) + multiplicity_recurrence(n - 1, twice_i + 1)


def allowed_twice_spins(n: int) -> range:
    """2I values from mod(N, 2) up to N in steps of 2."""
    return range(n % 2, n + 1, 2)


@dataclass(frozen=True)
class SymmetryBlock:
    twice_spins: tuple[int, ...]
    weight: int

    @property
    def spins(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(s, 2) for s in self.twice_spins)

    @property
    def nuclear_dims(self) -> tuple[int, ...]:
        return tuple(s + 1 for s in self.twice_spins)

    @property
    def dim(self) -> int:
        return 2 * math.prod(self.nuclear_dims)


def enumerate_blocks(model: ReducedModel) -> list[SymmetryBlock]:
    """All collective-spin blocks of ``model`` in lexicographic order of (2I_1, ..., 2I_M)."""
    per_set = [
        [(s, multiplicity(n, s)) for s in allowed_twice_spins(n)] for n in model.counts
    ]
    blocks = []
    for combo in itertools.product(*per_set):
        blocks.append(
            SymmetryBlock(
                twice_spins=tuple(s for s, _ in combo),
                weight=math.prod(w for _, w in combo),
            )
        )
    return blocks
