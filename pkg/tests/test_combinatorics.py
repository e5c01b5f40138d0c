import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from centralspin.combinatorics import (
    allowed_twice_spins,
    enumerate_blocks,
    multiplicity,
    multiplicity_recurrence,
)
from centralspin.moments import ReducedModel

# W(N, I) for N <= 8, keyed by (N, 2I)
TABLE = {
    1: {1: 1},
    2: {0: 1, 2: 1},
    3: {1: 2, 3: 1},
    4: {0: 2, 2: 3, 4: 1},
    5: {1: 5, 3: 4, 5: 1},
    6: {0: 5, 2: 9, 4: 5, 6: 1},
    7: {1: 14, 3: 14, 5: 6, 7: 1},
    8: {0: 14, 2: 28, 4: 20, 6: 7, 8: 1},
}


def test_table():
    for n, row in TABLE.items():
        assert {s: multiplicity(n, s) for s in allowed_twice_spins(n)} == row


@pytest.mark.parametrize("n", range(1, 65))
def test_sum_rule(n):
    assert sum(multiplicity(n, s) * (s + 1) for s in allowed_twice_spins(n)) == 2**n


@given(st.integers(1, 120).flatmap(lambda n: st.tuples(st.just(n), st.sampled_from(allowed_twice_spins(n)))))
def test_recurrence_matches_closed_form(args):
    n, s = args
    assert multiplicity_recurrence(n, s) == multiplicity(n, s)


def test_unreachable_spin():
    with pytest.raises(ValueError):
        multiplicity(4, 1)
    with pytest.raises(ValueError):
        multiplicity(3, 5)
    with pytest.raises(ValueError):
        multiplicity(0, 0)


def test_two_set_example():
    blocks = enumerate_blocks(ReducedModel((0.5, 0.2), (4, 3)))
    assert [b.spins for b in blocks] == [
        (Fraction(i1), Fraction(i2, 2)) for i1 in (0, 1, 2) for i2 in (1, 3)
    ]
    assert [b.weight for b in blocks] == [4, 2, 6, 3, 2, 1]


@pytest.mark.parametrize("counts", [(1,), (4, 3), (2, 5, 1), (6, 11, 14)])
def test_blocks_cover_hilbert_space(counts):
    model = ReducedModel((0.1,) * len(counts), counts)
    blocks = enumerate_blocks(model)
    assert sum(b.weight * b.dim for b in blocks) == 2 ** (sum(counts) + 1)
    assert all(b.dim == 2 * math.prod(b.nuclear_dims) for b in blocks)
