import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicemux.demand_gen import DemandTrace
from slicemux.demand_stats import (
    EmpiricalCdf,
    empirical_cdf,
    excess_trace,
    isolation_floor,
    slice_floors,
)
from slicemux.errors import DimensionMismatch, EmptyTrace, ValidationError


def scan_floor(column, p_l):
    """Linear scan over every integer demand level."""
    column = np.asarray(column)
    for w in range(int(column.max()) + 1):
        if np.count_nonzero(column <= w) / column.size >= p_l:
            return w
    raise AssertionError("unreachable")


def test_cdf_counting():
    cdf = empirical_cdf([0, 0, 10, 10])
    assert cdf(0) == 0.5 and cdf(10) == 1.0 and cdf(5) == 0.5 and cdf(-1) == 0.0
    single = empirical_cdf([7])
    assert single(6) == 0.0 and single(7) == 1.0
    assert empirical_cdf(range(1, 11))(8) == 0.8


def test_cdf_shape():
    cdf = empirical_cdf([5, 1, 3, 3, 1])
    assert cdf.values.tolist() == [1, 3, 5]
    assert cdf.counts.tolist() == [2, 4, 5]
    assert cdf.fractions[-1] == 1.0
    assert cdf.count_le(3) == 4 and cdf.count_le(0) == 0


def test_empty_trace():
    with pytest.raises(EmptyTrace):
        empirical_cdf([])


def test_floor_examples():
    cdf = empirical_cdf(range(1, 11))
    f = isolation_floor(cdf, 0.85)
    assert (f.w_l, f.p_m) == (9, 0.9) == (scan_floor(range(1, 11), 0.85), 0.9)
    assert isolation_floor(cdf, 0.0).w_l == 0
    top = isolation_floor(cdf, 1.0)
    assert (top.w_l, top.p_m) == (10, 1.0)


def test_floor_rejects_bad_probability():
    with pytest.raises(ValidationError):
        isolation_floor(empirical_cdf([1]), 1.2)


def test_distribution_cdf():
    cdf = EmpiricalCdf.from_distribution([10, 0, 10], [0.25, 0.5, 0.25])
    assert cdf.values.tolist() == [0, 10]
    assert cdf(0) == 0.5 and cdf(10) == 1.0
    with pytest.raises(ValidationError):
        cdf.count_le(3)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(0, 30), min_size=1, max_size=80),
    st.floats(0.0, 1.0, allow_nan=False),
)
def test_floor_matches_scan(column, p_l):
    f = isolation_floor(empirical_cdf(column), p_l)
    assert f.w_l == scan_floor(column, p_l)
    assert f.p_m >= p_l


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(0, 30), min_size=1, max_size=60),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_floor_monotone_in_p_l(column, a, b):
    cdf = empirical_cdf(column)
    lo, hi = sorted((a, b))
    assert isolation_floor(cdf, lo).w_l <= isolation_floor(cdf, hi).w_l


@settings(max_examples=100, deadline=None)
@given(st.sets(st.integers(0, 200), min_size=1, max_size=40), st.data())
def test_distinct_values_hit_p_l_exactly(values, data):
    column = sorted(values)
    k = data.draw(st.integers(1, len(column)))
    p_l = k / len(column)
    assert isolation_floor(empirical_cdf(column), p_l).p_m == p_l


def test_excess_trace():
    tr = DemandTrace(np.array([[3, 1, 0]]))
    assert excess_trace(tr, [1, 1, 4]).tolist() == [[2, 0, -4]]
    floors = slice_floors(tr, [1.0, 1.0, 1.0])
    assert excess_trace(tr, floors).tolist() == [[0, 0, 0]]
    with pytest.raises(DimensionMismatch):
        excess_trace(tr, [1, 1])
    with pytest.raises(DimensionMismatch):
        slice_floors(tr, [0.5])
