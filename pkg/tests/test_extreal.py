import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from regime_ruin.extreal import INF, ONE, ZERO, ExtReal

# no subnormal products: 0 must come from an exact zero, not underflow
finite = st.one_of(st.just(0.0), st.floats(min_value=1e-100, max_value=1e100))
ext = st.one_of(finite.map(ExtReal), st.just(INF))


def test_zero_times_inf_is_zero():
    assert ZERO * INF == 0.0
    assert INF * 0.0 == 0.0
    assert (INF * ZERO).is_finite


def test_inf_absorbs():
    assert INF + 1.0 == INF
    assert not (ExtReal(2.0) * INF).is_finite


@pytest.mark.parametrize("bad", [-1.0, math.nan])
def test_rejects_outside_domain(bad):
    with pytest.raises(ValueError):
        ExtReal(bad)


def test_geo():
    assert ExtReal(0.5).geo() == 2.0
    assert ZERO.geo() == ONE
    assert ExtReal(1.0).geo() == INF
    assert INF.geo() == INF


@given(ext, ext)
def test_commutative(x, y):
    assert x + y == y + x
    assert x * y == y * x


@given(ext, ext, ext)
def test_associative_mul_on_zero_inf(x, y, z):
    lhs, rhs = (x * y) * z, x * (y * z)
    if lhs.is_finite and rhs.is_finite:
        assert math.isclose(lhs.value, rhs.value, rel_tol=1e-12)
    else:
        assert lhs == rhs


@given(ext, ext)
def test_order_total(x, y):
    assert (x < y) + (x == y) + (y < x) == 1


@given(st.floats(min_value=0.0, max_value=0.999999))
def test_geo_matches_series(x):
    assert math.isclose(ExtReal(x).geo().value, 1.0 / (1.0 - x))


def test_numpy_scalars_coerce():
    np = pytest.importorskip("numpy")
    assert ExtReal(2.0) * np.float64(3.0) == 6.0
    assert ExtReal(1.0) < np.float64(2.0)


def test_rejects_non_numbers():
    with pytest.raises(TypeError):
        ExtReal(1.0) + "x"
