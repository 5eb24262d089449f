import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ghicast.errors import LengthError, NormalizationError, ZeroVarianceError
from ghicast.metrics import nrmse, r_squared

positive = arrays(float, st.integers(1, 40), elements=st.floats(1.0, 1000.0))


def test_nrmse_examples():
    assert nrmse([100, 100], [100, 200]) == math.sqrt(10000 / 2) / 100
    assert nrmse([3, 4, 5], [3, 4, 5]) == 0.0
    with pytest.raises(NormalizationError):
        nrmse([0, 0], [1, 1])
    with pytest.raises(LengthError):
        nrmse([1, 2], [1])
    with pytest.raises(LengthError):
        nrmse([], [])


def test_r_squared_examples():
    assert r_squared([1, 2, 3], [1, 2, 4]) == 0.5
    assert r_squared([1, 2, 3], [2, 2, 2]) == 0.0
    assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
    assert r_squared([1, 2, 3], [3, 2, 1]) == -3.0
    with pytest.raises(ZeroVarianceError, match="zero-variance"):
        r_squared([2, 2, 2], [1, 2, 3])


@settings(max_examples=1000)
@given(positive.flatmap(lambda a: st.tuples(
    st.just(a), arrays(float, a.size, elements=st.floats(0.0, 1000.0)))), st.floats(1e-3, 1e3))
def test_nrmse_scale_invariant(pair, alpha):
    a, f = pair
    assert nrmse(alpha * a, alpha * f) == pytest.approx(nrmse(a, f), rel=1e-9, abs=1e-12)
    assert nrmse(a, f) >= 0.0
    assert (nrmse(a, f) == 0.0) == bool(np.array_equal(a, f))


@settings(max_examples=1000)
@given(arrays(float, st.integers(2, 40), elements=st.floats(-100, 100)).filter(lambda a: np.ptp(a) > 1e-3)
       .flatmap(lambda a: st.tuples(st.just(a), arrays(float, a.size, elements=st.floats(-100, 100)))),
       st.floats(0.01, 100).flatmap(lambda m: st.sampled_from([m, -m])), st.floats(-100, 100))
def test_r_squared_affine_invariant(pair, scale, shift):
    a, p = pair
    assert r_squared(scale * a + shift, scale * p + shift) == pytest.approx(
        r_squared(a, p), rel=1e-7, abs=1e-7)


# ranges far below 1e-150 underflow the squared deviations to an exact zero
@given(arrays(float, st.integers(2, 40), elements=st.floats(-100, 100)).filter(lambda a: np.ptp(a) > 1e-3))
def test_r_squared_self_is_one(a):
    assert r_squared(a, a) == 1.0
