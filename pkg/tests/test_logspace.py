import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from owl.logspace import (LOG_ZERO, LogSignedValue, logsumexp,
                          signed_log_gap_product, signed_logsumexp)

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(finite)
def test_float_round_trip(x):
    v = LogSignedValue.from_float(x)
    assert math.isclose(v.to_float(), x, rel_tol=1e-12, abs_tol=0.0)


def test_zero_representation():
    z = LogSignedValue.from_float(0.0)
    assert z.sign == 0 and z.log_abs == LOG_ZERO and z.to_float() == 0.0
    prod = z * LogSignedValue.from_float(5.0)
    assert prod.sign == 0


@given(finite.filter(lambda x: abs(x) > 1e-6),
       finite.filter(lambda x: abs(x) > 1e-6))
def test_multiplication_and_division(a, b):
    va, vb = LogSignedValue.from_float(a), LogSignedValue.from_float(b)
    assert math.isclose((va * vb).to_float(), a * b, rel_tol=1e-10)
    assert math.isclose((va / vb).to_float(), a / b, rel_tol=1e-10)


def test_gap_product_matches_direct_evaluation():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 4))
    signs, logs = signed_log_gap_product(x)
    for row, s, l in zip(x, signs, logs):
        direct = np.prod([row[j] - row[i]
                          for i in range(4) for j in range(i + 1, 4)])
        assert s == np.sign(direct)
        assert math.isclose(s * math.exp(l), direct, rel_tol=1e-10)


def test_gap_product_handles_ties_and_small_d():
    signs, logs = signed_log_gap_product(np.array([[1.0, 1.0, 2.0]]))
    assert signs[0] == 0 and logs[0] == LOG_ZERO
    signs, _ = signed_log_gap_product(np.array([[3.5]]))
    assert signs[0] == 1  # empty product


def test_gap_product_survives_extreme_scale():
    # 10 points spread 1e200 apart: the plain product overflows doubles.
    x = np.arange(10.0)[None, :] * 1e200
    signs, logs = signed_log_gap_product(x)
    assert signs[0] == 1 and np.isfinite(logs[0])
    expected = sum(math.log((j - i) * 1e200)
                   for i in range(10) for j in range(i + 1, 10))
    assert math.isclose(logs[0], expected, rel_tol=1e-12)


def test_logsumexp_against_reference():
    logs = np.array([-2.0, 0.5, 3.0, -40.0])
    assert math.isclose(logsumexp(logs), math.log(np.exp(logs).sum()),
                        rel_tol=1e-12)
    assert logsumexp(np.array([])) == LOG_ZERO
    assert logsumexp(np.array([LOG_ZERO, LOG_ZERO])) == LOG_ZERO


def test_signed_logsumexp_cancellation():
    signs = np.array([1, -1])
    logs = np.array([2.0, 2.0])
    assert signed_logsumexp(signs, logs).sign == 0
    signs = np.array([1, 1, -1])
    logs = np.log(np.array([5.0, 3.0, 6.0]))
    v = signed_logsumexp(signs, logs)
    assert v.sign == 1
    assert math.isclose(v.to_float(), 2.0, rel_tol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1,
                max_size=20))
def test_signed_logsumexp_matches_plain_sum(values):
    arr = np.array(values)
    signs = np.sign(arr).astype(int)
    with np.errstate(divide="ignore"):
        logs = np.where(arr == 0, LOG_ZERO, np.log(np.abs(arr)))
    total = arr.sum()
    got = signed_logsumexp(signs, logs).to_float()
    assert math.isclose(got, total, rel_tol=1e-9, abs_tol=1e-9)
