import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lorentzlab.errors import DimensionError, MembershipError
from lorentzlab.sequences import (
    GeometricTail,
    InclusionTracker,
    TruncatedVector,
    decreasing_rearrangement,
    dual_norm_oracle,
    inclusion_into_ellr,
    norm_dws,
    norm_ellr,
    norm_W,
    norm_W_rows,
    norming_functional,
    parse_vector,
    rearrangement_indices,
)
from lorentzlab.weights import make_list_weight, make_power_weight

W1 = make_power_weight(1.0, 16)
finite = arrays(float, st.integers(1, 10), elements=st.floats(-10, 10, allow_subnormal=False))


def test_worked_norms():
    assert norm_W([1, 1], W1) == pytest.approx(4 / 3, rel=1e-15)
    assert norm_dws([1, 1], W1) == 1.5
    assert norm_dws([3, 4], make_power_weight(1.0, 2), 2.0) == pytest.approx(math.sqrt(16 + 4.5))
    assert norm_ellr([3, 4], 2) == 5.0


def test_rearrangement_with_tail():
    x = TruncatedVector([0.1, -2.0, 0.0], GeometricTail(1.0, 0.5, 4))
    xs = decreasing_rearrangement(x)
    assert xs.materialize(5)[:5].tolist() == [2.0, 0.5, 0.25, 0.125, 0.1]
    assert rearrangement_indices(x, 3).tolist() == [2, 4, 5]


def test_rearrangement_merges_tail_behind_head():
    x = TruncatedVector([0.3], GeometricTail(0.5, 0.5, 2))
    assert decreasing_rearrangement(x).materialize(4)[:4].tolist() == [0.3, 0.25, 0.125, 0.0625]


def test_tail_norm_sup_is_reached_early():
    # x(i) = 0.5^i: prefix ratios peak at n = 1
    x = TruncatedVector([0.5], GeometricTail(0.5, 0.5, 2))
    assert norm_W(x, W1) == 0.5
    assert x.tail_mass_after(0) == pytest.approx(1.0)


@given(finite)
def test_w_norm_duality(x):
    a, b = norm_W(x, W1), dual_norm_oracle(x, W1)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@given(finite)
def test_norming_functional_attains(x):
    phi = norming_functional(x, W1)
    assert norm_dws(phi, W1) == pytest.approx(1.0, rel=1e-12)
    assert float(phi @ x) == pytest.approx(norm_W(x, W1), rel=1e-12, abs=1e-300)


@given(finite, finite)
def test_triangle_and_homogeneity(x, y):
    n = min(x.size, y.size)
    x, y = x[:n], y[:n]
    assert norm_W(x + y, W1) <= (norm_W(x, W1) + norm_W(y, W1)) * (1 + 1e-12) + 1e-300
    assert norm_W(-3 * x, W1) == pytest.approx(3 * norm_W(x, W1), rel=1e-14)


@settings(max_examples=50)
@given(finite)
def test_rows_match_single(x):
    X = np.stack([x, 2 * x, np.roll(x, 1)])
    assert norm_W_rows(X, W1) == pytest.approx([norm_W(r, W1) for r in X], rel=1e-14)


def test_inclusion_into_ellr():
    tracker = InclusionTracker()
    rep = inclusion_into_ellr([1.0, 1.0, 1.0], W1, 2, tracker)
    assert rep.ellr == pytest.approx(math.sqrt(3))
    assert rep.ratio <= rep.holder_bound
    assert tracker.bound == rep.ratio
    with pytest.raises(MembershipError):
        inclusion_into_ellr([1.0], make_power_weight(0.5, 3), 2)
    with pytest.raises(MembershipError):
        inclusion_into_ellr([1.0], make_list_weight([1.0, 0.5]), 2)


def test_parse_vector():
    assert parse_vector("e3").coords.tolist() == [0.0, 0.0, 1.0]
    assert parse_vector("[1, -2]").coords.tolist() == [1.0, -2.0]
    x = parse_vector('{"coords": [1], "tail": {"c": 0.5, "t": 0.5, "from": 2}}')
    assert (x.value(2), x.value(3)) == (0.25, 0.125)
    with pytest.raises(DimensionError):
        parse_vector("[]")


def test_tail_must_follow_coordinates():
    with pytest.raises(ValueError):
        TruncatedVector([1.0, 2.0], GeometricTail(1.0, 0.5, 2))
    with pytest.raises(ValueError):
        GeometricTail(1.0, 1.0, 3)
