import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lorentzlab.certificates import certify_predual_point
from lorentzlab.errors import CertificateError, DimensionError
from lorentzlab.norm_search import (
    WBallDescription,
    brute_force_norm,
    isotonic_nonincreasing,
    lift,
    local_max_diagnostic,
    max_norm,
    project_onto_wball,
)
from lorentzlab.polynomials import HomogeneousPolynomial, gallery
from lorentzlab.sequences import TruncatedVector, norm_W
from lorentzlab.weights import make_power_weight

W2 = make_power_weight(1.0, 2)
W5 = make_power_weight(1.0, 5)
vec5 = arrays(float, 5, elements=st.floats(-5, 5, allow_subnormal=False))


def _vertices(w, n):
    """Signed permutations of w(1..n): the extreme points of the W-ball."""
    base = w.values(n)
    out = set()
    for perm in itertools.permutations(base):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            out.add(tuple(s * p for s, p in zip(signs, perm)))
    return np.array(sorted(out))


VERTS5 = _vertices(W5, 5)


def test_projection_examples():
    assert project_onto_wball([2.0, 0.0], W2).tolist() == [1.0, 0.0]
    assert project_onto_wball([2.0, 2.0], W2).tolist() == [0.75, 0.75]
    assert project_onto_wball([0.3, -0.2], W2).tolist() == [0.3, -0.2]


@settings(max_examples=80, deadline=None)
@given(vec5)
def test_projection_is_the_nearest_ball_point(x):
    p = project_onto_wball(x, W5)
    assert norm_W(p, W5) <= 1.0 + 1e-12
    # obtuse-angle criterion against every extreme point
    assert np.max((VERTS5 - p) @ (x - p)) <= 1e-9 * (1.0 + float(np.abs(x).sum()))
    assert project_onto_wball(p, W5) == pytest.approx(p, abs=1e-12)


@settings(max_examples=80)
@given(arrays(float, st.integers(1, 8), elements=st.floats(-5, 5, allow_subnormal=False)))
def test_isotonic_fit(y):
    v = isotonic_nonincreasing(y)
    assert np.all(np.diff(v) <= 1e-12)
    assert v.sum() == pytest.approx(y.sum(), abs=1e-9)
    # optimality: residual is orthogonal to the fit and to constants
    assert float((y - v) @ v) == pytest.approx(0.0, abs=1e-8)


def test_ball_description():
    ball = WBallDescription(W2, 2)
    assert ball.contains([1.0, 0.5]) and not ball.contains([1.0, 0.6])
    with pytest.raises(DimensionError):
        ball.contains([1.0])


def test_worked_norm_values():
    assert max_norm(gallery("power-sum", 2, 2), W2, seed=0).value == pytest.approx(1.25, rel=1e-12)
    diag = max_norm(gallery("diag-N", 2, 2, r=2.0), W2, seed=0)
    assert diag.value == pytest.approx(math.sqrt(17) / 4, rel=1e-12)
    prod = max_norm(HomogeneousPolynomial.scalar(2, 2, {(1, 1): 1.0}), W2, seed=0)
    assert prod.value == pytest.approx(0.5625, rel=1e-10)
    assert np.abs(prod.point) == pytest.approx([0.75, 0.75], abs=1e-6)


def test_search_is_deterministic():
    P = gallery("real-LB", 3, 3, M=2)
    a = max_norm(P, W5, seed=7, starts=12).to_dict()
    b = max_norm(P, W5, seed=7, starts=12).to_dict()
    assert a == b
    assert a["trace_summary"]["converged"] <= 12


def test_bracket_contains_search():
    P = gallery("real-BP", 2, 3, w=W5)
    br = brute_force_norm(P, W5)
    assert br.lower <= br.upper
    assert br.contains(max_norm(P, W5, seed=0).value)
    with pytest.raises(DimensionError):
        brute_force_norm(gallery("power-sum", 2, 5), W5)


def test_local_max_at_restricted_point():
    P = gallery("power-sum", 2, 4)
    a = lift(np.array([1.0]), 4)
    cert = certify_predual_point(TruncatedVector(a), W5)
    # x -> x(1)^2 + ... is not locally maximal at e_1 along e_2
    rep = local_max_diagnostic(P, a, cert, 2)
    assert not rep.local_max_ok and rep.form_flag
    with pytest.raises(CertificateError):
        local_max_diagnostic(P, a, cert, 1)
    with pytest.raises(CertificateError):
        local_max_diagnostic(P, lift(np.array([0.5]), 4), cert, 2)
