import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzlab.errors import DimensionError, LorentzLabError
from lorentzlab.polynomials import (
    HomogeneousPolynomial,
    PowerSumComposite,
    equicontinuity_bound,
    form_coefficient,
    gallery,
    mixed_form_value,
    monomials,
    polarize,
    projection_norm_bound,
    random_polynomial,
    restrict,
    target_norm,
    truncation_approximant,
)
from lorentzlab.weights import make_power_weight

W1 = make_power_weight(1.0, 8)
x1x2 = HomogeneousPolynomial.scalar(2, 2, {(1, 1): 1.0})


def test_monomial_count():
    assert len(monomials(3, 2)) == math.comb(4, 2)
    assert len(monomials(4, 3)) == math.comb(6, 3)


def test_gallery_shapes():
    x = np.array([2.0, 3.0, 5.0])
    assert gallery("diag-N", 2, 3, r=2.0).evaluate(x).tolist() == [4.0, 9.0, 25.0]
    assert gallery("real-BP", 3, 2, r=2.0).evaluate(x[:2]).tolist() == [8.0, 12.0]
    assert gallery("diag-N", 3, 4, r=2.0).value_norm(np.eye(4)[2]) == 1.0
    # M = 2 is even, so the signs disappear
    assert gallery("sign-qPa", M=2, signs=[1, -1]).evaluate([2.0, 3.0]) == 13.0
    assert gallery("coordinate", 3, 3, index=2).evaluate(x) == 27.0


@pytest.mark.parametrize("N", [2, 3, 4])
def test_real_lb_at_first_basis_vector(N):
    assert gallery("real-LB", N, 3, M=2).evaluate([1.0, 0.0, 0.0]) == -1.0


def test_gallery_errors():
    with pytest.raises(LorentzLabError):
        gallery("real-LB", 1, 3, M=2)
    with pytest.raises(LorentzLabError):
        gallery("nope", 2, 2)
    with pytest.raises(DimensionError):
        gallery("coordinate", 2, 2, index=3)


def test_polarization_of_product():
    assert polarize(x1x2, [[1, 0], [0, 1]]) == 0.5
    with pytest.raises(LorentzLabError):
        polarize(x1x2, [[1, 0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_polarization_is_symmetric_and_diagonal(N, n, seed):
    rng = np.random.default_rng(seed)
    P = random_polynomial(rng, N, n)
    xs = [rng.uniform(-1, 1, n) for _ in range(N)]
    assert polarize(P, xs) == pytest.approx(polarize(P, xs[::-1]), abs=1e-12)
    assert polarize(P, [xs[0]] * N) == pytest.approx(P.evaluate(xs[0]), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_mixed_form_two_routes(N, n, seed):
    rng = np.random.default_rng(seed)
    P = random_polynomial(rng, N, n)
    a = rng.uniform(-1, 1, n)
    j = int(rng.integers(1, n + 1))
    M = int(rng.integers(0, N + 1))
    assert mixed_form_value(P, a, j, M) == pytest.approx(form_coefficient(P, a, j, M), abs=1e-12)


def test_truncation_worked_value():
    approx = truncation_approximant(x1x2, [1, 2])
    assert approx.terms == {(0, (1, 1)): 0.5}
    assert truncation_approximant(x1x2, [2, 2]).terms == x1x2.terms


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_truncation_matches_projected_polarization(N, n, seed):
    rng = np.random.default_rng(seed)
    P = random_polynomial(rng, N, n)
    ks = [int(k) for k in rng.integers(1, n + 1, size=N)]
    x = rng.uniform(-1, 1, n)
    projected = []
    for k in ks:
        y = x.copy()
        y[k:] = 0.0
        projected.append(y)
    direct = polarize(P, projected)
    assert truncation_approximant(P, ks).evaluate(x) == pytest.approx(direct, abs=1e-12)


def test_restrict_kills_late_basis_vectors():
    P = restrict(gallery("power-sum", 3, 4), 2)
    assert P.evaluate(np.eye(4)[3]) == 0.0
    assert P.evaluate(np.eye(4)[1]) == 1.0


def test_composite_expansion_agrees():
    rng = np.random.default_rng(0)
    Q = gallery("real-BP", 2, 3, r=2.0)
    comp = PowerSumComposite(Q, [1.0, -1.0, 1.0], 3)
    X = rng.uniform(-1, 1, (20, 3))
    assert comp.evaluate_many(X)[:, 0] == pytest.approx(comp.expand().evaluate_many(X)[:, 0],
                                                        abs=1e-12)


def test_arithmetic_and_serialization():
    P = gallery("power-sum", 2, 2)
    D = (P - x1x2) * 2.0
    assert D.evaluate([1.0, 2.0]) == 2.0 * (5.0 - 2.0)
    assert (P - P).terms == {}
    back = HomogeneousPolynomial.from_dict(json.loads(json.dumps(D.to_dict())))
    assert back.terms == D.terms and back.target_r == D.target_r


def test_equicontinuity_bound_dominates():
    rng = np.random.default_rng(1)
    for _ in range(200):
        u, v = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)
        gap = abs(target_norm(u, 3) ** 3 - target_norm(v, 3) ** 3)
        assert gap <= equicontinuity_bound(3, u, v) * (1 + 1e-12)


def test_projection_norm_bound_is_at_least_one():
    assert projection_norm_bound(W1, 6, 200, 0) >= 1.0
