import json

import numpy as np
import pytest

from lorentzlab.errors import InvariantBreach, LorentzLabError
from lorentzlab.norm_search import brute_force_norm, max_norm
from lorentzlab.polynomials import HomogeneousPolynomial, gallery, random_polynomial
from lorentzlab.sequences import norm_W
from lorentzlab.tensor_duality import (
    DiscreteMeasure,
    SymmetricTensorRep,
    conjugate_exponent,
    elementary,
    linear_power,
    pair,
    pis_bracket,
    pis_lower,
    random_tensor,
    representing_measure,
)
from lorentzlab.weights import make_power_weight

W1 = make_power_weight(1.0, 8)
E = np.eye(3)


def rep(N, terms, y_exponent=None, dim=3):
    return SymmetricTensorRep(N, dim, W1, terms, y_exponent)


def test_pairing_examples():
    assert pair(rep(3, [(1.0, E[0])]), gallery("power-sum", 3, 3)) == 1.0
    u = rep(2, [(2.0, E[0]), (-1.0, E[1])])
    assert pair(u, gallery("power-sum", 2, 3)) == 1.0
    xy = HomogeneousPolynomial.scalar(2, 3, {(1, 1, 0): 1.0})
    assert pair(rep(2, [(1.0, E[0] + E[1])]), xy) == 1.0


def test_pairing_rejects_mismatch():
    with pytest.raises(LorentzLabError):
        pair(rep(2, [(1.0, E[0])]), gallery("power-sum", 3, 3))
    with pytest.raises(LorentzLabError):
        pair(rep(2, [(1.0, E[0])]), gallery("diag-N", 2, 3, r=2.0))


def test_linear_power_expansion():
    phi = np.array([1.0, -2.0, 0.5])
    P = linear_power(phi, 3)
    z = np.array([0.3, 0.1, -0.7])
    assert P.evaluate(z) == pytest.approx(float(phi @ z) ** 3, rel=1e-13)


def test_conjugate_exponent():
    assert conjugate_exponent(2.0) == 2.0
    assert conjugate_exponent(3.0) == 1.5
    assert conjugate_exponent(1.0) == np.inf


def test_empty_and_cancelling_tensors():
    zero = rep(2, [])
    assert pair(zero, gallery("power-sum", 2, 3)) == 0.0
    b = pis_bracket(zero, restarts=1, family_size=2)
    assert (b.lower, b.upper) == (0.0, 0.0)
    cancel = rep(2, [(1.0, E[0]), (-1.0, E[0])])
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert pair(cancel, random_polynomial(rng, 2, 3)) == 0.0
    assert representing_measure(zero).atoms == []


def test_elementary_collapse():
    x = np.array([0.5, -1.0, 0.25])
    b = pis_bracket(elementary(x, 2, W1), restarts=1, family_size=2)
    assert b.collapsed and b.lower_exact_norm
    assert b.upper == pytest.approx(norm_W(x, W1) ** 2, rel=1e-9)


def test_basis_square_sum_bracket():
    # lower: P = x(1)^2 + x(2)^2 has norm 5/4, so pi_s >= 2 / (5/4);
    # upper: 0.4 [(1, 1/2)^2 + (1, -1/2)^2 + (1/2, 1)^2 + (-1/2, 1)^2], unit atoms, cost 1.6
    u = rep(2, [(1.0, E[0]), (1.0, E[1])])
    b = pis_bracket(u)
    assert b.upper <= u.value()
    assert b.lower == pytest.approx(1.6, rel=1e-6)
    assert b.upper == pytest.approx(1.6, rel=1e-6)


def test_lower_bound_below_upper_on_random_tensors():
    rng = np.random.default_rng(2)
    for i in range(6):
        u = random_tensor(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), W1)
        b = pis_bracket(u, restarts=1, family_size=4, seed=i)
        assert b.lower <= b.upper * (1 + 1e-9) + 1e-12
        assert b.upper <= u.value() * (1 + 1e-9)


def test_pairing_bounded_by_norms():
    rng = np.random.default_rng(3)
    for _ in range(20):
        N, n = int(rng.integers(1, 3)), int(rng.integers(1, 4))
        u = random_tensor(rng, N, n, W1)
        P = random_polynomial(rng, N, n)
        assert abs(pair(u, P)) <= u.value() * brute_force_norm(P, W1).upper * (1 + 1e-12)


def test_searched_lower_is_flagged():
    u = rep(2, [(1.0, E[0]), (1.0, E[1])])
    value, P, exact = pis_lower(u, family_size=2, seed=0,
                                candidates=[gallery("power-sum", 2, 3)])
    if not exact:
        assert abs(pair(u, P)) == pytest.approx(value * max_norm(P, W1, seed=0).value, rel=1e-6)


def test_measure_atoms():
    u = rep(2, [(2.0, 2 * E[0], E[1])], y_exponent=2.0)
    mu = representing_measure(u)
    (weight, xh, yh), = mu.atoms
    assert weight == 8.0
    assert xh.tolist() == E[0].tolist() and yh.tolist() == E[1].tolist()
    # second component x(1)^2: pair = 2 <(0, 4, 0), e_2> = 8
    Q = HomogeneousPolynomial(2, 3, {(1, (2, 0, 0)): 1.0}, 2.0)
    assert mu.integrate(Q) == pair(u, Q) == 8.0


def test_measure_single_atom_diagonal():
    u = rep(3, [(1.0, E[0], E[0])], y_exponent=2.0)
    assert representing_measure(u).integrate(gallery("diag-N", 3, 3, r=2.0)) == 1.0


def test_negative_weight_stays_in_atom():
    mu = representing_measure(rep(3, [(-1.5, -E[1])]))
    weight, xh, _ = mu.atoms[0]
    assert weight == -1.5 and xh.tolist() == (-E[1]).tolist()
    assert mu.total_variation() == 1.5


def test_measure_validates_units():
    with pytest.raises(InvariantBreach):
        DiscreteMeasure(2, W1, [(1.0, 2 * E[0], None)])


def test_round_trips():
    rng = np.random.default_rng(4)
    u = random_tensor(rng, 2, 3, W1, y_exponent=2.0)
    back = SymmetricTensorRep.from_dict(json.loads(json.dumps(u.to_dict())))
    P = random_polynomial(rng, 2, 3, target_r=2.0)
    assert pair(back, P) == pair(u, P)
    mu = representing_measure(u)
    mu2 = DiscreteMeasure.from_dict(json.loads(json.dumps(mu.to_dict())))
    assert mu2.integrate(P) == mu.integrate(P)
