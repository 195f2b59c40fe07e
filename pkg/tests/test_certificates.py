import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzlab.certificates import (
    PerturbationCertificate,
    certify_predual_point,
    lemma2_certify,
    verify_certificate,
)
from lorentzlab.errors import HypothesisViolation, NotInBallError
from lorentzlab.sequences import GeometricTail, TruncatedVector, norm_W
from lorentzlab.weights import make_power_weight

W1 = make_power_weight(1.0, 32)


def cert_for(coords, tail=None):
    return certify_predual_point(TruncatedVector(coords, tail), W1)


def test_basis_vector_certificate():
    c = cert_for([1.0])
    assert (c.n0, c.delta) == (2, 0.5)
    assert verify_certificate(c, 101, 50).passed


def test_zero_vector_certificate():
    c = cert_for([0.0])
    assert (c.n0, c.delta) == (1, 1.0)


def test_boundary_point_certificate():
    # (1, 0.5, lam): the 3-prefix 1.5 + |lam| must stay below W(3) = 11/6
    c = cert_for([1.0, 0.5])
    assert c.n0 == 3
    assert c.delta == pytest.approx(1 / 3, rel=1e-14)
    assert verify_certificate(c, 1001, 30).passed


def test_doubled_delta_fails_at_second_coordinate():
    rep = verify_certificate(cert_for([1.0]).with_params(delta=1.0), 101, 50)
    assert not rep.passed
    n, lam, value = rep.violations[0]
    assert n == 2 and abs(lam) == 1.0 and value == pytest.approx(4 / 3)


def test_zero_delta_is_vacuous():
    assert verify_certificate(cert_for([1.0]).with_params(delta=0.0), 101, 50).passed


def test_outside_ball_rejected():
    with pytest.raises(NotInBallError):
        cert_for([1.0, 1.0])


def test_lemma_construction_on_tailed_point():
    z = TruncatedVector([0.9], GeometricTail(0.1, 0.5, 2))
    c = lemma2_certify(z, TruncatedVector([0.9]), W1)
    # prefix ratio 0.9 / W(n) first drops below rho = 0.275 at n = 15
    assert c.trace["rho"] == pytest.approx(0.275)
    assert (c.trace["n1"], c.trace["n2"], c.n0) == (15, 16, 17)
    assert verify_certificate(c, 1001, 10 * c.n0).passed


def test_lemma_delegates_for_finite_support():
    z = TruncatedVector([0.8, 0.1])
    c = lemma2_certify(z, TruncatedVector([0.7]), W1)
    assert c.n0 == cert_for([0.8, 0.1]).n0
    assert "n2" not in c.trace


def test_lemma_gate():
    with pytest.raises(HypothesisViolation):
        lemma2_certify(TruncatedVector([0.6]), TruncatedVector([0.0]), W1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_subnormal=False), min_size=1, max_size=6),
       st.floats(0.05, 0.99), st.integers(0, 10), st.floats(0.01, 1.0))
def test_shrinking_keeps_validity(coords, scale, extra_n0, shrink):
    x = np.array(coords)
    if not np.any(x):
        x[0] = 1.0
    x = x * scale / norm_W(x, W1)
    c = cert_for(x)
    smaller = c.with_params(n0=c.n0 + extra_n0, delta=c.delta * shrink)
    assert verify_certificate(smaller, 201, 10 * smaller.n0).passed


def test_round_trip():
    c = cert_for([0.5, -0.25], None)
    back = PerturbationCertificate.from_dict(c.to_dict())
    assert (back.n0, back.delta) == (c.n0, c.delta)
    assert back.subject.coords.tolist() == [0.5, -0.25]
