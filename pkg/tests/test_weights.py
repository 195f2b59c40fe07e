import json
import math

import numpy as np
import pytest

from lorentzlab.errors import AdmissibilityError
from lorentzlab.weights import (
    WeightSequence,
    compensated_cumsum,
    ellr_power_sum,
    in_ellr,
    make_list_weight,
    make_power_weight,
    partial_power_sum,
    smallest_ellr_index,
    weight_from_spec,
)


def test_harmonic_prefix_sums():
    w = make_power_weight(1.0, 4)
    assert w.values(4).tolist() == [1.0, 0.5, 1 / 3, 0.25]
    assert w.W(2) == 1.5
    assert w.prefix(4)[-1] == pytest.approx(25 / 12, rel=1e-15)


def test_weight_extends_past_length_hint():
    w = make_power_weight(0.5, 2)
    assert w.W(100) == pytest.approx(math.fsum(i ** -0.5 for i in range(1, 101)), rel=1e-14)


def test_compensated_cumsum_beats_naive_sum():
    vals = [1.0] + [1e-16] * 10
    assert compensated_cumsum(vals)[-1] == math.fsum(vals) != 1.0


@pytest.mark.parametrize("vals", [[0.5, 0.25], [1.0, 2.0], [1.0, 0.0], []])
def test_list_weight_rejects_inadmissible(vals):
    with pytest.raises(AdmissibilityError):
        make_list_weight(vals)


@pytest.mark.parametrize("a", [0.0, 1.5, -1.0])
def test_power_weight_rejects_bad_exponent(a):
    with pytest.raises(AdmissibilityError):
        make_power_weight(a, 3)


def test_ellr_membership():
    assert smallest_ellr_index(make_power_weight(1.0, 3)) == 2
    assert smallest_ellr_index(make_power_weight(0.5, 3)) == 3
    assert smallest_ellr_index(make_power_weight(0.3, 3)) == 4
    assert in_ellr(make_power_weight(0.5, 3), 2) is False
    assert in_ellr(make_list_weight([1.0, 0.5]), 2) is None
    assert smallest_ellr_index(make_list_weight([1.0, 0.5])) is None
    assert smallest_ellr_index(make_list_weight([1.0, 0.5], tail_exponent=0.4)) == 3


def test_power_sums():
    w = make_power_weight(1.0, 3)
    assert ellr_power_sum(w, 2) == pytest.approx(math.pi ** 2 / 6, rel=1e-14)
    assert ellr_power_sum(w, 1) == math.inf
    assert partial_power_sum(w, 2, 2) == 1.25


def test_round_trip_and_weight_strings(tmp_path):
    w = make_list_weight([1.0, 0.5, 0.4], tail_exponent=0.8)
    assert WeightSequence.from_dict(json.loads(json.dumps(w.to_dict()))) == w
    path = tmp_path / "w.json"
    path.write_text("[1.0, 0.6, 0.3]")
    assert weight_from_spec(f"list:{path}").values(3).tolist() == [1.0, 0.6, 0.3]
    assert weight_from_spec("power:0.5", 4) == make_power_weight(0.5, 4)
    with pytest.raises(AdmissibilityError):
        weight_from_spec("geometric:2")


def test_values_are_decreasing():
    w = make_list_weight([1.0, 0.9, 0.9, 0.2], tail_exponent=1.0, n=40)
    v = w.values(40)
    assert np.all(np.diff(v) <= 0) and np.all(v > 0)
