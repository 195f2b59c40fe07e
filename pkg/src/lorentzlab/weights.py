"""Admissible weight sequences w and their prefix sums W(n).

Two generators are supported: power laws ``w(i) = i**-a`` with ``0 < a <= 1``
and explicit finite lists, optionally continued past their last entry by a
power-law tail ``w(i) = w(m) * (m / i)**b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AdmissibilityError, HorizonError

__all__ = [
    "WeightSequence",
    "make_power_weight",
    "make_list_weight",
    "smallest_ellr_index",
    "in_ellr",
    "compensated_cumsum",
    "weight_from_spec",
]


def compensated_cumsum(values) -> np.ndarray:
    """Prefix sums with Neumaier compensation."""
    vals = np.asarray(values, dtype=float)
    out = np.empty_like(vals)
    s = 0.0
    comp = 0.0
    for i, v in enumerate(vals.tolist()):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        out[i] = s + comp
    return out


@dataclass(frozen=True)
class WeightSequence:
    kind: str
    n: int
    a: Optional[float] = None
    explicit: Optional[tuple] = None
    tail_exponent: Optional[float] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("power", "list"):
            raise AdmissibilityError(f"unknown weight kind {self.kind!r}")
        if self.n < 1:
            raise AdmissibilityError("length hint must be >= 1")
        if self.kind == "power":
            if self.a is None or not (0.0 < self.a <= 1.0):
                raise AdmissibilityError(f"power exponent must lie in (0, 1], got {self.a}")
        else:
            vals = self.explicit
            if not vals:
                raise AdmissibilityError("explicit weight list is empty")
            if vals[0] != 1.0:
                raise AdmissibilityError("admissible weights need w(1) = 1")
            for i in range(len(vals) - 1):
                if not (vals[i] >= vals[i + 1] > 0.0):
                    raise AdmissibilityError(
                        f"weights must be positive and non-increasing (index {i + 2})")
            if vals[-1] <= 0.0:
                raise AdmissibilityError("weights must be positive")
            if self.tail_exponent is not None and not (0.0 < self.tail_exponent <= 1.0):
                raise AdmissibilityError("tail exponent must lie in (0, 1]")
        self._materialize(self.n)

    # -- materialization -------------------------------------------------
    @property
    def max_length(self) -> Optional[int]:
        """Largest index that can be materialized (None means unbounded)."""
        if self.kind == "list" and self.tail_exponent is None:
            return len(self.explicit)
        return None

    def _raw_values(self, k: int) -> np.ndarray:
        idx = np.arange(1, k + 1, dtype=float)
        if self.kind == "power":
            if self.a == 1.0:
                return 1.0 / idx
            return idx ** (-self.a)
        m = len(self.explicit)
        if self.max_length is not None and k > m:
            raise HorizonError(
                f"explicit weight has {m} entries and no tail rule; index {k} requested")
        out = np.empty(k)
        head = min(k, m)
        out[:head] = self.explicit[:head]
        if k > m:
            out[m:] = self.explicit[-1] * (m / idx[m:]) ** self.tail_exponent
        return out

    def _materialize(self, k: int) -> None:
        have = self._cache.get("values")
        if have is not None and len(have) >= k:
            return
        size = max(k, 2 * len(have) if have is not None else k)
        if self.max_length is not None:
            size = min(size, self.max_length) if k <= self.max_length else k
        vals = self._raw_values(size)
        vals.setflags(write=False)
        pref = compensated_cumsum(vals)
        pref.setflags(write=False)
        self._cache["values"] = vals
        self._cache["prefix"] = pref

    def values(self, k: Optional[int] = None) -> np.ndarray:
        """w(1..k) (defaults to the length hint)."""
        k = self.n if k is None else int(k)
        self._materialize(k)
        return self._cache["values"][:k]

    def prefix(self, k: Optional[int] = None) -> np.ndarray:
        """W(1..k)."""
        k = self.n if k is None else int(k)
        self._materialize(k)
        return self._cache["prefix"][:k]

    def W(self, k: int) -> float:
        return float(self.prefix(k)[k - 1])

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n}
        if self.kind == "power":
            d["a"] = self.a
        else:
            d["values"] = list(self.explicit)
            if self.tail_exponent is not None:
                d["tail_exponent"] = self.tail_exponent
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSequence":
        if d["kind"] == "power":
            return make_power_weight(d["a"], d.get("n", 1))
        return make_list_weight(d["values"], d.get("tail_exponent"), n=d.get("n"))

    def spec_string(self) -> str:
        if self.kind == "power":
            return f"power:{self.a:g}"
        return f"list[{len(self.explicit)}]"


def make_power_weight(a: float, n: int) -> WeightSequence:
    """w(i) = i**-a, i = 1..n (extends on demand)."""
    return WeightSequence(kind="power", n=int(n), a=float(a))


def make_list_weight(values, tail_exponent: Optional[float] = None,
                     n: Optional[int] = None) -> WeightSequence:
    vals = tuple(float(v) for v in values)
    return WeightSequence(kind="list", n=int(n or len(vals)), explicit=vals,
                          tail_exponent=None if tail_exponent is None else float(tail_exponent))


def in_ellr(w: WeightSequence, r: float) -> Optional[bool]:
    """Whether w lies in l_r; None when a finite prefix cannot decide it."""
    if w.kind == "power":
        return r * w.a > 1.0
    if w.tail_exponent is not None:
        return r * w.tail_exponent > 1.0
    return None


def smallest_ellr_index(w: WeightSequence) -> Optional[int]:
    """Least natural M with w in l_M, or None if undecidable."""
    a = w.a if w.kind == "power" else w.tail_exponent
    if a is None:
        return None
    m = 1
    while not m * a > 1.0:
        m += 1
    return m


def weight_from_spec(spec: str, n: int = 1) -> WeightSequence:
    """Parse ``power:<a>`` or ``list:<path>`` (JSON list or weight object)."""
    kind, _, arg = spec.partition(":")
    if kind == "power":
        try:
            a = float(arg)
        except ValueError as exc:
            raise AdmissibilityError(f"bad power exponent in {spec!r}") from exc
        return make_power_weight(a, n)
    if kind == "list":
        import json
        with open(arg) as fh:
            data = json.load(fh)
        if isinstance(data, list):
            return make_list_weight(data, n=max(n, len(data)))
        return WeightSequence.from_dict(data)
    raise AdmissibilityError(f"unknown weight spec {spec!r}")


def partial_power_sum(w: WeightSequence, r: float, k: int) -> float:
    """sum_{i<=k} w(i)**r."""
    return math.fsum((w.values(k) ** r).tolist())


def ellr_power_sum(w: WeightSequence, r: float) -> float:
    """sum_i w(i)**r over all i (power laws via zeta; inf when divergent)."""
    from scipy.special import zeta
    if w.kind == "power":
        if r * w.a <= 1.0:
            return math.inf
        return float(zeta(r * w.a))
    m = len(w.explicit)
    head = partial_power_sum(w, r, m)
    if w.tail_exponent is None:
        return math.inf
    b = w.tail_exponent
    if r * b <= 1.0:
        return math.inf
    # sum_{i>m} (w_m m^b)^r i^{-rb}
    tail = (w.explicit[-1] * m ** b) ** r * float(zeta(r * b, m + 1))
    return head + tail
