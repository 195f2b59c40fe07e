"""Vectors in truncations of d(w,s), d*(w,1) and d_*(w,1).

A ``TruncatedVector`` is a finite block of coordinates, optionally followed by a
geometric tail ``x(i) = c * t**(i - m)`` for ``i > m``.  All norms are computed
exactly for finite support; with a tail, suprema and sums are truncated at an
index past which the remainder is provably irrelevant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DimensionError, HorizonError, MembershipError
from .weights import WeightSequence, ellr_power_sum, in_ellr

__all__ = [
    "GeometricTail",
    "TruncatedVector",
    "as_vector",
    "basis_vector",
    "decreasing_rearrangement",
    "rearrangement_prefix",
    "rearrangement_indices",
    "norm_dws",
    "norm_W",
    "norm_W_rows",
    "norm_ellr",
    "dual_norm_oracle",
    "norming_functional",
    "norm_dw1_dual",
    "inclusion_into_ellr",
    "InclusionTracker",
    "InclusionReport",
    "parse_vector",
]

_MAX_HORIZON = 1 << 24


@dataclass(frozen=True)
class GeometricTail:
    """x(i) = c * t**(i - start + 1) for i >= start."""
    c: float
    t: float
    start: int

    def __post_init__(self):
        if not (0.0 < self.t < 1.0):
            raise ValueError(f"tail ratio must lie in (0, 1), got {self.t}")
        if self.start < 1:
            raise ValueError("tail start must be >= 1")

    def value(self, i: int) -> float:
        return self.c * self.t ** (i - self.start + 1)

    def to_dict(self) -> dict:
        return {"c": self.c, "t": self.t, "from": self.start}


class TruncatedVector:
    """A finitely supported real sequence, optionally with a geometric tail."""

    __slots__ = ("coords", "tail")

    def __init__(self, coords, tail: Optional[GeometricTail] = None):
        arr = np.array(coords, dtype=float).reshape(-1)
        if arr.size == 0:
            raise DimensionError("a vector needs at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        if tail is not None and tail.c == 0.0:
            tail = None
        if tail is not None:
            if tail.start < arr.size + 1:
                raise ValueError("tail must start after the materialized coordinates")
            if tail.start > arr.size + 1:
                arr = np.concatenate([arr, np.zeros(tail.start - 1 - arr.size)])
        arr.setflags(write=False)
        self.coords = arr
        self.tail = tail

    # -- basic queries ---------------------------------------------------
    @property
    def dim(self) -> int:
        return self.coords.size

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    def value(self, i: int) -> float:
        """x(i), 1-based."""
        if i <= self.dim:
            return float(self.coords[i - 1])
        return 0.0 if self.tail is None else self.tail.value(i)

    def materialize(self, k: int) -> np.ndarray:
        """x(1..max(k, dim)) as an array."""
        if k <= self.dim or self.tail is None:
            if k <= self.dim:
                return np.array(self.coords)
            return np.concatenate([self.coords, np.zeros(k - self.dim)])
        extra = self.tail.c * self.tail.t ** np.arange(1, k - self.dim + 1, dtype=float)
        return np.concatenate([self.coords, extra])

    def sup_beyond(self, k: int) -> float:
        """sup_{i > k} |x(i)|."""
        best = float(np.max(np.abs(self.coords[k:]))) if k < self.dim else 0.0
        if self.tail is not None:
            best = max(best, abs(self.tail.value(max(k + 1, self.tail.start))))
        return best

    def tail_mass_after(self, k: int) -> float:
        """sum_{i > k} |x(i)|."""
        mass = float(np.sum(np.abs(self.coords[k:]))) if k < self.dim else 0.0
        if self.tail is not None:
            j = max(k + 1, self.tail.start)
            mass += abs(self.tail.value(j)) / (1.0 - self.tail.t)
        return mass

    def support_size(self) -> float:
        """Largest index with a nonzero entry (inf with a tail)."""
        if self.tail is not None:
            return math.inf
        nz = np.flatnonzero(self.coords)
        return int(nz[-1]) + 1 if nz.size else 0

    # -- arithmetic ------------------------------------------------------
    def _combine(self, other: "TruncatedVector", sign: float) -> "TruncatedVector":
        k = max(self.dim, other.dim)
        tails = [tv.tail for tv in (self, other) if tv.tail is not None]
        if len(tails) == 2:
            ta, tb = self.tail, other.tail
            if ta.t != tb.t:
                raise ValueError("cannot combine geometric tails with different ratios")
            k = max(k, ta.start - 1, tb.start - 1)
            start = k + 1
            c = (ta.value(start) + sign * tb.value(start)) / ta.t
            tail = GeometricTail(c, ta.t, start)
        elif tails:
            src = self if self.tail is not None else other
            k = max(k, src.tail.start - 1)
            scale = 1.0 if src is self else sign
            tail = GeometricTail(scale * src.tail.value(k + 1) / src.tail.t, src.tail.t, k + 1)
        else:
            tail = None
        return TruncatedVector(self.materialize(k)[:k] + sign * other.materialize(k)[:k], tail)

    def __add__(self, other):
        return self._combine(as_vector(other), 1.0)

    def __sub__(self, other):
        return self._combine(as_vector(other), -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, s: float):
        tail = None if self.tail is None else GeometricTail(s * self.tail.c, self.tail.t, self.tail.start)
        return TruncatedVector(self.coords * s, tail)

    __rmul__ = __mul__

    def __repr__(self):
        body = np.array2string(self.coords, precision=6, separator=", ")
        if self.tail is None:
            return f"TruncatedVector({body})"
        return f"TruncatedVector({body}, tail={self.tail})"

    def to_dict(self) -> dict:
        return {"coords": [float(v) for v in self.coords],
                "tail": None if self.tail is None else self.tail.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TruncatedVector":
        tail = d.get("tail")
        if tail is not None:
            tail = GeometricTail(float(tail["c"]), float(tail["t"]), int(tail["from"]))
        return cls(d["coords"], tail)


def as_vector(x) -> TruncatedVector:
    if isinstance(x, TruncatedVector):
        return x
    return TruncatedVector(x)


def basis_vector(i: int, n: int) -> TruncatedVector:
    """e_i in dimension n (1-based)."""
    if not 1 <= i <= n:
        raise DimensionError(f"e_{i} does not exist in dimension {n}")
    v = np.zeros(n)
    v[i - 1] = 1.0
    return TruncatedVector(v)


# ---------------------------------------------------------------------------
# Rearrangements
# ---------------------------------------------------------------------------

def decreasing_rearrangement(x) -> TruncatedVector:
    """x* : magnitudes sorted non-increasingly.

    With a tail, zero coordinates never appear in x* (there are infinitely
    many positive entries ahead of them); the result keeps a geometric tail.
    """
    x = as_vector(x)
    mags = np.abs(x.coords)
    if x.tail is None:
        return TruncatedVector(-np.sort(-mags, kind="stable"))
    t = x.tail.t
    mags = mags[mags > 0]
    floor = float(mags.min()) if mags.size else math.inf
    k = x.dim if mags.size else x.dim + 1
    # pull tail terms into the block until the next one drops below every coordinate
    while abs(x.tail.value(k + 1)) > floor:
        k += 1
        if k - x.dim > _MAX_HORIZON:
            raise HorizonError("tail never drops below the coordinates")
    pulled = np.abs(x.materialize(k)[x.dim:])
    block = -np.sort(-np.concatenate([mags, pulled]), kind="stable")
    nxt = abs(x.tail.value(k + 1))
    return TruncatedVector(block, GeometricTail(nxt / t, t, block.size + 1))


def rearrangement_prefix(x, k: int) -> np.ndarray:
    """x*(1..k)."""
    xs = decreasing_rearrangement(x)
    return xs.materialize(k)[:k]


def rearrangement_indices(x, k: int) -> np.ndarray:
    """sigma(1..k): 1-based indices with x*(i) = |x(sigma(i))|, ties by index."""
    x = as_vector(x)
    length = max(k, x.dim)
    while True:
        mags = np.abs(x.materialize(length))
        order = np.argsort(-mags, kind="stable")
        if k > length:
            raise HorizonError("not enough entries")
        kth = mags[order[k - 1]]
        if x.sup_beyond(length) <= kth and (kth > 0 or x.tail is None):
            return order[:k] + 1
        length *= 2
        if length > _MAX_HORIZON:
            raise HorizonError("rearrangement horizon exceeded")


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def norm_dws(x, w: WeightSequence, s: float = 1.0) -> float:
    """(sum_i x*(i)**s w(i))**(1/s)."""
    if s < 1:
        raise ValueError("s must be >= 1")
    xs = decreasing_rearrangement(x)
    m = xs.dim
    total = math.fsum((xs.coords ** s * w.values(m)).tolist())
    if xs.tail is not None:
        # terms are bounded by (|c| t^j)^s since w <= 1; stop when the remainder is negligible
        c, t = abs(xs.tail.c), xs.tail.t
        j = 1
        terms = []
        while True:
            block = np.arange(j, j + 256, dtype=float)
            vals = (c * t ** block) ** s * w.values(m + j + 255)[m + j - 1:]
            terms.extend(vals.tolist())
            j += 256
            rest = (c * t ** j) ** s / (1.0 - t ** s)
            if rest <= 1e-17 * (total + math.fsum(terms)) or rest == 0.0:
                break
        total += math.fsum(terms)
    return total ** (1.0 / s)


def _prefix_ratio_sup(xs: TruncatedVector, w: WeightSequence) -> tuple[float, int]:
    """sup_k S(k)/W(k) for a rearranged vector, and the horizon examined."""
    k = max(xs.dim, 1)
    while True:
        vals = xs.materialize(k)[:k]
        S = np.cumsum(vals)
        best = float(np.max(S / w.prefix(k)))
        if xs.tail is None:
            return best, k
        # for j > k: S(j)/W(j) <= (S(k) + mass after k) / W(k)
        bound = (S[-1] + xs.tail_mass_after(k)) / w.W(k)
        if bound <= best:
            return best, k
        k *= 2
        if k > _MAX_HORIZON:
            raise HorizonError("W-norm horizon exceeded")


def norm_W(x, w: WeightSequence) -> float:
    """sup_n (sum_{i<=n} x*(i)) / W(n)."""
    xs = decreasing_rearrangement(x)
    if xs.tail is None:
        nz = np.flatnonzero(xs.coords)
        if nz.size == 0:
            return 0.0
        xs = TruncatedVector(xs.coords[: nz[-1] + 1])
    return _prefix_ratio_sup(xs, w)[0]


def norm_W_rows(X: np.ndarray, w: WeightSequence) -> np.ndarray:
    """Row-wise W-norm of a 2-D array of finitely supported vectors."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mags = -np.sort(-np.abs(X), axis=1)
    S = np.cumsum(mags, axis=1)
    return np.max(S / w.prefix(X.shape[1]), axis=1)


def norm_ellr(x, r: float) -> float:
    """l_r norm, tails summed in closed form."""
    x = as_vector(x)
    mags = np.abs(x.coords)
    m = float(mags.max()) if mags.size else 0.0
    total = math.fsum(((mags / m) ** r).tolist()) if m > 0 else 0.0
    if x.tail is not None:
        c, t = abs(x.tail.c), x.tail.t
        scale = max(m, c * t)
        total = total * (m / scale) ** r if m > 0 else 0.0
        total += (c * t / scale) ** r / (1.0 - t ** r)
        m = scale
    return m * total ** (1.0 / r)


# ---------------------------------------------------------------------------
# Duality
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _subset_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    codes = np.arange(1, 1 << n)
    masks = ((codes[:, None] >> np.arange(n)) & 1).astype(float)
    return masks, masks.sum(axis=1).astype(int)


def dual_norm_oracle(y, w: WeightSequence) -> float:
    """sup <x, y> over the extreme points of the truncated d(w,1) unit ball.

    The extreme points put sign-matched mass 1/W(k) on k coordinates.  For
    n <= 14 every support set is enumerated; beyond that the k largest
    magnitudes of y are used (which is where the max over supports sits).
    """
    y = as_vector(y)
    if y.tail is not None:
        raise ValueError("the duality oracle needs a finitely supported vector")
    n = y.dim
    Wn = w.prefix(n)
    signs = np.sign(y.coords)
    if n <= 14:
        masks, sizes = _subset_masks(n)
        points = masks * signs / Wn[sizes - 1][:, None]
        return float(max(0.0, np.max(points @ y.coords)))
    best = 0.0
    mags = np.abs(y.coords)
    for k in range(1, n + 1):
        idx = np.argpartition(-mags, k - 1)[:k]
        point = np.zeros(n)
        point[idx] = signs[idx] / Wn[k - 1]
        best = max(best, float(point @ y.coords))
    return best


def norming_functional(y, w: WeightSequence) -> np.ndarray:
    """An extreme point x' of the d(w,1) ball with <x', y> = ||y||_W."""
    y = as_vector(y)
    if y.tail is not None:
        raise ValueError("needs a finitely supported vector")
    n = y.dim
    mags = np.abs(y.coords)
    order = np.argsort(-mags, kind="stable")
    ratios = np.cumsum(mags[order]) / w.prefix(n)
    k = int(np.argmax(ratios)) + 1
    out = np.zeros(n)
    sgn = np.sign(y.coords[order[:k]])
    sgn[sgn == 0] = 1.0
    out[order[:k]] = sgn / w.W(k)
    return out


def norm_dw1_dual(x, w: WeightSequence) -> float:
    """The d(w,1) norm, i.e. norm_dws with s = 1 (kept for symmetry of names)."""
    return norm_dws(x, w, 1.0)


@dataclass
class InclusionReport:
    ellr: float
    ratio: float
    holder_bound: float


class InclusionTracker:
    """Running empirical bound on ||x||_r / ||x||_W at a fixed truncation."""

    def __init__(self):
        self.bound = 0.0
        self.count = 0

    def observe(self, ratio: float) -> None:
        self.count += 1
        self.bound = max(self.bound, ratio)


def inclusion_into_ellr(x, w: WeightSequence, r: float,
                        tracker: Optional[InclusionTracker] = None) -> InclusionReport:
    """||x||_r together with the ratio ||x||_r / ||x||_W.

    ``holder_bound`` is ||w(1..n)||_r, which dominates the ratio on the
    n-dimensional truncation.
    """
    if r <= 1:
        raise ValueError("r must exceed 1")
    member = in_ellr(w, r)
    if member is None:
        raise MembershipError("l_r membership of an explicit weight list is undecidable")
    if not member:
        raise MembershipError(f"weight is not in l_{r:g}")
    x = as_vector(x)
    lr = norm_ellr(x, r)
    nw = norm_W(x, w)
    ratio = lr / nw if nw > 0 else 0.0
    if x.tail is None:
        bound = float(np.sum(w.values(x.dim) ** r) ** (1.0 / r))
    else:
        bound = ellr_power_sum(w, r) ** (1.0 / r)
    if tracker is not None:
        tracker.observe(ratio)
    return InclusionReport(lr, ratio, bound)


def parse_vector(text: str, n: Optional[int] = None) -> TruncatedVector:
    """Parse ``[1, 2]``, ``e3`` or a JSON vector object."""
    import json
    text = text.strip()
    if text.startswith("e") and text[1:].isdigit():
        i = int(text[1:])
        return basis_vector(i, max(n or i, i))
    data = json.loads(text)
    if isinstance(data, dict):
        return TruncatedVector.from_dict(data)
    return TruncatedVector(data)

