"""Perturbation certificates: ||x + lam e_n||_W <= 1 for |lam| <= delta, n >= n0.

Verification avoids re-sorting for every (lam, n).  Writing y for x with the
n-th entry removed and T for the prefix sums of y*, the top-k sum of
x + lam e_n equals max(T(k), T(k-1) + |x(n) + lam|).  That is nondecreasing
in |x(n) + lam|, so each n costs one pass at the grid's largest |x(n) + lam|;
the full lambda grid is expanded only for rows that fail, to list violations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CertificateError, HorizonError, HypothesisViolation, NotInBallError
from .sequences import (
    TruncatedVector,
    as_vector,
    decreasing_rearrangement,
    norm_W,
    rearrangement_indices,
)
from .weights import WeightSequence

__all__ = [
    "PerturbationCertificate",
    "VerificationReport",
    "certify_predual_point",
    "lemma2_certify",
    "verify_certificate",
    "min_slack",
]

BALL_TOL = 1e-12
SAFETY = 0.99


@dataclass(frozen=True)
class PerturbationCertificate:
    n0: int
    delta: float
    subject: TruncatedVector
    weight: WeightSequence
    # bookkeeping from the construction (n1, n2, rho, ...); not part of validity
    trace: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"n0": self.n0, "delta": self.delta, "subject": self.subject.to_dict(),
                "weight_ref": self.weight.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationCertificate":
        return cls(int(d["n0"]), float(d["delta"]), TruncatedVector.from_dict(d["subject"]),
                   WeightSequence.from_dict(d["weight_ref"]))

    def with_params(self, n0: Optional[int] = None, delta: Optional[float] = None):
        return PerturbationCertificate(self.n0 if n0 is None else n0,
                                       self.delta if delta is None else delta,
                                       self.subject, self.weight)


def _rearranged_sums(x: TruncatedVector, k: int) -> tuple[np.ndarray, np.ndarray]:
    """x*(1..k) and its prefix sums."""
    xs = decreasing_rearrangement(x).materialize(k)[:k]
    return xs, np.cumsum(xs)


def _total_mass(x: TruncatedVector) -> float:
    return float(np.sum(np.abs(x.coords))) + x.tail_mass_after(x.dim)


def min_slack(x: TruncatedVector, w: WeightSequence, start: int = 1) -> tuple[float, int]:
    """inf_{k >= start} W(k) - S(k-1), with S the prefix sums of x*.

    Past the returned horizon W(k) - total mass already exceeds the minimum,
    so later k cannot lower it.
    """
    total = _total_mass(x)
    k = max(start + 1, 8)
    while True:
        _, S = _rearranged_sums(x, k)
        Sprev = np.concatenate([[0.0], S[:-1]])
        slack = w.prefix(k) - Sprev
        best = float(np.min(slack[start - 1:]))
        if w.W(k) - total >= best:
            return best, k
        k *= 2
        if k > 1 << 24:
            raise HorizonError("slack horizon exceeded")


def certify_predual_point(x, w: WeightSequence) -> PerturbationCertificate:
    """Certificate for a point of the d_*(w,1) ball (finite support or geometric tail).

    Past index n the entry x(n) is replaced by x(n) + lam, so every top-k sum
    grows to at most S(k-1) + |x(n)| + |lam|.  With g = inf_k W(k) - S(k-1)
    (positive: it is >= w(k) on the ball and tends to infinity), any n0 with
    sup_{n >= n0} |x(n)| <= g/2 works with delta = g - that sup.
    """
    x = as_vector(x)
    nw = norm_W(x, w)
    if nw > 1.0 + BALL_TOL:
        raise NotInBallError(f"||x||_W = {nw!r} exceeds 1")
    g, _ = min_slack(x, w)
    if not g > 0.0:
        raise CertificateError("no positive slack; boundary vector needs a deeper horizon")
    if x.tail is None:
        n0 = int(x.support_size()) + 1
        delta = g
    else:
        n0 = x.dim + 1
        while abs(x.tail.value(n0)) > g / 2:
            n0 += 1
        delta = g - abs(x.tail.value(n0))
    cert = PerturbationCertificate(n0, float(delta), x, w, {"slack": g})
    report = verify_certificate(cert, 101, 10 * n0)
    if not report.passed:
        raise CertificateError(f"constructed certificate failed verification: {report.summary()}")
    return cert


def lemma2_certify(z, x, w: WeightSequence, horizon: int = 1 << 16) -> PerturbationCertificate:
    """Certificate for z in the d*(w,1) ball lying within W-distance 1/2 of x in d_*(w,1).

    Follows the constructive argument: pick rho between ||z - x||_W and 1/2,
    an index n1 after which both prefix ratios stay below rho, the first strict
    descent n2 > n1 of z*, a delta below both the descent gap and the prefix
    slack, and n0 past the positions of z*(1..n2).
    """
    z, x = as_vector(z), as_vector(x)
    nz = norm_W(z, w)
    if nz > 1.0 + BALL_TOL:
        raise NotInBallError(f"||z||_W = {nz!r} exceeds 1")
    dist = norm_W(z - x, w)
    if not dist < 0.5:
        raise HypothesisViolation(f"||z - x||_W = {dist!r} is not below 1/2")
    if z.tail is None:
        # z* has a zero entry, so z is itself in the predual ball
        return certify_predual_point(z, w)

    rho = (dist + 0.5) / 2.0
    n1 = _last_index_at_or_above(x, w, rho) + 1
    n1 = max(n1, _last_index_at_or_above(z - x, w, rho) + 1)

    zs = decreasing_rearrangement(z)
    n2 = None
    k = max(2 * n1, 16)
    while n2 is None:
        if k > horizon:
            raise HorizonError(f"no strict descent of z* found after n1={n1} within {horizon}")
        vals = zs.materialize(k + 1)[: k + 1]
        drops = np.flatnonzero(vals[n1:] < vals[n1 - 1:-1])
        if drops.size:
            n2 = n1 + 1 + int(drops[0])
        else:
            k *= 2
    gap = float(vals[n2 - 2] - vals[n2 - 1])
    slack = _min_prefix_slack(z, w, n1)
    delta = SAFETY * min(gap, slack)
    if not delta > 0:
        raise CertificateError("lemma construction produced no positive delta")
    sigma = rearrangement_indices(z, n2)
    n0 = int(np.max(sigma)) + 1
    trace = {"rho": rho, "n1": n1, "n2": n2, "gap": gap, "slack": slack}
    return PerturbationCertificate(n0, float(delta), z, w, trace)


def _last_index_at_or_above(x: TruncatedVector, w: WeightSequence, rho: float) -> int:
    """Largest n with S_x(n)/W(n) >= rho (0 if none)."""
    total = _total_mass(x)
    k = 16
    while w.W(k) * rho <= total:
        k *= 2
        if k > 1 << 24:
            raise HorizonError("prefix ratio never drops below rho")
    _, S = _rearranged_sums(x, k)
    bad = np.flatnonzero(S / w.prefix(k) >= rho)
    return int(bad[-1]) + 1 if bad.size else 0


def _min_prefix_slack(z: TruncatedVector, w: WeightSequence, n1: int) -> float:
    """inf_{n >= n1} W(n) - S_z(n)."""
    total = _total_mass(z)
    k = max(2 * n1, 16)
    while True:
        _, S = _rearranged_sums(z, k)
        best = float(np.min(w.prefix(k)[n1 - 1:] - S[n1 - 1:]))
        if w.W(k) - total >= best:
            return best
        k *= 2


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    passed: bool
    grid_ok: bool
    analytic_ok: bool
    max_value: float
    violations: list
    n_range: tuple
    lambda_samples: int

    def summary(self) -> str:
        state = "pass" if self.passed else "fail"
        head = f"{state}: max ||x + lam e_n||_W = {self.max_value:.15g} over n in {self.n_range}"
        if self.violations:
            n, lam, val = self.violations[0]
            head += f"; first violation n={n}, lam={lam:+.6g}, value={val:.15g}"
        if not self.analytic_ok:
            head += "; analytic tail bound failed"
        return head

    def to_dict(self) -> dict:
        return {"passed": self.passed, "grid_ok": self.grid_ok, "analytic_ok": self.analytic_ok,
                "max_value": self.max_value, "n_range": list(self.n_range),
                "violations": [list(v) for v in self.violations[:20]]}


def verify_certificate(cert: PerturbationCertificate, lambda_samples: int = 1001,
                       n_horizon: Optional[int] = None, tol: float = 1e-12) -> VerificationReport:
    """Grid check of the certificate for n0 <= n <= n_horizon plus a bound for n > n_horizon."""
    x, w, delta = cert.subject, cert.weight, float(cert.delta)
    n0 = int(cert.n0)
    horizon = 10 * n0 if n_horizon is None else int(n_horizon)
    lams = np.unique(np.concatenate([np.linspace(-delta, delta, max(lambda_samples, 2)),
                                     [-delta, 0.0, delta]]))
    total = _total_mass(x)
    sup_x = max(float(np.max(np.abs(x.coords))), x.sup_beyond(x.dim))
    need = total + delta + sup_x
    # beyond K every top-k sum is at most need <= W(K): no violation possible there
    K = 1
    while w.W(K) < need:
        K *= 2
        if K > 1 << 24:
            raise HorizonError("verification horizon exceeded")
    K = max(K, horizon + 1)
    xs, S = _rearranged_sums(x, K + 1)
    WK = w.prefix(K)

    violations = []
    worst = 0.0
    seen = {}
    for n in range(n0, horizon + 1):
        v = x.value(n)
        if v in seen:
            row_max, bad = seen[v]
        else:
            av = abs(v)
            # position of one copy of |x(n)| in x* (0-based); removing it shifts later sums
            p = int(np.searchsorted(-xs, -av, side="left"))
            T = S[:K].copy()
            if p < K:
                T[p:] = S[p + 1:K + 1] - av
            Tprev = np.concatenate([[0.0], T[:-1]])
            b = np.abs(v + lams)
            # every ratio is nondecreasing in b, so the largest b on the grid gives the row max
            row_max = float(np.max(np.maximum(T, Tprev + b.max()) / WK))
            bad = []
            if row_max > 1.0 + tol:
                tops = np.maximum(T[None, :], Tprev[None, :] + b[:, None])
                ratios = np.max(tops / WK[None, :], axis=1)
                bad = [(float(lams[j]), float(ratios[j]))
                       for j in np.flatnonzero(ratios > 1.0 + tol)]
            seen[v] = (row_max, bad)
        worst = max(worst, row_max)
        violations.extend((n, lam, val) for lam, val in bad)

    analytic_ok = _analytic_beyond(x, w, delta, horizon, tol)
    grid_ok = not violations
    return VerificationReport(grid_ok and analytic_ok, grid_ok, analytic_ok, worst,
                              violations, (n0, horizon), lams.size)


def _analytic_beyond(x: TruncatedVector, w: WeightSequence, delta: float,
                     horizon: int, tol: float) -> bool:
    """Bound ||x + lam e_n||_W for every n > horizon at once.

    With a = sup_{n > horizon} |x(n)|, the modified entry is at most a + delta.
    If a + delta <= x*(k) neither the removed nor the added entry reaches the
    top k, so the top-k sum is S(k); otherwise it is at most
    min(S(k) + delta, max(S(k), S(k-1) + a + delta)).
    """
    a = x.sup_beyond(horizon)
    total = _total_mass(x)
    K = 8
    while w.W(K) < total + delta:
        K *= 2
    xs, S = _rearranged_sums(x, K)
    Sprev = np.concatenate([[0.0], S[:-1]])
    grown = np.minimum(S + delta, np.maximum(S, Sprev + a + delta))
    bound = np.where(a + delta <= xs, S, grown)
    return bool(np.all(bound <= w.prefix(K) * (1.0 + tol)))
