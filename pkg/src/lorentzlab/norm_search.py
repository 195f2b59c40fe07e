"""Maximizing ||P(x)|| over the unit ball of the truncated W-norm.

The ball {x : sum of the k largest |x_i| <= W(k) for all k} is the dual ball
of the sorted-l1 norm sum_i w(i) x*(i), so the Euclidean projection onto it is
x - prox(x) (Moreau), and the prox of the sorted-l1 norm reduces to one
non-increasing isotonic regression after sorting magnitudes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .certificates import (
    CertificateError,
    PerturbationCertificate,
    certify_predual_point,
    verify_certificate,
)
from .errors import DimensionError
from .polynomials import HomogeneousPolynomial, mixed_form_value, target_norm
from .sequences import TruncatedVector, as_vector, norm_W, norm_W_rows
from .weights import WeightSequence, smallest_ellr_index

__all__ = [
    "WBallDescription",
    "SearchResult",
    "isotonic_nonincreasing",
    "project_onto_wball",
    "max_norm",
    "brute_force_norm",
    "BruteForceBracket",
    "local_max_diagnostic",
    "LocalMaxReport",
]


@dataclass(frozen=True)
class WBallDescription:
    """Unit ball of the W-norm at dimension n, as prefix constraints on magnitudes."""
    weight: WeightSequence
    dim: int

    def bounds(self) -> np.ndarray:
        return self.weight.prefix(self.dim)

    def contains(self, x, tol: float = 1e-12) -> bool:
        arr = np.asarray(x, dtype=float)
        if arr.size != self.dim:
            raise DimensionError("dimension mismatch")
        mags = -np.sort(-np.abs(arr))
        return bool(np.all(np.cumsum(mags) <= self.bounds() * (1.0 + tol)))


def isotonic_nonincreasing(y: np.ndarray) -> np.ndarray:
    """argmin ||v - y||_2 subject to v_1 >= v_2 >= ... (pool adjacent violators)."""
    sums: list[float] = []
    counts: list[int] = []
    for v in np.asarray(y, dtype=float).tolist():
        sums.append(v)
        counts.append(1)
        while len(sums) > 1 and sums[-2] * counts[-1] < sums[-1] * counts[-2]:
            s, c = sums.pop(), counts.pop()
            sums[-1] += s
            counts[-1] += c
    return np.repeat(np.array(sums) / np.array(counts), counts)


def project_onto_wball(x, w: WeightSequence) -> np.ndarray:
    """Euclidean projection of a finitely supported vector onto the W-ball."""
    if isinstance(x, TruncatedVector):
        if x.tail is not None:
            raise DimensionError("projection needs a finitely supported vector")
        arr = np.array(x.coords)
    else:
        arr = np.array(x, dtype=float).reshape(-1)
    n = arr.size
    mags = np.abs(arr)
    order = np.argsort(-mags, kind="stable")
    v = mags[order]
    if np.all(np.cumsum(v) <= w.prefix(n)):
        return arr
    prox = np.maximum(isotonic_nonincreasing(v - w.values(n)), 0.0)
    u = np.empty(n)
    u[order] = v - prox
    return np.sign(arr) * u


# ---------------------------------------------------------------------------
# Multi-start projected gradient ascent
# ---------------------------------------------------------------------------

@dataclass
class SearchResult:
    point: np.ndarray
    value: float
    starts: int
    traces: list
    attained: bool
    certificate: Optional[PerturbationCertificate] = None
    settings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"point": [float(v) for v in self.point], "value": self.value,
                "starts": self.starts, "attained": self.attained,
                "certificate": None if self.certificate is None else self.certificate.to_dict(),
                "settings": self.settings,
                "trace_summary": {
                    "max_iterations": max(t["iterations"] for t in self.traces),
                    "total_iterations": sum(t["iterations"] for t in self.traces),
                    "converged": sum(1 for t in self.traces if t["converged"]),
                }}


def _objective(P: HomogeneousPolynomial, x: np.ndarray) -> tuple[float, np.ndarray]:
    """||P(x)||^2 and its gradient."""
    vals = P.evaluate_many(x[None, :])[0]
    J = P.jacobian(x)
    if P.is_scalar:
        return float(vals[0] ** 2), 2.0 * vals[0] * J[0]
    r = P.target_r
    nrm = target_norm(vals, r)
    if nrm == 0.0:
        return 0.0, np.zeros_like(x)
    coeffs = nrm ** (2.0 - r) * np.abs(vals) ** (r - 1.0) * np.sign(vals)
    return nrm ** 2, 2.0 * coeffs @ J


def _ascend(P, w, x0, tol, max_iter, armijo):
    x = project_onto_wball(x0, w)
    f, g = _objective(P, x)
    step = 1.0
    converged = False
    reason = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(project_onto_wball(x + g, w) - x) < tol:
            converged, reason = True, "gradient"
            break
        while True:
            xn = project_onto_wball(x + step * g, w)
            fn, gn = _objective(P, xn)
            if fn >= f + armijo * float(g @ (xn - x)):
                break
            step *= 0.5
            if step < 1e-30:
                break
        if step < 1e-30 or np.array_equal(xn, x):
            converged, reason = True, "no_step"
            break
        # f is flat to rounding near a maximizer; the gradient test can stall above tol
        stalled = fn - f <= 4.0 * np.finfo(float).eps * max(abs(f), 1e-300)
        dx, dg = xn - x, gn - g
        x, f, g = xn, fn, gn
        if stalled:
            converged, reason = True, "stalled"
            break
        # Barzilai-Borwein trial step for the next line search (ascent: curvature is -dx.dg)
        curv = -float(dx @ dg)
        step = min(float(dx @ dx) / curv, 1e6) if curv > 0 else min(step * 2.0, 1e6)
    return x, math.sqrt(f), {"iterations": it, "converged": converged, "reason": reason}


def max_norm(P: HomogeneousPolynomial, w: WeightSequence, starts: Optional[int] = None,
             seed: int = 0, tol: float = 1e-10, max_iter: int = 10_000,
             armijo: float = 1e-4, certify: bool = True) -> SearchResult:
    """Best ||P(x)|| found over the W-ball by multi-start projected gradient ascent.

    The value is a lower bound on ||P||.  Starts are random sign/magnitude
    vectors from ``seed``; ties are broken toward the lexicographically
    largest point.
    """
    n = P.dim
    starts = 64 * n if starts is None else int(starts)
    rng = np.random.default_rng(seed)
    X0 = rng.choice([-1.0, 1.0], size=(starts, n)) * rng.random((starts, n))
    points, values, traces = [], [], []
    for x0 in X0:
        x, _, trace = _ascend(P, w, x0, tol, max_iter, armijo)
        points.append(x)
        values.append(P.value_norm(x))
        traces.append(trace)
    top = max(values)
    # order-independent reduction: near-ties go to the lexicographically largest point
    best_x = max((x for x, v in zip(points, values) if v >= top * (1 - 1e-12)), key=tuple)
    value = P.value_norm(best_x)
    cert = None
    if certify:
        try:
            cert = certify_predual_point(TruncatedVector(best_x), w)
        except CertificateError:
            cert = None
    settings = {"seed": seed, "starts": starts, "tol": tol, "max_iter": max_iter, "armijo": armijo}
    attained = bool(norm_W(best_x, w) <= 1.0 + 1e-12)
    return SearchResult(best_x, value, starts, traces, attained, cert, settings)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

@dataclass
class BruteForceBracket:
    lower: float
    upper: float
    point: np.ndarray
    grid_lower: float
    resolution: int

    def contains(self, value: float, rel: float = 1e-6) -> bool:
        return self.lower * (1 - rel) - 1e-300 <= value <= self.upper * (1 + rel) + 1e-300

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "point": [float(v) for v in self.point],
                "grid_lower": self.grid_lower, "resolution": self.resolution}


_DEFAULT_RES = {1: 4001, 2: 401, 3: 81, 4: 31}


def brute_force_norm(P: HomogeneousPolynomial, w: WeightSequence,
                     resolution: Optional[int] = None, refine_seeds: int = 6) -> BruteForceBracket:
    """Grid bracket for ||P|| over the W-ball (n <= 4).

    Lower: best feasible grid point, then improved by a derivative-free
    pattern search over feasible points (so it stays a genuine lower bound).
    Upper: every ball point is within half a cell of a grid point lying in
    the slightly enlarged ball; add a Lipschitz bound over the cell.
    """
    n = P.dim
    if n > 4:
        raise DimensionError("brute force is limited to n <= 4")
    res = resolution or _DEFAULT_RES[n]
    axis = np.linspace(-1.0, 1.0, res)
    h = axis[1] - axis[0]
    G = np.array(list(itertools.product(axis, repeat=n)))
    nw = norm_W_rows(G, w)
    feasible = nw <= 1.0
    k = np.arange(1, n + 1)
    grow = 1.0 + 0.5 * h * float(np.max(k / w.prefix(n)))
    near = nw <= grow * (1.0 + 1e-12)

    vals = P.value_norms(G)
    fv = np.where(feasible, vals, -np.inf)
    best_idx = int(np.argmax(fv))
    grid_lower = float(fv[best_idx])

    lip = P.degree * sum(abs(c) for c in P.terms.values())
    upper = float(np.max(vals[near])) + lip * 0.5 * h * math.sqrt(n)

    top = np.argsort(-fv)[:refine_seeds]
    lower, point = grid_lower, G[best_idx]
    for idx in top:
        if not np.isfinite(fv[idx]):
            continue
        x, v = _pattern_search(P, w, G[idx], float(fv[idx]), h)
        if v > lower:
            lower, point = v, x
    return BruteForceBracket(lower, max(upper, lower), point, grid_lower, res)


def _pattern_search(P, w, x, v, h, min_step=1e-13):
    n = x.size
    moves = np.array([m for m in itertools.product((-1.0, 0.0, 1.0), repeat=n) if any(m)])
    step = h
    while step > min_step:
        cand = x + step * moves
        ok = norm_W_rows(cand, w) <= 1.0
        if ok.any():
            cv = np.where(ok, P.value_norms(cand), -np.inf)
            j = int(np.argmax(cv))
            if cv[j] > v:
                x, v = cand[j], float(cv[j])
                continue
        step *= 0.5
    return x, v


# ---------------------------------------------------------------------------
# Local maximality along basis directions
# ---------------------------------------------------------------------------

@dataclass
class LocalMaxReport:
    n: int
    g0: float
    gmax: float
    argmax_lambda: float
    local_max_ok: bool
    basis_image_norm: Optional[float] = None
    basis_image_flag: bool = False
    form_value: Optional[float] = None
    form_flag: bool = False
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.local_max_ok and not self.basis_image_flag and not self.form_flag

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def local_max_diagnostic(P: HomogeneousPolynomial, a, cert: PerturbationCertificate, n: int,
                         tol: float = 1e-9, grid: int = 201, check_certificate: bool = True
                         ) -> LocalMaxReport:
    """Check that lam -> ||P(a + lam e_n)|| peaks at 0 on [-delta, delta].

    Strictly convex targets (l_r, r > 1) additionally report ||P(e_n)||; scalar
    P with P(a) != 0 reports the sign of Phi(a,...,a, e_n,...,e_n) with M
    copies of e_n, M being the least index with the weight in l_M.
    """
    arr = np.asarray(as_vector(a).coords if isinstance(a, TruncatedVector) else a, dtype=float)
    if arr.size != P.dim:
        raise DimensionError("attainment point has the wrong dimension")
    if n < cert.n0 or n > P.dim:
        raise CertificateError(f"coordinate {n} is outside [n0={cert.n0}, dim={P.dim}]")
    if check_certificate:
        subj = cert.subject.materialize(P.dim)[:P.dim]
        if cert.subject.tail is not None or not np.allclose(subj, arr, rtol=0, atol=1e-14):
            raise CertificateError("certificate subject differs from the attainment point")
        rep = verify_certificate(cert, 101, max(10 * cert.n0, P.dim))
        if not rep.passed:
            raise CertificateError(f"invalid certificate: {rep.summary()}")
    delta = cert.delta
    e = np.zeros(P.dim)
    e[n - 1] = 1.0

    def g(lam):
        return P.value_norm(arr + lam * e)

    g0 = g(0.0)
    lams = np.linspace(-delta, delta, grid)
    vals = P.value_norms(arr[None, :] + lams[:, None] * e[None, :])
    j = int(np.argmax(vals))
    best_lam, best = float(lams[j]), float(vals[j])
    if delta > 0:
        lo, hi = lams[max(j - 1, 0)], lams[min(j + 1, grid - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: -g(t), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            if -res.fun > best:
                best_lam, best = float(res.x), float(-res.fun)
    report = LocalMaxReport(n, g0, best, best_lam, best <= g0 + tol)

    if not P.is_scalar and P.target_r > 1:
        report.basis_image_norm = P.value_norm(e)
        report.basis_image_flag = report.basis_image_norm > tol
    if P.is_scalar:
        pa = P.evaluate(arr)
        M = smallest_ellr_index(cert.weight)
        if pa != 0.0 and M is not None and M <= P.degree:
            phi = float(mixed_form_value(P, arr, n, M))
            report.form_value = phi
            report.form_flag = phi > tol if pa > 0 else phi < -tol
        elif M is not None and M > P.degree:
            report.notes.append(f"degree {P.degree} below M={M}; form sign not checked")
    return report


def lift(a: np.ndarray, dim: int) -> np.ndarray:
    """Zero-pad a point to a larger truncation."""
    out = np.zeros(dim)
    out[: a.size] = a
    return out
