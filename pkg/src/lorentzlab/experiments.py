"""Desk-scale replays of the counterexample inequality chains.

Every polynomial attains its norm on a finite truncation, so nothing here
proves non-density.  Each chain evaluates the inequalities of the argument at
materialized coordinates n in [n0, dim] (limits are replaced by their finite
shadows over that range) and reports which one fails.

Entry roles decide the summary:
  fact         identity that must hold for any input (a failure is a bug or bad input)
  hypothesis   assumption of the argument (a failure means the chain does not apply)
  consequence  derived inequality (a failure, with all hypotheses met, is the contradiction)
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .certificates import PerturbationCertificate, certify_predual_point, lemma2_certify, verify_certificate
from .errors import CertificateError, HypothesisViolation, LorentzLabError, NotInBallError
from .norm_search import max_norm
from .polynomials import (
    HomogeneousPolynomial,
    PowerSumComposite,
    form_coefficient,
    gallery,
    mixed_form_value,
    restrict,
)
from .sequences import TruncatedVector, norm_W
from .weights import WeightSequence, ellr_power_sum, smallest_ellr_index

__all__ = [
    "ChainEntry",
    "ChainReport",
    "bp_chain",
    "lb_chain",
    "lb_multilinear_chain",
    "restricted_argmax",
    "sweep",
    "reports_to_csv",
]

FORM_TOL = 1e-10
MAX_FORM_DEGREE = 8


@dataclass
class ChainEntry:
    label: str
    paper_anchor: str
    role: str
    relation: str
    lhs: float
    rhs: float
    tol: float = 0.0
    cross_check: Optional[float] = None

    def __post_init__(self):
        self.lhs, self.rhs = float(self.lhs), float(self.rhs)
        if self.cross_check is not None:
            self.cross_check = float(self.cross_check)

    @property
    def slack(self) -> float:
        if self.relation in ("<=", "<"):
            return self.rhs - self.lhs
        if self.relation in (">=", ">"):
            return self.lhs - self.rhs
        return -abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        if self.cross_check is not None and self.cross_check > FORM_TOL:
            return False
        s = self.slack
        if self.relation in ("<", ">"):
            return s > 0.0
        return s >= -self.tol

    def to_dict(self) -> dict:
        return {"label": self.label, "paper_anchor": self.paper_anchor, "role": self.role,
                "relation": self.relation, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "pass": self.passed, "cross_check": self.cross_check}


@dataclass
class ChainReport:
    id: str
    params: dict
    chain: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    headline: dict = field(default_factory=dict)

    def add(self, *args, **kwargs) -> ChainEntry:
        e = ChainEntry(*args, **kwargs)
        self.chain.append(e)
        return e

    @property
    def verdict(self) -> bool:
        return all(e.passed for e in self.chain)

    def first_failure(self, role: Optional[str] = None) -> Optional[ChainEntry]:
        return next((e for e in self.chain if not e.passed and (role is None or e.role == role)),
                    None)

    @property
    def summary(self) -> str:
        fact = self.first_failure("fact")
        if fact is not None:
            return f"chain broken at {fact.label}"
        hyp = self.first_failure("hypothesis")
        if hyp is not None:
            return f"no contradiction at this eps (hypothesis not met: {hyp.label})"
        cons = self.first_failure("consequence")
        if cons is not None:
            return f"contradiction reproduced at {cons.label}"
        return "no contradiction at this eps"

    def to_dict(self) -> dict:
        return {"id": self.id, "params": self.params, "chain": [e.to_dict() for e in self.chain],
                "verdict": self.verdict, "summary": self.summary, "notes": self.notes,
                "headline": self.headline}

    def rows(self) -> list[dict]:
        return [{"id": self.id, **{k: v for k, v in e.to_dict().items()}} for e in self.chain]


def reports_to_csv(reports: Sequence[ChainReport]) -> str:
    cols = ["id", "label", "paper_anchor", "role", "relation", "lhs", "rhs", "slack", "pass",
            "cross_check"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        for row in rep.rows():
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def restricted_argmax(P: HomogeneousPolynomial, w: WeightSequence, k: int, seed: int = 0,
                      starts: Optional[int] = None):
    """Maximize P composed with the projection onto the first k coordinates.

    Returns (P o T_k, a, certificate): a is supported on 1..k, so it lies in the
    predual ball with a certificate starting at n0 = k + 1 (when P o T_k does
    not vanish on the ball).
    """
    Pk = restrict(P, k)
    res = max_norm(Pk, w, starts=starts, seed=seed, certify=False)
    a = np.array(res.point, dtype=float)
    a[k:] = 0.0
    cert = certify_predual_point(TruncatedVector(a), w)
    return Pk, a, cert


def _basis(n: int, dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[n - 1] = 1.0
    return e


def _form_both(poly_direct, poly_expanded: HomogeneousPolynomial, a, n: int, M: int):
    """Phi(a,..,a, e_n^M) by polarization of ``poly_direct`` and by coefficients."""
    v1 = float(mixed_form_value(poly_direct, a, n, M))
    v2 = float(form_coefficient(poly_expanded, a, n, M))
    return v1, abs(v1 - v2)


def _check_cert(cert: PerturbationCertificate, a: np.ndarray, require_valid: bool,
                report: ChainReport) -> None:
    subj = cert.subject.materialize(a.size)[: a.size]
    same = cert.subject.tail is None and np.allclose(subj, a, rtol=0, atol=1e-14)
    rep = verify_certificate(cert, 1001, max(10 * cert.n0, a.size))
    ok = same and rep.passed
    report.params["cert"] = {"n0": cert.n0, "delta": cert.delta, "verified": ok}
    if not ok:
        if require_valid:
            raise CertificateError(f"invalid certificate: {rep.summary()}")
        report.notes.append("certificate not verified; lemma-based entries are unsupported")


def _surrogate_range(cert, dim: int, first: int = 1) -> list[int]:
    return list(range(max(cert.n0, first), dim + 1))


# ---------------------------------------------------------------------------
# chain for the vector-valued counterexample
# ---------------------------------------------------------------------------

def bp_chain(w: WeightSequence, N: int, P: HomogeneousPolynomial, a, cert: PerturbationCertificate,
             eps: float, M: Optional[int] = None, seed: int = 0, require_valid_cert: bool = True,
             starts: Optional[int] = None) -> ChainReport:
    """Replay the chain for Q(x) = (x(1)^(N-1) x(i))_i against a candidate P attaining at a.

    q is the sign-matched M-th power sum of P(a); phi and psi are the forms of
    q o P and q o Q.  Search norms (max_norm) are lower bounds: a consequence
    such as the final bound that fails with a searched left side fails for the
    true norm as well.
    """
    M = smallest_ellr_index(w) if M is None else int(M)
    if M is None:
        raise LorentzLabError("weight is not in any l_M with a decidable index")
    if N * M > MAX_FORM_DEGREE:
        raise LorentzLabError(f"N*M = {N * M} exceeds the polarization limit {MAX_FORM_DEGREE}")
    if P.is_scalar or P.degree != N:
        raise LorentzLabError("candidate must be an l_M-valued polynomial of degree N")
    n = P.dim
    a = np.asarray(a, dtype=float)
    Q = gallery("real-BP", N, n, r=float(M))
    report = ChainReport("bp", {"w": w.to_dict(), "N": N, "M": M, "n": n, "eps": eps,
                                "seed": seed})
    _check_cert(cert, a, require_valid_cert, report)

    Pa = P.evaluate(a)
    lam = np.where(Pa >= 0, 1.0, -1.0)
    qP, qQ = PowerSumComposite(P, lam, M), PowerSumComposite(Q, lam, M)
    qP_exp, qQ_exp = qP.expand(), qQ.expand()
    NM = N * M
    binom = math.comb(NM, M)
    const = math.factorial(NM) / NM ** NM
    report.params["lambda"] = lam.tolist()

    pnorm = max_norm(P, w, starts=starts, seed=seed, certify=False).value
    report.add("||P(a)|| = ||P||", "attainment of P", "hypothesis", ">=", P.value_norm(a), pnorm,
               tol=1e-9 * max(1.0, pnorm))
    diff = qQ_exp - qP_exp
    dist = max_norm(diff, w, starts=starts, seed=seed, certify=False).value if diff.terms else 0.0
    report.add("closeness of composites", "equicontinuity closeness", "hypothesis", "<=",
               dist, eps * const)

    ns = _surrogate_range(cert, n)
    report.params["surrogate_range"] = [ns[0], ns[-1]] if ns else []
    if not ns:
        report.notes.append("no materialized coordinate at or beyond n0; limit entries skipped")
    phis = []
    for k in ns:
        v, gap = _form_both(qP, qP_exp, a, k, M)
        phis.append((v, gap))
    if phis:
        top = max(v for v, _ in phis)
        report.add("limsup of phi at the maximizer (surrogate)", "attainment sign lemma",
                   "consequence", "<=", top, 0.0, tol=FORM_TOL, cross_check=max(g for _, g in phis))
        if M % 2 == 1:
            low = min(v for v, _ in phis)
            report.add("liminf of phi at the maximizer (surrogate, odd M)",
                       "attainment sign lemma at -a", "consequence", ">=", low, 0.0, tol=FORM_TOL)

    # identity for every n >= 2, independent of the certificate
    for k in range(2, n + 1):
        v, gap = _form_both(qQ, qQ_exp, a, k, M)
        closed = lam[k - 1] ** M * a[0] ** (M * (N - 1))
        report.add(f"binom(NM,M) psi(a,..,e_{k}^M) = lambda_n^M a(1)^(M(N-1))",
                   "mixed form of the model composite", "fact", "==", binom * v, closed,
                   tol=FORM_TOL, cross_check=binom * gap)

    a1 = abs(a[0]) ** (M * (N - 1))
    report.add("first-coordinate bound", "bound on a(1)", "consequence", "<=", a1, binom * eps)

    qQa = abs(qQ.evaluate(a))
    bound_a = a1 * math.fsum(np.abs(a) ** M)
    report.add("|q o Q(a)| <= |a(1)|^(M(N-1)) sum |a(i)|^M", "value of the model composite",
               "fact", "<=", qQa, bound_a, tol=1e-12 * max(1.0, bound_a))
    sw = ellr_power_sum(w, M)
    report.add("sum |a(i)|^M <= sum w_i^M", "majorization by the weight", "fact", "<=",
               math.fsum(np.abs(a) ** M), sw, tol=1e-12 * sw)

    qnorm = max_norm(Q, w, starts=starts, seed=seed, certify=False).value
    implied = eps * (binom * sw + 2.0)
    report.add("||Q||^M <= eps (binom(NM,M) sum w_i^M + 2)", "final bound", "consequence", "<=",
               qnorm ** M, implied)
    report.headline = {"norm_Q_pow_M": qnorm ** M, "implied_bound": implied,
                       "violation": qnorm ** M - implied}
    return report


# ---------------------------------------------------------------------------
# chains for the quantitative (Bollobas-type) counterexamples
# ---------------------------------------------------------------------------

def lb_chain(w: WeightSequence, N: int, M: Optional[int], n: int, eps: float,
             a=None, p: Optional[HomogeneousPolynomial] = None, x_tilde=None,
             eta: Optional[float] = None, beta: Optional[float] = None, k: Optional[int] = None,
             seed: int = 0, starts: Optional[int] = None) -> ChainReport:
    """Replay the polynomial chain for q(x) = x(1)^(N-M) sum_i (-1)^i x(i)^M.

    Defaults: p = q restricted to the first k = n - 1 coordinates, a its
    argmax (supported on 1..k), x_tilde = a, eta = eps^2/4 and beta = eps.
    """
    M = smallest_ellr_index(w) if M is None else int(M)
    if M is None or M > N:
        raise LorentzLabError("need an index M <= N with w in l_M")
    if N > MAX_FORM_DEGREE:
        raise LorentzLabError(f"N = {N} exceeds the polarization limit {MAX_FORM_DEGREE}")
    eta = eps ** 2 / 4.0 if eta is None else float(eta)
    beta = eps if beta is None else float(beta)
    q = gallery("real-LB", N, n, M=M)
    report = ChainReport("lb", {"w": w.to_dict(), "N": N, "M": M, "n": n, "eps": eps,
                                "eta": eta, "beta": beta, "seed": seed})
    qres = max_norm(q, w, starts=starts, seed=seed, certify=False)
    qnorm = qres.value
    if p is None:
        kk = n - 1 if k is None else int(k)
        p, a_found, _ = restricted_argmax(q, w, kk, seed, starts)
        a = a_found if a is None else a
        report.params["k"] = kk
    if a is None:
        a = max_norm(p, w, starts=starts, seed=seed, certify=False).point
    a = np.asarray(a, dtype=float)
    x_tilde = a.copy() if x_tilde is None else np.asarray(x_tilde, dtype=float)

    report.add("near attainment |q(x~)| >= ||q|| - eta", "near-maximizer of q", "hypothesis",
               ">=", abs(q.evaluate(x_tilde)), qnorm - eta)
    diff = p - q
    dist = max_norm(diff, w, starts=starts, seed=seed, certify=False).value if diff.terms else 0.0
    report.add("||p - q|| <= eps^2", "closeness eps squared", "hypothesis", "<=", dist, eps ** 2)
    pnorm = max_norm(p, w, starts=starts, seed=seed, certify=False).value
    report.add("|p(a)| = ||p||", "attainment of p", "hypothesis", ">=", abs(p.evaluate(a)),
               pnorm, tol=1e-9 * max(1.0, pnorm))
    da = norm_W(a - x_tilde, w)
    report.add("||a - x~||_W <= beta", "witness distance", "hypothesis", "<=", da, beta)

    # identity for every n >= 2, independent of the perturbation lemma
    binom = math.comb(N, M)
    for j in range(2, n + 1):
        v, gap = _form_both(q, q, a, j, M)
        closed = (-1.0) ** j * a[0] ** (N - M)
        report.add(f"binom(N,M) psi(a,..,e_{j}^M) = (-1)^{j} a(1)^(N-M)", "alternating mixed form",
                   "fact", "==", binom * v, closed, tol=FORM_TOL, cross_check=binom * gap)

    try:
        cert = lemma2_certify(TruncatedVector(a), TruncatedVector(x_tilde), w)
        gate_ok = verify_certificate(cert, 1001).passed
    except (HypothesisViolation, CertificateError, NotInBallError) as exc:
        cert, gate_ok = None, False
        report.notes.append(f"perturbation lemma not applicable: {exc}")
    report.add("perturbation lemma gate ||a - x~||_W < 1/2", "perturbation lemma", "hypothesis",
               "<", da, 0.5)
    report.params["cert"] = None if cert is None else {"n0": cert.n0, "delta": cert.delta,
                                                       "verified": gate_ok}
    if cert is None or not gate_ok:
        report.headline = {"norm_q": qnorm}
        return report

    ns = _surrogate_range(cert, n)
    report.params["surrogate_range"] = [ns[0], ns[-1]] if ns else []
    pa = p.evaluate(a)
    phis = [_form_both(p, p, a, j, M) for j in ns]
    if phis and pa != 0.0:
        gap = max(g for _, g in phis)
        if pa > 0:
            report.add("p(a) > 0: limsup phi(a,..,e_n^M) <= 0 (surrogate)", "sign dichotomy (i)",
                       "consequence", "<=", max(v for v, _ in phis), 0.0, tol=FORM_TOL,
                       cross_check=gap)
        else:
            report.add("p(a) < 0: liminf phi(a,..,e_n^M) >= 0 (surrogate)", "sign dichotomy (ii)",
                       "consequence", ">=", min(v for v, _ in phis), 0.0, tol=FORM_TOL,
                       cross_check=gap)

    a1 = abs(a[0]) ** (N - M)
    report.add("first-coordinate bound", "bound on a(1)", "consequence", "<=", a1, binom * eps)
    sw = ellr_power_sum(w, M)
    implied = eps * (binom * sw + 2.0 * eps)
    report.add("||q|| <= eps (binom(N,M) sum w_i^M + 2 eps)", "final bound", "consequence", "<=",
               qnorm, implied)
    report.headline = {"norm_q": qnorm, "implied_bound": implied, "violation": qnorm - implied}
    return report


def lb_multilinear_chain(w: WeightSequence, N: int, n: int, eps: float,
                         psi: Optional[HomogeneousPolynomial] = None, n0: Optional[int] = None
                         ) -> ChainReport:
    """Diagonal form phi(x_1..x_N) = sum_i x_1(i)...x_N(i) against a Psi vanishing on e_n^N.

    Forms are carried by their symmetric polynomials; phi's is sum_i x(i)^N.
    Default Psi: phi with every coordinate from n0 on removed (n0 = n // 2 + 1).
    The basis gap |(Phi - Psi)(e_n,..,e_n)| is a lower bound on ||Phi - Psi||.
    """
    if N > MAX_FORM_DEGREE:
        raise LorentzLabError(f"N = {N} exceeds the polarization limit {MAX_FORM_DEGREE}")
    n0 = n // 2 + 1 if n0 is None else int(n0)
    if not 1 <= n0 <= n:
        raise LorentzLabError("n0 must lie in 1..n")
    phi = gallery("power-sum", N, n)
    if psi is None:
        psi = restrict(phi, n0 - 1) if n0 > 1 else HomogeneousPolynomial.zero(N, n)
    report = ChainReport("lb-multilinear", {"w": w.to_dict(), "N": N, "n": n, "eps": eps,
                                            "n0": n0})
    gaps = []
    zero = np.zeros(n)
    for j in range(n0, n + 1):
        f1 = float(mixed_form_value(phi, zero, j, N))
        f2 = float(form_coefficient(phi, zero, j, N))
        report.add(f"phi(e_{j},..,e_{j}) = 1", "diagonal form on the basis", "fact", "==", f1, 1.0,
                   tol=FORM_TOL, cross_check=abs(f1 - f2))
        g1 = float(mixed_form_value(psi, zero, j, N))
        g2 = float(form_coefficient(psi, zero, j, N))
        report.add(f"Psi(e_{j},..,e_{j}) = 0", "vanishing beyond n0", "hypothesis", "==", g1, 0.0,
                   tol=FORM_TOL, cross_check=abs(g1 - g2))
        gaps.append(abs(f1 - g1))
    gap = max(gaps)
    report.add("basis gap ||Phi - Psi|| >= 1", "diagonal form on the basis", "fact", ">=", gap, 1.0,
               tol=FORM_TOL)
    report.add("||Phi - Psi|| < eps", "closeness eps", "consequence", "<", gap, eps)
    report.headline = {"gap": gap, "eps": eps}
    return report


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def sweep(kind: str, w: WeightSequence, N: int, n: int, eps_values: Sequence[float],
          seed: int = 0, eta_scales: Sequence[float] = (1.0,), beta_scales: Sequence[float] = (1.0,),
          k: Optional[int] = None) -> list[ChainReport]:
    """Run a chain over a grid of eps (and, for lb, eta and beta scale factors).

    eta = scale * eps^2 / 4 and beta = scale * eps.
    """
    out = []
    M = smallest_ellr_index(w)
    for eps in eps_values:
        if kind == "bp":
            Q = gallery("real-BP", N, n, r=float(M))
            kk = n - 1 if k is None else k
            Pk, a, cert = restricted_argmax(Q, w, kk, seed)
            out.append(bp_chain(w, N, Pk, a, cert, eps, M, seed))
        elif kind == "lb":
            for es in eta_scales:
                for bs in beta_scales:
                    out.append(lb_chain(w, N, M, n, eps, eta=es * eps ** 2 / 4.0, beta=bs * eps,
                                        k=k, seed=seed))
        elif kind == "lb-multilinear":
            out.append(lb_multilinear_chain(w, N, n, eps))
        else:
            raise LorentzLabError(f"unknown experiment kind {kind!r}")
    return out
