"""Symmetric tensors at truncation: pairing with polynomials, pi_s brackets, measures.

A scalar tensor u = sum_j lam_j x_j^N is identified with its moment vector
m_alpha = sum_j lam_j x_j^alpha, so that <u, P> = sum_alpha p_alpha m_alpha.
Vector tensors carry a Y-factor y_j per term and pair with diagonal
l_r-valued polynomials through the l_{r'} duality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import DimensionError, InvariantBreach, LorentzLabError
from .norm_search import max_norm
from .polynomials import HomogeneousPolynomial, monomials, random_polynomial, target_norm
from .sequences import norm_W, norm_W_rows, norming_functional
from .weights import WeightSequence

__all__ = [
    "SymmetricTensorRep",
    "DiscreteMeasure",
    "PisBracket",
    "pair",
    "pis_upper",
    "pis_lower",
    "pis_bracket",
    "representing_measure",
    "elementary",
    "random_tensor",
    "linear_power",
    "conjugate_exponent",
]

UNIT_TOL = 1e-12


def conjugate_exponent(r: float) -> float:
    if r == 1.0:
        return math.inf
    if math.isinf(r):
        return 1.0
    return r / (r - 1.0)


@dataclass
class SymmetricTensorRep:
    """u = sum_j lam_j x_j^N (y_j is None) or sum_j lam_j x_j^N (x) y_j.

    ``y_exponent`` is the exponent of the norm measuring the Y-factors; for
    pairing with l_r-valued maps it is r' (the conjugate of r).
    """
    degree: int
    dim: int
    weight: WeightSequence
    terms: list
    y_exponent: Optional[float] = None

    def __post_init__(self):
        clean = []
        for term in self.terms:
            lam, x = float(term[0]), np.asarray(term[1], dtype=float).reshape(-1)
            y = None if len(term) < 3 or term[2] is None else np.asarray(term[2], float).reshape(-1)
            if x.size != self.dim:
                raise DimensionError(f"term vector has dimension {x.size}, expected {self.dim}")
            if not np.any(x):
                raise LorentzLabError("representation vectors must be nonzero")
            if (y is None) != (self.y_exponent is None):
                raise LorentzLabError("Y-factors must be given on every term or on none")
            if y is not None and (y.size != self.dim or not np.any(y)):
                raise DimensionError("Y-factor must be a nonzero vector of the tensor dimension")
            clean.append((lam, x, y))
        self.terms = clean

    @property
    def is_scalar(self) -> bool:
        return self.y_exponent is None

    def y_norm(self, y) -> float:
        return 1.0 if y is None else target_norm(y, self.y_exponent)

    def value(self) -> float:
        """Representation value sum_j |lam_j| ||x_j||_W^N ||y_j||."""
        return math.fsum(abs(lam) * norm_W(x, self.weight) ** self.degree * self.y_norm(y)
                         for lam, x, y in self.terms)

    def moments(self) -> np.ndarray:
        """m_alpha = sum_j lam_j x_j^alpha over monomials(dim, degree) (scalar tensors)."""
        if not self.is_scalar:
            raise LorentzLabError("moments are defined for scalar tensors")
        exps = np.array(monomials(self.dim, self.degree))
        if not self.terms:
            return np.zeros(len(exps))
        X = np.array([x for _, x, _ in self.terms])
        lam = np.array([lam for lam, _, _ in self.terms])
        return lam @ np.prod(X[:, None, :] ** exps[None, :, :], axis=2)

    def to_dict(self) -> dict:
        d = {"N": self.degree, "n": self.dim, "weight_ref": self.weight.to_dict(),
             "terms": [{"lam": lam, "x": x.tolist(), **({} if y is None else {"y": y.tolist()})}
                       for lam, x, y in self.terms]}
        if self.y_exponent is not None:
            d["y_exponent"] = self.y_exponent
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SymmetricTensorRep":
        terms = [(t["lam"], t["x"], t.get("y")) for t in d["terms"]]
        return cls(int(d["N"]), int(d["n"]), WeightSequence.from_dict(d["weight_ref"]), terms,
                   d.get("y_exponent"))


def elementary(x, N: int, w: WeightSequence, lam: float = 1.0) -> SymmetricTensorRep:
    x = np.asarray(x, dtype=float)
    return SymmetricTensorRep(N, x.size, w, [(lam, x)])


def random_tensor(rng: np.random.Generator, N: int, n: int, w: WeightSequence, terms: int = 3,
                  y_exponent: Optional[float] = None) -> SymmetricTensorRep:
    """Random finite-type tensor; x_j and y_j are sparse normal vectors."""
    out = []
    for _ in range(terms):
        x = rng.standard_normal(n) * (rng.random(n) < 0.7)
        if not np.any(x):
            x[rng.integers(n)] = 1.0
        y = None
        if y_exponent is not None:
            y = rng.standard_normal(n)
        out.append((float(rng.standard_normal()), x, y))
    return SymmetricTensorRep(N, n, w, out, y_exponent)


def _check(u: SymmetricTensorRep, P: HomogeneousPolynomial) -> None:
    if P.dim != u.dim:
        raise DimensionError(f"polynomial acts on dimension {P.dim}, tensor has {u.dim}")
    if P.degree != u.degree:
        raise LorentzLabError(f"degree mismatch: polynomial {P.degree}, tensor {u.degree}")
    if P.is_scalar != u.is_scalar:
        raise LorentzLabError("scalar tensors pair with scalar polynomials, vector with vector")


def pair(u: SymmetricTensorRep, P: HomogeneousPolynomial) -> float:
    """<u, P> = sum_j lam_j P(x_j) or sum_j lam_j <P(x_j), y_j>."""
    _check(u, P)
    if not u.terms:
        return 0.0
    X = np.array([x for _, x, _ in u.terms])
    vals = P.evaluate_many(X)
    lam = [t[0] for t in u.terms]
    if u.is_scalar:
        return math.fsum(l * float(v[0]) for l, v in zip(lam, vals))
    return math.fsum(l * float(v @ y) for l, v, (_, _, y) in zip(lam, vals, u.terms))


def linear_power(phi, N: int) -> HomogeneousPolynomial:
    """z -> (phi . z)^N expanded in monomials."""
    phi = np.asarray(phi, dtype=float)
    coeffs = {}
    for alpha in monomials(phi.size, N):
        multinom = math.factorial(N) / math.prod(math.factorial(a) for a in alpha)
        c = multinom * math.prod(p ** a for p, a in zip(phi, alpha))
        if c != 0.0:
            coeffs[alpha] = c
    return HomogeneousPolynomial.scalar(N, phi.size, coeffs)


# ---------------------------------------------------------------------------
# pi_s bracket
# ---------------------------------------------------------------------------

@dataclass
class PisBracket:
    lower: float
    upper: float
    lower_witness: Optional[HomogeneousPolynomial]
    upper_witness: SymmetricTensorRep
    lower_exact_norm: bool
    residual: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def collapsed(self) -> bool:
        return self.upper - self.lower <= 1e-9 * max(1.0, self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "collapsed": self.collapsed,
                "lower_exact_norm": self.lower_exact_norm, "residual": self.residual,
                "lower_witness": None if self.lower_witness is None else self.lower_witness.to_dict(),
                "upper_witness": self.upper_witness.to_dict(), "notes": self.notes}


def _ball_vertices(w: WeightSequence, n: int, rng: np.random.Generator, cap: int) -> np.ndarray:
    """Signed permutations of (w(1), ..., w(n)): the vertices of the W-ball."""
    vals = w.values(n)
    if math.factorial(n) * 2 ** n <= cap:
        import itertools
        perms = np.array(list(itertools.permutations(range(n))))
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        base = vals[np.argsort(perms, axis=1)]
        return (base[:, None, :] * signs[None, :, :]).reshape(-1, n)
    out = np.empty((cap, n))
    for i in range(cap):
        out[i] = vals[rng.permutation(n)] * rng.choice([-1.0, 1.0], size=n)
    return out


def _dictionary(u: SymmetricTensorRep, rng: np.random.Generator, size: int) -> np.ndarray:
    n = u.dim
    parts = [_ball_vertices(u.weight, n, rng, size)]
    Z = rng.standard_normal((size, n)) * (rng.random((size, n)) < 0.6)
    Z = Z[np.any(Z, axis=1)]
    parts.append(Z / norm_W_rows(Z, u.weight)[:, None])
    if u.terms:
        X = np.array([x for _, x, _ in u.terms])
        parts.append(X / norm_W_rows(X, u.weight)[:, None])
    return np.vstack(parts)


def _design(D: np.ndarray, exps: np.ndarray) -> np.ndarray:
    return np.prod(D[None, :, :] ** exps[:, None, :], axis=2)


def _column_generation(u: SymmetricTensorRep, D: np.ndarray, exps: np.ndarray, m: np.ndarray,
                       rng: np.random.Generator, max_rounds: int, floor: float):
    """LP over the atoms in D, grown by pricing with the LP dual polynomial.

    Stops early once a witness comes within rounding of ``floor``, a known
    lower bound for pi_s.
    """
    best = (math.inf, None, 0.0)
    P = None
    for _ in range(max_rounds):
        A = _design(D, exps)
        k = A.shape[1]
        res = linprog(np.ones(2 * k), A_eq=np.hstack([A, -A]), b_eq=m, bounds=(0, None),
                      method="highs")
        if res.status != 0:
            break
        lam = res.x[:k] - res.x[k:]
        lam[np.abs(lam) <= 1e-12] = 0.0
        # the LP meets the moments only to solver tolerance; spread the leftover
        # residual over a pivoted basis of dictionary atoms so the witness is exact
        _, _, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
        basis = piv[: np.linalg.matrix_rank(A)]
        fix, *_ = np.linalg.lstsq(A[:, basis], m - A @ lam, rcond=None)
        lam[basis] += fix
        support = np.flatnonzero(lam)
        coef = lam[support]
        resid = float(np.linalg.norm(A[:, support] @ coef - m))
        if resid <= 1e-12 * (1.0 + float(np.linalg.norm(m))):
            val = math.fsum(np.abs(coef).tolist())
            if val < best[0]:
                witness = SymmetricTensorRep(u.degree, u.dim, u.weight,
                                             [(c, D[j]) for c, j in zip(coef, support)])
                best = (val, witness, resid)
        dual = res.eqlin.marginals
        if best[0] <= floor * (1.0 + 1e-12):
            break
        P = HomogeneousPolynomial.scalar(u.degree, u.dim,
                                         {tuple(a): p for a, p in zip(exps, dual) if p != 0.0})
        if not P.terms:
            break
        # an atom z with |P(z)| > 1 prices out: adding it lowers the LP value
        found = max_norm(P, u.weight, starts=8 * u.dim, seed=int(rng.integers(1 << 31)),
                         certify=False)
        if found.value <= 1.0 + 1e-9:
            break
        D = np.vstack([D, found.point / norm_W(found.point, u.weight)])
    return (*best, P)


def pis_upper(u: SymmetricTensorRep, restarts: int = 3, seed: int = 0,
              dictionary_size: int = 400, max_rounds: int = 40, floor: float = 0.0):
    """Best representation value found: (value, witness, moment residual, dual polynomial).

    Minimizes sum |lam_j| over representations by unit atoms of a dictionary
    (an l1 problem solved as an LP), adding the ball point where the LP dual
    polynomial is largest until no atom prices out or ``max_rounds`` LPs
    have been solved.  Each restart draws a fresh random dictionary.  A
    known lower bound ``floor`` ends the search once it is met.  The LP
    solution is repaired over a pivoted basis of dictionary atoms so the
    witness reproduces the moments to rounding.
    """
    if not u.is_scalar:
        raise LorentzLabError("pi_s brackets are computed for scalar tensors")
    if not u.terms:
        return 0.0, u, 0.0, None
    rng = np.random.default_rng(seed)
    exps = np.array(monomials(u.dim, u.degree))
    m = u.moments()
    best = (u.value(), u, 0.0)
    best_P = None
    for _ in range(max(restarts, 1)):
        val, witness, resid, P = _column_generation(u, _dictionary(u, rng, dictionary_size),
                                                    exps, m, rng, max_rounds, floor)
        if best_P is None:
            best_P = P
        if witness is not None and val < best[0]:
            best, best_P = (val, witness, resid), P
        if best[0] <= floor * (1.0 + 1e-12):
            break
    return (*best, best_P)


def _exact_norm_candidates(u: SymmetricTensorRep, extra: list, rng, count: int) -> list:
    """Extreme points phi of the d(w,1) ball; (phi . z)^N has sup norm exactly 1."""
    n = u.dim
    Wn = u.weight.prefix(n)
    phis = [norming_functional(x, u.weight) for _, x, _ in u.terms]
    phis += [norming_functional(x, u.weight) for x in extra]
    for _ in range(count):
        k = int(rng.integers(1, n + 1))
        phi = np.zeros(n)
        idx = rng.choice(n, size=k, replace=False)
        phi[idx] = rng.choice([-1.0, 1.0], size=k) / Wn[k - 1]
        phis.append(phi)
    return phis


def pis_lower(u: SymmetricTensorRep, family_size: int = 16, seed: int = 0,
              upper_witness: Optional[SymmetricTensorRep] = None,
              candidates: tuple = ()) -> tuple[float, Optional[HomogeneousPolynomial], bool]:
    """Best |<u, P>| / ||P|| over a candidate family: (value, polynomial, exact_norm).

    Powers of d(w,1) extreme points have norm exactly 1.  Random polynomials
    are normalized by the larger of their max_norm value and their values on
    the upper witness atoms; max_norm only bounds the norm from below, so a
    winner from that family is flagged by ``exact_norm = False``.
    """
    if not u.is_scalar:
        raise LorentzLabError("pi_s brackets are computed for scalar tensors")
    if not u.terms:
        return 0.0, None, True
    rng = np.random.default_rng(seed)
    atoms = [] if upper_witness is None else [x for _, x, _ in upper_witness.terms]
    best, best_P, exact = 0.0, None, True
    for phi in _exact_norm_candidates(u, atoms, rng, family_size):
        P = linear_power(phi, u.degree)
        v = abs(pair(u, P))
        if v > best:
            best, best_P, exact = v, P, True
    unit_atoms = None
    if atoms:
        A = np.array(atoms)
        unit_atoms = A / norm_W_rows(A, u.weight)[:, None]
    searched = list(candidates)
    searched += [random_polynomial(rng, u.degree, u.dim, None, 0.6, 1.0)
                 for _ in range(family_size)]
    for P in searched:
        nrm = max_norm(P, u.weight, starts=8 * u.dim, seed=int(rng.integers(1 << 31)),
                       certify=False).value
        if unit_atoms is not None:
            nrm = max(nrm, float(np.max(P.value_norms(unit_atoms))))
        if nrm <= 0.0:
            continue
        v = abs(pair(u, P)) / nrm
        if v > best:
            best, best_P, exact = v, P * (1.0 / nrm), False
    return best, best_P, exact


def pis_bracket(u: SymmetricTensorRep, restarts: int = 3, family_size: int = 16,
                seed: int = 0) -> PisBracket:
    # exact-norm lower bound from the terms' norming functionals; meeting it closes the gap
    floor = max((abs(pair(u, linear_power(phi, u.degree)))
                 for phi in _exact_norm_candidates(u, [], None, 0)), default=0.0)
    upper, witness, resid, dual = pis_upper(u, restarts, seed, floor=floor)
    extra = () if dual is None else (dual,)
    lower, P, exact = pis_lower(u, family_size, seed, witness, extra)
    notes = []
    if not exact:
        notes.append("lower endpoint uses a searched norm; it may overestimate by the search gap")
    if lower > upper * (1.0 + 1e-9) + 1e-12:
        raise InvariantBreach(f"pi_s bracket inverted: lower {lower!r} > upper {upper!r}")
    return PisBracket(lower, upper, P, witness, exact, resid, notes)


# ---------------------------------------------------------------------------
# Representing measures
# ---------------------------------------------------------------------------

@dataclass
class DiscreteMeasure:
    """Atoms (weight, x_hat, y_hat) with unit x_hat (W-norm) and unit y_hat."""
    degree: int
    weight: WeightSequence
    atoms: list
    y_exponent: Optional[float] = None
    sign_convention: str = "signs stay in the atom weight; x_hat = x / ||x||_W for every N"

    def __post_init__(self):
        for _, xh, yh in self.atoms:
            if abs(norm_W(xh, self.weight) - 1.0) > UNIT_TOL:
                raise InvariantBreach("atom x_hat is not a unit vector")
            if yh is not None and abs(target_norm(yh, self.y_exponent) - 1.0) > UNIT_TOL:
                raise InvariantBreach("atom y_hat is not a unit vector")

    def total_variation(self) -> float:
        return math.fsum(abs(a[0]) for a in self.atoms)

    def integrate(self, P: HomogeneousPolynomial) -> float:
        """sum over atoms of weight * P(x_hat) (paired with y_hat for vector P)."""
        out = []
        for wt, xh, yh in self.atoms:
            v = P.evaluate(xh)
            out.append(wt * (float(np.asarray(v).reshape(-1)[0]) if yh is None else float(v @ yh)))
        return math.fsum(out)

    def to_dict(self) -> dict:
        return {"N": self.degree, "weight_ref": self.weight.to_dict(),
                "y_exponent": self.y_exponent, "sign_convention": self.sign_convention,
                "total_variation": self.total_variation(),
                "atoms": [{"weight": a, "x": x.tolist(), "y": None if y is None else y.tolist()}
                          for a, x, y in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        atoms = [(a["weight"], np.asarray(a["x"], float),
                  None if a["y"] is None else np.asarray(a["y"], float)) for a in d["atoms"]]
        return cls(int(d["N"]), WeightSequence.from_dict(d["weight_ref"]), atoms, d.get("y_exponent"))


def representing_measure(u: SymmetricTensorRep) -> DiscreteMeasure:
    """Atoms (lam ||x||_W^N ||y||, x / ||x||_W, y / ||y||) for each term."""
    atoms = []
    for lam, x, y in u.terms:
        nx = norm_W(x, u.weight)
        ny = u.y_norm(y)
        atoms.append((lam * nx ** u.degree * ny, x / nx, None if y is None else y / ny))
    return DiscreteMeasure(u.degree, u.weight, atoms, u.y_exponent)
