"""N-homogeneous real polynomials on a finite truncation.

A polynomial is a sparse map ``(component, alpha) -> coefficient``; scalar
polynomials use the single component 0, vector-valued ones are diagonal
``l_r``-valued maps with components 0..n-1.  Evaluation works on dense
exponent arrays built once per polynomial.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, LorentzLabError
from .sequences import TruncatedVector
from .weights import WeightSequence, smallest_ellr_index

__all__ = [
    "HomogeneousPolynomial",
    "PowerSumComposite",
    "polarize",
    "form_coefficient",
    "mixed_form_value",
    "truncation_approximant",
    "gallery",
    "GALLERY_NAMES",
    "target_norm",
    "monomials",
    "restrict",
    "random_polynomial",
    "equicontinuity_bound",
    "projection_norm_bound",
]

MAX_POLARIZATION_DEGREE = 8


def monomials(n: int, N: int) -> list[tuple[int, ...]]:
    """All exponent tuples of length n with total degree N (graded lex order)."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), N):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return out


def target_norm(value, r: Optional[float]) -> float:
    """|value| for scalars, the l_r norm for vector values."""
    if r is None:
        return abs(float(value))
    v = np.abs(np.asarray(value, dtype=float))
    m = v.max() if v.size else 0.0
    if m == 0.0:
        return 0.0
    if math.isinf(r):
        return float(m)
    return float(m * np.sum((v / m) ** r) ** (1.0 / r))


def _vec(x, n: int) -> np.ndarray:
    if isinstance(x, TruncatedVector):
        if x.tail is not None:
            raise DimensionError("polynomials act on finitely supported vectors")
        arr = x.coords
    else:
        arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != n:
        raise DimensionError(f"expected dimension {n}, got {arr.shape[-1]}")
    return arr


class HomogeneousPolynomial:
    """Degree-N homogeneous polynomial on R^n, scalar or diagonal l_r-valued."""

    def __init__(self, degree: int, dim: int, terms: dict, target_r: Optional[float] = None,
                 components: Optional[int] = None):
        self.degree = int(degree)
        self.dim = int(dim)
        self.target_r = None if target_r is None else float(target_r)
        if self.target_r is not None and self.target_r < 1:
            raise LorentzLabError("target exponent must be >= 1")
        self.components = 1 if self.target_r is None else int(components or dim)
        clean = {}
        for (comp, alpha), coeff in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim:
                raise DimensionError(f"multi-index {alpha} has wrong length for dim {self.dim}")
            if sum(alpha) != self.degree or min(alpha) < 0:
                raise LorentzLabError(f"multi-index {alpha} is not of degree {self.degree}")
            if not 0 <= comp < self.components:
                raise DimensionError(f"component {comp} out of range")
            c = float(coeff)
            if not math.isfinite(c):
                raise LorentzLabError("coefficients must be finite")
            if c != 0.0:
                clean[(int(comp), alpha)] = clean.get((int(comp), alpha), 0.0) + c
        self.terms = {k: v for k, v in sorted(clean.items()) if v != 0.0}

    # -- construction helpers -------------------------------------------
    @classmethod
    def scalar(cls, degree: int, dim: int, coeffs: dict) -> "HomogeneousPolynomial":
        return cls(degree, dim, {(0, a): c for a, c in coeffs.items()})

    @classmethod
    def zero(cls, degree: int, dim: int, target_r: Optional[float] = None):
        return cls(degree, dim, {}, target_r)

    @property
    def is_scalar(self) -> bool:
        return self.target_r is None

    def __repr__(self):
        kind = "scalar" if self.is_scalar else f"l_{self.target_r:g}"
        return f"HomogeneousPolynomial(N={self.degree}, n={self.dim}, {kind}, {len(self.terms)} terms)"

    # -- dense arrays ----------------------------------------------------
    @cached_property
    def _arrays(self):
        T = len(self.terms)
        comp = np.zeros(T, dtype=int)
        exps = np.zeros((T, self.dim), dtype=int)
        coef = np.zeros(T)
        for t, ((c, alpha), v) in enumerate(self.terms.items()):
            comp[t], exps[t], coef[t] = c, alpha, v
        onehot = np.zeros((self.components, T))
        onehot[comp, np.arange(T)] = 1.0
        return comp, exps, coef, onehot

    def evaluate(self, x):
        """P(x): float for scalar targets, array of components otherwise."""
        arr = _vec(x, self.dim)
        vals = self.evaluate_many(arr[None, :])[0]
        return float(vals[0]) if self.is_scalar else vals

    __call__ = evaluate

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """Rows of X -> array (rows, components)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {X.shape[1]}")
        _, exps, coef, onehot = self._arrays
        if not self.terms:
            return np.zeros((X.shape[0], self.components))
        mons = np.prod(X[:, None, :] ** exps[None, :, :], axis=2) * coef
        return mons @ onehot.T

    def value_norm(self, x) -> float:
        return target_norm(self.evaluate(x), self.target_r)

    def value_norms(self, X: np.ndarray) -> np.ndarray:
        vals = self.evaluate_many(X)
        if self.is_scalar:
            return np.abs(vals[:, 0])
        r = self.target_r
        mags = np.abs(vals)
        m = mags.max(axis=1)
        safe = np.where(m > 0, m, 1.0)
        if math.isinf(r):
            return m
        return np.where(m > 0, safe * np.sum((mags / safe[:, None]) ** r, axis=1) ** (1.0 / r), 0.0)

    def jacobian(self, x) -> np.ndarray:
        """d P_c / d x_j as an array (components, dim)."""
        arr = _vec(x, self.dim)
        _, exps, coef, onehot = self._arrays
        J = np.zeros((self.components, self.dim))
        if not self.terms:
            return J
        for j in range(self.dim):
            a = exps[:, j]
            mask = a > 0
            if not mask.any():
                continue
            e = exps[mask].copy()
            e[:, j] -= 1
            vals = coef[mask] * a[mask] * np.prod(arr[None, :] ** e, axis=1)
            J[:, j] = onehot[:, mask] @ vals
        return J

    # -- algebra ---------------------------------------------------------
    def _check_compatible(self, other: "HomogeneousPolynomial"):
        if (self.degree, self.dim, self.target_r, self.components) != \
                (other.degree, other.dim, other.target_r, other.components):
            raise DimensionError("polynomials live in different spaces")

    def __add__(self, other: "HomogeneousPolynomial"):
        self._check_compatible(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return HomogeneousPolynomial(self.degree, self.dim, terms, self.target_r, self.components)

    def __mul__(self, s: float):
        return HomogeneousPolynomial(self.degree, self.dim, {k: s * v for k, v in self.terms.items()},
                                     self.target_r, self.components)

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def component(self, c: int) -> "HomogeneousPolynomial":
        """The c-th coordinate polynomial as a scalar polynomial."""
        return HomogeneousPolynomial(self.degree, self.dim,
                                     {(0, a): v for (cc, a), v in self.terms.items() if cc == c})

    def scalar_product(self, other: "HomogeneousPolynomial") -> "HomogeneousPolynomial":
        """Product of two scalar polynomials."""
        if not (self.is_scalar and other.is_scalar) or self.dim != other.dim:
            raise DimensionError("product needs scalar polynomials of equal dimension")
        acc = defaultdict(float)
        for (_, a), u in self.terms.items():
            for (_, b), v in other.terms.items():
                acc[(0, tuple(i + j for i, j in zip(a, b)))] += u * v
        return HomogeneousPolynomial(self.degree + other.degree, self.dim, dict(acc))

    def scalar_power(self, M: int) -> "HomogeneousPolynomial":
        out = self
        for _ in range(M - 1):
            out = out.scalar_product(self)
        return out

    def dense_coefficients(self) -> np.ndarray:
        """Coefficients on ``monomials(dim, degree)``, shape (components, count)."""
        index = {a: i for i, a in enumerate(monomials(self.dim, self.degree))}
        out = np.zeros((self.components, len(index)))
        for (c, a), v in self.terms.items():
            out[c, index[a]] = v
        return out

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        target = "scalar" if self.is_scalar else {"diag_r": self.target_r}
        return {"N": self.degree, "n": self.dim, "target": target,
                "terms": [{"component": c, "alpha": list(a), "coeff": v}
                          for (c, a), v in self.terms.items()]}

    @classmethod
    def from_dict(cls, d: dict) -> "HomogeneousPolynomial":
        target = d["target"]
        r = None if target == "scalar" else float(target["diag_r"])
        terms = {(t["component"], tuple(t["alpha"])): t["coeff"] for t in d["terms"]}
        return cls(d["N"], d["n"], terms, r)


class PowerSumComposite:
    """x -> sum_i lam_i**M P_i(x)**M for a diagonal vector-valued P.

    Evaluated directly from P; ``expand`` gives the explicit polynomial.
    """

    def __init__(self, P: HomogeneousPolynomial, signs: Sequence[float], M: int):
        if P.is_scalar:
            raise LorentzLabError("composition needs a vector-valued polynomial")
        self.P = P
        self.signs = np.asarray(signs, dtype=float)
        if self.signs.size != P.components:
            raise DimensionError("one sign per target component is required")
        self.M = int(M)
        self.degree = P.degree * self.M
        self.dim = P.dim
        self.target_r = None

    def evaluate(self, x) -> float:
        vals = self.P.evaluate(x)
        return float(np.sum(self.signs ** self.M * vals ** self.M))

    __call__ = evaluate

    def evaluate_many(self, X):
        vals = self.P.evaluate_many(X)
        return (vals ** self.M @ self.signs ** self.M)[:, None]

    def expand(self) -> HomogeneousPolynomial:
        out = HomogeneousPolynomial.zero(self.degree, self.dim)
        for c in range(self.P.components):
            comp = self.P.component(c)
            if comp.terms:
                out = out + (self.signs[c] ** self.M) * comp.scalar_power(self.M)
        return out


# ---------------------------------------------------------------------------
# Symmetric forms
# ---------------------------------------------------------------------------

def polarize(P, args: Sequence) -> float | np.ndarray:
    """Phi(x_1,...,x_N) = (2^N N!)^-1 sum_eps eps_1...eps_N P(sum_j eps_j x_j)."""
    N = P.degree
    if len(args) != N:
        raise LorentzLabError(f"polarization of a degree-{N} polynomial needs {N} arguments")
    if N > MAX_POLARIZATION_DEGREE:
        raise LorentzLabError(f"polarization limited to degree <= {MAX_POLARIZATION_DEGREE}")
    X = np.stack([_vec(a, P.dim) for a in args])
    eps = np.array(list(itertools.product((1.0, -1.0), repeat=N)))
    points = eps @ X
    vals = P.evaluate_many(points)
    sgn = np.prod(eps, axis=1)
    # fixed summation order keeps results reproducible
    total = np.array([math.fsum((sgn * vals[:, c]).tolist()) for c in range(vals.shape[1])])
    total /= 2.0 ** N * math.factorial(N)
    if getattr(P, "target_r", None) is None:
        return float(total[0])
    return total


def form_coefficient(P: HomogeneousPolynomial, a, n: int, M: int) -> float | np.ndarray:
    """Phi(a,...,a, e_n,...,e_n) with M copies of e_n, from coefficients.

    P(a + t e_n) = sum_k binom(N, k) t^k Phi(a^{N-k}, e_n^k), so the value is
    the t^M coefficient of P(a + t e_n) divided by binom(N, M).
    """
    arr = _vec(a, P.dim)
    N = P.degree
    if not 0 <= M <= N:
        raise LorentzLabError("need 0 <= M <= N")
    j = n - 1
    out = np.zeros(P.components)
    for (c, alpha), coeff in P.terms.items():
        k = alpha[j]
        if k < M:
            continue
        rest = coeff
        for i, e in enumerate(alpha):
            if i != j and e:
                rest *= arr[i] ** e
        out[c] += rest * math.comb(k, M) * arr[j] ** (k - M)
    out /= math.comb(N, M)
    return float(out[0]) if P.is_scalar else out


def mixed_form_value(P, a, n: int, M: int) -> float | np.ndarray:
    """Phi(a,...,a, e_n,...,e_n) (M copies of e_n) by polarization."""
    dim = P.dim
    e = np.zeros(dim)
    e[n - 1] = 1.0
    arr = _vec(a, dim)
    return polarize(P, [arr] * (P.degree - M) + [e] * M)


# ---------------------------------------------------------------------------
# Finite-rank approximants
# ---------------------------------------------------------------------------

def _admissible_fraction(alpha: tuple, ks: Sequence[int]) -> float:
    """Share of orderings of alpha's variables with variable_j <= k_j in slot j."""
    labels = [i + 1 for i, e in enumerate(alpha) for _ in range(e)]
    N = len(labels)
    if all(k >= max(labels) for k in ks):
        return 1.0
    good = sum(1 for perm in itertools.permutations(range(N))
               if all(labels[perm[s]] <= ks[s] for s in range(N)))
    return good / math.factorial(N)


def truncation_approximant(P: HomogeneousPolynomial, ks: Sequence[int]) -> HomogeneousPolynomial:
    """x -> Phi(T_{k_1} x, ..., T_{k_N} x) with T_k the projection on the first k coordinates."""
    ks = [int(k) for k in ks]
    if len(ks) != P.degree:
        raise LorentzLabError("one projection index per degree is required")
    if any(k < 1 or k > P.dim for k in ks):
        raise DimensionError("projection indices must lie in 1..dim")
    if all(k == P.dim for k in ks):
        return HomogeneousPolynomial(P.degree, P.dim, dict(P.terms), P.target_r, P.components)
    terms = {}
    for (c, alpha), coeff in P.terms.items():
        frac = _admissible_fraction(alpha, ks)
        if frac:
            terms[(c, alpha)] = coeff * frac
    return HomogeneousPolynomial(P.degree, P.dim, terms, P.target_r, P.components)


def restrict(P: HomogeneousPolynomial, k: int) -> HomogeneousPolynomial:
    """P composed with the projection on the first k coordinates."""
    return truncation_approximant(P, [k] * P.degree)


# ---------------------------------------------------------------------------
# Gallery
# ---------------------------------------------------------------------------

GALLERY_NAMES = ("diag-N", "real-BP", "power-sum", "real-LB", "sign-qPa", "coordinate")


def gallery(name: str, N: Optional[int] = None, n: Optional[int] = None,
            w: Optional[WeightSequence] = None, M: Optional[int] = None,
            r: Optional[float] = None, signs: Optional[Sequence[float]] = None,
            index: int = 1) -> HomogeneousPolynomial:
    """Named polynomials from the counterexample constructions.

    diag-N     Q(x) = (x(i)^N)_i, l_r-valued
    real-BP    Q(x) = (x(1)^(N-1) x(i))_i, l_r-valued
    power-sum  q(x) = sum_i x(i)^N
    real-LB    q(x) = x(1)^(N-M) sum_i (-1)^i x(i)^M
    sign-qPa   q(x) = sum_i signs_i^M x(i)^M  (degree M, n = len(signs))
    coordinate x -> x(index)^N

    For the vector-valued entries r defaults to the least M with w in l_M.
    """
    if name not in GALLERY_NAMES:
        raise LorentzLabError(f"unknown gallery polynomial {name!r}; choose from {GALLERY_NAMES}")
    if M is None and w is not None:
        M = smallest_ellr_index(w)
    if name == "sign-qPa":
        if signs is None or M is None:
            raise LorentzLabError("sign-qPa needs signs and M")
        lam = [1.0 if s >= 0 else -1.0 for s in signs]
        d = len(lam)
        return HomogeneousPolynomial.scalar(M, d, {_unit(d, i, M): lam[i] ** M for i in range(d)})
    if N is None or n is None or N < 1 or n < 1:
        raise LorentzLabError(f"{name} needs N >= 1 and n >= 1")
    if name in ("diag-N", "real-BP"):
        rr = r if r is not None else M
        if rr is None:
            raise LorentzLabError(f"{name} needs a target exponent r (or a weight deciding M)")
        terms = {}
        for i in range(n):
            if name == "diag-N":
                alpha = _unit(n, i, N)
            else:
                alpha = [0] * n
                alpha[0] += N - 1
                alpha[i] += 1
                alpha = tuple(alpha)
            terms[(i, alpha)] = 1.0
        return HomogeneousPolynomial(N, n, terms, float(rr))
    if name == "power-sum":
        return HomogeneousPolynomial.scalar(N, n, {_unit(n, i, N): 1.0 for i in range(n)})
    if name == "coordinate":
        if not 1 <= index <= n:
            raise DimensionError("coordinate index out of range")
        return HomogeneousPolynomial.scalar(N, n, {_unit(n, index - 1, N): 1.0})
    # real-LB
    if M is None:
        raise LorentzLabError("real-LB needs M (or a weight deciding it)")
    if M > N:
        raise LorentzLabError(f"real-LB needs M <= N, got M={M}, N={N}")
    coeffs = {}
    for i in range(n):
        alpha = [0] * n
        alpha[0] += N - M
        alpha[i] += M
        alpha = tuple(alpha)
        coeffs[alpha] = coeffs.get(alpha, 0.0) + (-1.0) ** (i + 1)
    return HomogeneousPolynomial.scalar(N, n, coeffs)


def _unit(n: int, i: int, N: int) -> tuple:
    alpha = [0] * n
    alpha[i] = N
    return tuple(alpha)


def random_polynomial(rng: np.random.Generator, N: int, n: int, target_r: Optional[float] = None,
                      density: float = 0.6, scale: float = 1.0) -> HomogeneousPolynomial:
    """Random sparse polynomial with standard normal coefficients."""
    mons = monomials(n, N)
    comps = 1 if target_r is None else n
    terms = {}
    for c in range(comps):
        for alpha in mons:
            if rng.random() < density:
                terms[(c, alpha)] = scale * rng.standard_normal()
    if not terms:
        terms[(0, mons[int(rng.integers(len(mons)))])] = 1.0
    return HomogeneousPolynomial(N, n, terms, target_r)


def equicontinuity_bound(M: int, u, v, r: Optional[float] = None) -> float:
    """M ||u - v||_M max(||u||_M, ||v||_M)^(M-1)."""
    r = M if r is None else r
    u, v = np.asarray(u, float), np.asarray(v, float)
    nu, nv = target_norm(u, r), target_norm(v, r)
    return M * target_norm(u - v, r) * max(nu, nv) ** (M - 1)


def projection_norm_bound(w: WeightSequence, n: int, samples: int, seed: int) -> float:
    """Empirical sup over k and sampled x of ||T_k x||_W / ||x||_W."""
    from .sequences import norm_W_rows
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, n)) * rng.random((samples, n)) ** 3
    base = norm_W_rows(X, w)
    best = 0.0
    for k in range(1, n + 1):
        Y = X.copy()
        Y[:, k:] = 0.0
        best = max(best, float(np.max(norm_W_rows(Y, w) / base)))
    return best
