"""Numerical laboratory for Lorentz sequence spaces d(w,1), their duals and preduals."""
from .errors import (
    AdmissibilityError,
    CertificateError,
    DimensionError,
    HorizonError,
    HypothesisViolation,
    InvariantBreach,
    LorentzLabError,
    MembershipError,
    NotInBallError,
)
from .weights import WeightSequence, make_list_weight, make_power_weight, smallest_ellr_index
from .sequences import GeometricTail, TruncatedVector, norm_dws, norm_W, dual_norm_oracle
from .certificates import PerturbationCertificate, certify_predual_point, lemma2_certify, verify_certificate
from .polynomials import HomogeneousPolynomial, gallery, polarize
from .norm_search import brute_force_norm, local_max_diagnostic, max_norm, project_onto_wball
from .tensor_duality import SymmetricTensorRep, pair, pis_bracket, representing_measure
from .experiments import ChainReport, bp_chain, lb_chain, lb_multilinear_chain

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "CertificateError",
    "DimensionError",
    "HorizonError",
    "HypothesisViolation",
    "InvariantBreach",
    "LorentzLabError",
    "MembershipError",
    "NotInBallError",
    "WeightSequence",
    "make_list_weight",
    "make_power_weight",
    "smallest_ellr_index",
    "GeometricTail",
    "TruncatedVector",
    "norm_dws",
    "norm_W",
    "dual_norm_oracle",
    "PerturbationCertificate",
    "certify_predual_point",
    "lemma2_certify",
    "verify_certificate",
    "HomogeneousPolynomial",
    "gallery",
    "polarize",
    "brute_force_norm",
    "local_max_diagnostic",
    "max_norm",
    "project_onto_wball",
    "SymmetricTensorRep",
    "pair",
    "pis_bracket",
    "representing_measure",
    "ChainReport",
    "bp_chain",
    "lb_chain",
    "lb_multilinear_chain",
]
