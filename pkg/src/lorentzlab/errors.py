"""Exception hierarchy.

Validation errors (bad input, violated preconditions) derive from
``LorentzLabError``; ``InvariantBreach`` signals an internal inconsistency
and is mapped to a distinct CLI exit code.
"""


class LorentzLabError(ValueError):
    pass


class AdmissibilityError(LorentzLabError):
    """Weight sequence is not admissible."""


class MembershipError(LorentzLabError):
    """Weight is not (or cannot be shown to be) in the requested l_r."""


class DimensionError(LorentzLabError):
    pass


class NotInBallError(LorentzLabError):
    pass


class HypothesisViolation(LorentzLabError):
    pass


class CertificateError(LorentzLabError):
    pass


class HorizonError(LorentzLabError):
    """A finite search horizon was exhausted."""


class InvariantBreach(RuntimeError):
    pass
