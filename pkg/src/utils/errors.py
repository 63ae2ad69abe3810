"""
Exception hierarchy shared by the group, kernel and estimate modules
"""


class VerificationError(Exception):
    """Base class for all errors raised by the verification library"""
    pass


class InvalidParameterError(VerificationError, ValueError):
    """Invalid user-supplied parameter (maps to exit code 2 on the command line)"""
    pass


class ClosureCapExceededError(VerificationError):
    """Group closure grew beyond the configured element cap"""
    pass


class NotInvariantError(VerificationError):
    """A set, map or function failed its invariance test"""
    pass


class NormalityError(InvalidParameterError):
    """A subgroup that must be normal is not stable under conjugation"""
    pass


class NotSkewError(VerificationError):
    """Polynomial does not satisfy p(g.z) = det(g)^-1 p(z)"""
    pass


class SingularKernelError(VerificationError):
    """Kernel evaluated at a numerically singular pair"""
    pass


class HyperplaneEvaluationError(VerificationError):
    """Evaluation on a reflecting hyperplane where the formula is singular"""
    pass


class PartitionError(InvalidParameterError):
    """Hyperplane partition is not a valid pair of G-invariant sets"""
    pass


class WeightSingularityError(VerificationError):
    """Weight is singular on too large a fraction of the samples"""
    pass


class IdentityCheckFailed(VerificationError):
    """A deterministic identity check failed (maps to exit code 1)"""
    pass
