"""Exception hierarchy shared by all modules.

Each class carries the process exit code the command line uses when it
escapes a subcommand.
"""


class WaveControlError(Exception):
    exit_code = 1


class ConfigError(WaveControlError, ValueError):
    exit_code = 2


class PreconditionError(WaveControlError, ValueError):
    """A mathematical precondition of the method does not hold."""

    exit_code = 3


class DegenerateBoundary(PreconditionError):
    pass


class ParityDegeneracy(PreconditionError):
    pass


class NotSymmetric(PreconditionError):
    pass


class RepeatedEigenvalues(PreconditionError):
    pass


class ZeroMoment(PreconditionError):
    def __init__(self, index, value=0.0):
        self.index = index
        self.value = value
        super().__init__(
            f"ZeroMoment({index}): (b, psi_{index}) = {value:.3e}; "
            f"eigenmode {index} is not reachable from b"
        )


class ZeroFrequency(PreconditionError):
    def __init__(self, message, k=None, l=None):
        self.k = k
        self.l = l
        super().__init__(message)


class ZeroWeight(PreconditionError):
    pass


class UnreachableMode(PreconditionError):
    pass


class ConditioningError(WaveControlError):
    exit_code = 4


class IllConditioned(ConditioningError):
    pass


class InconsistentTargets(ConditioningError):
    pass


class UnstableGrid(PreconditionError):
    pass


class VerificationFailed(WaveControlError):
    exit_code = 5


class HyperbolicityWarning(UserWarning):
    """Some frequency is imaginary (nu_k^2 + lambda_l < 0)."""


class ClusterWarning(UserWarning):
    """Frequencies closer than the cluster threshold; the Gram system is stiff."""
