"""
Exception hierarchy shared by the numerical services and the CLI
"""


class ResonanceError(Exception):
    """Base class for every failure raised by the resonance finder."""


class BranchPointError(ResonanceError, ValueError):
    """Evaluation requested at a branch point (z = 0, z = 1) or at the kernel singularity x = 0."""


class HankelOverflowError(ResonanceError, OverflowError):
    """H0(1) requested deep in the lower half plane, where it grows like exp(-Im eta)."""


class PoleError(ResonanceError, ZeroDivisionError):
    """D_eps vanishes at the requested energy: the point is a spectral singularity."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class ConvergenceError(ResonanceError, RuntimeError):
    """Error raised when an iteration fails to converge within allowed iterations."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class IllConditionedError(ConvergenceError):
    """Newton derivative too small relative to the function value."""


class BracketError(ResonanceError, ValueError):
    """No sign change of D_eps(-lambda) across the bracket."""


class SplitBracketError(BracketError):
    """Bracket straddles the d=2 vertical asymptote; solve on each side separately."""

    def __init__(self, message, log_asymptote):
        super().__init__(message)
        self.log_asymptote = log_asymptote


class EigenvalueRangeError(ResonanceError, OverflowError):
    """Eigenvalue lies beyond the largest double; log of the asymptote is reported instead."""

    def __init__(self, message, log_asymptote):
        super().__init__(message)
        self.log_asymptote = log_asymptote


class UnsupportedRegimeError(ResonanceError, ValueError):
    """The parameter cell does not have the requested singularity or expansion."""


class IncompleteClusterError(ResonanceError):
    """Fewer than three roots of the threshold cluster were found."""

    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


class InvalidConfigError(ResonanceError, ValueError):
    """Parameters or run configuration violate their invariants."""
