"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration and model problems are
exit 1, numerical failures during a solve are exit 2.
"""


class CountLimError(Exception):
    """Base class for all countlim errors."""


class ConfigError(CountLimError):
    """Invalid configuration file or invalid option combination."""


class ModelError(CountLimError):
    """Statistical model violates an invariant or is used out of contract.

    Covers degenerate models (zero signal yield, so the strength parameter
    is unidentified) and calling exact-limit routines on models that carry
    non-identity response functions.
    """


class YieldError(CountLimError):
    """A response function drove a yield negative.

    Attributes:
        eta: nuisance vector that produced the negative yield.
        sample_index: index into the sample set, when evaluated over one.
    """

    def __init__(self, message, eta=None, sample_index=None):
        super().__init__(message)
        self.eta = eta
        self.sample_index = sample_index


class ConvergenceError(CountLimError):
    """An iterative computation failed to converge.

    Attributes:
        bracket: last (lo, hi) bracket for root solves, None otherwise.
        iterations: iterations performed before giving up.
    """

    def __init__(self, message, bracket=None, iterations=None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations
