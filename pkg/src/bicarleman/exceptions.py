"""Exception hierarchy shared by all modules."""


class BiCarlemanError(Exception):
    """Base class for every error raised by this package."""


class ToleranceNotMet(BiCarlemanError):
    """A quadrature could not certify the requested tolerance within its budget."""


class IndexOutOfWindow(BiCarlemanError, IndexError):
    pass


class DimensionMismatch(BiCarlemanError, ValueError):
    pass


class NonOrthonormal(BiCarlemanError, ValueError):
    pass


class WindowExhausted(BiCarlemanError):
    """The atom window does not contain enough scales for the requested h-atoms."""


class InsufficientDecay(BiCarlemanError):
    """The family does not decay fast enough within the finite section."""

    def __init__(self, k, threshold, message=None):
        self.k = k
        self.threshold = threshold
        super().__init__(
            message
            or f"no remaining e_n qualifies as x_{k} (threshold d_k*(max G + 1) <= {threshold:.3e})"
        )


class BoundViolated(BiCarlemanError):
    """A measured sup-norm exceeded its closed-form bound D_n * A_i."""


class InequalityViolated(BiCarlemanError):
    """A Schwarz-chain inequality failed; indicates a selection bug."""


class RankDeficientPlan(BiCarlemanError):
    pass


class InconsistentPlan(BiCarlemanError):
    pass


class OrderExceeded(BiCarlemanError, ValueError):
    pass


class CoefficientBudgetExceeded(BiCarlemanError, ValueError):
    pass


class SampleConstructionFailure(BiCarlemanError):
    pass


class ConfigError(BiCarlemanError, ValueError):
    pass
