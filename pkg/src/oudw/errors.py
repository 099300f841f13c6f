class OudwError(Exception):
    """Base class for numeric failures raised by this package."""


class DegeneratePathError(OudwError, ValueError):
    """A path functional in an estimator denominator vanished."""


class SingularGramError(OudwError, ValueError):
    """The Gram matrix of the bivariate regression is not invertible."""


class RegimeError(OudwError, ValueError):
    """A formula was evaluated outside the parameter regime it holds in."""
