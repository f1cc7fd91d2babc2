"""Exception hierarchy for proxlab.

Math-domain errors (parameters outside the admissible range of a
regularization) are kept separate from usage/parse errors so the CLI can
map them to distinct exit codes.
"""


class ProxlabError(Exception):
    """Base class for all proxlab errors."""


class MathDomainError(ProxlabError):
    """Parameters violate a mathematical precondition."""


class LambdaAboveThreshold(MathDomainError):
    """Envelope parameter is not strictly below the prox-boundedness threshold."""


class MuAboveThreshold(MathDomainError):
    """Averaging parameter is not strictly below the joint threshold."""


class ParameterOrder(MathDomainError):
    """Double-envelope parameters violate mu < lam."""


class AlphaEndpoint(MathDomainError):
    """Operation undefined at alpha in {0, 1}."""


class NotProxBounded(MathDomainError):
    """Function decreases faster than every concave quadratic."""


class NotPositiveDefinite(MathDomainError):
    """Matrix limit formula requires positive definite inputs."""


class SingularMatrix(MathDomainError):
    """Matrix inverse does not exist (should be unreachable under the preconditions)."""


class HeuristicThreshold(MathDomainError):
    """Operation refused because the recorded threshold is only a heuristic bound."""


class SetValuedProx(MathDomainError):
    """A single-valued proximal mapping was required but the map is set-valued."""


class GridMismatch(ProxlabError):
    """Binary grid operation received functions on different grids."""


class AllInfinite(ProxlabError):
    """A grid function has no finite value (improper)."""


class ParseError(ProxlabError):
    """Descriptor text is malformed."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = "" if line is None else f" (line {line}, column {column})"
        super().__init__(f"{message}{where}")


class UnknownBuiltin(ParseError):
    """Builtin name not present in the fixture registry."""

    def __init__(self, name):
        super().__init__(f"unknown builtin fixture {name!r}")
        self.name = name


class DegreeTooHigh(ParseError):
    """Piecewise polynomial degree exceeds the supported cap of 4."""

    def __init__(self, degree):
        super().__init__(f"polynomial piece of degree {degree} exceeds the cap of 4")
        self.degree = degree
