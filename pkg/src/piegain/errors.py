"""Exception hierarchy shared by all piegain modules."""


class PiegainError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(PiegainError, ValueError):
    pass


class DomainMismatch(PiegainError, ValueError):
    pass


class BilinearProduct(PiegainError, ValueError):
    """Both factors of a product carry decision variables."""


class InvalidBound(PiegainError, ValueError):
    pass


class UnassignedVariable(PiegainError, KeyError):
    pass


class SingularBT(PiegainError, ValueError):
    """The boundary matrix product ``B T`` cannot be inverted."""


class DimMismatch(PiegainError, ValueError):
    pass


class Infeasible(PiegainError):
    """No certificate exists at the requested polynomial degrees."""

    def __init__(self, degrees, detail=""):
        self.degrees = tuple(degrees)
        msg = "no certificate at degree (%d,%d)" % self.degrees
        if detail:
            msg += ": " + detail
        super().__init__(msg)


class SolverFailure(PiegainError):
    pass


class ExportRejected(PiegainError, ValueError):
    pass


class ParseError(PiegainError, ValueError):
    pass


class UnstableDiscretization(PiegainError, ValueError):
    pass
