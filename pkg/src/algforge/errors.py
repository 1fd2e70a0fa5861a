"""Exception hierarchy shared by all algforge modules."""


class AlgforgeError(Exception):
    """Base class for every error raised by the library."""


class MissingSymbol(AlgforgeError):
    pass


class JetOverflow(AlgforgeError):
    pass


class ParseError(AlgforgeError):
    pass


class BasePointMismatch(AlgforgeError):
    pass


class BundleMismatch(AlgforgeError):
    pass


class DimensionMismatch(AlgforgeError):
    pass


class NotCoreIdentity(AlgforgeError):
    pass


class NotAlmostLie(AlgforgeError):
    pass


class NotDoublyGraded(AlgforgeError):
    pass


class NotInvertible(AlgforgeError):
    pass


class NotAdmissible(AlgforgeError):
    pass


class SingularLeadingMatrix(AlgforgeError):
    pass


class NonFiniteState(AlgforgeError):
    pass


class SchemaError(AlgforgeError):
    pass
