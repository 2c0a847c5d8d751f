"""Exception hierarchy shared by every module of the package."""


class PovmTreeError(Exception):
    """Base class for all errors raised by povmtree."""


class InvalidInput(PovmTreeError, ValueError):
    """Raised when user-supplied data violates a documented invariant."""


class NotHermitian(InvalidInput):
    def __init__(self, message="matrix is not Hermitian", index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} (element {index})")


class NotPsd(InvalidInput):
    def __init__(self, index, min_eigenvalue):
        self.index = index
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"element {index} is not positive semidefinite "
                         f"(min eigenvalue {min_eigenvalue:.3e})")


class SumNotIdentity(InvalidInput):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"POVM elements do not sum to identity (residual {residual:.3e})")


class DimensionMismatch(InvalidInput):
    pass


class NotAState(InvalidInput):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"not a quantum state: {reason}")


class NotCommuting(InvalidInput):
    pass


class NotRealizable(PovmTreeError):
    pass


class NumericalFailure(PovmTreeError, ArithmeticError):
    pass


class PreconditionViolated(NumericalFailure):
    pass


class PhiOutsideRange(PreconditionViolated):
    pass


class DegenerateState(NumericalFailure):
    pass


class DigestMismatch(InvalidInput):
    pass


class MissingOperators(InvalidInput):
    pass


class OrderingMismatch(InvalidInput):
    pass
