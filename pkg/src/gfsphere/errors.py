"""Exception types raised across the package."""

from __future__ import annotations


class GfSphereError(Exception):
    """Base class for all package errors."""


# contact_core
class IntegrationFailure(GfSphereError):
    pass


class NonFiniteHamiltonian(GfSphereError):
    pass


class JacobianUnavailable(GfSphereError):
    pass


class NotEquivariant(GfSphereError):
    def __init__(self, max_violation: float):
        super().__init__(f"antipodal equivariance violated by {max_violation:.3e}")
        self.max_violation = max_violation


# symplectization
class NearIdentityMinusOne(GfSphereError):
    pass


# genfun
class NotFiberCritical(GfSphereError):
    pass


class DimensionMismatch(GfSphereError):
    pass


class ViolationFound(GfSphereError):
    def __init__(self, witness, value: float):
        super().__init__(f"d/dt of the family is not negative at a witness ({value:.3e})")
        self.witness = witness
        self.value = value


class ProjectionNotBijective(GfSphereError):
    pass


class NewtonDivergence(GfSphereError):
    pass


class NotIdentityGenerator(GfSphereError):
    pass


class InconsistentSystem(GfSphereError):
    pass


# homology
class ResolutionTooCoarse(GfSphereError):
    pass


# sweep
class GridTooCoarse(GfSphereError):
    pass


class NewtonBudgetExhausted(GfSphereError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ZeroBaseCoordinate(GfSphereError):
    pass


# hamlang
class HamSyntaxError(GfSphereError):
    """Parse failure at a character offset."""

    def __init__(self, position: int, expected: str, found: str = ""):
        msg = f"at position {position}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)
        self.position = position
        self.expected = expected


class UnknownVariable(GfSphereError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown variable {name!r} at position {position}")
        self.name = name
        self.position = position


class ArityError(GfSphereError):
    def __init__(self, func: str, got: int, position: int):
        super().__init__(f"{func} takes 1 argument, got {got} (position {position})")
        self.func = func
        self.got = got
        self.position = position


class DomainError(GfSphereError):
    pass
