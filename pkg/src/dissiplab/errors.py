"""Exception hierarchy shared by all modules."""


class DissipLabError(Exception):
    """Base class for every error raised by dissiplab."""


class DomainError(DissipLabError, ValueError):
    """A state or thermodynamic point lies outside rho > 0, theta > 0."""


class SymmetryError(DissipLabError):
    """A symmetrized product is not symmetric (assembly bug)."""


class HyperbolicityError(DissipLabError):
    """Characteristic speeds are not real, or the discriminant is not positive."""


class DegenerateEigenbasisError(DissipLabError):
    pass


class NotEquilibriumError(DissipLabError, ValueError):
    """The state carries a nonzero heat flux."""


class InviscidError(DissipLabError, ValueError):
    """A viscous construction was requested for a system with nu = 0."""


class ViscousError(DissipLabError, ValueError):
    """An inviscid construction was requested for a system with nu != 0."""


class DeltaTooLargeError(DissipLabError, ValueError):
    """A user-supplied delta destroys positive definiteness."""


class NoDeltaFoundError(DissipLabError):
    pass


class DeltaRangeError(DissipLabError):
    pass


class QuadratureError(DissipLabError):
    pass


class NotDissipativeError(DissipLabError):
    """Carried inside a DispersionCurve rather than raised."""

    def __init__(self, xi: float, max_re: float):
        super().__init__(f"max Re lambda = {max_re:.6g} >= 0 at xi = {xi:.6g}")
        self.xi = xi
        self.max_re = max_re


class ConfigError(DissipLabError, ValueError):
    pass


class IoError(DissipLabError, OSError):
    pass
