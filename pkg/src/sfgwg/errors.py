"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from :class:`SfgError`,
and each subclass belongs to one of three families that the CLI maps onto
exit codes: configuration (2), numerical (3) and I/O (4).
"""


class SfgError(Exception):
    """Base class for all toolkit errors."""


# -- configuration / contract family --------------------------------------

class ConfigurationError(SfgError, ValueError):
    """Invalid user input, configuration value or grid setup."""


class WavelengthRangeError(ConfigurationError):
    """Wavelength outside the validity interval of a dispersion model."""

    def __init__(self, wavelength_um, interval_um, what="model"):
        lo, hi = interval_um
        super().__init__(
            f"wavelength {wavelength_um * 1e3:.3f} nm outside the valid "
            f"interval [{lo * 1e3:.1f}, {hi * 1e3:.1f}] nm of {what}"
        )
        self.wavelength_um = wavelength_um
        self.interval_um = (lo, hi)


class DomainError(ConfigurationError):
    """Argument outside the mathematical domain of an operation."""


class IncompatibleGridError(ConfigurationError):
    """Fields or modes that must share a grid do not."""


class ContractViolation(ConfigurationError):
    """A documented precondition of an operation does not hold."""


class MeasurementInconsistencyError(ConfigurationError):
    """Measured values that cannot physically occur together."""


# -- numerical family ------------------------------------------------------

class NumericalError(SfgError, ArithmeticError):
    """A numerical procedure failed or has no solution."""


class NumericalConvergenceError(NumericalError):
    """Iterative eigensolver did not converge."""


class DegenerateModeError(NumericalError):
    """Mode field cannot be characterised (e.g. peak on the boundary)."""


class NoPhasematchError(NumericalError):
    """No quasi-phasematching period exists for the given indices."""


class BracketingError(NumericalError):
    """A requested span does not bracket the phasematched wavelength."""


class TuningRangeError(NumericalError):
    """No phasematching root inside the search window."""


class IntegrationError(NumericalError):
    """Coupled-amplitude integration produced a non-finite state."""

    def __init__(self, message, z_mm):
        super().__init__(f"{message} (at z = {z_mm:.6g} mm)")
        self.z_mm = z_mm
