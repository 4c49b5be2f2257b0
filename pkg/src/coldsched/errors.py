"""Exception types shared across the package."""


class SpecValidationError(ValueError):
    """A problem instance, grid, or input file violates a documented invariant."""


class GridAlignmentError(SpecValidationError):
    """A value that must sit on the discretization lattice does not."""


class TrajectoryError(SpecValidationError):
    """A supplied trajectory is inconsistent with the dynamics."""


class PolicyContractError(SpecValidationError):
    """A policy returned a load outside [0, u_max] or a non-finite value."""


class InstanceTooLargeError(SpecValidationError):
    """The exhaustive oracle refuses instances beyond its size caps."""


class QuantizeError(SpecValidationError):
    """Empirical heat samples could not be quantized within tolerance."""
