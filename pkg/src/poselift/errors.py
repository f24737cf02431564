"""Exception types shared across the pipeline."""


class ContractViolation(ValueError):
    """An input broke an operation's precondition (shape, range, emptiness)."""


class DegenerateProjectionError(ContractViolation):
    """A point lies at or behind the camera plane."""


class DegenerateExtentError(ContractViolation):
    """All points coincide, so there is no extent to normalize by."""


class SingularBoneError(ContractViolation):
    """An observed bone has zero length and no direction can be recovered."""

    def __init__(self, bone: str):
        super().__init__(f"observed bone {bone!r} has zero length")
        self.bone = bone


class FormatVersionError(ContractViolation):
    """A file was written with an incompatible format version."""
