"""Synthetic 3D animal pose data, 2D-to-3D lifting, lookup matching and retargeting."""

from .errors import (
    ContractViolation,
    DegenerateExtentError,
    DegenerateProjectionError,
    FormatVersionError,
    SingularBoneError,
)
from .skeleton import PoseAngles, Skeleton, forward_kinematics, soft_projection, species_skeleton

__version__ = "0.1.0"
