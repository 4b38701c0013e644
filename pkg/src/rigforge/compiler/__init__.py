"""Widget template -> skeleton -> compiled rig."""

from .skeleton import Skeleton, skeletonize
from .rig import Rig, RigBuildOptions
from .assemble import (
    assemble_character,
    build_arm,
    build_fingers,
    build_leg,
    build_neck_head,
    build_root,
    build_spine,
    build_tail,
)

__all__ = [
    "Skeleton",
    "skeletonize",
    "Rig",
    "RigBuildOptions",
    "assemble_character",
    "build_root",
    "build_spine",
    "build_neck_head",
    "build_arm",
    "build_fingers",
    "build_leg",
    "build_tail",
]
