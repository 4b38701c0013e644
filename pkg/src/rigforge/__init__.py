"""rigforge: procedural character rigging engine.

Widget templates in, compiled dataflow rigs out: FK/IK limbs with seamless
switching, stretchy spline spines, elbow/knee locking, twist chains,
driven-key fingers, foot-roll pivots, plus a lint catalogue and a live
posing service.
"""

from .errors import RigError
from .math3d import EulerRotation, Quat, Transform, Vec3, Xform, compose, gimbal_risk
from .scene import Scene, SceneNode
from .widgets import WidgetTemplate, create_template
from .graph import ControlPose, EvalSession, JointPoseMap, RigGraph, RigNode, evaluate
from .solvers import (
    CubicBezier,
    DrivenKey,
    SplineChain,
    StretchInputs,
    TwoBoneChain,
    arc_length,
    distribute_twist,
    eval_driven_key,
    limb_stretch_scales,
    solve_elbow_lock,
    solve_spline_ik,
    solve_two_bone_ik,
    stretch_factor,
)
from .compiler import Rig, RigBuildOptions, Skeleton, assemble_character, skeletonize
from .fkik import match_fk_to_ik, match_ik_to_fk, switch_mode
from .validation import ValidationConfig, ValidationReport, benchmark_rig, validate_rig

__version__ = "0.1.0"

__all__ = [
    "RigError",
    "Vec3",
    "Quat",
    "EulerRotation",
    "Transform",
    "Xform",
    "compose",
    "gimbal_risk",
    "Scene",
    "SceneNode",
    "WidgetTemplate",
    "create_template",
    "RigGraph",
    "RigNode",
    "ControlPose",
    "JointPoseMap",
    "EvalSession",
    "evaluate",
    "TwoBoneChain",
    "StretchInputs",
    "SplineChain",
    "CubicBezier",
    "DrivenKey",
    "solve_two_bone_ik",
    "stretch_factor",
    "limb_stretch_scales",
    "solve_elbow_lock",
    "arc_length",
    "solve_spline_ik",
    "distribute_twist",
    "eval_driven_key",
    "Skeleton",
    "skeletonize",
    "Rig",
    "RigBuildOptions",
    "assemble_character",
    "match_ik_to_fk",
    "match_fk_to_ik",
    "switch_mode",
    "validate_rig",
    "benchmark_rig",
    "ValidationConfig",
    "ValidationReport",
    "__version__",
]
