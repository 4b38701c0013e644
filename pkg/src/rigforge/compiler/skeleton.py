"""Skeleton derivation: joints at widget positions, aimed down-bone.

Joint orientation convention: +X aims at the first child, the secondary
axis resolves against the character-forward (+Z) direction; leaf joints
inherit the parent orientation.  Right-side joints take the exact sagittal
conjugate of their left counterpart ("mirrored behavior"), which is what
makes identical left/right local values produce mirrored motion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..errors import InvalidTemplateError
from ..math3d import (
    ONE3,
    QUAT_IDENTITY,
    Quat,
    Transform,
    Vec3,
    Xform,
    quat_to_euler,
    q_conjugate,
    q_mul,
    q_rotate,
    xf_mul,
    xf_inv,
)
from ..scene import Scene
from ..widgets import WidgetTemplate
from ..graph import _aim_quat


def joint_name(widget_id: str) -> str:
    return f"{widget_id}_jnt"


def mirror_quat(q) -> Quat:
    """Sagittal conjugate of a rotation."""
    return Quat(q[0], q[1], -q[2], -q[3])


@dataclass
class Skeleton:
    scene: Scene
    rest_world: Dict[str, Xform]
    parts: Dict[str, List[str]]
    sides: Dict[str, str]
    kind: str
    joint_parent: Dict[str, Optional[str]] = field(default_factory=dict)

    def joints(self) -> List[str]:
        return list(self.rest_world)

    def part_joints(self, part: str) -> List[str]:
        return list(self.parts.get(part, []))

    def rest_position(self, joint: str) -> Vec3:
        return self.rest_world[joint].t

    def rest_orientation(self, joint: str) -> Quat:
        return self.rest_world[joint].q

    def add_auxiliary_joint(
        self, name: str, part: str, side: str, parent: str, world: Xform
    ) -> None:
        """Extra joints created by the compiler (twist sub-chains)."""
        parent_world = self.rest_world[parent]
        local = xf_mul(xf_inv(parent_world), world)
        e = quat_to_euler(local.q, "XYZ")
        self.scene.add(
            name,
            "joint",
            Transform(local.t, e, ONE3),
            parent=self.scene.by_name(parent).id,
            node_id=name,
        )
        self.rest_world[name] = world
        self.parts.setdefault(part, []).append(name)
        self.sides[name] = side
        self.joint_parent[name] = parent

    def to_json(self) -> dict:
        from ..math3d import xf_to_mat4

        return {
            "format": "rigforge_skeleton_v1",
            "kind": self.kind,
            "joints": [
                {
                    "name": name,
                    "parent": self.joint_parent.get(name),
                    "part": next(
                        (p for p, js in self.parts.items() if name in js), None
                    ),
                    "side": self.sides.get(name, "C"),
                    "rest_matrix": list(xf_to_mat4(xf)),
                    "rest": {
                        "t": list(xf.t),
                        "q": list(xf.q),
                        "s": list(xf.s),
                    },
                }
                for name, xf in self.rest_world.items()
            ],
            "scene": self.scene.to_json(),
        }

    @staticmethod
    def from_json(doc: dict) -> "Skeleton":
        from ..errors import SchemaError
        from ..scene import Scene

        if not isinstance(doc, dict) or doc.get("format") != "rigforge_skeleton_v1":
            raise SchemaError("expected rigforge_skeleton_v1", "/format")
        rest_world: Dict[str, Xform] = {}
        parts: Dict[str, List[str]] = {}
        sides: Dict[str, str] = {}
        parent_of: Dict[str, Optional[str]] = {}
        for i, jd in enumerate(doc.get("joints", [])):
            try:
                rest = jd["rest"]
                xf = Xform(
                    Vec3(*rest["t"]), Quat(*rest["q"]), Vec3(*rest["s"])
                )
                name = jd["name"]
            except (KeyError, TypeError) as exc:
                raise SchemaError(f"bad joint: {exc}", f"/joints/{i}") from exc
            rest_world[name] = xf
            if jd.get("part"):
                parts.setdefault(jd["part"], []).append(name)
            sides[name] = jd.get("side", "C")
            parent_of[name] = jd.get("parent")
        scene = Scene.from_json(doc["scene"]) if "scene" in doc else Scene()
        return Skeleton(
            scene=scene,
            rest_world=rest_world,
            parts=parts,
            sides=sides,
            kind=doc.get("kind", "biped"),
            joint_parent=parent_of,
        )


def _orient_for(
    widget_id: str,
    template: WidgetTemplate,
    parent_orient: Quat,
) -> Quat:
    unit = template.unit(widget_id)
    children = template.children_of(widget_id)
    if not children:
        return parent_orient
    child_pos = template.unit(children[0]).position
    if (child_pos - unit.position).length() < 1e-9:
        return parent_orient
    return _aim_quat(unit.position, child_pos, (0.0, 0.0, 1.0), QUAT_IDENTITY, False)


def skeletonize(template: WidgetTemplate) -> Skeleton:
    """Joints at widget positions, named and tagged like their widgets."""
    findings = template.validate()
    if findings:
        raise InvalidTemplateError(
            "; ".join(f"{f.rule}: {f.message}" for f in findings)
        )
    scene = Scene()
    rest_world: Dict[str, Xform] = {}
    parts: Dict[str, List[str]] = {}
    sides: Dict[str, str] = {}
    parent_of: Dict[str, Optional[str]] = {}

    # L and C orientations from aim; R as exact conjugates of L
    orients: Dict[str, Quat] = {}

    def compute(widget_id: str, parent_orient: Quat) -> None:
        unit = template.unit(widget_id)
        if unit.side == "R" and template.mirror_of(widget_id):
            pass  # filled from the left side afterwards
        orients[widget_id] = _orient_for(widget_id, template, parent_orient)
        for child in template.children_of(widget_id):
            compute(child, orients[widget_id])

    roots = [u.id for u in template.units.values() if u.parent is None]
    for root in roots:
        compute(root, QUAT_IDENTITY)
    for link in template.mirrors:
        orients[link.right] = mirror_quat(orients[link.left])

    def build(widget_id: str, parent_joint: Optional[str]) -> None:
        unit = template.unit(widget_id)
        name = joint_name(widget_id)
        world = Xform(unit.position, orients[widget_id], ONE3)
        if parent_joint is None:
            local = world
            parent_node = None
        else:
            local = xf_mul(xf_inv(rest_world[parent_joint]), world)
            parent_node = scene.by_name(parent_joint).id
        e = quat_to_euler(local.q, "XYZ")
        scene.add(name, "joint", Transform(local.t, e, ONE3), parent=parent_node, node_id=name)
        rest_world[name] = world
        parts.setdefault(unit.part, []).append(name)
        sides[name] = unit.side
        parent_of[name] = parent_joint
        for child in template.children_of(widget_id):
            build(child, name)

    for root in roots:
        build(root, None)

    return Skeleton(
        scene=scene,
        rest_world=rest_world,
        parts=parts,
        sides=sides,
        kind=template.kind,
        joint_parent=parent_of,
    )
