"""Adjustable widget templates: joint-location markers, mirroring, connectors.

A template is the only thing a user edits before a rig is generated.  Left
and right sides stay linked: only L (and center) widgets accept moves, the
R counterpart follows as the exact YZ-plane reflection.  Connector splines
are pure derived data, endpoints always equal to the two widget positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import (
    InvalidValueError,
    MirroredSideLockedError,
    MissingWidgetError,
    SchemaError,
    UnknownPartError,
)
from .math3d import Vec3

TEMPLATE_KINDS = ("biped", "quadruped", "part")

BIPED_SCALE = 170.0
QUADRUPED_SCALE = 120.0


@dataclass
class WidgetUnit:
    id: str
    name: str
    position: Vec3
    part: str
    side: str  # L | R | C
    parent: Optional[str] = None


@dataclass(frozen=True)
class ConnectorSpline:
    """Linear two-CV spline whose endpoints ride the two widgets."""

    a: str
    b: str


@dataclass(frozen=True)
class MirrorLink:
    left: str
    right: str


@dataclass(frozen=True)
class Finding:
    rule: str  # zero-length-bone | mirror-asymmetry | hierarchy-cycle
    widgets: Tuple[str, ...]
    measured: float
    message: str


# ---------------------------------------------------------------------------
# Canonical tables.  Entries: (name, part, parent, (x, y, z)).
# Left-side entries are authored once; the R side is generated by reflection.
# ---------------------------------------------------------------------------

_BIPED_CENTER = [
    ("C_root1", "root", None, (0.0, 100.0, 0.0)),
    ("C_spine1", "spine", "C_root1", (0.0, 107.0, 0.0)),
    ("C_spine2", "spine", "C_spine1", (0.0, 114.0, 0.0)),
    ("C_spine3", "spine", "C_spine2", (0.0, 121.0, 0.0)),
    ("C_spine4", "spine", "C_spine3", (0.0, 128.0, 0.0)),
    ("C_spine5", "spine", "C_spine4", (0.0, 135.0, 0.0)),
    ("C_neck1", "neckHead", "C_spine5", (0.0, 143.0, 2.0)),
    ("C_neck2", "neckHead", "C_neck1", (0.0, 149.0, 3.0)),
    ("C_neck3", "neckHead", "C_neck2", (0.0, 155.0, 4.0)),
    ("C_head1", "neckHead", "C_neck3", (0.0, 161.0, 5.0)),
]

_BIPED_LEFT = [
    ("L_clav1", "arm", "C_spine5", (4.0, 137.0, 2.0)),
    ("L_arm1", "arm", "L_clav1", (17.0, 137.0, 0.0)),
    ("L_arm2", "arm", "L_arm1", (42.0, 137.0, -4.0)),
    ("L_arm3", "arm", "L_arm2", (67.0, 137.0, 0.0)),
    ("L_thumb1", "fingers", "L_arm3", (70.0, 135.0, 5.0)),
    ("L_thumb2", "fingers", "L_thumb1", (72.5, 133.8, 6.5)),
    ("L_thumb3", "fingers", "L_thumb2", (74.5, 132.8, 7.5)),
    ("L_index1", "fingers", "L_arm3", (76.0, 136.5, 3.0)),
    ("L_index2", "fingers", "L_index1", (80.0, 136.2, 3.2)),
    ("L_index3", "fingers", "L_index2", (83.0, 136.0, 3.3)),
    ("L_middle1", "fingers", "L_arm3", (76.5, 136.6, 0.8)),
    ("L_middle2", "fingers", "L_middle1", (81.0, 136.3, 0.9)),
    ("L_middle3", "fingers", "L_middle2", (84.5, 136.1, 1.0)),
    ("L_ring1", "fingers", "L_arm3", (76.0, 136.4, -1.2)),
    ("L_ring2", "fingers", "L_ring1", (80.0, 136.1, -1.3)),
    ("L_ring3", "fingers", "L_ring2", (83.2, 135.9, -1.4)),
    ("L_pinky1", "fingers", "L_arm3", (75.0, 136.2, -3.0)),
    ("L_pinky2", "fingers", "L_pinky1", (78.0, 136.0, -3.2)),
    ("L_pinky3", "fingers", "L_pinky2", (80.5, 135.8, -3.3)),
    ("L_leg1", "leg", "C_root1", (9.0, 96.0, 0.0)),
    ("L_leg2", "leg", "L_leg1", (9.5, 52.0, 3.0)),
    ("L_leg3", "leg", "L_leg2", (10.0, 10.0, -2.0)),
    ("L_leg4", "leg", "L_leg3", (10.0, 1.5, 10.0)),
    ("L_leg5", "leg", "L_leg4", (10.0, 1.5, 17.0)),
]

_QUADRUPED_CENTER = [
    ("C_root1", "root", None, (0.0, 112.0, -55.0)),
    ("C_spine1", "spine", "C_root1", (0.0, 114.0, -40.0)),
    ("C_spine2", "spine", "C_spine1", (0.0, 116.5, -26.0)),
    ("C_spine3", "spine", "C_spine2", (0.0, 118.0, -12.0)),
    ("C_spine4", "spine", "C_spine3", (0.0, 119.0, 2.0)),
    ("C_spine5", "spine", "C_spine4", (0.0, 119.5, 16.0)),
    ("C_spine6", "spine", "C_spine5", (0.0, 119.0, 30.0)),
    ("C_neck1", "neckHead", "C_spine6", (0.0, 122.0, 42.0)),
    ("C_neck2", "neckHead", "C_neck1", (0.0, 127.0, 50.0)),
    ("C_neck3", "neckHead", "C_neck2", (0.0, 133.0, 57.0)),
    ("C_head1", "neckHead", "C_neck3", (0.0, 138.0, 64.0)),
    ("C_tail1", "tail", "C_root1", (0.0, 110.0, -68.0)),
    ("C_tail2", "tail", "C_tail1", (0.0, 105.0, -82.0)),
    ("C_tail3", "tail", "C_tail2", (0.0, 99.0, -95.0)),
]

_QUADRUPED_LEFT = [
    ("L_frontLeg1", "frontLeg", "C_spine6", (11.0, 118.0, 26.0)),
    ("L_frontLeg2", "frontLeg", "L_frontLeg1", (12.0, 95.0, 30.0)),
    ("L_frontLeg3", "frontLeg", "L_frontLeg2", (12.0, 55.0, 27.0)),
    ("L_frontLeg4", "frontLeg", "L_frontLeg3", (12.0, 14.0, 31.0)),
    ("L_frontLeg5", "frontLeg", "L_frontLeg4", (12.0, 2.0, 38.0)),
    ("L_hindLeg1", "hindLeg", "C_root1", (11.0, 108.0, -50.0)),
    ("L_hindLeg2", "hindLeg", "L_hindLeg1", (12.0, 78.0, -44.0)),
    ("L_hindLeg3", "hindLeg", "L_hindLeg2", (12.0, 40.0, -56.0)),
    ("L_hindLeg4", "hindLeg", "L_hindLeg3", (12.0, 10.0, -48.0)),
    ("L_hindLeg5", "hindLeg", "L_hindLeg4", (12.0, 2.0, -41.0)),
]

# single-part templates: part tag -> rows (one-sided, no mirror links)
_PART_ROWS = {
    "armL": [r for r in _BIPED_LEFT if r[1] == "arm" and r[0] != "L_clav1"],
    "legL": [r for r in _BIPED_LEFT if r[1] == "leg"],
    "fingersL": [r for r in _BIPED_LEFT if r[1] == "fingers"],
    "spine": _BIPED_CENTER[:6],
    "neckHead": _BIPED_CENTER[6:],
    "tail": [r for r in _QUADRUPED_CENTER if r[1] == "tail"],
}


def _sided_part(part: str, side: str) -> str:
    """armL / legR style tags for sided parts; center parts pass through."""
    if part in ("arm", "fingers", "leg", "frontLeg", "hindLeg"):
        return part + side
    return part


@dataclass
class WidgetTemplate:
    kind: str
    scale_hint: float
    units: Dict[str, WidgetUnit] = field(default_factory=dict)
    mirrors: List[MirrorLink] = field(default_factory=list)

    # -- structure ----------------------------------------------------------

    def unit(self, widget_id: str) -> WidgetUnit:
        try:
            return self.units[widget_id]
        except KeyError:
            raise MissingWidgetError(f"no widget {widget_id!r}") from None

    def connectors(self) -> List[ConnectorSpline]:
        """Derived parent-child connector splines."""
        return [
            ConnectorSpline(u.parent, u.id)
            for u in self.units.values()
            if u.parent is not None
        ]

    def connector_endpoints(self, c: ConnectorSpline) -> Tuple[Vec3, Vec3]:
        return self.unit(c.a).position, self.unit(c.b).position

    def mirror_of(self, widget_id: str) -> Optional[str]:
        for link in self.mirrors:
            if link.left == widget_id:
                return link.right
            if link.right == widget_id:
                return link.left
        return None

    def children_of(self, widget_id: str) -> List[str]:
        return [u.id for u in self.units.values() if u.parent == widget_id]

    def part_ids(self, part: str) -> List[str]:
        return [u.id for u in self.units.values() if u.part == part]

    def parts(self) -> List[str]:
        seen: List[str] = []
        for u in self.units.values():
            if u.part not in seen:
                seen.append(u.part)
        return seen

    # -- editing --------------------------------------------------------------

    def move_widget(self, widget_id: str, new_position: Vec3) -> None:
        """Move a widget; the mirrored counterpart follows by reflection."""
        unit = self.unit(widget_id)
        counterpart = self.mirror_of(widget_id)
        if unit.side == "R" and counterpart is not None:
            raise MirroredSideLockedError(
                f"{widget_id!r} is mirror-driven; move {counterpart!r} instead"
            )
        unit.position = Vec3.of(*new_position)
        if counterpart is not None:
            self.units[counterpart].position = unit.position.reflected_x()

    # -- validation -------------------------------------------------------------

    def validate(self) -> List[Finding]:
        findings: List[Finding] = []
        # acyclicity / dangling parents
        for u in self.units.values():
            seen = {u.id}
            cur = u.parent
            while cur is not None:
                if cur not in self.units:
                    findings.append(
                        Finding("hierarchy-cycle", (u.id, cur), 0.0, f"dangling parent {cur!r}")
                    )
                    break
                if cur in seen:
                    findings.append(
                        Finding("hierarchy-cycle", tuple(sorted(seen)), 0.0, "parent cycle")
                    )
                    break
                seen.add(cur)
                cur = self.units[cur].parent
        # zero-length bones
        for c in self.connectors():
            a, b = self.connector_endpoints(c)
            d = (a - b).length()
            if d < 1e-6:
                findings.append(
                    Finding(
                        "zero-length-bone",
                        (c.a, c.b),
                        d,
                        f"widgets {c.a!r} and {c.b!r} are coincident",
                    )
                )
        # mirror symmetry
        for link in self.mirrors:
            left = self.unit(link.left).position
            right = self.unit(link.right).position
            dev = (left.reflected_x() - right).length()
            if dev > 1e-6:
                findings.append(
                    Finding(
                        "mirror-asymmetry",
                        (link.left, link.right),
                        dev,
                        f"{link.right!r} deviates {dev:.6g} from the reflection of {link.left!r}",
                    )
                )
        return findings

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": "rigforge_template_v1",
            "kind": self.kind,
            "scale": self.scale_hint,
            "units": [
                {
                    "id": u.id,
                    "name": u.name,
                    "part": u.part,
                    "side": u.side,
                    "parent": u.parent,
                    "pos": [u.position.x, u.position.y, u.position.z],
                }
                for u in self.units.values()
            ],
            "mirrors": [[m.left, m.right] for m in self.mirrors],
        }

    @staticmethod
    def from_json(doc: dict) -> "WidgetTemplate":
        if not isinstance(doc, dict):
            raise SchemaError("template must be an object", "/")
        for key in ("kind", "units"):
            if key not in doc:
                raise SchemaError(f"missing {key!r}", f"/{key}")
        if doc["kind"] not in TEMPLATE_KINDS:
            raise SchemaError(f"unknown kind {doc['kind']!r}", "/kind")
        if not isinstance(doc["units"], list):
            raise SchemaError("units must be a list", "/units")
        tpl = WidgetTemplate(kind=doc["kind"], scale_hint=float(doc.get("scale", 1.0)))
        for i, ud in enumerate(doc["units"]):
            path = f"/units/{i}"
            if not isinstance(ud, dict):
                raise SchemaError("unit must be an object", path)
            for key in ("id", "pos"):
                if key not in ud:
                    raise SchemaError(f"missing {key!r}", f"{path}/{key}")
            pos = ud["pos"]
            if not isinstance(pos, (list, tuple)) or len(pos) != 3:
                raise SchemaError("pos must be [x, y, z]", f"{path}/pos")
            side = ud.get("side", "C")
            if side not in ("L", "R", "C"):
                raise SchemaError(f"bad side {side!r}", f"{path}/side")
            uid = ud["id"]
            if uid in tpl.units:
                raise SchemaError(f"duplicate widget id {uid!r}", f"{path}/id")
            if not uid.startswith(side + "_"):
                raise SchemaError(
                    f"id {uid!r} does not match side {side!r}", f"{path}/id"
                )
            try:
                p = Vec3.of(*pos)
            except InvalidValueError as exc:
                raise SchemaError(str(exc), f"{path}/pos") from exc
            tpl.units[uid] = WidgetUnit(
                id=uid,
                name=ud.get("name", uid),
                position=p,
                part=ud.get("part", "part"),
                side=side,
                parent=ud.get("parent"),
            )
        for i, pair in enumerate(doc.get("mirrors", [])):
            path = f"/mirrors/{i}"
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise SchemaError("mirror link must be [left, right]", path)
            left, right = pair
            if left not in tpl.units:
                raise SchemaError(f"unknown widget {left!r}", f"{path}/0")
            if right not in tpl.units:
                raise SchemaError(f"unknown widget {right!r}", f"{path}/1")
            tpl.mirrors.append(MirrorLink(left, right))
        for u in tpl.units.values():
            if u.parent is not None and u.parent not in tpl.units:
                raise SchemaError(f"unknown parent {u.parent!r}", "/units")
        return tpl


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _mirror_rows(rows):
    """Reflected right-side rows from left-side authoring rows."""
    out = []
    for name, part, parent, (x, y, z) in rows:
        r_name = "R" + name[1:]
        r_parent = None
        if parent is not None:
            r_parent = "R" + parent[1:] if parent.startswith("L_") else parent
        out.append((r_name, part, r_parent, (-x, y, z)))
    return out


def create_template(kind: str, part_tag: Optional[str] = None) -> WidgetTemplate:
    """Canonical template for a whole character or a single body part."""
    if kind == "part":
        if part_tag is None:
            raise UnknownPartError("part templates need a part tag")
        rows = _PART_ROWS.get(part_tag)
        side = "L"
        if rows is None and part_tag.endswith("R"):
            left_tag = part_tag[:-1] + "L"
            base = _PART_ROWS.get(left_tag)
            if base is not None:
                rows = _mirror_rows(base)
                side = "R"
        if rows is None:
            raise UnknownPartError(f"unknown part tag {part_tag!r}")
        tpl = WidgetTemplate(kind="part", scale_hint=BIPED_SCALE)
        ids = {name for name, *_ in rows}
        for name, part, parent, pos in rows:
            tpl.units[name] = WidgetUnit(
                id=name,
                name=name,
                position=Vec3.of(*pos),
                part=_sided_part(part, side) if name[0] in "LR" else part,
                side=name[0] if name[0] in "LR" else "C",
                parent=parent if parent in ids else None,
            )
        return tpl

    if part_tag is not None:
        raise UnknownPartError("part_tag only applies to kind='part'")
    if kind == "biped":
        center, left, scale = _BIPED_CENTER, _BIPED_LEFT, BIPED_SCALE
    elif kind == "quadruped":
        center, left, scale = _QUADRUPED_CENTER, _QUADRUPED_LEFT, QUADRUPED_SCALE
    else:
        raise UnknownPartError(f"unknown template kind {kind!r}")

    tpl = WidgetTemplate(kind=kind, scale_hint=scale)
    for name, part, parent, pos in center:
        tpl.units[name] = WidgetUnit(
            id=name, name=name, position=Vec3.of(*pos), part=part, side="C", parent=parent
        )
    for name, part, parent, pos in left:
        tpl.units[name] = WidgetUnit(
            id=name,
            name=name,
            position=Vec3.of(*pos),
            part=_sided_part(part, "L"),
            side="L",
            parent=parent,
        )
    for name, part, parent, pos in _mirror_rows(left):
        tpl.units[name] = WidgetUnit(
            id=name,
            name=name,
            position=Vec3.of(*pos),
            part=_sided_part(part, "R"),
            side="R",
            parent=parent,
        )
    for name, *_ in left:
        tpl.mirrors.append(MirrorLink(name, "R" + name[1:]))
    return tpl
