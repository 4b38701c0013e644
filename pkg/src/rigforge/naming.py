"""Node naming convention: ``{side}_{part}{index}_{kind}``.

Examples: ``L_arm1_jnt``, ``C_spine3_ctrl``, ``R_legIk_ctrl``.  Side is one
of L/R/C; the index is optional for one-of-a-kind nodes (``C_master_ctrl``).
Keeping names mechanical makes mirroring and lint rules table-driven.
"""

from __future__ import annotations

import re
from typing import NamedTuple, Optional

from .errors import InvalidValueError

SIDES = ("L", "R", "C")

NODE_KINDS = ("jnt", "ctrl", "grp", "loc")

_NAME_RE = re.compile(r"^([LRC])_([A-Za-z]+?)(\d*)_(jnt|ctrl|grp|loc)$")


class NodeName(NamedTuple):
    side: str
    part: str
    index: Optional[int]
    kind: str

    def __str__(self) -> str:
        idx = "" if self.index is None else str(self.index)
        return f"{self.side}_{self.part}{idx}_{self.kind}"


def make_name(side: str, part: str, index: Optional[int], kind: str) -> str:
    if side not in SIDES:
        raise InvalidValueError(f"side must be one of {SIDES}, got {side!r}")
    if kind not in NODE_KINDS:
        raise InvalidValueError(f"kind must be one of {NODE_KINDS}, got {kind!r}")
    if not part or not part[0].isalpha():
        raise InvalidValueError(f"part tag must start with a letter, got {part!r}")
    return str(NodeName(side, part, index, kind))


def parse_name(name: str) -> NodeName:
    m = _NAME_RE.match(name)
    if not m:
        raise InvalidValueError(f"name {name!r} does not follow side_partN_kind")
    side, part, idx, kind = m.groups()
    return NodeName(side, part, int(idx) if idx else None, kind)


def is_convention(name: str) -> bool:
    return _NAME_RE.match(name) is not None


def mirrored_name(name: str) -> str:
    """Swap the L/R prefix; center names return unchanged."""
    parsed = parse_name(name)
    if parsed.side == "C":
        return name
    other = "R" if parsed.side == "L" else "L"
    return str(NodeName(other, parsed.part, parsed.index, parsed.kind))


def mirror_control_name(attr_name: str) -> str:
    """Mirror a control attribute name like ``L_armIk_ctrl.t``."""
    if "." in attr_name:
        node, attr = attr_name.split(".", 1)
        return f"{mirrored_name(node)}.{attr}"
    return mirrored_name(attr_name)
