"""Joint/group/controller hierarchy: parenting, pivots, freezing, pick-walk.

A :class:`Scene` is a single-writer structure; readers may snapshot it via
serialization.  World transforms are exact matrix compositions of the local
transforms from the root down.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional

from .errors import (
    CycleError,
    DuplicateNameError,
    InvalidValueError,
    MissingNodeError,
    SchemaError,
)
from .math3d import (
    IDENTITY_TRANSFORM,
    Transform,
    Vec3,
    compose,
    mat_affine_inverse,
    mat_apply_point,
    mat_mul,
)

NodeId = str

NodeKind = Literal["joint", "group", "controller", "locator"]

NODE_KINDS = ("joint", "group", "controller", "locator")


@dataclass
class SceneNode:
    id: NodeId
    name: str
    kind: str
    local: Transform = IDENTITY_TRANSFORM
    parent: Optional[NodeId] = None
    children: List[NodeId] = field(default_factory=list)
    color_tag: Optional[str] = None
    shape_tag: Optional[str] = None


class Scene:
    """Node table plus root set, with hierarchy invariants enforced."""

    def __init__(self) -> None:
        self._nodes: Dict[NodeId, SceneNode] = {}
        self._roots: List[NodeId] = []
        self._id_counter = itertools.count(1)

    # -- basics -------------------------------------------------------------

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node(self, node_id: NodeId) -> SceneNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise MissingNodeError(f"no node {node_id!r}") from None

    def roots(self) -> List[NodeId]:
        return list(self._roots)

    def nodes(self) -> Iterator[SceneNode]:
        return iter(self._nodes.values())

    def by_name(self, name: str) -> SceneNode:
        for node in self._nodes.values():
            if node.name == name:
                return node
        raise MissingNodeError(f"no node named {name!r}")

    def children_of(self, node_id: NodeId) -> List[NodeId]:
        return list(self.node(node_id).children)

    # -- mutation -----------------------------------------------------------

    def add(
        self,
        name: str,
        kind: str,
        local: Transform = IDENTITY_TRANSFORM,
        parent: Optional[NodeId] = None,
        node_id: Optional[NodeId] = None,
        color_tag: Optional[str] = None,
        shape_tag: Optional[str] = None,
    ) -> NodeId:
        """Insert a node; name must be unique among its siblings."""
        if kind not in NODE_KINDS:
            raise InvalidValueError(f"unknown node kind {kind!r}")
        if kind == "controller" and (color_tag is None or shape_tag is None):
            raise InvalidValueError(
                f"controller {name!r} needs both color_tag and shape_tag"
            )
        if parent is not None and parent not in self._nodes:
            raise MissingNodeError(f"parent {parent!r} does not exist")
        siblings = self._roots if parent is None else self._nodes[parent].children
        for sib in siblings:
            if self._nodes[sib].name == name:
                raise DuplicateNameError(f"sibling named {name!r} already exists")
        if node_id is None:
            node_id = f"n{next(self._id_counter):04d}"
        if node_id in self._nodes:
            raise DuplicateNameError(f"node id {node_id!r} already exists")
        node = SceneNode(
            id=node_id,
            name=name,
            kind=kind,
            local=local,
            parent=parent,
            color_tag=color_tag,
            shape_tag=shape_tag,
        )
        self._nodes[node_id] = node
        siblings.append(node_id)
        return node_id

    def reparent(self, node_id: NodeId, new_parent: Optional[NodeId], preserve_world: bool = False) -> None:
        """Move a node under ``new_parent``.

        With ``preserve_world`` the node's (and thus every descendant's)
        world transform is kept by rebasing its local transform.
        """
        node = self.node(node_id)
        if new_parent is not None:
            if new_parent not in self._nodes:
                raise MissingNodeError(f"parent {new_parent!r} does not exist")
            if new_parent == node_id or self.is_descendant(new_parent, node_id):
                raise CycleError(f"{new_parent!r} is a descendant of {node_id!r}")
        new_local = node.local
        if preserve_world:
            world = self.world_transform(node_id).matrix()
            parent_world = (
                self.world_transform(new_parent).matrix()
                if new_parent is not None
                else None
            )
            if parent_world is None:
                new_local = Transform.from_matrix(world)
            else:
                new_local = Transform.from_matrix(
                    mat_mul(mat_affine_inverse(parent_world), world)
                )
        self._detach(node_id)
        node.parent = new_parent
        node.local = new_local
        siblings = self._roots if new_parent is None else self._nodes[new_parent].children
        for sib in siblings:
            if self._nodes[sib].name == node.name:
                raise DuplicateNameError(f"sibling named {node.name!r} already exists")
        siblings.append(node_id)

    def _detach(self, node_id: NodeId) -> None:
        node = self._nodes[node_id]
        if node.parent is None:
            self._roots.remove(node_id)
        else:
            self._nodes[node.parent].children.remove(node_id)

    def is_descendant(self, maybe_descendant: NodeId, ancestor: NodeId) -> bool:
        cur = self.node(maybe_descendant).parent
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self._nodes[cur].parent
        return False

    def move_pivot(self, node_id: NodeId, world_point: Vec3) -> None:
        """Re-seat the node's rotate/scale pivot at ``world_point``.

        Neither the node's nor any descendant's world transform changes;
        later rotation edits of this node spin about ``world_point``.
        """
        node = self.node(node_id)
        parent_world = (
            self.world_transform(node.parent).matrix()
            if node.parent is not None
            else None
        )
        p_parent = (
            mat_apply_point(mat_affine_inverse(parent_world), world_point)
            if parent_world is not None
            else Vec3(*world_point)
        )
        m = node.local.matrix()
        col = Vec3(m[3], m[7], m[11])
        lin_inv = mat_affine_inverse(
            (m[0], m[1], m[2], 0.0, m[4], m[5], m[6], 0.0, m[8], m[9], m[10], 0.0, 0.0, 0.0, 0.0, 1.0)
        )
        delta = p_parent - col
        new_pivot = mat_apply_point(lin_inv, delta)
        new_translation = p_parent - new_pivot
        node.local = Transform(
            new_translation, node.local.rotation, node.local.scale, new_pivot
        )

    def freeze_root(self, root_joint_id: NodeId) -> NodeId:
        """Absorb a root joint's transform into an inserted offset group.

        The joint's local becomes identity, every world transform in the
        scene is unchanged, and the group's pivot sits at the former joint
        center, so the group (and anything driving it) reads zero while
        rotating about the joint.
        """
        joint = self.node(root_joint_id)
        m = joint.local.matrix()
        col = Vec3(m[3], m[7], m[11])
        group_local = Transform(
            col, joint.local.rotation, joint.local.scale, Vec3(0.0, 0.0, 0.0)
        )
        parent = joint.parent
        group_id = self.add(
            name=f"{joint.name}_offset",
            kind="group",
            local=group_local,
            parent=parent,
        )
        self._detach(root_joint_id)
        joint.parent = group_id
        joint.local = IDENTITY_TRANSFORM
        self._nodes[group_id].children.append(root_joint_id)
        return group_id

    # -- queries ------------------------------------------------------------

    def world_transform(self, node_id: NodeId) -> Transform:
        node = self.node(node_id)
        chain = [node]
        cur = node.parent
        while cur is not None:
            parent = self._nodes[cur]
            chain.append(parent)
            cur = parent.parent
        world = chain[-1].local
        for item in reversed(chain[:-1]):
            world = compose(world, item.local)
        return world

    def path(self, node_id: NodeId) -> str:
        names = []
        cur: Optional[NodeId] = node_id
        while cur is not None:
            node = self.node(cur)
            names.append(node.name)
            cur = node.parent
        return "/" + "/".join(reversed(names))

    def pick_walk(self, node_id: NodeId, direction: str) -> Optional[NodeId]:
        """Arrow-key navigation over the controller subgraph only."""
        if direction not in ("up", "down"):
            raise InvalidValueError("direction must be 'up' or 'down'")
        node = self.node(node_id)
        if direction == "up":
            cur = node.parent
            while cur is not None:
                parent = self._nodes[cur]
                if parent.kind == "controller":
                    return cur
                cur = parent.parent
            return None
        # down: nearest controller by breadth-first walk, insertion order
        queue = list(node.children)
        while queue:
            cid = queue.pop(0)
            child = self._nodes[cid]
            if child.kind == "controller":
                return cid
            queue.extend(child.children)
        return None

    def check(self) -> None:
        """Exhaustive hierarchy consistency walk (used by tests and debug)."""
        seen_in_tree = set()
        for root in self._roots:
            if self._nodes[root].parent is not None:
                raise InvalidValueError(f"root {root!r} has a parent")
            stack = [root]
            while stack:
                nid = stack.pop()
                if nid in seen_in_tree:
                    raise CycleError(f"{nid!r} reachable twice")
                seen_in_tree.add(nid)
                node = self._nodes[nid]
                names = set()
                for cid in node.children:
                    child = self._nodes.get(cid)
                    if child is None:
                        raise MissingNodeError(f"dangling child {cid!r}")
                    if child.parent != nid:
                        raise InvalidValueError(
                            f"child {cid!r} parent field disagrees with child list"
                        )
                    if child.name in names:
                        raise DuplicateNameError(f"duplicate sibling name {child.name!r}")
                    names.add(child.name)
                    stack.append(cid)
        if seen_in_tree != set(self._nodes):
            orphans = set(self._nodes) - seen_in_tree
            raise InvalidValueError(f"unreachable nodes: {sorted(orphans)!r}")

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": "rigforge_scene_v1",
            "roots": list(self._roots),
            "nodes": [
                {
                    "id": n.id,
                    "name": n.name,
                    "kind": n.kind,
                    "parent": n.parent,
                    "children": list(n.children),
                    "local": n.local.to_json(),
                    "color": n.color_tag,
                    "shape": n.shape_tag,
                }
                for n in self._nodes.values()
            ],
        }

    @staticmethod
    def from_json(doc: dict) -> "Scene":
        if not isinstance(doc, dict):
            raise SchemaError("scene must be an object", "/")
        if doc.get("format") != "rigforge_scene_v1":
            raise SchemaError("unknown scene format", "/format")
        nodes = doc.get("nodes")
        if not isinstance(nodes, list):
            raise SchemaError("missing node list", "/nodes")
        scene = Scene()
        for i, nd in enumerate(nodes):
            if not isinstance(nd, dict) or "id" not in nd:
                raise SchemaError("bad node entry", f"/nodes/{i}")
            node = SceneNode(
                id=nd["id"],
                name=nd.get("name", nd["id"]),
                kind=nd.get("kind", "group"),
                local=Transform.from_json(nd.get("local", {})),
                parent=nd.get("parent"),
                children=list(nd.get("children", [])),
                color_tag=nd.get("color"),
                shape_tag=nd.get("shape"),
            )
            scene._nodes[node.id] = node
        scene._roots = list(doc.get("roots", []))
        try:
            scene.check()
        except Exception as exc:
            raise SchemaError(f"inconsistent hierarchy: {exc}", "/nodes") from exc
        # continue id sequence past any auto-assigned ids
        max_auto = 0
        for nid in scene._nodes:
            if nid.startswith("n") and nid[1:].isdigit():
                max_auto = max(max_auto, int(nid[1:]))
        scene._id_counter = itertools.count(max_auto + 1)
        return scene
