"""Typed dataflow rig graph: the IR the compiler targets and the engine runs.

Nodes are fixed-vocabulary kinds (constants, control attributes, constraint
nodes, IK solvers, driven-key curves...); connections join equal port types
and the graph stays acyclic.  Evaluation is a pure function of
(graph, control pose): every node computes exactly once per full pass, and
an :class:`EvalSession` supports incremental re-evaluation of just the
downstream closure of changed controls.

Cross-part edges carry master-relative transforms, so removing a body part
and pinning its boundary outputs to rest-pose constants leaves every other
joint's evaluation bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import (
    CycleError,
    DegeneratePoleError,
    DuplicateNameError,
    InvalidValueError,
    MissingControlError,
    MissingNodeError,
    PortOccupiedError,
    SchemaError,
    TypeMismatchError,
    UnknownPartError,
    UnknownPortError,
)
from .math3d import (
    ONE3,
    QUAT_IDENTITY,
    EulerRotation,
    Quat,
    Vec3,
    Xform,
    XFORM_IDENTITY,
    euler_to_quaternion,
    q_conjugate,
    q_from_mat3,
    q_mul,
    q_rotate,
    q_slerp,
    xf_mul,
    xf_point,
)
from .solvers import (
    ArcTable,
    CubicBezier,
    DrivenKey,
    TwoBoneChain,
    eval_driven_key,
    solve_two_bone_ik,
)

PORT_TYPES = ("scalar", "vec3", "rotation", "transform", "boolean")

NODE_KINDS = (
    "Constant",
    "ControlAttribute",
    "Distance",
    "Ratio",
    "Clamp",
    "Condition",
    "Blend",
    "PointConstraint",
    "OrientConstraint",
    "ParentConstraint",
    "TwoBoneIK",
    "SplineIK",
    "DrivenKeyCurve",
    "TwistDistributor",
    "JointOutput",
)

GRAPH_FORMAT = "rigforge_graph_v1"

_AXIS_IDX = {"X": 0, "Y": 1, "Z": 2}


@dataclass
class RigNode:
    """One node: kind-determined ports plus kind-specific parameters."""

    id: str
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    inputs: Dict[str, str] = field(init=False, default_factory=dict)
    outputs: Dict[str, str] = field(init=False, default_factory=dict)

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise InvalidValueError(f"unknown node kind {self.kind!r}")
        ins, outs = _node_ports(self.kind, self.params)
        self.inputs = ins
        self.outputs = outs


def _node_ports(kind: str, params: dict) -> Tuple[Dict[str, str], Dict[str, str]]:
    if kind == "Constant":
        return {}, {"value": params["value_type"]}
    if kind == "ControlAttribute":
        return {}, {"value": params["value_type"]}
    if kind == "Distance":
        return {"a": "vec3", "b": "vec3"}, {"value": "scalar"}
    if kind == "Ratio":
        return {"numerator": "scalar", "denominator": "scalar"}, {"value": "scalar"}
    if kind == "Clamp":
        return {"value": "scalar"}, {"value": "scalar"}
    if kind == "Condition":
        t = params.get("value_type", "scalar")
        return (
            {"x": "scalar", "threshold": "scalar", "if_greater": t, "else_value": t},
            {"value": t},
        )
    if kind == "Blend":
        t = params.get("value_type", "scalar")
        return {"a": t, "b": t, "weight": "scalar"}, {"value": t}
    if kind == "PointConstraint":
        n = int(params.get("targets", 1))
        ins = {f"target{i}": "transform" for i in range(n)}
        return ins, {"value": "vec3"}
    if kind == "OrientConstraint":
        mode = params.get("mode", "blend")
        if mode == "aim":
            return (
                {"eye": "vec3", "at": "vec3", "up_ref": "transform"},
                {"value": "rotation"},
            )
        n = int(params.get("targets", 1))
        ins = {f"target{i}": "transform" for i in range(n)}
        if n == 2:
            ins["weight"] = "scalar"
        return ins, {"value": "rotation"}
    if kind == "ParentConstraint":
        ins = {"target": "transform"}
        if params.get("use_t"):
            ins["t"] = "vec3"
        if params.get("use_r"):
            ins["r"] = "rotation"
        if params.get("use_s"):
            ins["s"] = "scalar"
        for port, _axis, _gain in params.get("channels", ()):
            ins[port] = "scalar"
        return ins, {"value": "transform"}
    if kind == "TwoBoneIK":
        ins = {
            "root_pos": "vec3",
            "target": "vec3",
            "pole": "vec3",
            "stretch_scale": "scalar",
            "lock_weight": "scalar",
            "lock_point": "vec3",
            "target_rot": "rotation",
            "roll_upper": "scalar",
            "roll_lower": "scalar",
        }
        return ins, {
            "upper": "transform",
            "mid": "transform",
            "effector": "transform",
        }
    if kind == "SplineIK":
        n = int(params["joints"])
        ins = {
            "cv0": "vec3",
            "cv1": "vec3",
            "cv2": "vec3",
            "cv3": "vec3",
            "base_rot": "rotation",
            "tip_rot": "rotation",
            "twist": "scalar",
            "stretch_weight": "scalar",
        }
        return ins, {f"joint{i}": "transform" for i in range(n)}
    if kind == "DrivenKeyCurve":
        return {"driver": "scalar"}, {"value": "scalar"}
    if kind == "TwistDistributor":
        n = int(params["joints"])
        ins = {"parent": "transform", "child": "transform", "extra": "scalar"}
        return ins, {f"joint{i}": "transform" for i in range(n)}
    if kind == "JointOutput":
        return {"base": "transform", "local": "transform"}, {}
    raise InvalidValueError(f"unknown node kind {kind!r}")


# ---------------------------------------------------------------------------
# Control pose
# ---------------------------------------------------------------------------


class ControlPose(dict):
    """Mapping of control attribute name to value.

    Values: scalar number, 3-sequence for vec3, 3-sequence of degrees (or an
    :class:`EulerRotation`) for rotation controls.
    """

    @staticmethod
    def of(**values) -> "ControlPose":
        return ControlPose(values)


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------


class RigGraph:
    def __init__(self) -> None:
        self.nodes: Dict[str, RigNode] = {}
        # (dst_id, dst_port) -> (src_id, src_port)
        self.connections: Dict[Tuple[str, str], Tuple[str, str]] = {}
        self.parts: Dict[str, List[str]] = {}
        self._downstream: Dict[str, Set[str]] = {}

    # -- construction ---------------------------------------------------------

    def add_node(self, node: RigNode, part: Optional[str] = None) -> str:
        if node.id in self.nodes:
            raise DuplicateNameError(f"node id {node.id!r} already exists")
        self.nodes[node.id] = node
        self._downstream[node.id] = set()
        if part is not None:
            self.parts.setdefault(part, []).append(node.id)
        return node.id

    def add(self, node_id: str, kind: str, part: Optional[str] = None, **params) -> RigNode:
        node = RigNode(node_id, kind, params)
        self.add_node(node, part=part)
        return node

    def connect(self, src_id: str, src_port: str, dst_id: str, dst_port: str) -> None:
        src = self._require(src_id)
        dst = self._require(dst_id)
        if src_port not in src.outputs:
            raise UnknownPortError(f"{src_id!r} has no output {src_port!r}")
        if dst_port not in dst.inputs:
            raise UnknownPortError(f"{dst_id!r} has no input {dst_port!r}")
        if src.outputs[src_port] != dst.inputs[dst_port]:
            raise TypeMismatchError(
                f"{src_id}.{src_port} is {src.outputs[src_port]}, "
                f"{dst_id}.{dst_port} wants {dst.inputs[dst_port]}"
            )
        key = (dst_id, dst_port)
        if key in self.connections:
            raise PortOccupiedError(f"{dst_id}.{dst_port} already connected")
        if src_id == dst_id or self._reaches(dst_id, src_id):
            raise CycleError(f"connecting {src_id} -> {dst_id} would form a cycle")
        self.connections[key] = (src_id, src_port)
        self._downstream[src_id].add(dst_id)

    def _require(self, node_id: str) -> RigNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise MissingNodeError(f"no node {node_id!r}") from None

    def _reaches(self, start: str, goal: str) -> bool:
        stack = [start]
        seen = set()
        while stack:
            cur = stack.pop()
            if cur == goal:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self._downstream.get(cur, ()))
        return False

    def source_of(self, dst_id: str, dst_port: str) -> Optional[Tuple[str, str]]:
        return self.connections.get((dst_id, dst_port))

    # -- queries ----------------------------------------------------------------

    def topo_order(self) -> List[str]:
        """Kahn's algorithm, ties broken by node id for determinism."""
        import heapq

        indeg = {nid: 0 for nid in self.nodes}
        for (dst, _dport), (_src, _sport) in self.connections.items():
            indeg[dst] += 1
        ready = [nid for nid, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        downstream_counts: Dict[str, Dict[str, int]] = {}
        for (dst, _dport), (src, _sport) in self.connections.items():
            downstream_counts.setdefault(src, {}).setdefault(dst, 0)
            downstream_counts[src][dst] += 1
        order = []
        while ready:
            nid = heapq.heappop(ready)
            order.append(nid)
            for dst, cnt in downstream_counts.get(nid, {}).items():
                indeg[dst] -= cnt
                if indeg[dst] == 0:
                    heapq.heappush(ready, dst)
        if len(order) != len(self.nodes):
            raise CycleError("graph contains a cycle")
        return order

    def controls(self) -> List[RigNode]:
        return [n for n in self.nodes.values() if n.kind == "ControlAttribute"]

    def control_map(self) -> Dict[str, RigNode]:
        return {n.params["name"]: n for n in self.controls()}

    def joint_outputs(self) -> List[RigNode]:
        return [n for n in self.nodes.values() if n.kind == "JointOutput"]

    def default_pose(self) -> ControlPose:
        return ControlPose()

    def dirty_propagate(self, changed_controls: Iterable[str]) -> Set[str]:
        """Downstream closure (inclusive) of the named control attributes."""
        by_name = self.control_map()
        frontier: List[str] = []
        for name in changed_controls:
            node = by_name.get(name)
            if node is None:
                raise MissingControlError(f"no control named {name!r}")
            frontier.append(node.id)
        seen: Set[str] = set()
        while frontier:
            cur = frontier.pop()
            if cur in seen:
                continue
            seen.add(cur)
            frontier.extend(self._downstream.get(cur, ()))
        return seen

    def part_of(self, node_id: str) -> Optional[str]:
        for tag, ids in self.parts.items():
            if node_id in ids:
                return tag
        return None

    def check(self) -> None:
        """Structural invariants: acyclic, typed, sinks reachable from sources."""
        order = self.topo_order()  # raises on cycles
        order_set = set(order)
        sources = {
            nid
            for nid, n in self.nodes.items()
            if n.kind in ("Constant", "ControlAttribute")
        }
        # nodes reachable from sources
        reach: Set[str] = set(sources)
        for nid in order:
            node = self.nodes[nid]
            for port in node.inputs:
                src = self.connections.get((nid, port))
                if src and src[0] in reach:
                    reach.add(nid)
        for jo in self.joint_outputs():
            if jo.id not in reach:
                raise InvalidValueError(
                    f"JointOutput {jo.id!r} unreachable from any control or constant"
                )
        assert order_set == set(self.nodes)

    # -- part surgery ------------------------------------------------------------

    def extract_part(self, part: str) -> "RigGraph":
        """Copy one part into a standalone graph; inbound cross-part wires
        become rest-pose constants."""
        ids = self._part_ids(part)
        rest = _rest_values(self)
        sub = RigGraph()
        for nid in ids:
            node = self.nodes[nid]
            sub.add_node(RigNode(node.id, node.kind, dict(node.params)), part=part)
        for (dst, dport), (src, sport) in self.connections.items():
            if dst not in ids:
                continue
            if src in ids:
                sub.connect(src, sport, dst, dport)
            else:
                value = rest[(src, sport)]
                vtype = self.nodes[src].outputs[sport]
                const_id = f"{src}__rest_{sport}"
                if const_id not in sub.nodes:
                    sub.add(const_id, "Constant", part=part, value_type=vtype, value=value)
                sub.connect(const_id, "value", dst, dport)
        return sub

    def remove_part(self, part: str) -> None:
        """Delete a part; surviving consumers of its outputs are pinned to
        the removed part's rest-pose values."""
        ids = self._part_ids(part)
        rest = _rest_values(self)
        id_set = set(ids)
        to_rewire = [
            (dst, dport, src, sport)
            for (dst, dport), (src, sport) in self.connections.items()
            if src in id_set and dst not in id_set
        ]
        for dst, dport, src, sport in to_rewire:
            del self.connections[(dst, dport)]
            value = rest[(src, sport)]
            vtype = self.nodes[src].outputs[sport]
            const_id = f"{src}__rest_{sport}"
            if const_id not in self.nodes:
                consumer_part = self.part_of(dst)
                self.add(
                    const_id,
                    "Constant",
                    part=consumer_part,
                    value_type=vtype,
                    value=value,
                )
            self.connect(const_id, "value", dst, dport)
        for (dst, dport) in [k for k in self.connections if k[0] in id_set]:
            src = self.connections.pop((dst, dport))
            self._downstream.get(src[0], set()).discard(dst)
        for nid in ids:
            self.nodes.pop(nid, None)
            self._downstream.pop(nid, None)
        for tag in list(self.parts):
            if tag == part:
                del self.parts[tag]
        # prune stale downstream references
        for nid, down in self._downstream.items():
            down &= set(self.nodes)

    def _part_ids(self, part: str) -> List[str]:
        if part not in self.parts:
            raise UnknownPartError(f"no part {part!r}")
        return list(self.parts[part])

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": GRAPH_FORMAT,
            "nodes": [
                {"id": n.id, "kind": n.kind, "params": _encode_params(n.params)}
                for n in self.nodes.values()
            ],
            "connections": [
                {"from": [src, sport], "to": [dst, dport]}
                for (dst, dport), (src, sport) in self.connections.items()
            ],
            "parts": {tag: list(ids) for tag, ids in self.parts.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "RigGraph":
        if not isinstance(doc, dict) or doc.get("format") != GRAPH_FORMAT:
            raise SchemaError(f"expected {GRAPH_FORMAT}", "/format")
        g = RigGraph()
        for i, nd in enumerate(doc.get("nodes", [])):
            try:
                g.add(nd["id"], nd["kind"], **_decode_params(nd.get("params", {})))
            except KeyError as exc:
                raise SchemaError(f"node missing {exc}", f"/nodes/{i}") from exc
        for i, cd in enumerate(doc.get("connections", [])):
            try:
                (src, sport), (dst, dport) = cd["from"], cd["to"]
            except (KeyError, ValueError) as exc:
                raise SchemaError("bad connection", f"/connections/{i}") from exc
            g.connect(src, sport, dst, dport)
        for tag, ids in doc.get("parts", {}).items():
            g.parts[tag] = list(ids)
        return g


def _rest_values(graph: "RigGraph") -> Dict[Tuple[str, str], Any]:
    session = EvalSession(graph)
    session.evaluate(ControlPose())
    return session.port_values()


# ---------------------------------------------------------------------------
# Param (de)serialization
# ---------------------------------------------------------------------------


def _encode_value(v):
    if isinstance(v, Xform):
        return {"__xf": [list(v.t), list(v.q), list(v.s)]}
    if isinstance(v, Quat):
        return {"__q": list(v)}
    if isinstance(v, Vec3):
        return {"__v3": list(v)}
    if isinstance(v, EulerRotation):
        return {"__e": [v.x, v.y, v.z, v.order]}
    if isinstance(v, DrivenKey):
        return {"__dk": {"keys": [list(k) for k in v.keys], "interp": v.interpolation}}
    if isinstance(v, (list, tuple)):
        return {"__l": [_encode_value(x) for x in v]}
    return v


def _decode_value(v):
    if isinstance(v, dict):
        if "__xf" in v:
            t, q, s = v["__xf"]
            return Xform(Vec3(*t), Quat(*q), Vec3(*s))
        if "__q" in v:
            return Quat(*v["__q"])
        if "__v3" in v:
            return Vec3(*v["__v3"])
        if "__e" in v:
            x, y, z, order = v["__e"]
            return EulerRotation(x, y, z, order)
        if "__dk" in v:
            return DrivenKey(
                tuple(tuple(k) for k in v["__dk"]["keys"]), v["__dk"]["interp"]
            )
        if "__l" in v:
            return tuple(_decode_value(x) for x in v["__l"])
    return v


def _encode_params(params: dict) -> dict:
    return {k: _encode_value(v) for k, v in params.items()}


def _decode_params(params: dict) -> dict:
    return {k: _decode_value(v) for k, v in params.items()}


# ---------------------------------------------------------------------------
# Value coercion for control injection
# ---------------------------------------------------------------------------


def coerce_control_value(node: RigNode, value) -> Any:
    vtype = node.params["value_type"]
    name = node.params.get("name", node.id)
    if vtype == "scalar":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeMismatchError(f"control {name!r} expects a number")
        v = float(value)
        if not math.isfinite(v):
            raise TypeMismatchError(f"control {name!r} got a non-finite value")
        return v
    if vtype == "vec3":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise TypeMismatchError(f"control {name!r} expects [x, y, z]")
        return Vec3.of(*value)
    if vtype == "rotation":
        if isinstance(value, EulerRotation):
            return euler_to_quaternion(value)
        if isinstance(value, (list, tuple)) and len(value) == 3:
            order = node.params.get("rotate_order", "XYZ")
            return euler_to_quaternion(
                EulerRotation(float(value[0]), float(value[1]), float(value[2]), order)
            )
        raise TypeMismatchError(f"control {name!r} expects euler degrees [x, y, z]")
    raise TypeMismatchError(f"control {name!r} has unsupported type {vtype!r}")


def control_default(node: RigNode) -> Any:
    vtype = node.params["value_type"]
    default = node.params.get("default")
    if vtype == "scalar":
        return float(default) if default is not None else 0.0
    if vtype == "vec3":
        return Vec3(*default) if default is not None else Vec3(0.0, 0.0, 0.0)
    if vtype == "rotation":
        if default is None:
            return QUAT_IDENTITY
        if isinstance(default, Quat):
            return default
        order = node.params.get("rotate_order", "XYZ")
        return euler_to_quaternion(EulerRotation(*default, order=order))
    raise InvalidValueError(f"bad control type {vtype!r}")


# ---------------------------------------------------------------------------
# Evaluation session
# ---------------------------------------------------------------------------


class JointPoseMap(dict):
    """Joint name -> world :class:`Xform`."""

    def matrices(self) -> Dict[str, tuple]:
        from .math3d import xf_to_mat4

        return {name: xf_to_mat4(xf) for name, xf in self.items()}


class EvalSession:
    """Owns a private value cache for one consumer of a compiled graph.

    ``evaluate`` runs every node exactly once; ``apply_control_change``
    recomputes only the downstream closure of the touched control.
    """

    def __init__(self, graph: RigGraph):
        self.graph = graph
        self._order = graph.topo_order()
        self._index = {nid: i for i, nid in enumerate(self._order)}
        # slot per (node, output port)
        self._slot: Dict[Tuple[str, str], int] = {}
        for nid in self._order:
            for port in graph.nodes[nid].outputs:
                self._slot[(nid, port)] = len(self._slot)
        self._values: List[Any] = [None] * len(self._slot)
        self._controls: Dict[str, Any] = {}
        self._control_nodes = {
            n.params["name"]: n for n in graph.controls()
        }
        self._defaults = {
            name: control_default(n) for name, n in self._control_nodes.items()
        }
        self.joint_worlds = JointPoseMap()
        self.eval_counts: Dict[str, int] = {nid: 0 for nid in self._order}
        self._fns: List[Callable[[], None]] = []
        for nid in self._order:
            self._fns.append(self._compile_node(graph.nodes[nid]))
        # per-control downstream plans (topo position sorted), computed lazily
        self._dirty_plans: Dict[str, List[int]] = {}

    # -- public ------------------------------------------------------------

    def evaluate(self, pose: Optional[ControlPose] = None) -> JointPoseMap:
        """Full pass: defaults overlaid with ``pose``, every node once."""
        controls = self._controls
        controls.clear()
        controls.update(self._defaults)
        if pose:
            for name, value in pose.items():
                node = self._control_nodes.get(name)
                if node is None:
                    raise MissingControlError(f"no control named {name!r}")
                controls[name] = coerce_control_value(node, value)
        self.joint_worlds.clear()
        for fn in self._fns:
            fn()
        return JointPoseMap(self.joint_worlds)

    def apply_control_change(self, name: str, value) -> JointPoseMap:
        """Incremental: recompute only nodes downstream of one control."""
        node = self._control_nodes.get(name)
        if node is None:
            raise MissingControlError(f"no control named {name!r}")
        self._controls[name] = coerce_control_value(node, value)
        plan = self._dirty_plans.get(name)
        if plan is None:
            dirty = self.graph.dirty_propagate([name])
            plan = sorted(self._index[nid] for nid in dirty)
            self._dirty_plans[name] = plan
        fns = self._fns
        for i in plan:
            fns[i]()
        return JointPoseMap(self.joint_worlds)

    def port_values(self) -> Dict[Tuple[str, str], Any]:
        return {key: self._values[slot] for key, slot in self._slot.items()}

    def value_of(self, node_id: str, port: str = "value"):
        return self._values[self._slot[(node_id, port)]]

    def reset_counts(self) -> None:
        for k in self.eval_counts:
            self.eval_counts[k] = 0

    # -- compilation ----------------------------------------------------------

    def _in_slot(self, node: RigNode, port: str) -> Optional[int]:
        src = self.graph.connections.get((node.id, port))
        if src is None:
            return None
        return self._slot[src]

    def _need(self, node: RigNode, port: str) -> int:
        slot = self._in_slot(node, port)
        if slot is None:
            raise InvalidValueError(f"{node.id}.{port} is not connected")
        return slot

    def _compile_node(self, node: RigNode) -> Callable[[], None]:
        values = self._values
        counts = self.eval_counts
        nid = node.id
        kind = node.kind
        p = node.params

        if kind == "Constant":
            out = self._slot[(nid, "value")]
            const = p["value"]

            def run_const():
                counts[nid] += 1
                values[out] = const

            return run_const

        if kind == "ControlAttribute":
            out = self._slot[(nid, "value")]
            name = p["name"]
            controls = self._controls

            def run_ctrl():
                counts[nid] += 1
                values[out] = controls[name]

            return run_ctrl

        if kind == "Distance":
            ia, ib = self._need(node, "a"), self._need(node, "b")
            out = self._slot[(nid, "value")]

            def run_dist():
                counts[nid] += 1
                a = values[ia]
                b = values[ib]
                values[out] = math.sqrt(
                    (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
                )

            return run_dist

        if kind == "Ratio":
            inum, iden = self._need(node, "numerator"), self._need(node, "denominator")
            out = self._slot[(nid, "value")]

            def run_ratio():
                counts[nid] += 1
                den = values[iden]
                if -1e-12 < den < 1e-12:
                    den = 1e-12 if den >= 0 else -1e-12
                values[out] = values[inum] / den

            return run_ratio

        if kind == "Clamp":
            iv = self._need(node, "value")
            out = self._slot[(nid, "value")]
            lo = p.get("min")
            hi = p.get("max")

            def run_clamp():
                counts[nid] += 1
                v = values[iv]
                if lo is not None and v < lo:
                    v = lo
                if hi is not None and v > hi:
                    v = hi
                values[out] = v

            return run_clamp

        if kind == "Condition":
            ix = self._need(node, "x")
            ic = self._need(node, "threshold")
            ia = self._need(node, "if_greater")
            ib = self._need(node, "else_value")
            out = self._slot[(nid, "value")]

            def run_cond():
                counts[nid] += 1
                # equality routes to the else branch on purpose
                values[out] = values[ia] if values[ix] > values[ic] else values[ib]

            return run_cond

        if kind == "Blend":
            ia = self._need(node, "a")
            ib = self._need(node, "b")
            iw = self._need(node, "weight")
            out = self._slot[(nid, "value")]
            vtype = p.get("value_type", "scalar")

            if vtype == "scalar":

                def run_blend_s():
                    counts[nid] += 1
                    w = values[iw]
                    if w == 0.0:
                        values[out] = values[ia]
                    elif w == 1.0:
                        values[out] = values[ib]
                    else:
                        a = values[ia]
                        values[out] = a + (values[ib] - a) * w

                return run_blend_s

            if vtype == "vec3":

                def run_blend_v():
                    counts[nid] += 1
                    w = values[iw]
                    if w == 0.0:
                        values[out] = values[ia]
                    elif w == 1.0:
                        values[out] = values[ib]
                    else:
                        a, b = values[ia], values[ib]
                        values[out] = Vec3(
                            a[0] + (b[0] - a[0]) * w,
                            a[1] + (b[1] - a[1]) * w,
                            a[2] + (b[2] - a[2]) * w,
                        )

                return run_blend_v

            if vtype == "rotation":

                def run_blend_r():
                    counts[nid] += 1
                    values[out] = q_slerp(values[ia], values[ib], values[iw])

                return run_blend_r

            def run_blend_x():
                counts[nid] += 1
                w = values[iw]
                if w == 0.0:
                    values[out] = values[ia]
                elif w == 1.0:
                    values[out] = values[ib]
                else:
                    a: Xform = values[ia]
                    b: Xform = values[ib]
                    values[out] = Xform(
                        Vec3(
                            a.t[0] + (b.t[0] - a.t[0]) * w,
                            a.t[1] + (b.t[1] - a.t[1]) * w,
                            a.t[2] + (b.t[2] - a.t[2]) * w,
                        ),
                        q_slerp(a.q, b.q, w),
                        Vec3(
                            a.s[0] + (b.s[0] - a.s[0]) * w,
                            a.s[1] + (b.s[1] - a.s[1]) * w,
                            a.s[2] + (b.s[2] - a.s[2]) * w,
                        ),
                    )

            return run_blend_x

        if kind == "PointConstraint":
            n = int(p.get("targets", 1))
            slots = [self._need(node, f"target{i}") for i in range(n)]
            weights = list(p.get("weights", [1.0] * n))
            wsum = sum(weights)
            weights = [w / wsum for w in weights]
            offsets = [Vec3(*o) for o in p.get("offsets", [(0.0, 0.0, 0.0)] * n)]
            out = self._slot[(nid, "value")]

            if n == 1:
                s0 = slots[0]
                ox, oy, oz = offsets[0]
                if ox == 0.0 and oy == 0.0 and oz == 0.0:

                    def run_pc0():
                        counts[nid] += 1
                        values[out] = values[s0].t

                    return run_pc0

                def run_pc1():
                    counts[nid] += 1
                    (tx, ty, tz), (qw, qx, qy, qz), (sx, sy, sz) = values[s0]
                    vx, vy, vz = ox * sx, oy * sy, oz * sz
                    cx = 2.0 * (qy * vz - qz * vy)
                    cy = 2.0 * (qz * vx - qx * vz)
                    cz = 2.0 * (qx * vy - qy * vx)
                    values[out] = Vec3(
                        tx + vx + qw * cx + (qy * cz - qz * cy),
                        ty + vy + qw * cy + (qz * cx - qx * cz),
                        tz + vz + qw * cz + (qx * cy - qy * cx),
                    )

                return run_pc1

            def run_pcn():
                counts[nid] += 1
                x = y = z = 0.0
                for slot, w, off in zip(slots, weights, offsets):
                    px, py, pz = xf_point(values[slot], off)
                    x += px * w
                    y += py * w
                    z += pz * w
                values[out] = Vec3(x, y, z)

            return run_pcn

        if kind == "OrientConstraint":
            out = self._slot[(nid, "value")]
            mode = p.get("mode", "blend")
            if mode == "aim":
                ieye = self._need(node, "eye")
                iat = self._need(node, "at")
                iup = self._need(node, "up_ref")
                up_axis = Vec3(*p.get("up_axis", (0.0, 0.0, 1.0)))
                post = Quat(*p.get("post", QUAT_IDENTITY))
                flip = bool(p.get("flip_handed", False))

                def run_aim():
                    counts[nid] += 1
                    eye = values[ieye]
                    at = values[iat]
                    upq = values[iup].q
                    values[out] = _aim_quat(eye, at, q_rotate(upq, up_axis), post, flip)

                return run_aim

            n = int(p.get("targets", 1))
            offs = [Quat(*q) for q in p.get("offsets", [QUAT_IDENTITY] * n)]
            if n == 1:
                s0 = self._need(node, "target0")
                off0 = offs[0]

                def run_oc1():
                    counts[nid] += 1
                    values[out] = q_mul(values[s0].q, off0)

                return run_oc1

            s0 = self._need(node, "target0")
            s1 = self._need(node, "target1")
            iw = self._need(node, "weight")
            off0, off1 = offs[0], offs[1]

            def run_oc2():
                counts[nid] += 1
                values[out] = q_slerp(
                    q_mul(values[s0].q, off0),
                    q_mul(values[s1].q, off1),
                    values[iw],
                )

            return run_oc2

        if kind == "ParentConstraint":
            return self._compile_parent_constraint(node)

        if kind == "TwoBoneIK":
            return self._compile_two_bone(node)

        if kind == "SplineIK":
            return self._compile_spline(node)

        if kind == "DrivenKeyCurve":
            idrv = self._need(node, "driver")
            out = self._slot[(nid, "value")]
            dk: DrivenKey = p["curve"]

            def run_dk():
                counts[nid] += 1
                values[out] = eval_driven_key(dk, values[idrv])

            return run_dk

        if kind == "TwistDistributor":
            return self._compile_twist(node)

        if kind == "JointOutput":
            ibase = self._need(node, "base")
            ilocal = self._need(node, "local")
            joint = p["joint"]
            worlds = self.joint_worlds

            def run_jo():
                counts[nid] += 1
                worlds[joint] = xf_mul(values[ibase], values[ilocal])

            return run_jo

        raise InvalidValueError(f"cannot compile kind {kind!r}")

    def _compile_parent_constraint(self, node: RigNode) -> Callable[[], None]:
        values = self._values
        counts = self.eval_counts
        nid = node.id
        p = node.params
        itarget = self._need(node, "target")
        out = self._slot[(nid, "value")]
        offset: Optional[Xform] = p.get("offset")
        if offset is not None and offset == XFORM_IDENTITY:
            offset = None
        it = self._need(node, "t") if p.get("use_t") else None
        ir = self._need(node, "r") if p.get("use_r") else None
        is_ = self._need(node, "s") if p.get("use_s") else None
        channels = [
            (self._need(node, port), _AXIS_IDX[axis], gain)
            for port, axis, gain in p.get("channels", ())
        ]
        order = p.get("rotate_order", "XYZ")
        pivot = p.get("pivot")
        if pivot is not None:
            pivot = Vec3(*pivot)
            if pivot == Vec3(0.0, 0.0, 0.0):
                pivot = None

        # specialized fast paths for the three layouts rigs are made of
        if not channels and is_ is None and pivot is None:
            if it is None and ir is None:
                if offset is None:

                    def run_follow():
                        counts[nid] += 1
                        values[out] = values[itarget]

                    return run_follow
                off = offset

                def run_static():
                    counts[nid] += 1
                    values[out] = xf_mul(values[itarget], off)

                return run_static

            if it is None and ir is not None:
                off = offset
                irr = ir

                def run_rot():
                    counts[nid] += 1
                    world = values[itarget] if off is None else xf_mul(values[itarget], off)
                    # zero local translation: only the rotation composes
                    values[out] = Xform(world.t, q_mul(world.q, values[irr]), world.s)

                return run_rot

            if it is not None and ir is not None:
                off = offset
                itt, irr = it, ir

                def run_tr():
                    counts[nid] += 1
                    world = values[itarget] if off is None else xf_mul(values[itarget], off)
                    # fused world * (T(t) R(r)): translate then rotate in place
                    (wtx, wty, wtz), (qw, qx, qy, qz), ws = world
                    ltx, lty, ltz = values[itt]
                    sx, sy, sz = ws
                    vx, vy, vz = ltx * sx, lty * sy, ltz * sz
                    tx = 2.0 * (qy * vz - qz * vy)
                    ty = 2.0 * (qz * vx - qx * vz)
                    tz = 2.0 * (qx * vy - qy * vx)
                    values[out] = Xform(
                        Vec3(
                            wtx + vx + qw * tx + (qy * tz - qz * ty),
                            wty + vy + qw * ty + (qz * tx - qx * tz),
                            wtz + vz + qw * tz + (qx * ty - qy * tx),
                        ),
                        q_mul((qw, qx, qy, qz), values[irr]),
                        ws,
                    )

                return run_tr

        def run_parent():
            counts[nid] += 1
            world: Xform = values[itarget]
            if offset is not None:
                world = xf_mul(world, offset)
            # local block: translate, pivoted rotate, uniform scale
            lq = values[ir] if ir is not None else None
            if channels:
                ax = ay = az = 0.0
                for slot, axis, gain in channels:
                    v = values[slot] * gain
                    if axis == 0:
                        ax += v
                    elif axis == 1:
                        ay += v
                    else:
                        az += v
                if ax != 0.0 or ay != 0.0 or az != 0.0:
                    if order == "XYZ":
                        cq = _euler_xyz_quat(ax, ay, az)
                    else:
                        cq = euler_to_quaternion(EulerRotation(ax, ay, az, order))
                    lq = cq if lq is None else q_mul(lq, cq)
            ls = values[is_] if is_ is not None else None
            lt = values[it] if it is not None else None
            if lq is None and ls is None and lt is None:
                values[out] = world
                return
            q = lq if lq is not None else QUAT_IDENTITY
            s = ls if ls is not None else 1.0
            tx, ty, tz = lt if lt is not None else (0.0, 0.0, 0.0)
            if pivot is not None:
                px, py, pz = pivot
                mx, my, mz = q_rotate(q, (px * s, py * s, pz * s))
                tx += px - mx
                ty += py - my
                tz += pz - mz
            local = Xform(Vec3(tx, ty, tz), q, Vec3(s, s, s))
            values[out] = xf_mul(world, local)

        return run_parent

    def _compile_two_bone(self, node: RigNode) -> Callable[[], None]:
        values = self._values
        counts = self.eval_counts
        nid = node.id
        p = node.params
        iroot = self._need(node, "root_pos")
        itarget = self._need(node, "target")
        ipole = self._need(node, "pole")
        istretch = self._need(node, "stretch_scale")
        ilockw = self._need(node, "lock_weight")
        ilockp = self._need(node, "lock_point")
        itrot = self._need(node, "target_rot")
        iru = self._need(node, "roll_upper")
        irl = self._need(node, "roll_lower")
        out_u = self._slot[(nid, "upper")]
        out_m = self._slot[(nid, "mid")]
        out_e = self._slot[(nid, "effector")]
        len_a = float(p["len_a"])
        len_b = float(p["len_b"])
        post_u = Quat(*p.get("post_upper", QUAT_IDENTITY))
        post_l = Quat(*p.get("post_lower", QUAT_IDENTITY))
        post_e = Quat(*p.get("post_effector", QUAT_IDENTITY))
        fallback = Vec3(*p.get("fallback_pole_dir", (0.0, 0.0, 1.0)))
        roll_gain = float(p.get("roll_gain", 1.0)) * 0.008726646259971648  # deg -> rad/2

        sqrt = math.sqrt
        acos = math.acos

        def run_ik():
            counts[nid] += 1
            root = values[iroot]
            target = values[itarget]
            pole = values[ipole]
            s = values[istretch]
            a = len_a * s
            b = len_b * s
            w = values[ilockw]
            rx, ry, rz = root
            gx, gy, gz = target
            if w > 0.0:
                lp = values[ilockp]
                da = sqrt((lp[0] - rx) ** 2 + (lp[1] - ry) ** 2 + (lp[2] - rz) ** 2)
                db = sqrt((lp[0] - gx) ** 2 + (lp[1] - gy) ** 2 + (lp[2] - gz) ** 2)
                a += (da - a) * w
                b += (db - b) * w
                if a < 1e-9:
                    a = 1e-9
                if b < 1e-9:
                    b = 1e-9
            # inline analytic solve (law of cosines + pole plane)
            dx, dy, dz = gx - rx, gy - ry, gz - rz
            dist = sqrt(dx * dx + dy * dy + dz * dz)
            if dist < 1e-9:
                dist = 1e-9
            inv = 1.0 / dist
            ux, uy, uz = dx * inv, dy * inv, dz * inv
            px, py, pz = values[ipole]
            vx, vy, vz = px - rx, py - ry, pz - rz
            d = vx * ux + vy * uy + vz * uz
            sx, sy, sz = vx - d * ux, vy - d * uy, vz - d * uz
            sl2 = sx * sx + sy * sy + sz * sz
            if sl2 < 1e-16:
                fx, fy, fz = fallback
                d2 = fx * ux + fy * uy + fz * uz
                sx, sy, sz = fx - d2 * ux, fy - d2 * uy, fz - d2 * uz
                sl2 = sx * sx + sy * sy + sz * sz
            sinv = 1.0 / sqrt(sl2)
            sx, sy, sz = sx * sinv, sy * sinv, sz * sinv
            lo = a - b if a > b else b - a
            hi = a + b
            c = dist if lo <= dist <= hi else (lo if dist < lo else hi)
            cos_alpha = (a * a + c * c - b * b) / (2.0 * a * c)
            if cos_alpha > 1.0:
                cos_alpha = 1.0
            elif cos_alpha < -1.0:
                cos_alpha = -1.0
            sin_alpha = sqrt(1.0 - cos_alpha * cos_alpha)
            ca, sa = a * cos_alpha, a * sin_alpha
            mx = rx + ux * ca + sx * sa
            my = ry + uy * ca + sy * sa
            mz = rz + uz * ca + sz * sa
            if lo <= dist <= hi:
                ex, ey, ez = gx, gy, gz
            else:
                ex, ey, ez = rx + ux * c, ry + uy * c, rz + uz * c
            # frames: +X down each segment, +Z along the bend-plane normal
            nx = uy * sz - uz * sy
            ny = uz * sx - ux * sz
            nz = ux * sy - uy * sx
            upper_q = _frame_from_xz(mx - rx, my - ry, mz - rz, nx, ny, nz)
            ldx, ldy, ldz = ex - mx, ey - my, ez - mz
            if ldx * ldx + ldy * ldy + ldz * ldz < 1e-16:
                ldx, ldy, ldz = ux, uy, uz
            lower_q = _frame_from_xz(ldx, ldy, ldz, nx, ny, nz)
            # per-bone roll channels keep every FK twist representable
            half_u = values[iru] * roll_gain
            if half_u != 0.0:
                upper_q = q_mul(upper_q, (math.cos(half_u), math.sin(half_u), 0.0, 0.0))
            half_l = values[irl] * roll_gain
            if half_l != 0.0:
                lower_q = q_mul(lower_q, (math.cos(half_l), math.sin(half_l), 0.0, 0.0))
            su = a / len_a
            sl = b / len_b
            values[out_u] = Xform(Vec3(rx, ry, rz), q_mul(upper_q, post_u), Vec3(su, su, su))
            values[out_m] = Xform(Vec3(mx, my, mz), q_mul(lower_q, post_l), Vec3(sl, sl, sl))
            values[out_e] = Xform(Vec3(ex, ey, ez), q_mul(values[itrot], post_e), ONE3)

        return run_ik

    def _compile_spline(self, node: RigNode) -> Callable[[], None]:
        values = self._values
        counts = self.eval_counts
        nid = node.id
        p = node.params
        icv = [self._need(node, f"cv{i}") for i in range(4)]
        ibase = self._need(node, "base_rot")
        itip = self._need(node, "tip_rot")
        itwist = self._need(node, "twist")
        istretch = self._need(node, "stretch_weight")
        n = int(p["joints"])
        outs = [self._slot[(nid, f"joint{i}")] for i in range(n)]
        s_rest = [float(v) for v in p["s_rest"]]
        total_rest = float(p["total_rest"])
        posts = [Quat(*q) for q in p["posts"]]
        deltas = [Vec3(*d) for d in p["deltas"]]
        up_axis = Vec3(*p.get("up_axis", (0.0, 0.0, 1.0)))
        twist_gain = float(p.get("twist_gain", 1.0))
        fracs = [s / total_rest for s in s_rest]

        have_deltas = any(d != (0.0, 0.0, 0.0) for d in deltas)

        def run_spline():
            counts[nid] += 1
            curve = CubicBezier(
                Vec3(*values[icv[0]]),
                Vec3(*values[icv[1]]),
                Vec3(*values[icv[2]]),
                Vec3(*values[icv[3]]),
            )
            table = ArcTable(curve, segments=12, newton=1)
            total_cur = table.total
            s_f = total_cur / total_rest
            w = values[istretch]
            twist = values[itwist] * twist_gain
            up_base = q_rotate(values[ibase], up_axis)
            up_tip = q_rotate(values[itip], up_axis)
            # position/tangent polynomial coefficients, once per pass
            p0, p1, p2, p3 = curve
            for i in range(n):
                frac = fracs[i]
                if w == 1.0:
                    s = s_rest[i] * s_f
                    scale = s_f
                elif w == 0.0:
                    s = s_rest[i] if s_rest[i] < total_cur else total_cur
                    scale = 1.0
                else:
                    stretched = s_rest[i] * s_f
                    clamped = s_rest[i] if s_rest[i] < total_cur else total_cur
                    s = clamped + (stretched - clamped) * w
                    scale = 1.0 + (s_f - 1.0) * w
                t = table.param_at_length(s)
                u = 1.0 - t
                buu = 3.0 * u * u * t
                butt = 3.0 * u * t * t
                auu = u * u * u
                att = t * t * t
                px = auu * p0[0] + buu * p1[0] + butt * p2[0] + att * p3[0]
                py = auu * p0[1] + buu * p1[1] + butt * p2[1] + att * p3[1]
                pz = auu * p0[2] + buu * p1[2] + butt * p2[2] + att * p3[2]
                da = 3.0 * u * u
                db = 6.0 * u * t
                dc = 3.0 * t * t
                tx = da * (p1[0] - p0[0]) + db * (p2[0] - p1[0]) + dc * (p3[0] - p2[0])
                ty = da * (p1[1] - p0[1]) + db * (p2[1] - p1[1]) + dc * (p3[1] - p2[1])
                tz = da * (p1[2] - p0[2]) + db * (p2[2] - p1[2]) + dc * (p3[2] - p2[2])
                ux = up_base[0] + (up_tip[0] - up_base[0]) * frac
                uy = up_base[1] + (up_tip[1] - up_base[1]) * frac
                uz = up_base[2] + (up_tip[2] - up_base[2]) * frac
                frame = _aim_quat(
                    (0.0, 0.0, 0.0), (tx, ty, tz), (ux, uy, uz), QUAT_IDENTITY, False
                )
                roll = twist * frac
                if roll != 0.0:
                    half = roll * 0.008726646259971648  # deg -> rad / 2
                    frame = q_mul(frame, Quat(math.cos(half), math.sin(half), 0.0, 0.0))
                q = q_mul(frame, posts[i])
                if have_deltas:
                    d = deltas[i]
                    # rest correction rides the bound controller frames, not
                    # the tangent frame, staying exact under mirroring
                    off = q_rotate(q_slerp(values[ibase], values[itip], frac), d)
                    px += off[0]
                    py += off[1]
                    pz += off[2]
                values[outs[i]] = Xform(Vec3(px, py, pz), q, Vec3(scale, scale, scale))

        return run_spline

    def _compile_twist(self, node: RigNode) -> Callable[[], None]:
        values = self._values
        counts = self.eval_counts
        nid = node.id
        p = node.params
        iparent = self._need(node, "parent")
        ichild = self._need(node, "child")
        iextra = self._need(node, "extra")
        n = int(p["joints"])
        outs = [self._slot[(nid, f"joint{i}")] for i in range(n)]
        posts = [Quat(*q) for q in p.get("posts", [QUAT_IDENTITY] * n)]
        gain = float(p.get("twist_gain", 1.0))
        rest_twist = float(p.get("rest_twist", 0.0))
        fracs = [(k + 1) / n for k in range(n)]

        def run_twist():
            counts[nid] += 1
            parent: Xform = values[iparent]
            child: Xform = values[ichild]
            rel = q_mul(q_conjugate(parent.q), child.q)
            # distribute the roll delta from rest about the bone (+X) axis
            tw = 2.0 * math.atan2(rel[1], rel[0]) - rest_twist
            if tw > math.pi:
                tw -= 2.0 * math.pi
            elif tw < -math.pi:
                tw += 2.0 * math.pi
            extra = values[iextra] * 0.017453292519943295
            total = tw * gain + extra * gain
            for i in range(n):
                f = fracs[i]
                px = parent.t[0] + (child.t[0] - parent.t[0]) * f
                py = parent.t[1] + (child.t[1] - parent.t[1]) * f
                pz = parent.t[2] + (child.t[2] - parent.t[2]) * f
                half = total * f * 0.5
                roll = Quat(math.cos(half), math.sin(half), 0.0, 0.0)
                values[outs[i]] = Xform(
                    Vec3(px, py, pz), q_mul(q_mul(parent.q, roll), posts[i]), ONE3
                )

        return run_twist


def _euler_xyz_quat(ax, ay, az) -> Quat:
    """Closed-form extrinsic-XYZ euler (degrees) to quaternion."""
    hx = ax * 0.008726646259971648
    hy = ay * 0.008726646259971648
    hz = az * 0.008726646259971648
    cx, sx = math.cos(hx), math.sin(hx)
    cy, sy = math.cos(hy), math.sin(hy)
    cz, sz = math.cos(hz), math.sin(hz)
    return Quat(
        cz * cy * cx + sz * sy * sx,
        cz * cy * sx + sz * sy * cx,
        cz * sy * cx - sz * cy * sx,
        sz * cy * cx - cz * sy * sx,
    )


def _frame_from_xz(xx, xy, xz, zx, zy, zz) -> Quat:
    """Rotation with +X along (xx,xy,xz) and +Z along the given normal."""
    n = math.sqrt(xx * xx + xy * xy + xz * xz)
    xx, xy, xz = xx / n, xy / n, xz / n
    zn = math.sqrt(zx * zx + zy * zy + zz * zz)
    zx, zy, zz = zx / zn, zy / zn, zz / zn
    yx = zy * xz - zz * xy
    yy = zz * xx - zx * xz
    yz = zx * xy - zy * xx
    return q_from_mat3((xx, yx, zx, xy, yy, zy, xz, yz, zz))


def _aim_quat(eye, at, up_hint, post: Quat, flip: bool) -> Quat:
    """Frame with +X from eye toward at, +Z resolved against up_hint."""
    dx = at[0] - eye[0]
    dy = at[1] - eye[1]
    dz = at[2] - eye[2]
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n < 1e-12:
        return post
    dx, dy, dz = dx / n, dy / n, dz / n
    ux, uy, uz = up_hint[0], up_hint[1], up_hint[2]
    d = ux * dx + uy * dy + uz * dz
    zx, zy, zz = ux - d * dx, uy - d * dy, uz - d * dz
    zn = math.sqrt(zx * zx + zy * zy + zz * zz)
    if zn < 1e-9:
        # up parallel to aim: fall back to the least-aligned world axis
        cands = ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 0.0, 0.0))
        best = min(cands, key=lambda c: abs(c[0] * dx + c[1] * dy + c[2] * dz))
        ux, uy, uz = best
        d = ux * dx + uy * dy + uz * dz
        zx, zy, zz = ux - d * dx, uy - d * dy, uz - d * dz
        zn = math.sqrt(zx * zx + zy * zy + zz * zz)
    zx, zy, zz = zx / zn, zy / zn, zz / zn
    if flip:
        zx, zy, zz = -zx, -zy, -zz
    # y = z cross x
    yx = zy * dz - zz * dy
    yy = zz * dx - zx * dz
    yz = zx * dy - zy * dx
    frame = q_from_mat3((dx, yx, zx, dy, yy, zy, dz, yz, zz))
    return q_mul(frame, post)


def evaluate(graph: RigGraph, pose: Optional[ControlPose] = None) -> JointPoseMap:
    """One-shot full evaluation (new private session)."""
    return EvalSession(graph).evaluate(pose)
