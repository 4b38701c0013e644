/** Wire protocol types shared with the rigforge posing service. */

export type ControlValue = number | [number, number, number];

export interface ControlDescriptor {
  name: string;
  type: "scalar" | "vec3" | "rotation";
  default: ControlValue | null;
  soft_range: [number | null, number | null];
  controller: string;
  shape: string | null;
  color: string | null;
  rotate_order: string | null;
}

export interface JointDescriptor {
  name: string;
  parent: string | null;
  side: string;
  rest_matrix: number[];
}

export interface LimbDescriptor {
  name: string;
  blend_attr: string;
  ik_control: string;
  joints: string[];
}

export interface RigDescription {
  type: "rig_description";
  kind: string;
  controls: ControlDescriptor[];
  skeleton: { joints: JointDescriptor[] };
  limbs: LimbDescriptor[];
  revision: number;
}

export interface PoseUpdate {
  type: "pose_update";
  revision: number;
  joints: Record<string, number[]>;
  controls?: Record<string, ControlValue>;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage = RigDescription | PoseUpdate | ErrorMessage;

export interface SetControl {
  type: "set_control";
  name: string;
  value: ControlValue;
}

export interface LoadPose {
  type: "load_pose";
  pose: { controls: Record<string, ControlValue> };
}

export interface SwitchMode {
  type: "switch_mode";
  limb: string;
  mode: "fk" | "ik";
  match: boolean;
}

export type ClientMessage = SetControl | LoadPose | SwitchMode;

/** Parse a raw frame into a server message, or null when malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as { type?: unknown };
  if (msg.type === "rig_description" || msg.type === "pose_update" || msg.type === "error") {
    return data as ServerMessage;
  }
  return null;
}
