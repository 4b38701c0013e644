/** Client-side rig state: the single source of truth for what gets drawn.
 *
 * Joint matrices come verbatim from pose updates; the store never computes
 * kinematics and never lets the view regress to an older revision.
 */

import {
  ControlDescriptor,
  ControlValue,
  LimbDescriptor,
  JointDescriptor,
  PoseUpdate,
  RigDescription,
} from "./protocol.js";

export type HandleStyle = "translate" | "rotate" | "slider";

export interface ControlHandle {
  control: ControlDescriptor;
  style: HandleStyle;
  color: string;
}

const SIDE_COLORS: Record<string, string> = {
  blue: "#4d7dff",
  red: "#ff5d5d",
  yellow: "#ffc93d",
};

/** Manipulator style is a pure function of the control type and shape tag. */
export function handleStyle(control: ControlDescriptor): HandleStyle {
  if (control.type === "scalar") return "slider";
  if (control.type === "vec3") return "translate";
  return "rotate";
}

export function handleColor(control: ControlDescriptor): string {
  return SIDE_COLORS[control.color ?? ""] ?? "#9aa0a6";
}

export class RigStore {
  kind = "";
  controls: ControlDescriptor[] = [];
  joints: JointDescriptor[] = [];
  limbs: LimbDescriptor[] = [];
  revision = -1;
  jointMatrices: Record<string, number[]> = {};
  controlValues: Record<string, ControlValue> = {};
  staleDropped = 0;

  loadDescription(desc: RigDescription): void {
    this.kind = desc.kind;
    this.controls = desc.controls;
    this.joints = desc.skeleton.joints;
    this.limbs = desc.limbs;
    this.revision = desc.revision;
    this.jointMatrices = {};
    for (const j of desc.skeleton.joints) {
      this.jointMatrices[j.name] = j.rest_matrix;
    }
    this.controlValues = {};
    for (const c of desc.controls) {
      if (c.default !== null && c.default !== undefined) {
        this.controlValues[c.name] = c.default;
      }
    }
  }

  /** Apply a pose update; stale (older or equal revision) frames are dropped.
   * Returns true when the view changed. */
  applyPoseUpdate(update: PoseUpdate): boolean {
    if (update.revision < this.revision) {
      this.staleDropped += 1;
      return false;
    }
    this.revision = update.revision;
    this.jointMatrices = update.joints;
    if (update.controls) {
      for (const [name, value] of Object.entries(update.controls)) {
        this.controlValues[name] = value;
      }
    }
    return true;
  }

  /** Exactly one interactable handle per exposed control. */
  handles(): ControlHandle[] {
    return this.controls.map((control) => ({
      control,
      style: handleStyle(control),
      color: handleColor(control),
    }));
  }

  jointPosition(name: string): [number, number, number] | null {
    const m = this.jointMatrices[name];
    if (!m) return null;
    return [m[3], m[7], m[11]];
  }

  boneSegments(): Array<[string, string]> {
    const out: Array<[string, string]> = [];
    for (const j of this.joints) {
      if (j.parent && this.jointMatrices[j.parent]) {
        out.push([j.parent, j.name]);
      }
    }
    return out;
  }

  /** World position a translate handle manipulates: its controller's rest
   * offset plus the live value (display only; the server owns the truth). */
  handleWorldPosition(control: ControlDescriptor): [number, number, number] | null {
    if (control.type !== "vec3") return null;
    const value = this.controlValues[control.name];
    const v: [number, number, number] = Array.isArray(value)
      ? [value[0], value[1], value[2]]
      : [0, 0, 0];
    const rest = this.restAnchor(control);
    return [rest[0] + v[0], rest[1] + v[1], rest[2] + v[2]];
  }

  private restAnchor(control: ControlDescriptor): [number, number, number] {
    // anchor translate handles at the matching joint when one exists
    const guess = control.controller.replace("Ik_ctrl", "3_jnt");
    const m = this.jointMatrices[guess];
    if (m) return [m[3], m[7], m[11]];
    return [0, 0, 0];
  }
}
