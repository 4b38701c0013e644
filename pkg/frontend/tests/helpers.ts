import { SocketLike } from "../src/client.js";
import { RigDescription, PoseUpdate } from "../src/protocol.js";

/** In-memory socket double recording outbound frames. */
export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  push(message: unknown): void {
    this.onmessage?.({ data: typeof message === "string" ? message : JSON.stringify(message) });
  }

  sentJson(): Array<Record<string, unknown>> {
    return this.sent.map((s) => JSON.parse(s));
  }
}

export function identityMatrix(tx = 0, ty = 0, tz = 0): number[] {
  return [1, 0, 0, tx, 0, 1, 0, ty, 0, 0, 1, tz, 0, 0, 0, 1];
}

export function sampleDescription(): RigDescription {
  return {
    type: "rig_description",
    kind: "biped",
    controls: [
      {
        name: "L_armIk_ctrl.t",
        type: "vec3",
        default: [0, 0, 0],
        soft_range: [null, null],
        controller: "L_armIk_ctrl",
        shape: "arrow",
        color: "blue",
        rotate_order: null,
      },
      {
        name: "L_armFk1_ctrl.r",
        type: "rotation",
        default: [0, 0, 0],
        soft_range: [-180, 180],
        controller: "L_armFk1_ctrl",
        shape: "circle",
        color: "blue",
        rotate_order: "XYZ",
      },
      {
        name: "L_hand_ctrl.curl",
        type: "scalar",
        default: 0,
        soft_range: [-180, 180],
        controller: "L_hand_ctrl",
        shape: "box",
        color: "blue",
        rotate_order: null,
      },
    ],
    skeleton: {
      joints: [
        { name: "root", parent: null, side: "C", rest_matrix: identityMatrix(0, 100, 0) },
        { name: "L_arm3_jnt", parent: "root", side: "L", rest_matrix: identityMatrix(60, 140, 0) },
      ],
    },
    limbs: [
      {
        name: "armL",
        blend_attr: "L_armIk_ctrl.fkIk",
        ik_control: "L_armIk_ctrl",
        joints: ["a", "b", "c"],
      },
    ],
    revision: 0,
  };
}

export function poseUpdate(revision: number, tx = 0): PoseUpdate {
  return {
    type: "pose_update",
    revision,
    joints: {
      root: identityMatrix(tx, 100, 0),
      L_arm3_jnt: identityMatrix(60 + tx, 140, 0),
    },
  };
}
