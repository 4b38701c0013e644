/** Connection plumbing: socket lifecycle, message dispatch, command sends.
 *
 * The client performs no kinematics: every displayed joint transform comes
 * verbatim from the server's pose updates.
 */

import {
  ClientMessage,
  ControlValue,
  parseServerMessage,
  ServerMessage,
} from "./protocol.js";
import { RigStore } from "./store.js";
import { TrailingThrottle } from "./throttle.js";

/** Minimal socket surface so tests can drive a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export type ConnectionState = "connecting" | "live" | "closed" | "failed";

export interface ClientEvents {
  onStateChange?: (state: ConnectionState) => void;
  onPose?: () => void;
  onDescription?: () => void;
  onServerError?: (code: string, message: string) => void;
}

export class RigClient {
  readonly store = new RigStore();
  state: ConnectionState = "connecting";
  sent: number = 0;
  private socket: SocketLike | null = null;
  private throttles = new Map<string, TrailingThrottle<ControlValue>>();

  constructor(
    private readonly events: ClientEvents = {},
    private readonly sendIntervalMs = 1000 / 60,
    private readonly clock: () => number = () => Date.now(),
  ) {}

  attach(socket: SocketLike): void {
    this.socket = socket;
    this.setState("connecting");
    socket.onopen = () => this.setState("live");
    socket.onclose = () => this.setState("closed");
    socket.onerror = () => this.setState("failed");
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) this.handle(msg);
    };
  }

  get live(): boolean {
    return this.state === "live";
  }

  private setState(state: ConnectionState): void {
    this.state = state;
    this.events.onStateChange?.(state);
  }

  private handle(msg: ServerMessage): void {
    if (msg.type === "rig_description") {
      this.store.loadDescription(msg);
      this.events.onDescription?.();
    } else if (msg.type === "pose_update") {
      if (this.store.applyPoseUpdate(msg)) {
        this.events.onPose?.();
      }
    } else {
      this.events.onServerError?.(msg.code, msg.message);
    }
  }

  private sendRaw(msg: ClientMessage): void {
    if (!this.socket || !this.live) return;
    this.socket.send(JSON.stringify(msg));
    this.sent += 1;
  }

  /** Stream a control value at most 60 times a second, trailing edge kept. */
  setControl(name: string, value: ControlValue): void {
    let throttle = this.throttles.get(name);
    if (!throttle) {
      throttle = new TrailingThrottle(
        (v) => this.sendRaw({ type: "set_control", name, value: v }),
        this.sendIntervalMs,
        this.clock,
      );
      this.throttles.set(name, throttle);
    }
    throttle.push(value);
  }

  /** Flush pending trailing-edge values (end of a drag). */
  endInteraction(): void {
    for (const t of this.throttles.values()) t.flush();
  }

  loadPose(controls: Record<string, ControlValue>): void {
    this.sendRaw({ type: "load_pose", pose: { controls } });
  }

  switchMode(limb: string, mode: "fk" | "ik"): void {
    this.sendRaw({ type: "switch_mode", limb, mode, match: true });
  }

  dispose(): void {
    for (const t of this.throttles.values()) t.dispose();
    this.throttles.clear();
    this.socket?.close();
  }
}
