/** Canvas skeleton renderer: octahedron bones between joint positions,
 * square translate gizmos, grid floor.  Pure display; no kinematics. */

import { Camera, project } from "./camera.js";
import { RigStore } from "./store.js";

export interface DrawHandle {
  name: string;
  screenX: number;
  screenY: number;
  depth: number;
  color: string;
  active: boolean;
}

const SIDE_STROKE: Record<string, string> = {
  L: "#4d7dff",
  R: "#ff5d5d",
  C: "#e8e8e8",
};

function octahedronPoints(
  a: [number, number, number],
  b: [number, number, number],
): Array<[number, number, number]> {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const dz = b[2] - a[2];
  const len = Math.hypot(dx, dy, dz);
  if (len < 1e-9) return [];
  const w = Math.min(0.18 * len, 2.6);
  // waist ring 25% along the bone, in any plane orthogonal to it
  const ux = dx / len;
  const uy = dy / len;
  const uz = dz / len;
  let px = -uy;
  let py = ux;
  let pz = 0;
  const pl = Math.hypot(px, py, pz);
  if (pl < 1e-6) {
    px = 0;
    py = -uz;
    pz = uy;
  }
  const il = 1 / Math.hypot(px, py, pz);
  px *= il;
  py *= il;
  pz *= il;
  const qx = uy * pz - uz * py;
  const qy = uz * px - ux * pz;
  const qz = ux * py - uy * px;
  const waist: [number, number, number] = [
    a[0] + dx * 0.25,
    a[1] + dy * 0.25,
    a[2] + dz * 0.25,
  ];
  return [
    [waist[0] + px * w, waist[1] + py * w, waist[2] + pz * w],
    [waist[0] + qx * w, waist[1] + qy * w, waist[2] + qz * w],
    [waist[0] - px * w, waist[1] - py * w, waist[2] - pz * w],
    [waist[0] - qx * w, waist[1] - qy * w, waist[2] - qz * w],
  ];
}

export class SkeletonRenderer {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  draw(
    store: RigStore,
    cam: Camera,
    width: number,
    height: number,
    handles: DrawHandle[],
    banner: string | null,
  ): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#16181d";
    ctx.fillRect(0, 0, width, height);
    this.drawGrid(cam, width, height);

    for (const [parent, child] of store.boneSegments()) {
      const a = store.jointPosition(parent);
      const b = store.jointPosition(child);
      if (!a || !b) continue;
      const pa = project(cam, a, width, height);
      const pb = project(cam, b, width, height);
      if (!pa.visible || !pb.visible) continue;
      const side = store.joints.find((j) => j.name === child)?.side ?? "C";
      ctx.strokeStyle = SIDE_STROKE[side] ?? "#cccccc";
      ctx.lineWidth = 1.25;
      const ring = octahedronPoints(a, b).map((p) => project(cam, p, width, height));
      if (ring.length === 4) {
        ctx.beginPath();
        for (const r of ring) {
          ctx.moveTo(pa.x, pa.y);
          ctx.lineTo(r.x, r.y);
          ctx.lineTo(pb.x, pb.y);
        }
        for (let i = 0; i < 4; i++) {
          const r0 = ring[i];
          const r1 = ring[(i + 1) % 4];
          ctx.moveTo(r0.x, r0.y);
          ctx.lineTo(r1.x, r1.y);
        }
        ctx.stroke();
      } else {
        ctx.beginPath();
        ctx.moveTo(pa.x, pa.y);
        ctx.lineTo(pb.x, pb.y);
        ctx.stroke();
      }
      ctx.fillStyle = "#f0f0f0";
      ctx.fillRect(pa.x - 1.5, pa.y - 1.5, 3, 3);
    }

    for (const h of handles) {
      ctx.strokeStyle = h.color;
      ctx.lineWidth = h.active ? 2.5 : 1.5;
      ctx.strokeRect(h.screenX - 7, h.screenY - 7, 14, 14);
      ctx.beginPath();
      ctx.moveTo(h.screenX - 11, h.screenY);
      ctx.lineTo(h.screenX + 11, h.screenY);
      ctx.moveTo(h.screenX, h.screenY - 11);
      ctx.lineTo(h.screenX, h.screenY + 11);
      ctx.stroke();
    }

    if (banner) {
      ctx.fillStyle = "#5b1f1f";
      ctx.fillRect(0, 0, width, 28);
      ctx.fillStyle = "#ffd7d7";
      ctx.font = "13px system-ui, sans-serif";
      ctx.fillText(banner, 10, 18);
    }
  }

  private drawGrid(cam: Camera, width: number, height: number): void {
    const ctx = this.ctx;
    ctx.strokeStyle = "#23262d";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = -5; i <= 5; i++) {
      const a = project(cam, [i * 40, 0, -200], width, height);
      const b = project(cam, [i * 40, 0, 200], width, height);
      const c = project(cam, [-200, 0, i * 40], width, height);
      const d = project(cam, [200, 0, i * 40], width, height);
      if (a.visible && b.visible) {
        ctx.moveTo(a.x, a.y);
        ctx.lineTo(b.x, b.y);
      }
      if (c.visible && d.visible) {
        ctx.moveTo(c.x, c.y);
        ctx.lineTo(d.x, d.y);
      }
    }
    ctx.stroke();
  }
}
