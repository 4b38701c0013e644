/** Viewport camera: orbiting eye with orthographic/perspective projection.
 *
 * Projection only — world positions always come from the server.
 */

export type Projection = "perspective" | "orthographic";

export interface Camera {
  target: [number, number, number];
  distance: number;
  yawDeg: number;
  pitchDeg: number;
  projection: Projection;
  fovDeg: number;
}

export function defaultCamera(): Camera {
  return {
    target: [0, 90, 0],
    distance: 420,
    yawDeg: 30,
    pitchDeg: -12,
    projection: "perspective",
    fovDeg: 40,
  };
}

const DEG = Math.PI / 180;

export function eyePosition(cam: Camera): [number, number, number] {
  const yaw = cam.yawDeg * DEG;
  const pitch = cam.pitchDeg * DEG;
  const cx = Math.cos(pitch);
  return [
    cam.target[0] + cam.distance * cx * Math.sin(yaw),
    cam.target[1] - cam.distance * Math.sin(pitch),
    cam.target[2] + cam.distance * cx * Math.cos(yaw),
  ];
}

/** World point to view space (x right, y up, z toward the viewer). */
export function toView(cam: Camera, p: [number, number, number]): [number, number, number] {
  const eye = eyePosition(cam);
  const yaw = cam.yawDeg * DEG;
  const pitch = cam.pitchDeg * DEG;
  let x = p[0] - eye[0];
  let y = p[1] - eye[1];
  let z = p[2] - eye[2];
  // rotate the world by -yaw about Y, then -pitch about X
  const cy = Math.cos(-yaw);
  const sy = Math.sin(-yaw);
  [x, z] = [cy * x + sy * z, -sy * x + cy * z];
  const cp = Math.cos(-pitch);
  const sp = Math.sin(-pitch);
  [y, z] = [cp * y - sp * z, sp * y + cp * z];
  return [x, y, z];
}

export interface ScreenPoint {
  x: number;
  y: number;
  depth: number;
  visible: boolean;
}

export function project(
  cam: Camera,
  p: [number, number, number],
  width: number,
  height: number,
): ScreenPoint {
  const [vx, vy, vz] = toView(cam, p);
  const depth = -vz;
  let sx: number;
  let sy: number;
  if (cam.projection === "perspective") {
    if (depth < 1e-3) return { x: 0, y: 0, depth, visible: false };
    const f = (0.5 * height) / Math.tan(0.5 * cam.fovDeg * DEG);
    sx = width / 2 + (f * vx) / depth;
    sy = height / 2 - (f * vy) / depth;
  } else {
    const scale = height / (cam.distance * 0.9);
    sx = width / 2 + vx * scale;
    sy = height / 2 - vy * scale;
  }
  return { x: sx, y: sy, depth, visible: true };
}

/** Screen-pixel delta to a world-space move in the camera's view plane. */
export function screenDeltaToWorld(
  cam: Camera,
  dxPx: number,
  dyPx: number,
  depth: number,
  height: number,
): [number, number, number] {
  let worldPerPixel: number;
  if (cam.projection === "perspective") {
    const f = (0.5 * height) / Math.tan(0.5 * cam.fovDeg * DEG);
    worldPerPixel = depth / f;
  } else {
    worldPerPixel = (cam.distance * 0.9) / height;
  }
  const dx = dxPx * worldPerPixel;
  const dy = -dyPx * worldPerPixel;
  // view right/up axes back to world space
  const yaw = cam.yawDeg * DEG;
  const pitch = cam.pitchDeg * DEG;
  const right: [number, number, number] = [Math.cos(yaw), 0, -Math.sin(yaw)];
  const up: [number, number, number] = [
    Math.sin(pitch) * Math.sin(yaw),
    Math.cos(pitch),
    Math.sin(pitch) * Math.cos(yaw),
  ];
  return [
    dx * right[0] + dy * up[0],
    dx * right[1] + dy * up[1],
    dx * right[2] + dy * up[2],
  ];
}
