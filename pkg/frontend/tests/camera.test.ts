import { describe, expect, it } from "vitest";

import {
  defaultCamera,
  eyePosition,
  project,
  screenDeltaToWorld,
  toView,
} from "../src/camera.js";

describe("camera", () => {
  it("keeps the target centered in both projections", () => {
    const cam = defaultCamera();
    for (const projection of ["perspective", "orthographic"] as const) {
      cam.projection = projection;
      const p = project(cam, cam.target, 800, 600);
      expect(p.visible).toBe(true);
      expect(Math.abs(p.x - 400)).toBeLessThan(1e-9);
      expect(Math.abs(p.y - 300)).toBeLessThan(1e-9);
    }
  });

  it("looks down the view axis at the target", () => {
    const cam = defaultCamera();
    const v = toView(cam, cam.target);
    expect(Math.abs(v[0])).toBeLessThan(1e-9);
    expect(Math.abs(v[1])).toBeLessThan(1e-9);
    expect(-v[2]).toBeCloseTo(cam.distance, 9);
    const eye = eyePosition(cam);
    const d = Math.hypot(
      eye[0] - cam.target[0],
      eye[1] - cam.target[1],
      eye[2] - cam.target[2],
    );
    expect(d).toBeCloseTo(cam.distance, 9);
  });

  it("screen deltas invert back through projection", () => {
    const cam = defaultCamera();
    cam.yawDeg = 47;
    cam.pitchDeg = -20;
    const world: [number, number, number] = [12, 95, -8];
    const a = project(cam, world, 800, 600);
    const move = screenDeltaToWorld(cam, 25, -14, a.depth, 600);
    const moved: [number, number, number] = [
      world[0] + move[0],
      world[1] + move[1],
      world[2] + move[2],
    ];
    const b = project(cam, moved, 800, 600);
    expect(b.x - a.x).toBeCloseTo(25, 4);
    expect(b.y - a.y).toBeCloseTo(-14, 4);
  });

  it("culls points behind a perspective eye", () => {
    const cam = defaultCamera();
    const eye = eyePosition(cam);
    const behind: [number, number, number] = [
      eye[0] * 2 - cam.target[0],
      eye[1] * 2 - cam.target[1],
      eye[2] * 2 - cam.target[2],
    ];
    expect(project(cam, behind, 800, 600).visible).toBe(false);
  });
});
