import { describe, expect, it } from "vitest";

import { RigStore, handleStyle } from "../src/store.js";
import { identityMatrix, poseUpdate, sampleDescription } from "./helpers.js";

describe("RigStore", () => {
  it("loads the description and renders at rest", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    expect(store.joints.length).toBe(2);
    expect(store.jointPosition("root")).toEqual([0, 100, 0]);
    expect(store.revision).toBe(0);
  });

  it("exposes exactly one handle per control", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    const handles = store.handles();
    expect(handles.length).toBe(store.controls.length);
    const names = new Set(handles.map((h) => h.control.name));
    expect(names.size).toBe(store.controls.length);
  });

  it("maps handle style purely from type and shape", () => {
    const [ik, fk, curl] = sampleDescription().controls;
    expect(handleStyle(ik)).toBe("translate");
    expect(handleStyle(fk)).toBe("rotate");
    expect(handleStyle(curl)).toBe("slider");
  });

  it("displays joint matrices verbatim from pose updates", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    const update = poseUpdate(1, 7.25);
    store.applyPoseUpdate(update);
    expect(store.jointMatrices["root"]).toBe(update.joints["root"]);
    expect(store.jointPosition("root")).toEqual([7.25, 100, 0]);
  });

  it("never regresses to a lower revision", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    store.applyPoseUpdate(poseUpdate(5, 5));
    const changed = store.applyPoseUpdate(poseUpdate(3, 99));
    expect(changed).toBe(false);
    expect(store.revision).toBe(5);
    expect(store.jointPosition("root")?.[0]).toBe(5);
  });

  it("stays monotone under a 1000-message fuzz", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      return seed / 0x7fffffff;
    };
    let highest = 0;
    const seen: number[] = [];
    for (let i = 0; i < 1000; i++) {
      const revision = Math.floor(rand() * 400);
      store.applyPoseUpdate(poseUpdate(revision, revision));
      highest = Math.max(highest, revision);
      seen.push(store.revision);
    }
    for (let i = 1; i < seen.length; i++) {
      expect(seen[i]).toBeGreaterThanOrEqual(seen[i - 1]);
    }
    expect(store.revision).toBe(highest);
    expect(store.jointPosition("root")?.[0]).toBe(highest);
  });

  it("derives bone segments from the parent table", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    expect(store.boneSegments()).toEqual([["root", "L_arm3_jnt"]]);
  });

  it("echoes control values from updates", () => {
    const store = new RigStore();
    store.loadDescription(sampleDescription());
    store.applyPoseUpdate({
      ...poseUpdate(2),
      controls: { "L_hand_ctrl.curl": 42 },
    });
    expect(store.controlValues["L_hand_ctrl.curl"]).toBe(42);
  });
});
