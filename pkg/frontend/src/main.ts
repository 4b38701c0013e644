/** Browser entry: viewport + control panel against a live rigforge session. */

import { Camera, defaultCamera, project, screenDeltaToWorld } from "./camera.js";
import { RigClient, SocketLike } from "./client.js";
import { ControlValue } from "./protocol.js";
import { DrawHandle, SkeletonRenderer } from "./renderer.js";

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const panel = document.getElementById("panel") as HTMLDivElement;
const status = document.getElementById("status") as HTMLDivElement;
const toasts = document.getElementById("toasts") as HTMLDivElement;
const projToggle = document.getElementById("projection") as HTMLButtonElement;
const retryBtn = document.getElementById("retry") as HTMLButtonElement;

const cam: Camera = defaultCamera();
let banner: string | null = "connecting…";
let dragging: { name: string; depth: number; value: [number, number, number] } | null = null;
let hoverName: string | null = null;
let orbit: { x: number; y: number } | null = null;

const client = new RigClient({
  onStateChange: (state) => {
    status.textContent = state;
    retryBtn.style.display = state === "failed" || state === "closed" ? "inline" : "none";
    banner = state === "live" ? null : `connection ${state}`;
    draw();
  },
  onDescription: () => {
    buildPanel();
    draw();
  },
  onPose: () => {
    syncSliders();
    draw();
  },
  onServerError: (code, message) => {
    toast(`${code}: ${message}`);
    dragging = null; // snap back to the authoritative pose
    syncSliders();
    draw();
  },
});

function connect(): void {
  const url = `ws://${location.host}/ws`;
  try {
    client.attach(new WebSocket(url) as unknown as SocketLike);
  } catch {
    banner = "connection failed";
    draw();
  }
}

retryBtn.onclick = connect;
projToggle.onclick = () => {
  cam.projection = cam.projection === "perspective" ? "orthographic" : "perspective";
  projToggle.textContent = cam.projection;
  draw();
};

function toast(message: string): void {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  toasts.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

// -- control panel -----------------------------------------------------------

const sliderInputs = new Map<string, HTMLInputElement>();

function buildPanel(): void {
  panel.innerHTML = "";
  sliderInputs.clear();
  const limbs = client.store.limbs;
  if (limbs.length) {
    const row = document.createElement("div");
    row.className = "limb-row";
    for (const limb of limbs) {
      for (const mode of ["fk", "ik"] as const) {
        const btn = document.createElement("button");
        btn.textContent = `${limb.name} → ${mode.toUpperCase()}`;
        btn.onclick = () => client.switchMode(limb.name, mode);
        row.appendChild(btn);
      }
    }
    panel.appendChild(row);
  }
  for (const handle of client.store.handles()) {
    if (handle.style !== "slider") continue;
    const c = handle.control;
    const row = document.createElement("label");
    row.className = "slider-row";
    const [lo, hi] = c.soft_range;
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(lo ?? -180);
    input.max = String(hi ?? 180);
    input.step = "0.5";
    input.value = String(client.store.controlValues[c.name] ?? 0);
    input.style.accentColor = handle.color;
    input.oninput = () => client.setControl(c.name, Number(input.value));
    input.onchange = () => client.endInteraction();
    const text = document.createElement("span");
    text.textContent = c.name;
    row.appendChild(text);
    row.appendChild(input);
    panel.appendChild(row);
    sliderInputs.set(c.name, input);
  }
}

function syncSliders(): void {
  for (const [name, input] of sliderInputs) {
    if (document.activeElement === input) continue;
    const v = client.store.controlValues[name];
    if (typeof v === "number") input.value = String(v);
  }
}

// -- viewport ------------------------------------------------------------------

const renderer = new SkeletonRenderer(canvas.getContext("2d")!);

function translateHandles(): DrawHandle[] {
  const out: DrawHandle[] = [];
  for (const h of client.store.handles()) {
    if (h.style !== "translate") continue;
    const world = client.store.handleWorldPosition(h.control);
    if (!world) continue;
    const p = project(cam, world, canvas.width, canvas.height);
    if (!p.visible) continue;
    out.push({
      name: h.control.name,
      screenX: p.x,
      screenY: p.y,
      depth: p.depth,
      color: h.color,
      active: dragging?.name === h.control.name || hoverName === h.control.name,
    });
  }
  return out;
}

function draw(): void {
  renderer.draw(
    client.store,
    cam,
    canvas.width,
    canvas.height,
    translateHandles(),
    banner,
  );
}

function pickHandle(x: number, y: number): DrawHandle | null {
  let best: DrawHandle | null = null;
  let bestDist = 14;
  for (const h of translateHandles()) {
    const d = Math.hypot(h.screenX - x, h.screenY - y);
    if (d < bestDist) {
      best = h;
      bestDist = d;
    }
  }
  return best;
}

canvas.addEventListener("pointerdown", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const x = ev.clientX - rect.left;
  const y = ev.clientY - rect.top;
  const hit = pickHandle(x, y);
  if (hit && client.live) {
    const value = client.store.controlValues[hit.name];
    dragging = {
      name: hit.name,
      depth: hit.depth,
      value: Array.isArray(value) ? [value[0], value[1], value[2]] : [0, 0, 0],
    };
    canvas.setPointerCapture(ev.pointerId);
  } else {
    orbit = { x: ev.clientX, y: ev.clientY };
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (dragging) {
    const delta = screenDeltaToWorld(
      cam, ev.movementX, ev.movementY, dragging.depth, canvas.height,
    );
    dragging.value = [
      dragging.value[0] + delta[0],
      dragging.value[1] + delta[1],
      dragging.value[2] + delta[2],
    ];
    client.setControl(dragging.name, dragging.value as ControlValue);
    return;
  }
  if (orbit) {
    cam.yawDeg -= (ev.clientX - orbit.x) * 0.4;
    cam.pitchDeg = Math.max(-85, Math.min(85, cam.pitchDeg - (ev.clientY - orbit.y) * 0.3));
    orbit = { x: ev.clientX, y: ev.clientY };
    draw();
    return;
  }
  const rect = canvas.getBoundingClientRect();
  const hit = pickHandle(ev.clientX - rect.left, ev.clientY - rect.top);
  const name = hit ? hit.name : null;
  if (name !== hoverName) {
    hoverName = name;
    canvas.style.cursor = name ? "grab" : "default";
    draw();
  }
});

canvas.addEventListener("pointerup", () => {
  if (dragging) {
    client.endInteraction();
    dragging = null;
  }
  orbit = null;
});

canvas.addEventListener("wheel", (ev) => {
  cam.distance = Math.max(50, Math.min(1500, cam.distance * (ev.deltaY > 0 ? 1.1 : 0.9)));
  draw();
  ev.preventDefault();
});

function resize(): void {
  canvas.width = canvas.clientWidth * devicePixelRatio;
  canvas.height = canvas.clientHeight * devicePixelRatio;
  draw();
}

window.addEventListener("resize", resize);
resize();
connect();
