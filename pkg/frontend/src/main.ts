// Page wiring: sockets, pointer gestures, sliders, banners.

import { canvasToWorld, fitScene, Viewport } from "./coords.js";
import { freshObstacleId, hitObstacle, movedShape } from "./gestures.js";
import { renderScene } from "./render.js";
import { Api, SnapshotSocket, wsUrl } from "./transport.js";
import { ObstacleCommand, Scene } from "./types.js";
import { ViewModel } from "./viewmodel.js";

const DRAG_POST_INTERVAL_MS = 80;

function apiBase(): string {
  const q = new URLSearchParams(location.search).get("api");
  return (q ?? "http://127.0.0.1:8080").replace(/\/$/, "");
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scene");
const ctx = canvas.getContext("2d")!;
const banner = el<HTMLDivElement>("banner");
const toast = el<HTMLDivElement>("toast");
const toastText = el<HTMLSpanElement>("toast-text");
const retryBtn = el<HTMLButtonElement>("toast-retry");
const statusDot = el<HTMLSpanElement>("status");
const readout = el<HTMLDivElement>("readout");
const spark = el<HTMLCanvasElement>("spark");
const sparkCtx = spark.getContext("2d")!;

const vm = new ViewModel();
const api = new Api(apiBase());
let vp: Viewport = { scale: 80, cx: 0, cy: 0, width: canvas.width, height: canvas.height };
let fitted = false;
let selected: string | null = null;
let lastFailed: ObstacleCommand | null = null;

function refit() {
  const scene = vm.scene;
  if (!scene) return;
  const pts: Array<[number, number]> = [];
  for (const c of scene.configs) if (c.length >= 2) pts.push([c[0], c[1]]);
  for (const s of scene.surfaces) {
    pts.push(s.p0, s.p1);
  }
  for (const o of scene.obstacles) {
    if (o.shape.type === "disc") pts.push(o.shape.center);
    else pts.push(o.shape.min, o.shape.max);
  }
  vp = fitScene(pts, canvas.width, canvas.height);
}

function showToast(message: string, failed: ObstacleCommand | null) {
  toastText.textContent = message;
  lastFailed = failed;
  retryBtn.style.display = failed ? "inline-block" : "none";
  toast.style.display = "block";
  setTimeout(() => {
    if (toastText.textContent === message) toast.style.display = "none";
  }, 4000);
}

async function sendObstacle(cmd: ObstacleCommand) {
  const res = await api.postObstacle(cmd);
  if (!res.ok) {
    showToast(res.error ?? "command failed", cmd);
    // local knowledge may be behind the server (another client, a
    // scripted event); re-pull the truth
    const scene = await api.scene();
    if (scene) vm.offer(scene, performance.now(), true);
  }
  return res;
}

const socket = new SnapshotSocket(wsUrl(apiBase()), api, {
  onScene(scene: Scene, resync: boolean) {
    vm.offer(scene, performance.now(), resync);
    if (!fitted || resync) {
      refit();
      fitted = true;
    }
  },
  onStatus(connected: boolean) {
    vm.connected = connected;
    statusDot.className = connected ? "dot on" : "dot off";
  },
});
socket.start();

// -- pointer gestures --------------------------------------------------------

interface DragState {
  id: string;
  lastPost: number;
}
let drag: DragState | null = null;

canvas.addEventListener("mousedown", (ev) => {
  if (!vm.scene || vm.scene.terminal) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = canvasToWorld(vp, ev.clientX - rect.left, ev.clientY - rect.top);
  const hit = hitObstacle(vm.scene, wx, wy);
  if (ev.shiftKey) {
    if (hit) sendObstacle({ action: "remove", id: hit });
    return;
  }
  if (hit) {
    selected = hit;
    drag = { id: hit, lastPost: 0 };
    return;
  }
  const radius = Number(el<HTMLInputElement>("radius").value);
  sendObstacle({
    action: "add",
    id: freshObstacleId(),
    shape: { type: "disc", center: [wx, wy], radius },
  });
});

canvas.addEventListener("mousemove", (ev) => {
  if (!drag || !vm.scene) return;
  const now = performance.now();
  if (now - drag.lastPost < DRAG_POST_INTERVAL_MS) return;
  const obstacle = vm.scene.obstacles.find((o) => o.id === drag!.id);
  if (!obstacle) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = canvasToWorld(vp, ev.clientX - rect.left, ev.clientY - rect.top);
  drag.lastPost = now;
  sendObstacle({ action: "move", id: drag.id, shape: movedShape(obstacle.shape, wx, wy) });
});

window.addEventListener("mouseup", () => {
  drag = null;
  selected = null;
});

// -- controls ----------------------------------------------------------------

retryBtn.addEventListener("click", () => {
  if (lastFailed) sendObstacle(lastFailed);
  toast.style.display = "none";
});

el<HTMLButtonElement>("pause").addEventListener("click", () => api.pause());
el<HTMLButtonElement>("resume").addEventListener("click", () => api.resume());
el<HTMLButtonElement>("fit").addEventListener("click", refit);

for (const name of ["tracking", "collision", "clearance", "velocity"]) {
  const slider = el<HTMLInputElement>(`w-${name}`);
  slider.addEventListener("change", async () => {
    const res = await api.patchRefiner({ [name]: Number(slider.value) });
    if (!res.ok) showToast(res.error ?? "weight update failed", null);
  });
}

// -- render loop ---------------------------------------------------------------

function drawSpark() {
  const w = spark.width;
  const h = spark.height;
  sparkCtx.clearRect(0, 0, w, h);
  const samples = vm.telemetry.slice(-w);
  if (!samples.length) return;
  const top = Math.max(10, ...samples.map((s) => s.refineMs ?? 0));
  sparkCtx.strokeStyle = "#2f6fda";
  sparkCtx.beginPath();
  samples.forEach((s, k) => {
    const y = h - ((s.refineMs ?? 0) / top) * (h - 2) - 1;
    if (k === 0) sparkCtx.moveTo(k, y);
    else sparkCtx.lineTo(k, y);
  });
  sparkCtx.stroke();
}

function frame() {
  renderScene(ctx, vm, vp, selected);
  banner.style.display = vm.isStale(performance.now()) ? "block" : "none";
  const s = vm.scene;
  if (s) {
    const r = s.refine;
    readout.textContent =
      `tick ${s.tick}  t=${s.time.toFixed(2)}s  window [${s.window[0]}, ${s.window[1]})` +
      (r && r.refine_ms !== null ? `  refine ${r.refine_ms.toFixed(1)} ms` : "") +
      (r && r.f_after !== null ? `  F ${r.f_after.toExponential(2)}` : "") +
      (s.paused ? "  paused" : "") +
      (s.terminal ? "  done" : "");
  }
  drawSpark();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
