// Canvas drawing. Everything rendered comes from the server scene; the
// only client-side additions are the grid and the trail of states this
// connection has already seen.

import { Viewport, worldToCanvas } from "./coords.js";
import { Scene, Shape } from "./types.js";
import { ViewModel } from "./viewmodel.js";

export const IN_WINDOW_COLOR = "#2f6fda"; // vertices the refiner may move
export const OUT_WINDOW_COLOR = "#3aa655"; // frozen vertices
export const ROBOT_COLOR = "#d2483a";
export const OBSTACLE_COLOR = "#8a5a2b";
export const SURFACE_COLOR = "#555555";
export const TRAIL_COLOR = "#d2483a55";
export const GRID_COLOR = "#e3e3e3";

/** The 2D context subset the renderer uses; tests record calls on it. */
export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fill(): void;
  stroke(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

function drawGrid(ctx: Draw2D, vp: Viewport) {
  const halfW = vp.width / 2 / vp.scale;
  const halfH = vp.height / 2 / vp.scale;
  const step = gridStep(vp.scale);
  ctx.strokeStyle = GRID_COLOR;
  ctx.lineWidth = 1;
  const x0 = Math.floor((vp.cx - halfW) / step) * step;
  for (let x = x0; x <= vp.cx + halfW; x += step) {
    const [px] = worldToCanvas(vp, x, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, vp.height);
    ctx.stroke();
  }
  const y0 = Math.floor((vp.cy - halfH) / step) * step;
  for (let y = y0; y <= vp.cy + halfH; y += step) {
    const [, py] = worldToCanvas(vp, 0, y);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(vp.width, py);
    ctx.stroke();
  }
}

export function gridStep(scale: number): number {
  // nearest 1-2-5 step that keeps grid lines at least 40 px apart
  const raw = 40 / scale;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (mag * m >= raw) return mag * m;
  }
  return mag * 10;
}

function drawShape(ctx: Draw2D, vp: Viewport, shape: Shape) {
  ctx.beginPath();
  if (shape.type === "disc") {
    const [px, py] = worldToCanvas(vp, shape.center[0], shape.center[1]);
    ctx.arc(px, py, shape.radius * vp.scale, 0, 2 * Math.PI);
  } else {
    const [x0, y0] = worldToCanvas(vp, shape.min[0], shape.max[1]);
    const [x1, y1] = worldToCanvas(vp, shape.max[0], shape.min[1]);
    ctx.rect(x0, y0, x1 - x0, y1 - y0);
  }
}

export function renderScene(
  ctx: Draw2D,
  vm: ViewModel,
  vp: Viewport,
  selectedObstacle: string | null = null,
) {
  ctx.clearRect(0, 0, vp.width, vp.height);
  drawGrid(ctx, vp);
  const scene = vm.scene;
  if (!scene) return;

  for (const s of scene.surfaces) {
    const [x0, y0] = worldToCanvas(vp, s.p0[0], s.p0[1]);
    const [x1, y1] = worldToCanvas(vp, s.p1[0], s.p1[1]);
    ctx.strokeStyle = SURFACE_COLOR;
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  }

  for (const o of scene.obstacles) {
    ctx.fillStyle = o.id === selectedObstacle ? "#b9742f" : OBSTACLE_COLOR;
    drawShape(ctx, vp, o.shape);
    ctx.fill();
  }

  if (vm.trail.length > 1) {
    ctx.strokeStyle = TRAIL_COLOR;
    ctx.lineWidth = 2;
    ctx.beginPath();
    const [sx, sy] = worldToCanvas(vp, vm.trail[0][0], vm.trail[0][1]);
    ctx.moveTo(sx, sy);
    for (let k = 1; k < vm.trail.length; k++) {
      const [px, py] = worldToCanvas(vp, vm.trail[k][0], vm.trail[k][1]);
      ctx.lineTo(px, py);
    }
    ctx.stroke();
  }

  // per-vertex markers of the published trajectory, colored by whether
  // the moving horizon may still change them
  for (let k = 0; k < scene.configs.length; k++) {
    const c = scene.configs[k];
    if (c.length < 2) continue;
    const [px, py] = worldToCanvas(vp, c[0], c[1]);
    ctx.fillStyle = vm.inWindow(k) ? IN_WINDOW_COLOR : OUT_WINDOW_COLOR;
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  if (scene.q.length >= 2) {
    const [px, py] = worldToCanvas(vp, scene.q[0], scene.q[1]);
    ctx.fillStyle = ROBOT_COLOR;
    ctx.beginPath();
    ctx.arc(px, py, 7, 0, 2 * Math.PI);
    ctx.fill();
    if (scene.q.length >= 3) {
      // third coordinate drawn as a heading tick when it is an angle
      ctx.strokeStyle = ROBOT_COLOR;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(px, py);
      ctx.lineTo(px + 14 * Math.cos(-scene.q[2]), py + 14 * Math.sin(-scene.q[2]));
      ctx.stroke();
    }
  }
}
