// Pointer gestures over the world: place, drag, delete.

import { Scene, Shape } from "./types.js";

export function shapeContains(shape: Shape, x: number, y: number): boolean {
  if (shape.type === "disc") {
    const dx = x - shape.center[0];
    const dy = y - shape.center[1];
    return dx * dx + dy * dy <= shape.radius * shape.radius;
  }
  return x >= shape.min[0] && x <= shape.max[0] && y >= shape.min[1] && y <= shape.max[1];
}

/** Topmost obstacle under a world point, newest first. */
export function hitObstacle(scene: Scene, x: number, y: number): string | null {
  for (let k = scene.obstacles.length - 1; k >= 0; k--) {
    if (shapeContains(scene.obstacles[k].shape, x, y)) return scene.obstacles[k].id;
  }
  return null;
}

let counter = 0;

export function freshObstacleId(): string {
  counter += 1;
  return `ui-${Date.now().toString(36)}-${counter}`;
}

export function movedShape(shape: Shape, x: number, y: number): Shape {
  if (shape.type === "disc") {
    return { type: "disc", center: [x, y], radius: shape.radius };
  }
  const hw = (shape.max[0] - shape.min[0]) / 2;
  const hh = (shape.max[1] - shape.min[1]) / 2;
  return { type: "box", min: [x - hw, y - hh], max: [x + hw, y + hh] };
}
