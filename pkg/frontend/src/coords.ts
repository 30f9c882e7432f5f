// World (meters, y up) to canvas (pixels, y down) mapping.

export interface Viewport {
  scale: number; // px per meter
  cx: number; // world point at the canvas center
  cy: number;
  width: number;
  height: number;
}

export function worldToCanvas(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.width / 2 + (x - vp.cx) * vp.scale, vp.height / 2 - (y - vp.cy) * vp.scale];
}

export function canvasToWorld(vp: Viewport, px: number, py: number): [number, number] {
  return [vp.cx + (px - vp.width / 2) / vp.scale, vp.cy - (py - vp.height / 2) / vp.scale];
}

/**
 * Viewport that shows every given world point with a margin, preserving
 * aspect ratio. Degenerate inputs fall back to a 1 m half-extent box so
 * an empty world still renders a sane grid.
 */
export function fitScene(
  points: Array<[number, number]>,
  width: number,
  height: number,
  marginPx = 40,
): Viewport {
  let xlo = Infinity;
  let xhi = -Infinity;
  let ylo = Infinity;
  let yhi = -Infinity;
  for (const [x, y] of points) {
    xlo = Math.min(xlo, x);
    xhi = Math.max(xhi, x);
    ylo = Math.min(ylo, y);
    yhi = Math.max(yhi, y);
  }
  if (!isFinite(xlo)) {
    xlo = -1;
    xhi = 1;
    ylo = -1;
    yhi = 1;
  }
  const spanX = Math.max(xhi - xlo, 0.5);
  const spanY = Math.max(yhi - ylo, 0.5);
  const usableW = Math.max(width - 2 * marginPx, 1);
  const usableH = Math.max(height - 2 * marginPx, 1);
  const scale = Math.min(usableW / spanX, usableH / spanY);
  return {
    scale,
    cx: (xlo + xhi) / 2,
    cy: (ylo + yhi) / 2,
    width,
    height,
  };
}
