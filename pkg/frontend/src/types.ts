// Wire types for the sim service HTTP/WebSocket API.

export interface DiscShape {
  type: "disc";
  center: [number, number];
  radius: number;
}

export interface BoxShape {
  type: "box";
  min: [number, number];
  max: [number, number];
}

export type Shape = DiscShape | BoxShape;

export interface ObstacleInfo {
  id: string;
  shape: Shape;
  created_at?: number;
}

export interface SurfaceInfo {
  id: string;
  p0: [number, number];
  p1: [number, number];
  normal: [number, number];
  mu: number;
}

export interface RefineInfo {
  noop: boolean | null;
  f_before: number | null;
  f_after: number | null;
  termination: string | null;
  refine_ms: number | null;
  revision: number | null;
}

/** Renderable subset shared by GET /state and the /ws snapshot. */
export interface Scene {
  tick: number;
  time: number;
  q: number[];
  i: number;
  window: [number, number];
  configs: number[][];
  obstacles: ObstacleInfo[];
  surfaces: SurfaceInfo[];
  paused: boolean;
  terminal: boolean;
  refine: RefineInfo | null;
}

export interface ObstacleCommand {
  action: "add" | "move" | "remove";
  id: string;
  shape?: Shape;
}

export type RefinerWeights = Partial<
  Record<
    | "tracking"
    | "joint_limit"
    | "velocity"
    | "collision"
    | "balance"
    | "margin_joint"
    | "clearance",
    number
  >
>;

export interface ApiResult<T = unknown> {
  ok: boolean;
  status: number;
  body: T | null;
  error: string | null;
}

const EMPTY_REFINE: RefineInfo = {
  noop: null,
  f_before: null,
  f_after: null,
  termination: null,
  refine_ms: null,
  revision: null,
};

/** Normalize a /state or /ws payload; both carry the same scene fields. */
export function toScene(raw: any): Scene {
  return {
    tick: raw.tick,
    time: raw.time,
    q: raw.q ?? [],
    i: raw.i ?? 0,
    window: raw.window ?? [0, 0],
    configs: raw.configs ?? [],
    obstacles: raw.obstacles ?? [],
    surfaces: raw.surfaces ?? [],
    paused: !!raw.paused,
    terminal: !!raw.terminal,
    refine: raw.refine ? { ...EMPTY_REFINE, ...raw.refine } : null,
  };
}
