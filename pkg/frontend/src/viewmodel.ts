// Client-side view of the authoritative server state.
//
// The model stores only what the server sent: the newest scene wins,
// telemetry is a bounded ring, and the executed trail is the history of
// scenes observed on this connection. A resync (fresh GET /state after
// reconnect) replaces everything derived from the old connection.

import { Scene } from "./types.js";

export const STALE_AFTER_MS = 1000;
export const TELEMETRY_CAPACITY = 600;

export interface TelemetrySample {
  tick: number;
  refineMs: number | null;
  fAfter: number | null;
  noop: boolean | null;
}

export class ViewModel {
  scene: Scene | null = null;
  trail: Array<[number, number]> = [];
  telemetry: TelemetrySample[] = [];
  lastUpdateMs = -Infinity;
  connected = false;

  /** Accept a scene if it is at least as new as the current one. */
  offer(scene: Scene, nowMs: number, resync = false): boolean {
    if (resync) {
      this.trail = [];
      this.telemetry = [];
    } else if (this.scene && scene.tick < this.scene.tick) {
      return false;
    }
    const fresh = !this.scene || scene.tick !== this.scene.tick || resync;
    this.scene = scene;
    this.lastUpdateMs = nowMs;
    if (fresh && scene.q.length >= 2) {
      const last = this.trail[this.trail.length - 1];
      if (!last || last[0] !== scene.q[0] || last[1] !== scene.q[1]) {
        this.trail.push([scene.q[0], scene.q[1]]);
      }
    }
    if (fresh && scene.refine && scene.refine.refine_ms !== null) {
      this.telemetry.push({
        tick: scene.tick,
        refineMs: scene.refine.refine_ms,
        fAfter: scene.refine.f_after,
        noop: scene.refine.noop,
      });
      if (this.telemetry.length > TELEMETRY_CAPACITY) {
        this.telemetry.splice(0, this.telemetry.length - TELEMETRY_CAPACITY);
      }
    }
    return true;
  }

  /** True once no update arrived for a second on a live run. */
  isStale(nowMs: number): boolean {
    if (!this.scene || this.scene.terminal) return false;
    return nowMs - this.lastUpdateMs > STALE_AFTER_MS;
  }

  inWindow(index: number): boolean {
    if (!this.scene) return false;
    const [lo, hi] = this.scene.window;
    return index >= lo && index < hi;
  }
}
