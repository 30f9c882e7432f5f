// HTTP commands and the snapshot socket.
//
// Mutations never touch local state: a command is acknowledged by the
// server and shows up in the next scene. The socket keeps only the
// latest message; the render loop samples at its own pace.

import { ApiResult, ObstacleCommand, RefinerWeights, Scene, toScene } from "./types.js";

type FetchLike = (url: string, init?: any) => Promise<{
  status: number;
  ok: boolean;
  json(): Promise<any>;
}>;

export class Api {
  constructor(
    readonly base: string,
    private fetchFn: FetchLike = (...a) => (globalThis.fetch as any)(...a),
  ) {}

  private async request<T>(path: string, init?: any): Promise<ApiResult<T>> {
    try {
      const res = await this.fetchFn(this.base + path, init);
      let body: any = null;
      try {
        body = await res.json();
      } catch {
        body = null;
      }
      return {
        ok: res.status >= 200 && res.status < 300,
        status: res.status,
        body,
        error: body && body.error ? String(body.error) : res.ok ? null : `http ${res.status}`,
      };
    } catch (err: any) {
      return { ok: false, status: 0, body: null, error: String(err?.message ?? err) };
    }
  }

  async state(): Promise<ApiResult<any>> {
    return this.request("/state");
  }

  async scene(): Promise<Scene | null> {
    const res = await this.state();
    return res.ok && res.body ? toScene(res.body) : null;
  }

  async postObstacle(cmd: ObstacleCommand): Promise<ApiResult> {
    return this.request("/obstacle", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(cmd),
    });
  }

  async patchRefiner(weights: RefinerWeights): Promise<ApiResult> {
    return this.request("/refiner", {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ weights }),
    });
  }

  async pause(): Promise<ApiResult> {
    return this.request("/pause", { method: "POST" });
  }

  async resume(): Promise<ApiResult> {
    return this.request("/resume", { method: "POST" });
  }
}

export interface SocketHooks {
  /** Latest scene from the wire; resync means it came from GET /state. */
  onScene(scene: Scene, resync: boolean): void;
  onStatus?(connected: boolean): void;
}

interface WebSocketLike {
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
  close(): void;
}

export class SnapshotSocket {
  private ws: WebSocketLike | null = null;
  private closed = false;
  private retryMs = 250;
  private timer: any = null;

  constructor(
    private url: string,
    private api: Api,
    private hooks: SocketHooks,
    private makeSocket: (url: string) => WebSocketLike = (u) =>
      new (globalThis as any).WebSocket(u),
    private schedule: (fn: () => void, ms: number) => any = (fn, ms) => setTimeout(fn, ms),
  ) {}

  start() {
    this.closed = false;
    this.connect();
  }

  stop() {
    this.closed = true;
    if (this.timer) clearTimeout(this.timer);
    this.ws?.close();
  }

  private connect() {
    if (this.closed) return;
    let ws: WebSocketLike;
    try {
      ws = this.makeSocket(this.url);
    } catch {
      this.retry();
      return;
    }
    this.ws = ws;
    ws.onopen = async () => {
      this.retryMs = 250;
      this.hooks.onStatus?.(true);
      // a fresh connection starts from the authoritative state, so the
      // rendered scene equals GET /state even if snapshots lag
      const scene = await this.api.scene();
      if (scene) this.hooks.onScene(scene, true);
    };
    ws.onmessage = (ev) => {
      this.hooks.onScene(toScene(JSON.parse(ev.data)), false);
    };
    ws.onclose = () => {
      this.hooks.onStatus?.(false);
      this.retry();
    };
    ws.onerror = () => {
      // close follows; nothing to do here
    };
  }

  private retry() {
    if (this.closed) return;
    this.timer = this.schedule(() => this.connect(), this.retryMs);
    this.retryMs = Math.min(this.retryMs * 2, 4000);
  }
}

export function wsUrl(apiBase: string): string {
  return apiBase.replace(/^http/, "ws") + "/ws";
}
