"""HTTP and WebSocket front for a running simulation.

All mutation flows through the simulator's command queue and lands at
tick boundaries; handlers never touch the world directly. Reads return
locked snapshots, so clients see a consistent state.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import threading

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .graph import GraphWeights
from .scenario import _shape_from_dict
from .errors import ScenarioError
from .sim import SimService

WS_PERIOD = 1.0 / 30.0  # snapshot cadence ceiling

_WEIGHT_FIELDS = {f.name for f in dataclasses.fields(GraphWeights)}


def _parse_shape(body: dict):
    if "shape" not in body:
        return None
    return _shape_from_dict(body["shape"], "<request>", "shape")


def build_app(sim: SimService) -> FastAPI:
    app = FastAPI(title="locoplan sim service")
    app.state.sim = sim
    # the browser UI is served from a separate static origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/state")
    def get_state():
        return sim.state_dict()

    @app.get("/graph")
    def get_graph():
        g = sim.refiner.last_graph
        if g is None:
            return {"available": False}
        return {"available": True, **g.to_debug_dict()}

    @app.get("/telemetry")
    def get_telemetry(after: int = -1, limit: int = 500):
        with sim.lock:
            ticks = [
                r
                for r in sim.records
                if r.get("record") == "tick" and r["tick"] > after
            ]
        return ticks[-limit:]

    @app.get("/runlog")
    def get_runlog():
        with sim.lock:
            lines = [json.dumps(r, separators=(",", ":")) for r in sim.records]
        return PlainTextResponse("\n".join(lines) + "\n")

    @app.post("/obstacle")
    async def post_obstacle(body: dict):
        action = body.get("action")
        if action not in ("add", "move", "remove"):
            return JSONResponse({"error": f"unknown action {action!r}"}, status_code=400)
        oid = body.get("id")
        if not oid:
            return JSONResponse({"error": "missing obstacle id"}, status_code=400)
        try:
            shape = _parse_shape(body)
        except ScenarioError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if action in ("add", "move") and shape is None:
            return JSONResponse({"error": f"{action} requires a shape"}, status_code=400)
        # pre-validate against the live world; the queue application can
        # still race a concurrent edit, which lands as an event record
        with sim.lock:
            known = oid in sim.world.obstacles
        if action == "add" and known:
            return JSONResponse({"error": f"obstacle {oid!r} already exists"}, status_code=409)
        if action in ("move", "remove") and not known:
            return JSONResponse({"error": f"unknown obstacle {oid!r}"}, status_code=404)
        sim.enqueue({"action": action, "id": oid, "shape": shape})
        return {"ok": True, "queued": {"action": action, "id": oid}}

    @app.post("/pause")
    def post_pause():
        sim.paused = True
        return {"ok": True, "paused": True}

    @app.post("/resume")
    def post_resume():
        sim.paused = False
        return {"ok": True, "paused": False}

    @app.patch("/refiner")
    async def patch_refiner(body: dict):
        weights = body.get("weights", {})
        unknown = set(weights) - _WEIGHT_FIELDS
        if unknown:
            return JSONResponse(
                {"error": f"unknown weight fields {sorted(unknown)}"}, status_code=400
            )
        bad = {k: v for k, v in weights.items() if not isinstance(v, (int, float)) or v < 0}
        if bad:
            return JSONResponse(
                {"error": f"weights must be non-negative numbers: {bad}"}, status_code=400
            )
        sim.enqueue({"kind": "refiner", "weights": {k: float(v) for k, v in weights.items()}})
        return {"ok": True, "queued": {"weights": weights}}

    @app.websocket("/ws")
    async def ws_feed(ws: WebSocket):
        await ws.accept()
        last_tick = -1
        try:
            while True:
                snap = ws_snapshot(sim)
                if snap["tick"] != last_tick:
                    await ws.send_json(snap)
                    last_tick = snap["tick"]
                if snap["terminal"]:
                    break
                await asyncio.sleep(WS_PERIOD)
        except WebSocketDisconnect:
            return
        try:
            await ws.close()
        except RuntimeError:
            pass

    return app


def ws_snapshot(sim: SimService) -> dict:
    state = sim.state_dict()
    refine = sim.last_tick_record
    return {
        "tick": state["tick"],
        "time": state["time"],
        "q": state["q"],
        "i": state["i"],
        "window": state["window"],
        "configs": state["configs"],
        "obstacles": state["obstacles"],
        "surfaces": state["surfaces"],
        "paused": state["paused"],
        "terminal": state["terminal"],
        "refine": {
            k: refine.get(k)
            for k in ("noop", "f_before", "f_after", "termination", "refine_ms", "revision")
        },
    }


def serve(sim: SimService, host: str = "127.0.0.1", port: int = 8080, realtime: bool = True):
    """Run the tick loop in a background thread and block on uvicorn."""
    import uvicorn

    stop = threading.Event()
    loop = threading.Thread(target=sim.run, kwargs={"realtime": realtime, "stop": stop}, daemon=True)
    loop.start()
    app = build_app(sim)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        stop.set()
        loop.join(timeout=2.0)
