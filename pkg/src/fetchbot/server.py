"""Live operator gateway: the scenario loop served over a WebSocket.

Every tick publishes a snapshot to all connected viewers; inbound JSON
commands from any connection are funneled into the runner's serialized
queue (taking effect at the next tick) and recorded in the command log so
a served session can be replayed headless.
"""

from __future__ import annotations

import asyncio
import base64
import json

import numpy as np

from .runner import ScenarioRunner

COMMAND_TYPES = {"fetch", "say", "add_obstacle", "tug", "estop", "reset", "set_pose"}

_REQUIRED_FIELDS = {
    "fetch": ("object",),
    "say": ("text",),
    "add_obstacle": ("x", "y"),
    "tug": ("f_z",),
    "estop": (),
    "reset": (),
    "set_pose": ("x", "y"),
}

PARTICLE_SAMPLE = 50


def hello_message(runner: ScenarioRunner) -> dict:
    grid = runner.static_grid
    img = np.full((grid.height, grid.width), 128, dtype=np.uint8)
    img[grid.cells > 0.0] = 0
    img[grid.cells < 0.0] = 255
    scenario = runner.scenario
    return {
        "type": "hello",
        "map": {
            "resolution": grid.resolution,
            "origin": [grid.origin.x, grid.origin.y, grid.origin.theta],
            "width": grid.width,
            "height": grid.height,
            "data": base64.b64encode(img.tobytes()).decode("ascii"),
        },
        "config": {
            "name": scenario.name,
            "seed": runner.seed,
            "objects": [obj["id"] for obj in scenario.objects],
            "footprint": [[float(x), float(y)] for x, y in scenario.robot.footprint.vertices],
            "tick_dt": 0.05,
        },
    }


def snapshot_message(runner: ScenarioRunner, events: list[str] | None = None) -> dict:
    pose = runner.world.base_pose
    est = runner.estimate
    pf = runner.pf
    stride = max(1, pf.n // PARTICLE_SAMPLE)
    sample = pf.poses[::stride, :2]
    band = runner.band
    obstacles = [
        {"x": o.x, "y": o.y, "r": o.radius, "vx": o.vx, "vy": o.vy}
        for o in runner.world.active_obstacles()
    ]
    last = json.loads(runner.trace.records[-1]) if runner.trace.records else {}
    return {
        "type": "snapshot",
        "tick": runner.world.tick_index,
        "state": runner.machine.state.value,
        "pose": {"x": pose.x, "y": pose.y, "theta": pose.theta},
        "particles_summary": {
            "mean": {"x": est.x, "y": est.y, "theta": est.theta},
            "std": {
                "x": float(np.std(pf.poses[:, 0])),
                "y": float(np.std(pf.poses[:, 1])),
            },
            "sample": [[float(x), float(y)] for x, y in sample],
        },
        "trajectory": [[float(x), float(y)] for x, y in band.poses[:, :2]] if band is not None else [],
        "obstacles": obstacles,
        "arm_q": {
            "left": [float(q) for q in runner.world.arms["left"].q],
            "right": [float(q) for q in runner.world.arms["right"].q],
        },
        "events": events if events is not None else list(last.get("events", [])),
    }


def validate_command(msg: dict) -> str | None:
    """Returns an error string for malformed commands, else None."""
    if not isinstance(msg, dict) or "type" not in msg:
        return "message must be an object with a 'type' field"
    kind = msg["type"]
    if kind not in COMMAND_TYPES:
        return f"unknown command type {kind!r}"
    for fieldname in _REQUIRED_FIELDS[kind]:
        if fieldname not in msg:
            return f"{kind} requires field {fieldname!r}"
    return None


class GatewayServer:
    def __init__(self, runner: ScenarioRunner, host: str = "127.0.0.1", port: int = 8765,
                 tick_rate: float = 20.0):
        self.runner = runner
        self.host = host
        self.port = port
        self.tick_rate = tick_rate
        self._clients: dict = {}  # connection -> per-connection sequence counter
        self._stop = asyncio.Event()

    async def _handler(self, websocket):
        self._clients[websocket] = 0
        try:
            await websocket.send(json.dumps(hello_message(self.runner)))
            async for raw in websocket:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send(json.dumps({"type": "error", "message": "invalid JSON"}))
                    continue
                problem = validate_command(msg)
                if problem is not None:
                    await websocket.send(json.dumps({"type": "error", "message": problem}))
                    continue
                self.runner.submit_command(msg)
                await websocket.send(json.dumps({"type": "ack", "command": msg["type"]}))
        finally:
            self._clients.pop(websocket, None)

    async def _broadcast(self, message: dict) -> None:
        numbered = message.get("type") == "snapshot"
        dead = []
        for ws, seq in list(self._clients.items()):
            if numbered:
                self._clients[ws] = seq + 1
                message["seq"] = self._clients[ws]
            try:
                await ws.send(json.dumps(message))
            except Exception:
                dead.append(ws)
        for ws in dead:
            self._clients.pop(ws, None)

    async def _tick_loop(self) -> None:
        interval = 1.0 / self.tick_rate if self.tick_rate > 0 else 0.0
        loop = asyncio.get_running_loop()
        while not self._stop.is_set():
            started = loop.time()
            alive = self.runner.step()
            await self._broadcast(snapshot_message(self.runner))
            if not alive:
                result = self.runner.finished
                await self._broadcast({
                    "type": "end",
                    "completed": result.completed,
                    "final_state": result.final_state,
                    "fault": result.fault,
                })
                break
            delay = interval - (loop.time() - started)
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                await asyncio.sleep(0)

    async def serve(self) -> None:
        from websockets.asyncio.server import serve

        async with serve(self._handler, self.host, self.port):
            await self._tick_loop()

    def stop(self) -> None:
        self._stop.set()


def run_server(runner: ScenarioRunner, host: str = "127.0.0.1", port: int = 8765,
               tick_rate: float = 20.0) -> None:
    server = GatewayServer(runner, host, port, tick_rate)
    asyncio.run(server.serve())
