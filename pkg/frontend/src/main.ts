/** Dashboard wiring: connection, canvas, command controls, event feed. */

import { GatewayClient } from "./client.js";
import { Hello, Snapshot } from "./protocol.js";
import { Scene, drawArmBars, drawSnapshot, renderMapBitmap, stateColor } from "./render.js";
import { fitViewport, screenToWorld } from "./transform.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const badge = document.getElementById("stateBadge") as HTMLSpanElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const feed = document.getElementById("feed") as HTMLUListElement;
const sayBox = document.getElementById("sayBox") as HTMLInputElement;
const sayBtn = document.getElementById("sayBtn") as HTMLButtonElement;
const fetchButtons = document.getElementById("fetchButtons") as HTMLDivElement;
const obstacleToggle = document.getElementById("obstacleMode") as HTMLInputElement;
const tugBtn = document.getElementById("tugBtn") as HTMLButtonElement;
const estopBtn = document.getElementById("estopBtn") as HTMLButtonElement;
const resetBtn = document.getElementById("resetBtn") as HTMLButtonElement;
const armBars = document.getElementById("armBars") as HTMLDivElement;
const tickLabel = document.getElementById("tickLabel") as HTMLSpanElement;

let scene: Scene | null = null;
let lastSnapshot: Snapshot | null = null;

function pushFeed(text: string): void {
  const li = document.createElement("li");
  li.textContent = text;
  feed.prepend(li);
  while (feed.children.length > 120) feed.removeChild(feed.lastChild!);
}

function applyHello(hello: Hello): void {
  const meta = hello.map;
  const bitmap = renderMapBitmap(meta);
  const off = document.createElement("canvas");
  off.width = meta.width;
  off.height = meta.height;
  off.getContext("2d")!.putImageData(bitmap, 0, 0);
  scene = {
    mapMeta: meta,
    mapCanvas: off,
    viewport: fitViewport(
      meta.width * meta.resolution,
      meta.height * meta.resolution,
      meta.origin[0],
      meta.origin[1],
      canvas.width,
      canvas.height
    ),
    footprint: hello.config.footprint ?? [],
  };
  fetchButtons.innerHTML = "";
  for (const objectId of hello.config.objects) {
    const btn = document.createElement("button");
    btn.textContent = `fetch ${objectId}`;
    btn.onclick = () => client.send({ type: "fetch", object: objectId });
    fetchButtons.appendChild(btn);
  }
  pushFeed(`connected: ${hello.config.name} (seed ${hello.config.seed})`);
}

function applySnapshot(snap: Snapshot): void {
  if (lastSnapshot && snap.seq <= lastSnapshot.seq) return; // idempotent by seq
  lastSnapshot = snap;
  if (scene) drawSnapshot(ctx, scene, snap);
  badge.textContent = snap.state;
  badge.style.background = stateColor(snap.state);
  badge.classList.toggle("estopped", snap.state === "EStopped");
  tickLabel.textContent = `tick ${snap.tick}`;
  drawArmBars(armBars, snap);
  for (const event of snap.events) pushFeed(`[${snap.tick}] ${event}`);
}

const url = `ws://${location.hostname || "127.0.0.1"}:${
  new URLSearchParams(location.search).get("port") ?? "8765"
}`;

const client = new GatewayClient(url, {
  onHello: applyHello,
  onSnapshot: applySnapshot,
  onEnd: (msg) => pushFeed(`run ended: ${msg.final_state}${msg.fault ? ` (${msg.fault})` : ""}`),
  onServerError: (message) => pushFeed(`rejected: ${message}`),
  onConnectionChange: (up) => {
    banner.hidden = up;
    banner.textContent = up ? "" : "connection lost - retrying";
  },
  onSequenceGap: (expected, got) => pushFeed(`snapshot gap: expected ${expected}, got ${got}`),
});
client.connect();

setInterval(() => {
  if (client.isStale(Date.now())) {
    banner.hidden = false;
    banner.textContent = "connection lost - no snapshots";
  }
}, 500);

sayBtn.onclick = () => {
  if (sayBox.value.trim()) client.send({ type: "say", text: sayBox.value.trim() });
  sayBox.value = "";
};
sayBox.onkeydown = (e) => {
  if (e.key === "Enter") sayBtn.click();
};
tugBtn.onclick = () => client.send({ type: "tug", f_z: 6 });
estopBtn.onclick = () => client.send({ type: "estop" });
resetBtn.onclick = () => client.send({ type: "reset" });

canvas.onclick = (e) => {
  if (!obstacleToggle.checked || !scene) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = screenToWorld(scene.viewport, e.clientX - rect.left, e.clientY - rect.top);
  client.send({
    type: "add_obstacle",
    x: Math.round(wx * 100) / 100,
    y: Math.round(wy * 100) / 100,
    r: 0.2,
  });
  pushFeed(`obstacle requested at (${wx.toFixed(2)}, ${wy.toFixed(2)})`);
};
