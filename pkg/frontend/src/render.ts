/** Canvas drawing for the dashboard: map bitmap, costmap-ish wall shading,
 * robot footprint, particle cloud, planned band, obstacles. */

import { MapMeta, Snapshot, decodeMapData } from "./protocol.js";
import { Viewport, worldToScreen } from "./transform.js";

const STATE_COLORS: Record<string, string> = {
  Idle: "#4a5568",
  Identifying: "#805ad5",
  Listening: "#3182ce",
  NavigatingToWarehouse: "#2b6cb0",
  LocatingObject: "#0987a0",
  Grasping: "#b7791f",
  NavigatingToUser: "#2b6cb0",
  Handover: "#2f855a",
  Recovery: "#c05621",
  EStopped: "#c53030",
};

export function stateColor(state: string): string {
  return STATE_COLORS[state] ?? "#4a5568";
}

export function renderMapBitmap(meta: MapMeta): ImageData {
  const cells = decodeMapData(meta);
  const img = new ImageData(meta.width, meta.height);
  for (let row = 0; row < meta.height; row++) {
    // grid row 0 is the bottom; image row 0 is the top
    const srcRow = meta.height - 1 - row;
    for (let col = 0; col < meta.width; col++) {
      const value = cells[srcRow * meta.width + col];
      const i = 4 * (row * meta.width + col);
      if (value === 0) {
        img.data[i] = 40; img.data[i + 1] = 40; img.data[i + 2] = 48;
      } else if (value === 255) {
        img.data[i] = 245; img.data[i + 1] = 245; img.data[i + 2] = 248;
      } else {
        img.data[i] = 200; img.data[i + 1] = 200; img.data[i + 2] = 205;
      }
      img.data[i + 3] = 255;
    }
  }
  return img;
}

export interface Scene {
  viewport: Viewport;
  mapCanvas: HTMLCanvasElement | OffscreenCanvas;
  mapMeta: MapMeta;
  footprint: [number, number][];
}

export function drawSnapshot(ctx: CanvasRenderingContext2D, scene: Scene, snap: Snapshot): void {
  const { viewport, mapMeta } = scene;
  const canvas = ctx.canvas;
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  const [left, bottom] = worldToScreen(viewport, mapMeta.origin[0], mapMeta.origin[1]);
  const wPx = mapMeta.width * mapMeta.resolution * viewport.scale;
  const hPx = mapMeta.height * mapMeta.resolution * viewport.scale;
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(scene.mapCanvas as CanvasImageSource, left, bottom - hPx, wPx, hPx);

  // particle cloud
  ctx.fillStyle = "rgba(49, 130, 206, 0.45)";
  for (const [x, y] of snap.particles_summary.sample) {
    const [px, py] = worldToScreen(viewport, x, y);
    ctx.fillRect(px - 1, py - 1, 2, 2);
  }

  // planned band
  if (snap.trajectory.length > 1) {
    ctx.strokeStyle = "#2f855a";
    ctx.lineWidth = 2;
    ctx.beginPath();
    snap.trajectory.forEach(([x, y], i) => {
      const [px, py] = worldToScreen(viewport, x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }

  // obstacles
  for (const obs of snap.obstacles) {
    const [px, py] = worldToScreen(viewport, obs.x, obs.y);
    ctx.beginPath();
    ctx.arc(px, py, obs.r * viewport.scale, 0, 2 * Math.PI);
    ctx.fillStyle = "rgba(197, 48, 48, 0.35)";
    ctx.fill();
    ctx.strokeStyle = "#c53030";
    ctx.stroke();
  }

  // robot footprint at the true pose, heading tick at the nose
  const pose = snap.pose;
  ctx.beginPath();
  scene.footprint.forEach(([vx, vy], i) => {
    const wx = pose.x + Math.cos(pose.theta) * vx - Math.sin(pose.theta) * vy;
    const wy = pose.y + Math.sin(pose.theta) * vx + Math.cos(pose.theta) * vy;
    const [px, py] = worldToScreen(viewport, wx, wy);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
  ctx.fillStyle = "rgba(43, 108, 176, 0.55)";
  ctx.fill();
  ctx.strokeStyle = "#1a365d";
  ctx.stroke();
  const [nx, ny] = worldToScreen(
    viewport,
    pose.x + Math.cos(pose.theta) * 0.35,
    pose.y + Math.sin(pose.theta) * 0.35
  );
  const [cx, cy] = worldToScreen(viewport, pose.x, pose.y);
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(nx, ny);
  ctx.strokeStyle = "#1a365d";
  ctx.stroke();

  // estimate cross
  const est = snap.particles_summary.mean;
  const [ex, ey] = worldToScreen(viewport, est.x, est.y);
  ctx.strokeStyle = "#d69e2e";
  ctx.beginPath();
  ctx.moveTo(ex - 5, ey);
  ctx.lineTo(ex + 5, ey);
  ctx.moveTo(ex, ey - 5);
  ctx.lineTo(ex, ey + 5);
  ctx.stroke();
}

export function drawArmBars(container: HTMLElement, snap: Snapshot): void {
  const rows: string[] = [];
  for (const side of ["left", "right"] as const) {
    const cells = snap.arm_q[side]
      .map((q) => {
        const pct = Math.min(100, Math.abs(q) / 2.6 * 100);
        const dir = q >= 0 ? "pos" : "neg";
        return `<span class="bar ${dir}" style="height:${pct}%"></span>`;
      })
      .join("");
    rows.push(`<div class="arm"><label>${side}</label><div class="bars">${cells}</div></div>`);
  }
  container.innerHTML = rows.join("");
}
