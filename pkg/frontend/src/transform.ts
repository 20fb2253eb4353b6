/**
 * World <-> screen coordinate mapping. World is meters, y up; screen is
 * canvas pixels, y down. Pure functions so the round-trip property is
 * unit-testable without a DOM.
 */

export interface Viewport {
  scale: number; // pixels per meter
  worldX: number; // world coords of the canvas left edge
  worldY: number; // world coords of the canvas *bottom* edge
  canvasHeight: number;
}

export function fitViewport(
  worldWidth: number,
  worldHeight: number,
  worldOriginX: number,
  worldOriginY: number,
  canvasWidth: number,
  canvasHeight: number,
  marginPx = 12
): Viewport {
  const scale = Math.min(
    (canvasWidth - 2 * marginPx) / worldWidth,
    (canvasHeight - 2 * marginPx) / worldHeight
  );
  const spareX = canvasWidth - worldWidth * scale;
  const spareY = canvasHeight - worldHeight * scale;
  return {
    scale,
    worldX: worldOriginX - spareX / (2 * scale),
    worldY: worldOriginY - spareY / (2 * scale),
    canvasHeight,
  };
}

export function worldToScreen(v: Viewport, x: number, y: number): [number, number] {
  return [(x - v.worldX) * v.scale, v.canvasHeight - (y - v.worldY) * v.scale];
}

export function screenToWorld(v: Viewport, px: number, py: number): [number, number] {
  return [px / v.scale + v.worldX, (v.canvasHeight - py) / v.scale + v.worldY];
}
