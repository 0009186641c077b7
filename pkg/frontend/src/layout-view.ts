/** Canvas renderer for the geometry.json layout export. */

import { Point, Viewport, layerColor } from "./geometry.js";
import { LayoutGeometry } from "./types.js";

/** The slice of CanvasRenderingContext2D the renderer actually touches. */
export interface Canvas2DLike {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
}

export interface RenderOptions {
  showPorts?: boolean;
}

function tracePolyline(ctx: Canvas2DLike, vp: Viewport, points: Point[]): void {
  ctx.beginPath();
  points.forEach((pt, i) => {
    const [sx, sy] = vp.toScreen(pt);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
}

export function renderLayout(
  ctx: Canvas2DLike,
  vp: Viewport,
  geometry: LayoutGeometry,
  options: RenderOptions = {},
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);

  for (const inst of geometry.instances) {
    for (const poly of inst.polygons) {
      ctx.fillStyle = layerColor(poly.layer);
      ctx.globalAlpha = 0.85;
      tracePolyline(ctx, vp, poly.points as Point[]);
      ctx.closePath();
      ctx.fill();
    }
    for (const path of inst.paths) {
      ctx.strokeStyle = layerColor(path.layer);
      ctx.lineWidth = Math.max(path.width * vp.scale, 0.5);
      ctx.globalAlpha = 0.85;
      tracePolyline(ctx, vp, path.points as Point[]);
      ctx.stroke();
    }
  }

  for (const routeSeg of geometry.routes) {
    ctx.strokeStyle = layerColor(routeSeg.layer);
    ctx.lineWidth = Math.max(routeSeg.width * vp.scale, 0.5);
    ctx.globalAlpha = 1.0;
    tracePolyline(ctx, vp, routeSeg.points as Point[]);
    ctx.stroke();
  }

  if (options.showPorts) {
    ctx.fillStyle = "#111111";
    ctx.globalAlpha = 1.0;
    for (const [x, y] of Object.values(geometry.ports)) {
      const [sx, sy] = vp.toScreen([x, y]);
      ctx.beginPath();
      ctx.arc(sx, sy, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
