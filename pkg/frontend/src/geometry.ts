/** Viewport math and layer styling for the layout polygon preview. */

import { LayoutGeometry, geometrySchema } from "./types.js";

export function parseGeometry(doc: unknown): LayoutGeometry {
  return geometrySchema.parse(doc);
}

/** Stable color per GDS layer number; unknown layers fall back by hash. */
const LAYER_PALETTE: Record<number, string> = {
  1: "#2f7ed8", // waveguide core
  2: "#c0392b", // heater metal
  10: "#8e8e8e", // routing
  99: "#b8860b", // text / markers
};

const FALLBACK_COLORS = ["#6a3d9a", "#33a02c", "#ff7f00", "#1f78b4", "#e31a1c"];

export function layerColor(layer: number): string {
  const fixed = LAYER_PALETTE[layer];
  if (fixed) return fixed;
  return FALLBACK_COLORS[Math.abs(layer) % FALLBACK_COLORS.length]!;
}

export type Point = [number, number];

/**
 * World (µm) to screen (px) mapping with pan and cursor-anchored zoom.
 * Screen y grows downward, world y upward, hence the sign flip.
 */
export class Viewport {
  scale = 1; // px per µm
  offsetX = 0; // px
  offsetY = 0; // px

  constructor(
    readonly width: number,
    readonly height: number,
    readonly minScale = 1e-3,
    readonly maxScale = 1e4,
  ) {}

  /** Center the bounding box with uniform padding, preserving aspect. */
  fit(bbox: [number, number, number, number], padding = 20): void {
    const [x0, y0, x1, y1] = bbox;
    const spanX = Math.max(x1 - x0, 1e-9);
    const spanY = Math.max(y1 - y0, 1e-9);
    this.scale = Math.min(
      (this.width - 2 * padding) / spanX,
      (this.height - 2 * padding) / spanY,
    );
    this.scale = Math.min(Math.max(this.scale, this.minScale), this.maxScale);
    const cx = (x0 + x1) / 2;
    const cy = (y0 + y1) / 2;
    this.offsetX = this.width / 2 - cx * this.scale;
    this.offsetY = this.height / 2 + cy * this.scale;
  }

  toScreen([x, y]: Point): Point {
    return [x * this.scale + this.offsetX, -y * this.scale + this.offsetY];
  }

  toWorld([sx, sy]: Point): Point {
    return [(sx - this.offsetX) / this.scale, -(sy - this.offsetY) / this.scale];
  }

  pan(dxPx: number, dyPx: number): void {
    this.offsetX += dxPx;
    this.offsetY += dyPx;
  }

  /** Zoom by `factor` keeping the world point under `anchor` fixed. */
  zoomAt(anchor: Point, factor: number): void {
    const world = this.toWorld(anchor);
    this.scale = Math.min(Math.max(this.scale * factor, this.minScale), this.maxScale);
    const [sx, sy] = this.toScreen(world);
    this.offsetX += anchor[0] - sx;
    this.offsetY += anchor[1] - sy;
  }
}
