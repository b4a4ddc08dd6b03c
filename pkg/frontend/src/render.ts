// Canvas rendering: 64x64 class grids upscaled nearest-neighbor (crisp
// cells, honest about resolution) with the HUD drawn on top — speed in
// the upper center, traffic light phase in the upper right corner.

import type { Grid, LightPhase } from "./protocol.js";
import { PALETTE, type Rgb } from "./palette.js";

/** Expand a class-id grid into RGBA bytes via the fixed palette. */
export function gridToRgba(
  grid: Grid,
  palette: readonly Rgb[] = PALETTE,
): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(grid.rows * grid.cols * 4));
  for (let i = 0; i < grid.data.length; i++) {
    const rgb = palette[grid.data[i]] ?? [255, 0, 255];
    const o = i * 4;
    out[o] = rgb[0];
    out[o + 1] = rgb[1];
    out[o + 2] = rgb[2];
    out[o + 3] = 255;
  }
  return out;
}

export interface HudLayout {
  speedText: string;
  speedX: number; // centered
  speedY: number;
  lightX: number; // right-aligned circle center
  lightY: number;
  lightColor: string | null; // null: no light ahead, draw nothing
}

const LIGHT_COLORS: Record<LightPhase, string> = {
  green: "#2ecc40",
  yellow: "#ffdc00",
  red: "#ff4136",
};

export function hudLayout(
  width: number,
  speedKmh: number,
  phase: LightPhase | null,
): HudLayout {
  return {
    speedText: `${speedKmh.toFixed(0)} km/h`,
    speedX: width / 2,
    speedY: 24,
    lightX: width - 20,
    lightY: 20,
    lightColor: phase === null ? null : LIGHT_COLORS[phase],
  };
}

export class GridRenderer {
  private readonly ctx: CanvasRenderingContext2D;
  private readonly cell: HTMLCanvasElement;
  private readonly cellCtx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
    this.ctx.imageSmoothingEnabled = false;
    this.cell = document.createElement("canvas");
    const cellCtx = this.cell.getContext("2d");
    if (!cellCtx) throw new Error("2d canvas context unavailable");
    this.cellCtx = cellCtx;
  }

  draw(grid: Grid, speedKmh: number, phase: LightPhase | null): void {
    if (this.cell.width !== grid.cols || this.cell.height !== grid.rows) {
      this.cell.width = grid.cols;
      this.cell.height = grid.rows;
    }
    const img = new ImageData(gridToRgba(grid), grid.cols, grid.rows);
    this.cellCtx.putImageData(img, 0, 0);
    this.ctx.imageSmoothingEnabled = false;
    this.ctx.drawImage(this.cell, 0, 0, this.canvas.width, this.canvas.height);
    this.drawHud(speedKmh, phase);
  }

  private drawHud(speedKmh: number, phase: LightPhase | null): void {
    const hud = hudLayout(this.canvas.width, speedKmh, phase);
    const ctx = this.ctx;
    ctx.save();
    ctx.font = "bold 18px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = "rgba(0, 0, 0, 0.55)";
    const w = ctx.measureText(hud.speedText).width + 16;
    ctx.fillRect(hud.speedX - w / 2, hud.speedY - 18, w, 26);
    ctx.fillStyle = "#fff";
    ctx.fillText(hud.speedText, hud.speedX, hud.speedY);
    if (hud.lightColor !== null) {
      ctx.beginPath();
      ctx.arc(hud.lightX, hud.lightY, 10, 0, Math.PI * 2);
      ctx.fillStyle = hud.lightColor;
      ctx.fill();
      ctx.lineWidth = 2;
      ctx.strokeStyle = "#111";
      ctx.stroke();
    }
    ctx.restore();
  }
}
