// Minimal dependency-free line chart on a canvas.

import type { SampleDoc } from "./types";

export function drawLineChart(canvas: HTMLCanvasElement, samples: SampleDoc[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  if (samples.length === 0) return;

  const times = samples.map((s) => Date.parse(s.t));
  const values = samples.map((s) => s.v);
  const tMin = Math.min(...times);
  const tMax = Math.max(...times);
  const vMin = Math.min(...values, 0);
  const vMax = Math.max(...values, 1);
  const pad = 8;
  const x = (t: number) =>
    tMax === tMin ? w / 2 : pad + ((t - tMin) / (tMax - tMin)) * (w - 2 * pad);
  const y = (v: number) =>
    vMax === vMin ? h / 2 : h - pad - ((v - vMin) / (vMax - vMin)) * (h - 2 * pad);

  ctx.strokeStyle = "#0a6cbd";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  samples.forEach((s, i) => {
    const px = x(Date.parse(s.t));
    const py = y(s.v);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}
