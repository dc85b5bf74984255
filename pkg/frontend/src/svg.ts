/** Deterministic SVG rendering of MMFR sweep curves with error bars. */

import type { Curve } from "./aggregate.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 160, top: 24, bottom: 48 };

const PALETTE = [
  "#1f5fa8",
  "#c03d2f",
  "#2f8d46",
  "#8450a0",
  "#b07c1f",
  "#3b3b3b",
];

const AXIS_LABELS: Record<string, string> = {
  power_dbw: "transmit power (dBW)",
  num_satellites: "number of satellites",
};

function fmt(value: number): string {
  if (!Number.isFinite(value)) throw new Error(`non-finite coordinate ${value}`);
  return value.toFixed(2);
}

function niceTicks(lo: number, hi: number, count: number): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step = 10 ** Math.floor(Math.log10(span / count));
  const candidates = [step, 2 * step, 2.5 * step, 5 * step, 10 * step];
  const chosen =
    candidates.find((c) => span / c <= count) ?? candidates[candidates.length - 1];
  const ticks: number[] = [];
  for (
    let t = Math.ceil(lo / chosen) * chosen;
    t <= hi + 1e-12 * span;
    t += chosen
  ) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

export interface RenderOptions {
  xField: string;
  title?: string;
}

export function renderSvg(curves: Curve[], options: RenderOptions): string {
  if (curves.length === 0) {
    throw new Error("nothing to plot: no curves after filtering");
  }
  const xs = curves.flatMap((c) => c.points.map((p) => p.x));
  const lows = curves.flatMap((c) => c.points.map((p) => p.mean - p.err));
  const highs = curves.flatMap((c) => c.points.map((p) => p.mean + p.err));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(0, ...lows);
  const yHi = Math.max(...highs) * 1.05 || 1;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xHi === xLo ? 0.5 : (x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) =>
    MARGIN.top + (1 - (y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(
    `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
  );
  // axes
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(
    `<g class="axes" stroke="#222" stroke-width="1">` +
      `<line x1="${x0}" y1="${y0}" x2="${x0 + plotW}" y2="${y0}"/>` +
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${MARGIN.top}"/>` +
      `</g>`,
  );
  const tickBits: string[] = [];
  for (const t of niceTicks(xLo, xHi, 6)) {
    tickBits.push(
      `<line x1="${fmt(sx(t))}" y1="${y0}" x2="${fmt(sx(t))}" y2="${y0 + 5}" stroke="#222"/>` +
        `<text x="${fmt(sx(t))}" y="${y0 + 20}" text-anchor="middle" font-size="12">${t}</text>`,
    );
  }
  for (const t of niceTicks(yLo, yHi, 6)) {
    tickBits.push(
      `<line x1="${x0 - 5}" y1="${fmt(sy(t))}" x2="${x0}" y2="${fmt(sy(t))}" stroke="#222"/>` +
        `<text x="${x0 - 8}" y="${fmt(sy(t) + 4)}" text-anchor="end" font-size="12">${Number(t.toPrecision(6))}</text>`,
    );
  }
  parts.push(`<g class="ticks" font-family="sans-serif">${tickBits.join("")}</g>`);
  const xLabel = AXIS_LABELS[options.xField] ?? options.xField;
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${HEIGHT - 10}" text-anchor="middle" ` +
      `font-family="sans-serif" font-size="14">${xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `font-family="sans-serif" font-size="14" ` +
      `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">` +
      `average MMFR (bits/s/Hz)</text>`,
  );
  if (options.title) {
    parts.push(
      `<text x="${x0 + plotW / 2}" y="16" text-anchor="middle" ` +
        `font-family="sans-serif" font-size="14">${options.title}</text>`,
    );
  }
  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    const bits: string[] = [];
    const path = curve.points
      .map((p) => `${fmt(sx(p.x))},${fmt(sy(p.mean))}`)
      .join(" ");
    bits.push(
      `<polyline class="curve" fill="none" stroke="${color}" ` +
        `stroke-width="1.8" points="${path}"/>`,
    );
    for (const p of curve.points) {
      const cx = fmt(sx(p.x));
      bits.push(
        `<line class="errbar" x1="${cx}" y1="${fmt(sy(p.mean - p.err))}" ` +
          `x2="${cx}" y2="${fmt(sy(p.mean + p.err))}" stroke="${color}" stroke-width="1"/>`,
      );
      bits.push(
        `<circle class="marker" cx="${cx}" cy="${fmt(sy(p.mean))}" r="3.2" fill="${color}"/>`,
      );
    }
    const ly = MARGIN.top + 16 + 18 * i;
    bits.push(
      `<line x1="${WIDTH - MARGIN.right + 10}" y1="${ly - 4}" ` +
        `x2="${WIDTH - MARGIN.right + 34}" y2="${ly - 4}" stroke="${color}" stroke-width="1.8"/>`,
    );
    bits.push(
      `<text x="${WIDTH - MARGIN.right + 40}" y="${ly}" font-family="sans-serif" ` +
        `font-size="12">${curve.variant}</text>`,
    );
    parts.push(`<g class="series" data-variant="${curve.variant}">${bits.join("")}</g>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
