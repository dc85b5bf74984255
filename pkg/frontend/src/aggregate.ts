/** Drop-averaging of result rows into per-variant curves. */

import type { ResultRow } from "./csv.js";

export interface CurvePoint {
  x: number;
  mean: number;
  /** half-width of the error bar */
  err: number;
  drops: number;
}

export interface Curve {
  variant: string;
  points: CurvePoint[];
}

export function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function sampleStd(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  const ss = values.reduce((a, b) => a + (b - m) * (b - m), 0);
  return Math.sqrt(ss / (values.length - 1));
}

/**
 * Average the Monte Carlo MMFR over drops per (variant, sweep value).
 *
 * The error bar is the standard error of the drop mean when several drops
 * exist (scenario variability dominates), otherwise the single row's Monte
 * Carlo standard error.
 */
export function aggregate(rows: ResultRow[], variants?: string[]): Curve[] {
  const wanted = variants && variants.length > 0 ? new Set(variants) : null;
  const groups = new Map<string, Map<number, ResultRow[]>>();
  for (const row of rows) {
    if (wanted && !wanted.has(row.variant)) continue;
    let byValue = groups.get(row.variant);
    if (!byValue) {
      byValue = new Map();
      groups.set(row.variant, byValue);
    }
    const bucket = byValue.get(row.sweepValue) ?? [];
    bucket.push(row);
    byValue.set(row.sweepValue, bucket);
  }
  const curves: Curve[] = [];
  for (const variant of [...groups.keys()].sort()) {
    const byValue = groups.get(variant)!;
    const points: CurvePoint[] = [];
    for (const x of [...byValue.keys()].sort((a, b) => a - b)) {
      const bucket = byValue.get(x)!;
      const values = bucket.map((r) => r.mmfrTrue);
      const err =
        bucket.length > 1
          ? sampleStd(values) / Math.sqrt(bucket.length)
          : bucket[0].mmfrStderr;
      points.push({ x, mean: mean(values), err, drops: bucket.length });
    }
    curves.push({ variant, points });
  }
  return curves;
}

export function sweepKinds(rows: ResultRow[]): string[] {
  return [...new Set(rows.map((r) => r.sweep))].sort();
}
