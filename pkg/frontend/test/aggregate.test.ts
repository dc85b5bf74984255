import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { aggregate, mean, sampleStd, sweepKinds } from "../src/aggregate.js";
import { parseResultsCsv } from "../src/csv.js";

const rows = parseResultsCsv(
  readFileSync(join(__dirname, "fixtures", "power_sweep.csv"), "utf8"),
);

describe("statistics helpers", () => {
  it("computes the mean", () => {
    expect(mean([1, 2, 3, 4])).toBeCloseTo(2.5, 12);
  });

  it("computes the sample standard deviation", () => {
    expect(sampleStd([1, 2, 3, 4])).toBeCloseTo(1.2909944487, 9);
    expect(sampleStd([5])).toBe(0);
  });
});

describe("aggregate", () => {
  it("averages drops per (variant, sweep value)", () => {
    const curves = aggregate(rows);
    expect(curves.map((c) => c.variant)).toEqual(["rsma-scsi", "sdma-scsi"]);
    const rsma = curves[0];
    expect(rsma.points.map((p) => p.x)).toEqual([5, 10, 15, 20]);
    expect(rsma.points[0].mean).toBeCloseTo((0.0124 + 0.013) / 2, 12);
    expect(rsma.points[0].drops).toBe(2);
  });

  it("uses the drop spread for error bars with several drops", () => {
    const curves = aggregate(rows);
    const p = curves[0].points[3];
    expect(p.err).toBeCloseTo(sampleStd([0.3488, 0.3539]) / Math.sqrt(2), 12);
  });

  it("falls back to the row stderr with a single drop", () => {
    const single = rows.filter((r) => r.drop === 0);
    const curves = aggregate(single);
    expect(curves[0].points[0].err).toBeCloseTo(0.0002, 12);
  });

  it("filters variants if requested", () => {
    const curves = aggregate(rows, ["sdma-scsi"]);
    expect(curves).toHaveLength(1);
    expect(curves[0].variant).toBe("sdma-scsi");
  });

  it("lists sweep kinds", () => {
    expect(sweepKinds(rows)).toEqual(["power_dbw"]);
  });
});
