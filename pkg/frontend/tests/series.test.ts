import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { FIXED_COLUMNS, parseSweepCsv, splitCsvLine } from "../src/csv.js";
import {
  assertEnergyReconciles,
  buildBreakdown,
  buildHeatmaps,
  buildMacCurve,
  diagonalRows,
} from "../src/series.js";

const fixtures = join(dirname(fileURLToPath(import.meta.url)), "fixtures");
const goldenText = readFileSync(join(fixtures, "golden_sweep.csv"), "utf-8");

describe("sweep CSV parsing", () => {
  it("parses the committed golden sweep", () => {
    const table = parseSweepCsv(goldenText);
    expect(table.rows).toHaveLength(27); // 3x3 grid x 3 modes
    expect(table.rows.every((r) => r.status === "ok")).toBe(true);
    expect(table.levels.at(-1)).toBe("dram");
  });

  it("rejects a header drift", () => {
    const tampered = goldenText.replace("strategy_id", "strategy");
    expect(() => parseSweepCsv(tampered)).toThrow(/header mismatch/);
  });

  it("rejects unknown breakdown columns", () => {
    const tampered = goldenText.replace("dram|W|layer|elements", "dram|W|layer|stuff");
    expect(() => parseSweepCsv(tampered)).toThrow(/unrecognized/);
  });

  it("splits quoted fields", () => {
    expect(splitCsvLine('a,"b,c",d')).toEqual(["a", "b,c", "d"]);
    expect(splitCsvLine('x,"say ""hi""",y')).toEqual(["x", 'say "hi"', "y"]);
  });

  it("pins the fixed column prefix", () => {
    expect(goldenText.split("\n")[0].startsWith(FIXED_COLUMNS.join(","))).toBe(true);
  });
});

describe("heatmaps", () => {
  it("builds one full matrix per mode with a shared scale", () => {
    const table = parseSweepCsv(goldenText);
    const hm = buildHeatmaps(table, "energy");
    expect(hm.modes).toHaveLength(3);
    expect(hm.txs).toEqual([1, 8, 48]);
    expect(hm.tys).toEqual([1, 6, 24]);
    for (const m of hm.modes) {
      expect(m.cells.flat().every((v) => v !== null)).toBe(true);
    }
    const values = hm.modes.flatMap((m) => m.cells.flat() as number[]);
    expect(hm.scale.min).toBe(Math.min(...values));
    expect(hm.scale.max).toBe(Math.max(...values));
    expect(hm.warnings).toEqual([]);
  });

  it("keeps the full-map cell identical across modes", () => {
    const table = parseSweepCsv(goldenText);
    for (const metric of ["energy", "latency"] as const) {
      const hm = buildHeatmaps(table, metric);
      const corner = hm.modes.map((m) => m.cells.at(-1)!.at(-1));
      expect(corner[0]).toBe(corner[1]);
      expect(corner[1]).toBe(corner[2]);
    }
  });

  it("marks missing cells and warns instead of interpolating", () => {
    const lines = goldenText.trim().split("\n");
    const pruned = lines.filter((l) => !l.includes("fully-cached-tx8-ty6")).join("\n") + "\n";
    const hm = buildHeatmaps(parseSweepCsv(pruned), "energy");
    const fc = hm.modes.find((m) => m.mode === 2)!;
    expect(fc.cells[1][1]).toBeNull();
    expect(hm.warnings.some((w) => w.includes("(8,6)"))).toBe(true);
  });

  it("rejects a ragged grid", () => {
    const lines = goldenText.trim().split("\n");
    const row = lines[1].replace(",1,1,0,", ",7,1,0,"); // tx=7 is off-grid
    const ragged = [lines[0], row, ...lines.slice(2)].join("\n") + "\n";
    expect(() => buildHeatmaps(parseSweepCsv(ragged), "energy")).toThrow(/ragged/);
  });
});

describe("breakdown", () => {
  it("bars reconcile exactly with the CSV element columns", () => {
    const table = parseSweepCsv(goldenText);
    const series = buildBreakdown(table, "all");
    expect(series.bars).toHaveLength(27);
    for (const bar of series.bars) {
      const sum = bar.perLevel.reduce(
        (acc, l) => acc + l.layerActivation + l.layerWeight + l.copy,
        0,
      );
      expect(sum).toBe(bar.totalElements);
    }
  });

  it("selects the diagonal subset", () => {
    const table = parseSweepCsv(goldenText);
    const diag = diagonalRows(table);
    expect(new Set(diag.map((r) => `${r.tx}x${r.ty}`))).toEqual(
      new Set(["1x1", "8x6", "48x24"]),
    );
    expect(buildBreakdown(table, "diagonal").bars).toHaveLength(9);
  });

  it("aborts on a tampered element count", () => {
    const lines = goldenText.trim().split("\n");
    const header = splitCsvLine(lines[0]);
    const col = header.indexOf("dram|I|copy|elements");
    const rec = splitCsvLine(lines[1]);
    rec[col] = String(Number(rec[col]) + 1);
    const tampered = [lines[0], rec.join(","), ...lines.slice(2)].join("\n") + "\n";
    expect(() => buildBreakdown(parseSweepCsv(tampered), "all")).toThrow(/mismatch/);
  });

  it("aborts when energy columns stop reconciling", () => {
    const lines = goldenText.trim().split("\n");
    const header = splitCsvLine(lines[0]);
    const col = header.indexOf("energy_mac_pJ");
    const rec = splitCsvLine(lines[1]);
    rec[col] = String(Number(rec[col]) + 1);
    const tampered = [lines[0], rec.join(","), ...lines.slice(2)].join("\n") + "\n";
    expect(() => assertEnergyReconciles(parseSweepCsv(tampered))).toThrow(/energy mismatch/);
    expect(() => assertEnergyReconciles(parseSweepCsv(goldenText))).not.toThrow();
  });
});

describe("MAC curve", () => {
  it("fully-cached stays flat while recompute modes dominate it", () => {
    const table = parseSweepCsv(goldenText);
    const curve = buildMacCurve(table);
    expect(curve.labels).toEqual(["1x1", "8x6", "48x24"]);
    const byMode = new Map(curve.modes.map((m) => [m.mode, m.macs]));
    const fc = byMode.get(2)!;
    expect(new Set(fc).size).toBe(1); // constant across tile sizes
    const fr = byMode.get(0)!;
    const hc = byMode.get(1)!;
    for (let i = 0; i < fc.length; i++) {
      expect(fr[i]).toBeGreaterThanOrEqual(hc[i]);
      expect(hc[i]).toBeGreaterThanOrEqual(fc[i]);
    }
  });

  it("degenerates cleanly for a single point", () => {
    const lines = goldenText.trim().split("\n");
    const single = [lines[0], ...lines.slice(1).filter((l) => l.includes("-tx48-ty24"))].join("\n") + "\n";
    const curve = buildMacCurve(parseSweepCsv(single));
    expect(curve.labels).toEqual(["48x24"]);
    expect(curve.modes.every((m) => m.macs.length === 1)).toBe(true);
  });
});

describe("degenerate inputs", () => {
  it("renders a single-row table as a single bar group", () => {
    const lines = goldenText.trim().split("\n");
    const one = [lines[0], lines[1]].join("\n") + "\n";
    const series = buildBreakdown(parseSweepCsv(one), "all");
    expect(series.bars).toHaveLength(1);
  });
});
