import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseArgs } from "../src/cli.js";
import { buildPlacement } from "../src/placement.js";

const fixtures = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

describe("argument parsing", () => {
  it("requires input and figure", () => {
    expect(() => parseArgs([])).toThrow(/required/);
    expect(() => parseArgs(["--input", "x.csv"])).toThrow(/required/);
  });

  it("rejects unknown figures and metrics", () => {
    expect(() => parseArgs(["--input", "x", "--figure", "pie"])).toThrow(/unknown figure/);
    expect(() =>
      parseArgs(["--input", "x", "--figure", "heatmap", "--metric", "power"]),
    ).toThrow(/unknown metric/);
  });

  it("accepts the documented flag set", () => {
    const args = parseArgs([
      "--input", "sweep.csv", "--figure", "heatmap", "--out", "figs",
      "--metric", "latency", "--log", "--subset", "all",
    ]);
    expect(args).toEqual({
      input: "sweep.csv", figure: "heatmap", out: "figs",
      metric: "latency", log: true, subset: "all",
    });
  });
});

describe("placement tables", () => {
  it("reads layer-level placements from the detail JSON", () => {
    const series = buildPlacement(readFileSync(join(fixtures, "golden_detail.json"), "utf-8"));
    expect(series.workload).toBe("toy_net");
    expect(series.accelerator).toBe("toy_acc");
    const layerRows = series.rows.filter((r) => "layer" in r.entry);
    expect(new Set(layerRows.map((r) => r.entry.layer))).toEqual(new Set([1, 2, 3]));
    for (const row of layerRows) {
      expect(row.entry).toHaveProperty("W");
      expect(row.entry).toHaveProperty("I");
      expect(row.entry).toHaveProperty("O");
    }
  });

  it("rejects documents without placements", () => {
    expect(() => buildPlacement("{}")).toThrow(/no stacks/);
    expect(() => buildPlacement("not json")).toThrow(/parse/);
  });
});
