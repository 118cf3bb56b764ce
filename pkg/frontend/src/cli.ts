/**
 * Figure CLI:
 *   node dist/cli.js --input sweep.csv --figure heatmap --out dir [--metric energy|latency] [--log]
 *   node dist/cli.js --input sweep.csv --figure breakdown --out dir [--subset diagonal|all]
 *   node dist/cli.js --input sweep.csv --figure mac --out dir
 *   node dist/cli.js --input detail.json --figure placement --out dir
 *
 * Every figure writes the rendered SVG plus the exact data series as JSON, so
 * regenerated outputs can be compared byte for byte.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { parseSweepCsv } from "./csv.js";
import { buildPlacement } from "./placement.js";
import {
  assertEnergyReconciles,
  buildBreakdown,
  buildHeatmaps,
  buildMacCurve,
  type Metric,
} from "./series.js";
import { renderBreakdown, renderHeatmap, renderMacCurve, renderPlacement } from "./svg.js";

interface Args {
  input: string;
  figure: string;
  out: string;
  metric: Metric;
  log: boolean;
  subset: "diagonal" | "all";
}

export function parseArgs(argv: string[]): Args {
  const args: Args = {
    input: "",
    figure: "",
    out: "figures",
    metric: "energy",
    log: false,
    subset: "diagonal",
  };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--input") args.input = argv[++i];
    else if (a === "--figure") args.figure = argv[++i];
    else if (a === "--out") args.out = argv[++i];
    else if (a === "--metric") args.metric = argv[++i] as Metric;
    else if (a === "--log") args.log = true;
    else if (a === "--subset") args.subset = argv[++i] as "diagonal" | "all";
    else throw new Error(`unknown argument ${a}`);
  }
  if (!args.input || !args.figure) throw new Error("--input and --figure are required");
  if (!["heatmap", "breakdown", "mac", "placement"].includes(args.figure)) {
    throw new Error(`unknown figure ${args.figure}`);
  }
  if (!["energy", "latency"].includes(args.metric)) {
    throw new Error(`unknown metric ${args.metric}`);
  }
  return args;
}

function emit(outDir: string, name: string, svg: string, series: unknown): string[] {
  mkdirSync(outDir, { recursive: true });
  const svgPath = join(outDir, `${name}.svg`);
  const seriesPath = join(outDir, `${name}.series.json`);
  writeFileSync(svgPath, svg);
  writeFileSync(seriesPath, JSON.stringify(series, null, 2) + "\n");
  return [svgPath, seriesPath];
}

export function run(argv: string[]): string[] {
  const args = parseArgs(argv);
  const text = readFileSync(args.input, "utf-8");
  if (args.figure === "placement") {
    const series = buildPlacement(text);
    return emit(args.out, "placement", renderPlacement(series), series);
  }
  const table = parseSweepCsv(text);
  assertEnergyReconciles(table);
  if (args.figure === "heatmap") {
    const series = buildHeatmaps(table, args.metric);
    for (const w of series.warnings) console.warn(`warning: ${w}`);
    return emit(args.out, `heatmap_${args.metric}`, renderHeatmap(series, args.log), series);
  }
  if (args.figure === "breakdown") {
    const series = buildBreakdown(table, args.subset);
    return emit(args.out, `breakdown_${args.subset}`, renderBreakdown(series), series);
  }
  const series = buildMacCurve(table);
  return emit(args.out, "mac_curve", renderMacCurve(series), series);
}

const isMain = process.argv[1] && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isMain) {
  try {
    for (const path of run(process.argv.slice(2))) console.log(path);
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    process.exit(1);
  }
}
