/**
 * Figure data series derived from a sweep table. Every displayed number is
 * read straight from the CSV; nothing is recomputed here beyond sums that are
 * themselves asserted against the CSV's own totals.
 */

import type { SweepRow, SweepTable } from "./csv.js";

export type Metric = "energy" | "latency";

export interface HeatmapSeries {
  metric: Metric;
  txs: number[];
  tys: number[];
  /** one matrix per mode, indexed [tyIndex][txIndex]; null marks a missing cell */
  modes: { mode: number; modeName: string; cells: (number | null)[][] }[];
  /** shared color scale across the per-mode heatmaps */
  scale: { min: number; max: number };
  warnings: string[];
}

function metricOf(row: SweepRow, metric: Metric): number {
  return metric === "energy" ? row.energyTotalPJ : row.latencyCycles;
}

export function buildHeatmaps(table: SweepTable, metric: Metric): HeatmapSeries {
  const ok = table.rows.filter((r) => r.status === "ok");
  if (ok.length === 0) throw new Error("no successful rows in sweep table");
  const txs = [...new Set(ok.map((r) => r.tx))].sort((a, b) => a - b);
  const tys = [...new Set(ok.map((r) => r.ty))].sort((a, b) => a - b);
  const modes = [...new Set(ok.map((r) => r.mode))].sort((a, b) => a - b);
  const warnings: string[] = [];

  const series: HeatmapSeries["modes"] = modes.map((mode) => {
    const rows = ok.filter((r) => r.mode === mode);
    // every mode must span the same rectangular tile-size frame
    const modeTxs = [...new Set(rows.map((r) => r.tx))].sort((a, b) => a - b);
    const modeTys = [...new Set(rows.map((r) => r.ty))].sort((a, b) => a - b);
    if (modeTxs.join() !== txs.join() || modeTys.join() !== tys.join()) {
      throw new Error(
        `ragged grid: mode ${mode} covers tx {${modeTxs}} x ty {${modeTys}}, ` +
          `table frame is tx {${txs}} x ty {${tys}}`,
      );
    }
    const seen = new Set<string>();
    for (const r of rows) {
      const key = `${r.tx}x${r.ty}`;
      if (seen.has(key)) throw new Error(`ragged grid: duplicate cell ${key} for mode ${mode}`);
      seen.add(key);
    }
    const cells: (number | null)[][] = tys.map((ty) =>
      txs.map((tx) => {
        const hit = rows.find((r) => r.tx === tx && r.ty === ty);
        if (!hit) {
          warnings.push(`missing cell (${tx},${ty}) for mode ${mode}; left blank`);
          return null;
        }
        return metricOf(hit, metric);
      }),
    );
    return { mode, modeName: rows[0]?.modeName ?? String(mode), cells };
  });

  const values = series.flatMap((s) => s.cells.flat()).filter((v): v is number => v !== null);
  return {
    metric,
    txs,
    tys,
    modes: series,
    scale: { min: Math.min(...values), max: Math.max(...values) },
    warnings,
  };
}

export interface BreakdownBar {
  strategyId: string;
  tx: number;
  ty: number;
  mode: number;
  modeName: string;
  /** per level: elements split by cause */
  perLevel: { level: string; layerActivation: number; layerWeight: number; copy: number }[];
  totalElements: number;
}

export interface BreakdownSeries {
  bars: BreakdownBar[];
  levels: string[];
}

/** The diagonal of the sweep grid: tile sizes paired by rank. */
export function diagonalRows(table: SweepTable): SweepRow[] {
  const ok = table.rows.filter((r) => r.status === "ok");
  const txs = [...new Set(ok.map((r) => r.tx))].sort((a, b) => a - b);
  const tys = [...new Set(ok.map((r) => r.ty))].sort((a, b) => a - b);
  const n = Math.min(txs.length, tys.length);
  const diag = new Set<string>();
  for (let i = 0; i < n; i++) diag.add(`${txs[i]}x${tys[i]}`);
  return ok.filter((r) => diag.has(`${r.tx}x${r.ty}`));
}

/**
 * Stacked access bars per memory level and cause. The per-bar sums must
 * reconcile exactly with the row's element columns; a mismatch aborts.
 */
export function buildBreakdown(table: SweepTable, subset: "diagonal" | "all" = "diagonal"): BreakdownSeries {
  const rows = subset === "diagonal" ? diagonalRows(table) : table.rows.filter((r) => r.status === "ok");
  if (rows.length === 0) throw new Error("no rows selected for the breakdown figure");
  const bars: BreakdownBar[] = rows.map((row) => {
    const perLevel = table.levels.map((level) => {
      const pick = (operands: string[], cause: string) =>
        operands.reduce((acc, op) => acc + (row.elements.get(`${level}|${op}|${cause}`) ?? 0), 0);
      return {
        level,
        layerActivation: pick(["I", "O"], "layer"),
        layerWeight: pick(["W"], "layer"),
        copy: pick(["W", "I", "O"], "copy"),
      };
    });
    const barSum = perLevel.reduce(
      (acc, l) => acc + l.layerActivation + l.layerWeight + l.copy,
      0,
    );
    // the producer writes the access total independently of the per-column
    // breakdown, so a corrupted column cannot cancel out
    if (barSum !== row.totalAccessElements) {
      throw new Error(
        `breakdown mismatch for ${row.strategyId}: bars sum to ${barSum}, ` +
          `CSV total is ${row.totalAccessElements}`,
      );
    }
    return {
      strategyId: row.strategyId,
      tx: row.tx,
      ty: row.ty,
      mode: row.mode,
      modeName: row.modeName,
      perLevel,
      totalElements: row.totalAccessElements,
    };
  });
  return { bars, levels: table.levels };
}

/**
 * Energy reconciliation: MAC energy plus every breakdown energy column must
 * reproduce the row total within CSV print precision. Aborts on mismatch.
 */
export function assertEnergyReconciles(table: SweepTable, tolerancePJ = 1e-2): void {
  for (const row of table.rows) {
    if (row.status !== "ok") continue;
    let sum = row.energyMacPJ;
    for (const v of row.energyPJ.values()) sum += v;
    if (Math.abs(sum - row.energyTotalPJ) > tolerancePJ) {
      throw new Error(
        `energy mismatch for ${row.strategyId}: columns sum to ${sum}, total is ${row.energyTotalPJ}`,
      );
    }
  }
}

export interface MacCurveSeries {
  /** diagonal tile sizes in grid order */
  labels: string[];
  modes: { mode: number; modeName: string; macs: number[] }[];
}

export function buildMacCurve(table: SweepTable): MacCurveSeries {
  const rows = diagonalRows(table);
  if (rows.length === 0) throw new Error("no diagonal rows for the MAC curve");
  const labels = [...new Set(rows.map((r) => `${r.tx}x${r.ty}`))];
  labels.sort((a, b) => Number(a.split("x")[0]) - Number(b.split("x")[0]));
  const modes = [...new Set(rows.map((r) => r.mode))].sort((a, b) => a - b);
  return {
    labels,
    modes: modes.map((mode) => ({
      mode,
      modeName: rows.find((r) => r.mode === mode)?.modeName ?? String(mode),
      macs: labels.map((label) => {
        const [tx, ty] = label.split("x").map(Number);
        const hit = rows.find((r) => r.mode === mode && r.tx === tx && r.ty === ty);
        if (!hit) throw new Error(`missing diagonal point ${label} for mode ${mode}`);
        return hit.macCount;
      }),
    })),
  };
}
