/** Deterministic SVG rendering for the figure series. No DOM, no deps:
 * figures are plain generated markup with fixed-precision coordinates. */

import type { BreakdownSeries, HeatmapSeries, MacCurveSeries } from "./series.js";
import type { PlacementSeries } from "./placement.js";

const f = (v: number) => v.toFixed(2);

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function svgDoc(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="monospace" font-size="10">\n` +
    body +
    "\n</svg>\n"
  );
}

/** Blue-to-red ramp over the (optionally log) normalized value. */
function color(value: number, min: number, max: number, log: boolean): string {
  let t: number;
  if (log && min > 0) {
    t = (Math.log(value) - Math.log(min)) / (Math.log(max) - Math.log(min) || 1);
  } else {
    t = (value - min) / (max - min || 1);
  }
  t = Math.min(1, Math.max(0, t));
  const r = Math.round(40 + 215 * t);
  const b = Math.round(255 - 215 * t);
  return `rgb(${r},80,${b})`;
}

export function renderHeatmap(series: HeatmapSeries, log = false): string {
  const cell = 42;
  const left = 70;
  const top = 30;
  const gap = 40;
  const gridW = series.txs.length * cell;
  const gridH = series.tys.length * cell;
  const width = left + series.modes.length * (gridW + gap);
  const height = top + gridH + 50;
  const parts: string[] = [];
  series.modes.forEach((mode, mi) => {
    const x0 = left + mi * (gridW + gap);
    parts.push(`<text x="${x0}" y="14">${esc(mode.modeName)} (${series.metric})</text>`);
    series.tys.forEach((ty, r) => {
      series.txs.forEach((tx, c) => {
        const v = mode.cells[r][c];
        const x = x0 + c * cell;
        const y = top + r * cell;
        if (v === null) {
          parts.push(
            `<rect x="${x}" y="${y}" width="${cell - 2}" height="${cell - 2}" fill="none" stroke="#999" stroke-dasharray="3,2"/>`,
          );
        } else {
          parts.push(
            `<rect x="${x}" y="${y}" width="${cell - 2}" height="${cell - 2}" ` +
              `fill="${color(v, series.scale.min, series.scale.max, log)}">` +
              `<title>tx=${tx} ty=${ty}: ${v}</title></rect>`,
          );
        }
      });
    });
    series.txs.forEach((tx, c) => {
      parts.push(`<text x="${x0 + c * cell}" y="${top + gridH + 14}">${tx}</text>`);
    });
  });
  series.tys.forEach((ty, r) => {
    parts.push(`<text x="8" y="${top + r * cell + 14}">${ty}</text>`);
  });
  parts.push(
    `<text x="8" y="${height - 8}">scale ${series.scale.min.toExponential(3)} .. ${series.scale.max.toExponential(3)}${log ? " (log)" : ""}</text>`,
  );
  return svgDoc(width, height, parts.join("\n"));
}

const CAUSE_COLORS: Record<string, string> = {
  layerActivation: "#4878cf",
  layerWeight: "#6acc65",
  copy: "#d65f5f",
};

export function renderBreakdown(series: BreakdownSeries): string {
  const barW = 26;
  const groupGap = 30;
  const left = 60;
  const top = 30;
  const plotH = 220;
  const groupW = series.levels.length * barW + groupGap;
  const width = left + series.bars.length * groupW;
  const height = top + plotH + 60;
  const maxV = Math.max(
    1,
    ...series.bars.flatMap((b) => b.perLevel.map((l) => l.layerActivation + l.layerWeight + l.copy)),
  );
  const parts: string[] = [];
  series.bars.forEach((bar, bi) => {
    const x0 = left + bi * groupW;
    bar.perLevel.forEach((lv, li) => {
      const x = x0 + li * barW;
      let y = top + plotH;
      for (const cause of ["layerActivation", "layerWeight", "copy"] as const) {
        const h = (lv[cause] / maxV) * plotH;
        y -= h;
        parts.push(
          `<rect x="${x}" y="${f(y)}" width="${barW - 4}" height="${f(h)}" fill="${CAUSE_COLORS[cause]}">` +
            `<title>${bar.strategyId} ${lv.level} ${cause}: ${lv[cause]}</title></rect>`,
        );
      }
      parts.push(
        `<text x="${x}" y="${top + plotH + 12}" transform="rotate(45 ${x} ${top + plotH + 12})">${esc(lv.level)}</text>`,
      );
    });
    parts.push(`<text x="${x0}" y="${top - 8}">${bar.tx}x${bar.ty} m${bar.mode}</text>`);
  });
  let lx = left;
  for (const [cause, fill] of Object.entries(CAUSE_COLORS)) {
    parts.push(`<rect x="${lx}" y="${height - 18}" width="10" height="10" fill="${fill}"/>`);
    parts.push(`<text x="${lx + 14}" y="${height - 9}">${cause}</text>`);
    lx += 130;
  }
  return svgDoc(width, height, parts.join("\n"));
}

const MODE_COLORS = ["#d65f5f", "#ee854a", "#4878cf"];

export function renderMacCurve(series: MacCurveSeries): string {
  const left = 70;
  const top = 20;
  const plotW = Math.max(200, series.labels.length * 70);
  const plotH = 200;
  const width = left + plotW + 20;
  const height = top + plotH + 70;
  const maxV = Math.max(...series.modes.flatMap((m) => m.macs));
  const x = (i: number) =>
    left + (series.labels.length === 1 ? plotW / 2 : (i / (series.labels.length - 1)) * plotW);
  const y = (v: number) => top + plotH - (v / maxV) * plotH;
  const parts: string[] = [];
  series.modes.forEach((mode, mi) => {
    const pts = mode.macs.map((v, i) => `${f(x(i))},${f(y(v))}`).join(" ");
    const stroke = MODE_COLORS[mi % MODE_COLORS.length];
    parts.push(`<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="2"/>`);
    mode.macs.forEach((v, i) => {
      parts.push(
        `<circle cx="${f(x(i))}" cy="${f(y(v))}" r="3" fill="${stroke}"><title>${esc(mode.modeName)} ${series.labels[i]}: ${v}</title></circle>`,
      );
    });
    parts.push(
      `<text x="${left}" y="${top + plotH + 34 + 12 * mi}" fill="${stroke}">${esc(mode.modeName)}</text>`,
    );
  });
  series.labels.forEach((label, i) => {
    parts.push(`<text x="${f(x(i) - 16)}" y="${top + plotH + 16}">${esc(label)}</text>`);
  });
  parts.push(`<text x="4" y="${top + 10}">${maxV} MACs</text>`);
  return svgDoc(width, height, parts.join("\n"));
}

export function renderPlacement(series: PlacementSeries): string {
  const rowH = 16;
  const width = 560;
  const height = 40 + series.rows.length * rowH;
  const parts: string[] = [
    `<text x="8" y="16">${esc(series.workload)} on ${esc(series.accelerator)}: top memory levels</text>`,
  ];
  series.rows.forEach((row, i) => {
    const y = 34 + i * rowH;
    const cells = Object.entries(row.entry)
      .map(([k, v]) => `${k}=${v}`)
      .join("  ");
    parts.push(`<text x="8" y="${y}">stack ${row.stack} type ${row.tileType}: ${esc(cells)}</text>`);
  });
  return svgDoc(width, height, parts.join("\n"));
}
