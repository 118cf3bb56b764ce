/**
 * Sweep-CSV parsing and schema validation.
 *
 * The producer emits a versioned schema: fixed identity/total columns
 * followed by one elements/energy column pair per (memory level, operand,
 * cause). Anything else is rejected rather than guessed at.
 */

export const SWEEP_SCHEMA = "dfsched-sweep-v1";

export const FIXED_COLUMNS = [
  "schema",
  "strategy_id",
  "stack_id",
  "tx",
  "ty",
  "mode",
  "mode_name",
  "status",
  "error",
  "tile_type_count",
  "mac_count",
  "energy_total_pJ",
  "energy_mac_pJ",
  "latency_cycles",
  "total_access_elements",
] as const;

export interface BreakdownKey {
  level: string;
  operand: string;
  cause: string;
}

export interface SweepRow {
  strategyId: string;
  tx: number;
  ty: number;
  mode: number;
  modeName: string;
  status: string;
  error: string;
  tileTypeCount: number;
  macCount: number;
  energyTotalPJ: number;
  energyMacPJ: number;
  latencyCycles: number;
  totalAccessElements: number;
  /** "level|operand|cause" -> element count */
  elements: Map<string, number>;
  /** "level|operand|cause" -> energy in pJ */
  energyPJ: Map<string, number>;
}

export interface SweepTable {
  rows: SweepRow[];
  breakdownKeys: BreakdownKey[];
  levels: string[];
}

/** Minimal RFC-4180-ish line splitter (quotes appear only in error columns). */
export function splitCsvLine(line: string): string[] {
  const out: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  out.push(field);
  return out;
}

function parseBreakdownColumn(name: string): (BreakdownKey & { kind: string }) | null {
  const parts = name.split("|");
  if (parts.length !== 4) return null;
  const [level, operand, cause, kind] = parts;
  if (kind !== "elements" && kind !== "energy_pJ") return null;
  if (!["W", "I", "O"].includes(operand)) return null;
  if (!["layer", "copy"].includes(cause)) return null;
  return { level, operand, cause, kind };
}

export function parseSweepCsv(text: string): SweepTable {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length < 1) throw new Error("empty sweep CSV");
  const header = splitCsvLine(lines[0]);
  for (let i = 0; i < FIXED_COLUMNS.length; i++) {
    if (header[i] !== FIXED_COLUMNS[i]) {
      throw new Error(
        `sweep CSV header mismatch at column ${i}: got ${header[i]}, want ${FIXED_COLUMNS[i]}`,
      );
    }
  }
  const breakdownKeys: BreakdownKey[] = [];
  const levels: string[] = [];
  for (let i = FIXED_COLUMNS.length; i < header.length; i++) {
    const parsed = parseBreakdownColumn(header[i]);
    if (!parsed) throw new Error(`unrecognized sweep CSV column: ${header[i]}`);
    if (parsed.kind === "elements") {
      breakdownKeys.push({ level: parsed.level, operand: parsed.operand, cause: parsed.cause });
      if (!levels.includes(parsed.level)) levels.push(parsed.level);
    }
  }

  const rows: SweepRow[] = [];
  for (const line of lines.slice(1)) {
    const rec = splitCsvLine(line);
    if (rec.length !== header.length) {
      throw new Error(`sweep CSV row has ${rec.length} fields, header has ${header.length}`);
    }
    const get = (name: string) => rec[header.indexOf(name)];
    if (get("schema") !== SWEEP_SCHEMA) {
      throw new Error(`unsupported sweep schema ${get("schema")}`);
    }
    const status = get("status");
    const num = (name: string) => {
      const v = get(name);
      if (v === "") return NaN;
      const parsed = Number(v);
      if (Number.isNaN(parsed)) throw new Error(`non-numeric ${name} in row ${get("strategy_id")}`);
      return parsed;
    };
    const elements = new Map<string, number>();
    const energyPJ = new Map<string, number>();
    if (status === "ok") {
      for (let i = FIXED_COLUMNS.length; i < header.length; i++) {
        const parsed = parseBreakdownColumn(header[i])!;
        const key = `${parsed.level}|${parsed.operand}|${parsed.cause}`;
        const value = Number(rec[i]);
        if (Number.isNaN(value)) throw new Error(`non-numeric ${header[i]}`);
        if (parsed.kind === "elements") elements.set(key, value);
        else energyPJ.set(key, value);
      }
    }
    rows.push({
      strategyId: get("strategy_id"),
      tx: num("tx"),
      ty: num("ty"),
      mode: num("mode"),
      modeName: get("mode_name"),
      status,
      error: get("error"),
      tileTypeCount: status === "ok" ? num("tile_type_count") : NaN,
      macCount: status === "ok" ? num("mac_count") : NaN,
      energyTotalPJ: status === "ok" ? num("energy_total_pJ") : NaN,
      energyMacPJ: status === "ok" ? num("energy_mac_pJ") : NaN,
      latencyCycles: status === "ok" ? num("latency_cycles") : NaN,
      totalAccessElements: status === "ok" ? num("total_access_elements") : NaN,
      elements,
      energyPJ,
    });
  }
  return { rows, breakdownKeys, levels };
}
