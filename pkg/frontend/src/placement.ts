/** Placement tables (layer x data category -> memory level) read from the
 * evaluation detail JSON emitted next to each run. */

export interface PlacementRow {
  stack: number;
  tileType: number;
  entry: Record<string, string | number>;
}

export interface PlacementSeries {
  workload: string;
  accelerator: string;
  rows: PlacementRow[];
}

export function buildPlacement(detailJson: string): PlacementSeries {
  let doc: any;
  try {
    doc = JSON.parse(detailJson);
  } catch (e) {
    throw new Error(`detail JSON does not parse: ${e}`);
  }
  if (!doc.stacks) throw new Error("detail JSON has no stacks");
  const rows: PlacementRow[] = [];
  for (const stack of doc.stacks) {
    for (const placement of stack.placements ?? []) {
      for (const entry of placement.rows ?? []) {
        rows.push({ stack: stack.stack_index, tileType: placement.type, entry });
      }
    }
  }
  if (rows.length === 0) throw new Error("detail JSON contains no placement tables");
  return { workload: doc.workload, accelerator: doc.accelerator, rows };
}
