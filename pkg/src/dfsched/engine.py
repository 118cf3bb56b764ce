"""Per-stack evaluation pipeline and design-space sweeps.

For each stack: tile the output map, deduplicate tile types, and per type run
backcalculation, top-memory assignment, copy-action pricing and the
single-layer mapper, then scale type costs by multiplicity.  Stack inputs and
outputs pass through the highest memory level.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

from .allocation import (
    DEFAULT_PRIORITY,
    Placement,
    assign_top_memories,
    compute_demand,
    derive_capped_accelerator,
)
from .copies import BundleCost, plan_cache_stores, plan_drain, plan_gather, price_bundle
from .hardware import Accelerator
from .mapping import LayerCost, LayerInstance, search_mapping
from .stacks import Stack, StackPlan, auto_stack, stack_layers
from .tiling import (
    MODE_NAMES,
    OverlapMode,
    StackGeometry,
    identify_tile_types,
    stack_geometry,
    tile_grid,
)
from .workload import Layer, WorkloadGraph


class EngineError(ValueError):
    pass


MODES_BY_ID = {m.value: m for m in OverlapMode}

CAUSES = ("layer", "copy")
BREAKDOWN_OPS = ("W", "I", "O")


@dataclass(frozen=True)
class StackStrategy:
    tilex: int
    tiley: int
    mode: OverlapMode


@dataclass(frozen=True)
class DFStrategy:
    plan: StackPlan
    per_stack: tuple[StackStrategy, ...]
    target: tuple = ("energy",)

    def __post_init__(self):
        if len(self.per_stack) != len(self.plan.stacks):
            raise EngineError("one StackStrategy per stack is required")


def uniform_strategy(
    plan: StackPlan, tilex: int, tiley: int, mode: OverlapMode, target: tuple = ("energy",)
) -> DFStrategy:
    return DFStrategy(
        plan=plan,
        per_stack=tuple(StackStrategy(tilex, tiley, mode) for _ in plan.stacks),
        target=target,
    )


@dataclass
class StackResult:
    stack_index: int
    layer_ids: tuple[int, ...]
    tilex: int
    tiley: int
    mode: str
    tile_type_count: int
    mac_count: int
    mac_energy_pJ: float
    energy_pJ: float
    latency_cycles: float
    # (level, operand, cause) -> [reads, writes, energy_pJ]
    breakdown: dict
    placements: list
    tile_types: list  # per-type audit info


@dataclass
class CostResult:
    workload: str
    accelerator: str
    target: tuple
    stacks: list[StackResult]
    mac_count: int = 0
    mac_energy_pJ: float = 0.0
    energy_total_pJ: float = 0.0
    latency_cycles: float = 0.0
    tile_type_count: int = 0
    breakdown: dict = field(default_factory=dict)

    def finalize(self) -> "CostResult":
        for sr in self.stacks:
            self.mac_count += sr.mac_count
            self.mac_energy_pJ += sr.mac_energy_pJ
            self.latency_cycles += sr.latency_cycles
            self.tile_type_count += sr.tile_type_count
            for key, (r, w, e) in sr.breakdown.items():
                ent = self.breakdown.setdefault(key, [0, 0, 0.0])
                ent[0] += r
                ent[1] += w
                ent[2] += e
        # Total energy is defined as MAC energy plus the breakdown sum, so the
        # reconciliation invariant holds exactly in floating point.
        self.energy_total_pJ = self.mac_energy_pJ + sum(
            self.breakdown[k][2] for k in sorted(self.breakdown)
        )
        return self

    def metric(self, target: tuple | None = None) -> float:
        t = target or self.target
        kind = t[0]
        if kind == "energy":
            return self.energy_total_pJ
        if kind == "latency":
            return self.latency_cycles
        if kind == "edp":
            return self.energy_total_pJ * self.latency_cycles
        if kind == "weighted":
            return t[1] * self.energy_total_pJ + t[2] * self.latency_cycles
        raise EngineError(f"unknown optimization target {t!r}")

    def comparable(self) -> dict:
        """Cost payload without the strategy echo, for equivalence checks."""
        return {
            "mac_count": self.mac_count,
            "mac_energy_pJ": self.mac_energy_pJ,
            "energy_total_pJ": self.energy_total_pJ,
            "latency_cycles": self.latency_cycles,
            "tile_type_count": self.tile_type_count,
            "breakdown": {"|".join(k): v for k, v in sorted(self.breakdown.items())},
        }


def _add_counts(breakdown: dict, counts: dict, energies: dict, cause: str, mult: int):
    for (level, op), (r, w) in counts.items():
        key = (level, op, cause)
        ent = breakdown.setdefault(key, [0, 0, 0.0])
        ent[0] += r * mult
        ent[1] += w * mult
        ent[2] += energies.get((level, op), 0.0) * mult


def evaluate_stack(
    g: WorkloadGraph,
    acc: Accelerator,
    stack: Stack,
    sstrat: StackStrategy,
    stack_index: int = 0,
    lpf_limit: int = 6,
    target: tuple = ("energy",),
    priority_order=DEFAULT_PRIORITY,
) -> StackResult:
    geom = stack_geometry(g, stack)
    out = geom.output_layer
    tilex = min(sstrat.tilex, out.OX)
    tiley = min(sstrat.tiley, out.OY)
    cols, rows = tile_grid(out.OX, out.OY, tilex, tiley)
    types = identify_tile_types(geom, sstrat.mode, cols, rows)
    dram = acc.dram().name

    breakdown: dict = {}
    placements = []
    type_infos = []
    total_mac = 0
    total_mac_energy = 0.0
    total_energy = 0.0
    total_latency = 0.0

    for tt in types:
        demand = compute_demand(geom, tt)
        placement = assign_top_memories(
            demand, acc, geom, first_tile=tt.first_tile, priority_order=priority_order
        )
        placements.append({"type": tt.index, "rows": placement.rows(geom)})

        type_energy = 0.0
        type_latency = 0.0
        type_mac = 0
        type_mac_energy = 0.0
        type_breakdown: dict = {}

        bundles: list[BundleCost] = []
        for l in geom.layers:
            w, h = tt.layer_tc[l.id]
            if w == 0 or h == 0:
                continue  # fully served by cached data: nothing to compute

            gather = plan_gather(
                geom, tt, l.id, placement.input_level, placement.output_level,
                placement.cache_level, dram,
            )
            bundles.append(price_bundle(gather, acc))

            capped = derive_capped_accelerator(placement, acc, l.id)
            inst = LayerInstance(
                k=l.K,
                c=1 if l.channel_coupled else l.C,
                ox=w,
                oy=h,
                fx=l.FX,
                fy=l.FY,
                sx=l.stride_x,
                sy=l.stride_y,
                act_bits=l.act_bits,
                weight_bits=l.weight_bits,
                coupled=l.channel_coupled,
                weightless=l.weightless,
                fanin=l.fanin,
            )
            _, cost = search_mapping(inst, capped, lpf_limit=lpf_limit, target=target)
            type_mac += cost.mac_count
            type_mac_energy += cost.mac_energy_pJ
            type_energy += cost.energy_total_pJ
            type_latency += cost.latency_cycles
            _add_counts(type_breakdown, cost.counts, cost.mem_energy_pJ, "layer", 1)

            stores = plan_cache_stores(
                geom, tt, ("out", l.id), placement.input_level, placement.output_level,
                placement.cache_level, dram,
            )
            if l.id == geom.output_layer.id:
                stores += plan_drain(geom, tt, placement.output_level, dram)
            if stores:
                bundles.append(price_bundle(stores, acc))

        for mk in geom.ext_maps:
            stores = plan_cache_stores(
                geom, tt, mk, placement.input_level, placement.output_level,
                placement.cache_level, dram,
            )
            if stores:
                bundles.append(price_bundle(stores, acc))

        for b in bundles:
            type_energy += b.energy_pJ
            type_latency += b.latency_cycles
            for (level, op), (r, w2, e) in b.counts.items():
                key = (level, op, "copy")
                ent = type_breakdown.setdefault(key, [0, 0, 0.0])
                ent[0] += r
                ent[1] += w2
                ent[2] += e

        copy_energy = sum(b.energy_pJ for b in bundles)

        total_mac += type_mac * tt.multiplicity
        total_mac_energy += type_mac_energy * tt.multiplicity
        total_energy += type_energy * tt.multiplicity
        total_latency += type_latency * tt.multiplicity
        for key, (r, w2, e) in type_breakdown.items():
            ent = breakdown.setdefault(key, [0, 0, 0.0])
            ent[0] += r * tt.multiplicity
            ent[1] += w2 * tt.multiplicity
            ent[2] += e * tt.multiplicity

        type_infos.append(
            {
                "type": tt.index,
                "rep": tt.rep,
                "multiplicity": tt.multiplicity,
                "first_tile": tt.first_tile,
                "mac_count": type_mac,
                "energy_pJ": type_energy,
                "copy_energy_pJ": copy_energy,
                "latency_cycles": type_latency,
                "breakdown": {"|".join(k): v for k, v in sorted(type_breakdown.items())},
            }
        )

    total_energy = total_mac_energy + sum(breakdown[k][2] for k in sorted(breakdown))
    return StackResult(
        stack_index=stack_index,
        layer_ids=stack.layer_ids,
        tilex=tilex,
        tiley=tiley,
        mode=MODE_NAMES[sstrat.mode],
        tile_type_count=len(types),
        mac_count=total_mac,
        mac_energy_pJ=total_mac_energy,
        energy_pJ=total_energy,
        latency_cycles=total_latency,
        breakdown=breakdown,
        placements=placements,
        tile_types=type_infos,
    )


def evaluate(
    g: WorkloadGraph,
    acc: Accelerator,
    strategy: DFStrategy,
    lpf_limit: int = 6,
    priority_order=DEFAULT_PRIORITY,
) -> CostResult:
    stacks = []
    for i, (stack, sstrat) in enumerate(zip(strategy.plan.stacks, strategy.per_stack)):
        stacks.append(
            evaluate_stack(
                g, acc, stack, sstrat,
                stack_index=i,
                lpf_limit=lpf_limit,
                target=strategy.target,
                priority_order=priority_order,
            )
        )
    return CostResult(
        workload=g.name,
        accelerator=acc.name,
        target=strategy.target,
        stacks=stacks,
    ).finalize()


def best_combination(
    g: WorkloadGraph,
    acc: Accelerator,
    plan: StackPlan,
    candidates: list[list[StackStrategy]],
    target: tuple = ("energy",),
    lpf_limit: int = 6,
) -> tuple[DFStrategy, CostResult]:
    """Per-stack argmin over candidate strategies; stack costs are additive.

    Ties break toward the first-listed candidate.
    """
    if len(candidates) != len(plan.stacks):
        raise EngineError("one candidate list per stack is required")
    chosen = []
    for i, (stack, cands) in enumerate(zip(plan.stacks, candidates)):
        if not cands:
            raise EngineError(f"stack {i} has no candidate strategies")
        best = None
        for s in cands:
            sr = evaluate_stack(g, acc, stack, s, stack_index=i, lpf_limit=lpf_limit, target=target)
            value = {"energy": sr.energy_pJ, "latency": sr.latency_cycles,
                     "edp": sr.energy_pJ * sr.latency_cycles}.get(target[0])
            if value is None:
                value = target[1] * sr.energy_pJ + target[2] * sr.latency_cycles
            if best is None or value < best[0]:
                best = (value, s)
        chosen.append(best[1])
    strategy = DFStrategy(plan=plan, per_stack=tuple(chosen), target=target)
    return strategy, evaluate(g, acc, strategy, lpf_limit=lpf_limit)


# ---------------------------------------------------------------------------
# Sweeps and CSV emission


SWEEP_SCHEMA = "dfsched-sweep-v1"


def sweep_strategy_id(tx: int, ty: int, mode: OverlapMode) -> str:
    return f"{MODE_NAMES[mode]}-tx{tx}-ty{ty}"


@dataclass
class SweepRow:
    strategy_id: str
    tx: int
    ty: int
    mode: OverlapMode
    status: str = "ok"
    error: str = ""
    result: CostResult | None = None


def _sweep_points(tile_sizes, modes):
    for mode in modes:
        for ty in sorted({t[1] for t in tile_sizes}):
            for tx in sorted({t[0] for t in tile_sizes}):
                if (tx, ty) in tile_sizes:
                    yield tx, ty, mode


def _eval_point(args) -> SweepRow:
    g, acc, plan, tx, ty, mode, target, lpf_limit, priority = args
    row = SweepRow(strategy_id=sweep_strategy_id(tx, ty, mode), tx=tx, ty=ty, mode=mode)
    try:
        strategy = uniform_strategy(plan, tx, ty, mode, target)
        row.result = evaluate(g, acc, strategy, lpf_limit=lpf_limit, priority_order=priority)
    except Exception as exc:  # per-row failures do not abort the sweep
        row.status = "error"
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def sweep(
    g: WorkloadGraph,
    acc: Accelerator,
    tile_sizes: list[tuple[int, int]],
    modes: list[OverlapMode],
    target: tuple = ("energy",),
    lpf_limit: int = 6,
    priority_order=DEFAULT_PRIORITY,
    plan: StackPlan | None = None,
    threads: int = 1,
    skip_ids: set[str] | None = None,
) -> list[SweepRow]:
    """One row per (tile size, mode); rows are independent and returned in
    grid order regardless of the worker count."""
    if not tile_sizes or not modes:
        raise EngineError("sweep grid must be non-empty")
    if plan is None:
        plan = auto_stack(g, acc)
    points = [
        (tx, ty, mode)
        for tx, ty, mode in _sweep_points(set(tile_sizes), modes)
        if not (skip_ids and sweep_strategy_id(tx, ty, mode) in skip_ids)
    ]
    jobs = [(g, acc, plan, tx, ty, mode, target, lpf_limit, tuple(priority_order)) for tx, ty, mode in points]
    if threads <= 1:
        rows = [_eval_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_eval_point, jobs))
    return rows


def sweep_csv_columns(acc: Accelerator) -> list[str]:
    cols = [
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
    ]
    for lv in acc.memory_levels:
        for op in BREAKDOWN_OPS:
            for cause in CAUSES:
                cols.append(f"{lv.name}|{op}|{cause}|elements")
                cols.append(f"{lv.name}|{op}|{cause}|energy_pJ")
    return cols


def rows_to_csv(rows: list[SweepRow], acc: Accelerator) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    columns = sweep_csv_columns(acc)
    writer.writerow(columns)
    for row in rows:
        record = {
            "schema": SWEEP_SCHEMA,
            "strategy_id": row.strategy_id,
            "stack_id": "all",
            "tx": row.tx,
            "ty": row.ty,
            "mode": row.mode.value,
            "mode_name": MODE_NAMES[row.mode],
            "status": row.status,
            "error": row.error,
        }
        if row.result is not None:
            r = row.result
            record.update(
                {
                    "tile_type_count": r.tile_type_count,
                    "mac_count": r.mac_count,
                    "energy_total_pJ": f"{r.energy_total_pJ:.6f}",
                    "energy_mac_pJ": f"{r.mac_energy_pJ:.6f}",
                    "latency_cycles": f"{r.latency_cycles:.6f}",
                    # independent integrity anchor for the per-column breakdown
                    "total_access_elements": str(
                        sum(v[0] + v[1] for v in r.breakdown.values())
                    ),
                }
            )
            for c in columns:
                if "|" in c:
                    record[c] = "0.000000" if c.endswith("energy_pJ") else "0"
            for (level, op, cause), (reads, writes, energy) in r.breakdown.items():
                record[f"{level}|{op}|{cause}|elements"] = str(reads + writes)
                record[f"{level}|{op}|{cause}|energy_pJ"] = f"{energy:.6f}"
        writer.writerow([record.get(c, "") for c in columns])
    return buf.getvalue()


def cost_result_to_dict(result: CostResult) -> dict:
    return {
        "workload": result.workload,
        "accelerator": result.accelerator,
        "target": list(result.target),
        "totals": {
            "mac_count": result.mac_count,
            "energy_total_pJ": result.energy_total_pJ,
            "energy_mac_pJ": result.mac_energy_pJ,
            "latency_cycles": result.latency_cycles,
            "tile_type_count": result.tile_type_count,
        },
        "breakdown": [
            {"level": k[0], "operand": k[1], "cause": k[2], "reads": v[0], "writes": v[1], "energy_pJ": v[2]}
            for k, v in sorted(result.breakdown.items())
        ],
        "stacks": [
            {
                "stack_index": sr.stack_index,
                "layers": list(sr.layer_ids),
                "tilex": sr.tilex,
                "tiley": sr.tiley,
                "mode": sr.mode,
                "tile_type_count": sr.tile_type_count,
                "mac_count": sr.mac_count,
                "energy_pJ": sr.energy_pJ,
                "latency_cycles": sr.latency_cycles,
                "breakdown": [
                    {"level": k[0], "operand": k[1], "cause": k[2], "reads": v[0], "writes": v[1], "energy_pJ": v[2]}
                    for k, v in sorted(sr.breakdown.items())
                ],
                "placements": sr.placements,
                "tile_types": sr.tile_types,
            }
            for sr in result.stacks
        ],
    }
