"""Top-memory-level assignment per (tile type, layer, data category).

Activations and cached strips are placed greedily at the lowest memory level
with room, in a configurable priority order (inputs beat outputs, outputs
beat cached strips).  Weights are held at the lowest level on their own chain
that fits the whole stack's weight set; the first tile fills that level from
off-chip, later tiles read from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .hardware import Accelerator, MemoryLevel, restrict_top_level
from .tiling import MapKey, OverlapMode, StackGeometry, TileType
from .workload import stack_weight_size_bits

DEFAULT_PRIORITY = ("I", "O", "cached-left", "cached-row")


class AllocationError(ValueError):
    pass


@dataclass(frozen=True)
class LayerDemand:
    input_bits: int
    output_bits: int


@dataclass(frozen=True)
class CacheDemand:
    left_bits: int  # live strips, incoming plus outgoing
    row_bits: int   # full-width row strips, incoming plus outgoing


@dataclass(frozen=True)
class DataDemand:
    layers: Mapping[int, LayerDemand]
    caches: Mapping[MapKey, CacheDemand]
    stack_weight_bits: int


def compute_demand(geom: StackGeometry, tt: TileType) -> DataDemand:
    layers = {}
    for l in geom.layers:
        in_bits = 0
        for mk in geom.layer_inputs[l.id]:
            attr = tt.maps[mk]
            need_x = attr.x.needs.get(l.id)
            need_y = attr.y.needs.get(l.id)
            w = len(need_x) if need_x is not None else 0
            h = len(need_y) if need_y is not None else 0
            in_bits += w * h * geom.map_channels[mk] * geom.map_bits[mk]
        out_attr = tt.maps[("out", l.id)]
        out_bits = out_attr.fresh_region.area * l.K * l.act_bits
        layers[l.id] = LayerDemand(input_bits=in_bits, output_bits=out_bits)

    caches = {}
    for mk in geom.map_keys:
        attr = tt.maps[mk]
        bits = geom.map_bits[mk]
        ch = geom.map_channels[mk]
        width = geom.map_dims[mk][0]
        left = (attr.avail_left_elems + attr.store_left_elems) * bits
        # Row strips persist across a whole tile row, so the resident charge
        # spans the full map width, not just this tile's share.
        row = width * ch * (attr.y.avail_len + attr.y.store_len) * bits
        if left or row:
            caches[mk] = CacheDemand(left_bits=left, row_bits=row)
    return DataDemand(
        layers=layers,
        caches=caches,
        stack_weight_bits=stack_weight_size_bits(geom.layers),
    )


@dataclass(frozen=True)
class Placement:
    weight_hold_level: str | None  # on-chip level holding the stack weight set
    weight_top: str                # W cap for this tile's mapper runs
    input_level: Mapping[int, str]
    output_level: Mapping[int, str]
    cache_level: Mapping[tuple[MapKey, str], str]  # (map, "left"|"row") -> level

    def rows(self, geom: StackGeometry) -> list[dict]:
        """Placement dump table (layer x category -> level name)."""
        out = []
        for l in geom.layers:
            out.append(
                {
                    "layer": l.id,
                    "W": self.weight_top,
                    "I": self.input_level[l.id],
                    "O": self.output_level[l.id],
                }
            )
        for (mk, cls), lv in sorted(self.cache_level.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
            out.append({"map": str(mk), "category": f"cached-{cls}", "level": lv})
        return out


def weight_hold_level(acc: Accelerator, stack_weight_bits: int) -> MemoryLevel | None:
    """Lowest on-chip W level above the registers that can hold the stack's
    whole working set."""
    for lv in acc.chain("W")[1:]:
        if lv.offchip:
            break
        if lv.capacity_bits >= stack_weight_bits:
            return lv
    return None


def assign_top_memories(
    demand: DataDemand,
    acc: Accelerator,
    geom: StackGeometry,
    first_tile: bool,
    priority_order: Sequence[str] = DEFAULT_PRIORITY,
) -> Placement:
    charges: dict[str, int] = {}  # persistent residents: weights and cached strips
    dram = acc.dram().name

    w_hold = weight_hold_level(acc, demand.stack_weight_bits)
    if w_hold is not None and demand.stack_weight_bits > 0:
        charges[w_hold.name] = charges.get(w_hold.name, 0) + demand.stack_weight_bits
    weight_top = dram if (first_tile or w_hold is None) else w_hold.name

    def fits(level: MemoryLevel, bits: int, extra: int) -> bool:
        if level.offchip:
            return True
        used = charges.get(level.name, 0) + extra
        return used + bits <= level.capacity_bits

    act_peak: dict[str, int] = {}
    input_level: dict[int, str] = {}
    output_level: dict[int, str] = {}
    act_prio = [p for p in priority_order if p in ("I", "O")] or ["I", "O"]

    for l in geom.layers:
        d = demand.layers[l.id]
        placed: dict[str, str] = {}
        local: dict[str, int] = {}
        for cat in act_prio:
            bits = d.input_bits if cat == "I" else d.output_bits
            # The register level is the mandatory lowest level, never a top level.
            chain = acc.chain(cat)[1:]
            chosen = chain[-1].name
            for lv in chain:
                if fits(lv, bits, local.get(lv.name, 0)):
                    chosen = lv.name
                    break
            placed[cat] = chosen
            local[chosen] = local.get(chosen, 0) + bits
        input_level[l.id] = placed["I"]
        output_level[l.id] = placed["O"]
        for name, bits in local.items():
            act_peak[name] = max(act_peak.get(name, 0), bits)

    cache_level: dict[tuple[MapKey, str], str] = {}
    cache_prio = [p for p in priority_order if p.startswith("cached-")] or [
        "cached-left",
        "cached-row",
    ]
    for cat in cache_prio:
        cls = cat.removeprefix("cached-")
        for mk in geom.map_keys:
            cd = demand.caches.get(mk)
            if cd is None:
                continue
            bits = cd.left_bits if cls == "left" else cd.row_bits
            if bits == 0:
                continue
            chain = acc.chain("I")[1:]
            chosen = chain[-1].name
            for lv in chain:
                if fits(lv, bits, act_peak.get(lv.name, 0)):
                    chosen = lv.name
                    break
            cache_level[(mk, cls)] = chosen
            if not acc.level(chosen).offchip:
                charges[chosen] = charges.get(chosen, 0) + bits

    return Placement(
        weight_hold_level=w_hold.name if w_hold else None,
        weight_top=weight_top,
        input_level=input_level,
        output_level=output_level,
        cache_level=cache_level,
    )


def derive_capped_accelerator(
    placement: Placement, acc: Accelerator, layer_id: int
) -> Accelerator:
    return restrict_top_level(
        acc,
        {
            "W": placement.weight_top,
            "I": placement.input_level[layer_id],
            "O": placement.output_level[layer_id],
        },
    )


def audit_placement(
    demand: DataDemand, placement: Placement, acc: Accelerator, geom: StackGeometry
) -> list[str]:
    """Replay the tile schedule and check per-level occupancy at every step."""
    persistent: dict[str, int] = {}
    if placement.weight_hold_level is not None:
        persistent[placement.weight_hold_level] = demand.stack_weight_bits
    for (mk, cls), lv in placement.cache_level.items():
        if acc.level(lv).offchip:
            continue
        cd = demand.caches[mk]
        bits = cd.left_bits if cls == "left" else cd.row_bits
        persistent[lv] = persistent.get(lv, 0) + bits

    violations = []
    for l in geom.layers:
        d = demand.layers[l.id]
        occupancy = dict(persistent)
        for lv, bits in ((placement.input_level[l.id], d.input_bits), (placement.output_level[l.id], d.output_bits)):
            if not acc.level(lv).offchip:
                occupancy[lv] = occupancy.get(lv, 0) + bits
        for name, bits in occupancy.items():
            cap = acc.level(name).capacity_bits
            if bits > cap:
                violations.append(
                    f"layer {l.id}: level {name} occupancy {bits} exceeds capacity {cap}"
                )
    return violations
