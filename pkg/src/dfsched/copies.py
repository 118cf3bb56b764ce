"""Data copy actions: gathering a tile's inputs, persisting cached strips,
and draining stack outputs, priced with port-conflict-aware latency."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .hardware import Accelerator, MemoryLevel
from .tiling import MapKey, StackGeometry, TileType, gather_fragments

class CopyError(ValueError):
    pass


@dataclass(frozen=True)
class CopyAction:
    category: str  # gather-fresh | gather-cache-left | gather-cache-row | cache-store-left | cache-store-row | drain
    operand: str   # operand charged in the access breakdown ("I" or "O")
    elements: int
    bits: int
    src: str
    dst: str


@dataclass
class BundleCost:
    energy_pJ: float = 0.0
    latency_cycles: int = 0
    # (level, operand) -> [read_elements, write_elements, energy_pJ]
    counts: dict = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = {}


def _route(acc: Accelerator, src: str, dst: str) -> list[tuple[MemoryLevel, MemoryLevel]]:
    """Hop-by-hop path along the activation hierarchy; hops read the source
    side and write the destination side."""
    if acc.direct_paths:
        return [(acc.level(src), acc.level(dst))]
    route = acc.activation_route()
    names = [lv.name for lv in route]
    try:
        i, j = names.index(src), names.index(dst)
    except ValueError as exc:
        raise CopyError(f"no copy route between {src} and {dst}") from exc
    step = 1 if j > i else -1
    return [(route[k], route[k + step]) for k in range(i, j, step)]


def price_bundle(actions: Sequence[CopyAction], acc: Accelerator) -> BundleCost:
    """Energy is additive over actions; latency serializes per port and takes
    the max across ports (actions on disjoint ports overlap)."""
    cost = BundleCost()
    port_busy: dict[tuple[str, int], float] = {}
    for act in actions:
        if act.elements == 0 or act.bits == 0:
            continue
        if act.src == act.dst:
            raise CopyError(f"copy action with identical source and destination {act.src}")
        for frm, to in _route(acc, act.src, act.dst):
            words_r = frm.words(act.bits)
            words_w = to.words(act.bits)
            e_read = words_r * frm.read_energy_pJ
            e_write = words_w * to.write_energy_pJ
            cost.energy_pJ += e_read + e_write
            rkey = (frm.name, frm.read_port_index())
            wkey = (to.name, to.write_port_index())
            port_busy[rkey] = port_busy.get(rkey, 0.0) + words_r * frm.word_length_bits / frm.read_bw()
            port_busy[wkey] = port_busy.get(wkey, 0.0) + words_w * to.word_length_bits / to.write_bw()
            for name, col, e in ((frm.name, 0, e_read), (to.name, 1, e_write)):
                ent = cost.counts.setdefault((name, act.operand), [0, 0, 0.0])
                ent[col] += act.elements
                ent[2] += e
    if port_busy:
        cost.latency_cycles = math.ceil(max(port_busy.values()))
    return cost


def plan_gather(
    geom: StackGeometry,
    tt: TileType,
    layer_id: int,
    input_level: dict[int, str],
    output_level: dict[int, str],
    cache_level: dict[tuple[MapKey, str], str],
    dram: str,
) -> list[CopyAction]:
    """Copy actions collecting one layer's input fragments into its top input
    level.  Fragments already at the destination produce no action."""
    dst = input_level[layer_id]
    actions: list[CopyAction] = []
    for mk in geom.layer_inputs[layer_id]:
        ch = geom.map_channels[mk]
        bits = geom.map_bits[mk]
        row, left, fresh = gather_fragments(tt, mk, layer_id)
        fresh_src = dram if mk[0] == "ext" else output_level[mk[1]]
        pieces = (
            ("gather-cache-row", row, cache_level.get((mk, "row"), dram)),
            ("gather-cache-left", left, cache_level.get((mk, "left"), dram)),
            ("gather-fresh", fresh, fresh_src),
        )
        for category, elems, src in pieces:
            elems *= ch
            if elems == 0 or src == dst:
                continue
            actions.append(
                CopyAction(
                    category=category,
                    operand="I",
                    elements=elems,
                    bits=elems * bits,
                    src=src,
                    dst=dst,
                )
            )
    return actions


def plan_cache_stores(
    geom: StackGeometry,
    tt: TileType,
    mk: MapKey,
    input_level: dict[int, str],
    output_level: dict[int, str],
    cache_level: dict[tuple[MapKey, str], str],
    dram: str,
) -> list[CopyAction]:
    """Persist this tile's to-store strips of one map at their cache level.

    Freshly produced data sits at the producer's output level; for external
    maps it sits wherever the first consumer gathered it.
    """
    attr = tt.maps[mk]
    if mk[0] == "ext":
        consumers = geom.consumers[mk]
        src = input_level[consumers[0]] if consumers else dram
    else:
        src = output_level[mk[1]]
    bits = geom.map_bits[mk]
    actions = []
    for cls, elems in (("left", attr.store_left_elems), ("row", attr.store_above_elems)):
        if elems == 0:
            continue
        dst = cache_level.get((mk, cls))
        if dst is None or dst == src:
            continue
        actions.append(
            CopyAction(
                category=f"cache-store-{cls}",
                operand="I",
                elements=elems,
                bits=elems * bits,
                src=src,
                dst=dst,
            )
        )
    return actions


def plan_drain(
    geom: StackGeometry, tt: TileType, output_level: dict[int, str], dram: str
) -> list[CopyAction]:
    """Stack outputs pass between stacks through the highest memory level."""
    out = geom.output_layer
    src = output_level[out.id]
    if src == dram:
        return []
    elems = tt.maps[geom.output_map].fresh_region.area * out.K
    if elems == 0:
        return []
    return [
        CopyAction(
            category="drain",
            operand="O",
            elements=elems,
            bits=elems * out.act_bits,
            src=src,
            dst=dram,
        )
    ]
