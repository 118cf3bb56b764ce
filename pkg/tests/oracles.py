"""Independent reference implementations used to check the analytical model.

These deliberately avoid the package's interval algebra and product formulas:
the tiling oracle paints explicit pixel sets, and the mapping oracle simulates
block transfers of a two-level hierarchy element by element.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from dfsched.mapping import DIMS, LayerInstance
from dfsched.tiling import OverlapMode


# ---------------------------------------------------------------------------
# Pixel-dependency painter for backcalculation


@dataclass(frozen=True)
class ChainLayer:
    """One layer of a linear stack for the pixel oracle."""

    fx: int
    fy: int
    sx: int
    sy: int
    pl: int
    pt: int
    ox: int
    oy: int
    ix: int
    iy: int


def receptive_pixels(layer: ChainLayer, out_pixels: set) -> set:
    """Every input pixel contributing to any output pixel in the set."""
    need = set()
    for (x, y) in out_pixels:
        for fx in range(layer.fx):
            for fy in range(layer.fy):
                px = x * layer.sx - layer.pl + fx
                py = y * layer.sy - layer.pt + fy
                if 0 <= px < layer.ix and 0 <= py < layer.iy:
                    need.add((px, py))
    return need


def _bbox_rect(pixels: set) -> set:
    """Full rectangle spanned by a pixel set (tiles compute whole rectangles)."""
    if not pixels:
        return set()
    xs = [p[0] for p in pixels]
    ys = [p[1] for p in pixels]
    return {
        (x, y)
        for x in range(min(xs), max(xs) + 1)
        for y in range(min(ys), max(ys) + 1)
    }


def paint_stack(layers: list[ChainLayer], mode: OverlapMode, cols, rows):
    """Walk the grid row-major, returning per-tile per-map (required, fresh)
    pixel sets.  Map index 0 is the first layer's input, map i the output of
    layer i.  Availability follows the overlap mode: nothing, pixels produced
    earlier in the same tile row, or all pixels produced so far.  Regions are
    rectangles: the receptive field of a to-compute rectangle is marked pixel
    by pixel, then widened to its bounding rectangle before the cache is
    subtracted.
    """
    n = len(layers)
    painted = [set() for _ in range(n + 1)]
    row_painted = [set() for _ in range(n + 1)]
    results = []
    for r, row_iv in enumerate(rows):
        for m in range(n + 1):
            row_painted[m] = set()
        for c, col_iv in enumerate(cols):
            tile = {
                (x, y)
                for x in range(col_iv.lo, col_iv.hi + 1)
                for y in range(row_iv.lo, row_iv.hi + 1)
            }
            per_map = {}
            fresh_out = tile
            per_map[n] = (tile, tile)
            for li in range(n - 1, -1, -1):
                required = receptive_pixels(layers[li], fresh_out)
                if mode is OverlapMode.FULLY_RECOMPUTE:
                    avail = set()
                elif mode is OverlapMode.H_CACHED_V_RECOMPUTE:
                    avail = row_painted[li]
                else:
                    avail = painted[li]
                # What remains of the required rectangle once cached data is
                # subtracted; a correct engine leaves a full rectangle here.
                fresh = _bbox_rect(required) - avail
                per_map[li] = (required, fresh)
                fresh_out = fresh
            for m in range(n + 1):
                painted[m] |= per_map[m][1]
                row_painted[m] |= per_map[m][1]
            results.append(((r, c), per_map))
    return results


# ---------------------------------------------------------------------------
# Element-wise loop-nest transfer simulator for the mapper


def _dim_layout(loops):
    """Per dim: positions and factors, innermost first."""
    layout = {d: [] for d in DIMS}
    for pos, (d, f) in enumerate(loops):
        layout[d].append((pos, f))
    return layout


def _indices_for(combo, loops, layout):
    """Compose per-dim mixed-radix indices from one full loop-index combo."""
    idx = {d: 0 for d in DIMS}
    weight = {d: 1 for d in DIMS}
    for pos, (d, f) in enumerate(loops):
        idx[d] += combo[pos] * weight[d]
        weight[d] *= f
    return idx


def _element(op: str, layer: LayerInstance, idx) -> tuple:
    if op == "W":
        if layer.coupled:
            return (idx["K"], idx["FX"], idx["FY"])
        return (idx["K"], idx["C"], idx["FX"], idx["FY"])
    if op == "I":
        ch = idx["K"] if layer.coupled else idx["C"]
        return (ch, idx["OX"] * layer.sx + idx["FX"], idx["OY"] * layer.sy + idx["FY"])
    return (idx["K"], idx["OX"], idx["OY"])


def _affecting_dims(op: str, layer: LayerInstance) -> set:
    """Dims whose index changes the operand's element tuple, found by probing."""
    base = {d: 0 for d in DIMS}
    ref = _element(op, layer, base)
    out = set()
    for d in DIMS:
        probe = dict(base)
        probe[d] = 1
        if _element(op, layer, probe) != ref:
            out.add(d)
    return out


def simulate_transfers(layer: LayerInstance, loops, cuts):
    """Simulate a 2-level hierarchy per operand: the lower level double-buffers
    the block belonging to the current outer-loop state (a block is identified
    by the outer coordinates that affect the operand), and every block change
    moves the block's actual element set across the boundary.  Per-MAC
    accesses hit the lower level.

    Returns {(level_index, op): [reads, writes]} with level 0 the lower level.
    """
    counts: dict[tuple[int, str], list[int]] = {}

    def add(level, op, r, w):
        ent = counts.setdefault((level, op), [0, 0])
        ent[0] += r
        ent[1] += w

    layout = _dim_layout(loops)
    total_macs = layer.mac_count
    for op in layer.operands():
        affects = _affecting_dims(op, layer)
        cut = cuts[op][0]
        inner, outer = loops[:cut], loops[cut:]
        inner_combos = list(itertools.product(*[range(f) for _, f in inner]))

        def block_size(outer_combo):
            elems = set()
            for inner_combo in inner_combos:
                combo = inner_combo + outer_combo
                idx = _indices_for(combo, loops, layout)
                elems.add(_element(op, layer, idx))
            # An elementwise join reads one element per input map.
            return len(elems) * (layer.fanin if op == "I" else 1)

        resident_id = None
        resident_size = 0
        seen = set()
        for outer_combo in itertools.product(*[range(f) for _, f in reversed(outer)]):
            outer_combo = tuple(reversed(outer_combo))
            block_id = tuple(
                v for (d, _), v in zip(outer, outer_combo) if d in affects
            )
            if block_id != resident_id:
                size = block_size(outer_combo)
                if op in ("W", "I"):
                    add(1, op, size, 0)
                    add(0, op, 0, size)
                else:
                    if resident_id is not None:
                        add(0, op, resident_size, 0)
                        add(1, op, 0, resident_size)
                    if block_id in seen:
                        add(1, op, size, 0)
                        add(0, op, 0, size)
                    seen.add(block_id)
                resident_id = block_id
                resident_size = size
        if op == "O" and resident_id is not None:
            add(0, op, resident_size, 0)
            add(1, op, 0, resident_size)

        # compute-side accesses at the lower level
        if op == "I":
            add(0, op, total_macs * layer.fanin, 0)
        elif op == "W":
            add(0, op, total_macs, 0)
        else:
            add(0, op, total_macs, total_macs)
    return counts
