"""Tiling geometry for fused stacks.

Tiles the stack's final output map, backcalculates every layer's required
input and to-compute regions under an overlap-storing mode, sizes the cached
strips, and groups identical tiles into tile types.

Geometry is separable per axis: a tile's attributes are fully determined by
its grid column (x axis) and grid row (y axis), so the whole grid reduces to
per-column and per-row interval chains.  The first tile additionally forms
its own type because its weights are fetched from off-chip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .stacks import Stack, stack_input_layer_ids
from .workload import Layer, LayerKind, WorkloadGraph, layer_mac_count


class TilingError(ValueError):
    pass


class OverlapMode(Enum):
    FULLY_RECOMPUTE = 0
    H_CACHED_V_RECOMPUTE = 1
    FULLY_CACHED = 2

    @property
    def caches_x(self) -> bool:
        return self is not OverlapMode.FULLY_RECOMPUTE

    @property
    def caches_y(self) -> bool:
        return self is OverlapMode.FULLY_CACHED


MODE_NAMES = {
    OverlapMode.FULLY_RECOMPUTE: "fully-recompute",
    OverlapMode.H_CACHED_V_RECOMPUTE: "h-cached-v-recompute",
    OverlapMode.FULLY_CACHED: "fully-cached",
}


EMPTY = None  # sentinel docs; empty intervals are Interval(0, -1)


@dataclass(frozen=True)
class Interval:
    """Inclusive [lo, hi]; empty iff hi < lo."""

    lo: int
    hi: int

    @staticmethod
    def empty() -> "Interval":
        return Interval(0, -1)

    @property
    def is_empty(self) -> bool:
        return self.hi < self.lo

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def intersect(self, other: "Interval") -> "Interval":
        if self.is_empty or other.is_empty:
            return Interval.empty()
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else Interval.empty()

    def envelope(self, other: "Interval") -> "Interval":
        if self.is_empty:
            return other
        if other.is_empty:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


@dataclass(frozen=True)
class Region:
    """Inclusive 2-D feature-map region; width/height may be zero."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return max(0, self.x1 - self.x0 + 1)

    @property
    def height(self) -> int:
        return max(0, self.y1 - self.y0 + 1)

    @property
    def area(self) -> int:
        return self.width * self.height

    @staticmethod
    def from_intervals(x: Interval, y: Interval) -> "Region":
        return Region(x.lo, y.lo, x.hi, y.hi)


def merge_branch_cache(regions: Sequence[Region]) -> Region:
    """Envelope of the branch requirements (per-edge max extents)."""
    live = [r for r in regions if r.area > 0]
    if not live:
        return Region(0, 0, -1, -1)
    return Region(
        min(r.x0 for r in live),
        min(r.y0 for r in live),
        max(r.x1 for r in live),
        max(r.y1 for r in live),
    )


def halo_axis(out: Interval, stride: int, kernel: int, pad_lo: int, size: int):
    """Input interval feeding `out` through one layer along one axis.

    Returns (interval, clip_lo, clip_hi).  Edges are pixel-exact: when the
    raw window is clipped and the stride outruns the kernel, the border
    pixels of the naive clipped interval may contribute to no output, so the
    edges snap inward to the first/last actually-read pixel.
    """
    if out.is_empty:
        return Interval.empty(), 0, 0
    raw_lo = out.lo * stride - pad_lo
    raw_hi = out.hi * stride - pad_lo + kernel - 1
    clip_lo = max(0, -raw_lo)
    clip_hi = max(0, raw_hi - (size - 1))
    if raw_lo >= 0:
        lo = raw_lo
    else:
        first_in_range = -(-pad_lo // stride)  # first output with window start >= 0
        cands = []
        if first_in_range <= out.hi:
            cands.append(first_in_range * stride - pad_lo)
        x_prev = min(first_in_range - 1, out.hi)
        if x_prev >= out.lo and pad_lo - x_prev * stride <= kernel - 1:
            cands.append(0)  # an earlier window still reaches pixel 0
        if not cands:
            return Interval.empty(), clip_lo, clip_hi
        lo = min(cands)
    if raw_hi <= size - 1:
        hi = raw_hi
    else:
        last_in_range = (size - 1 + pad_lo) // stride  # last output with window start in map
        last_in_range = min(last_in_range, out.hi)
        if last_in_range < out.lo:
            return Interval.empty(), clip_lo, clip_hi
        hi = min(size - 1, last_in_range * stride - pad_lo + kernel - 1)
    if hi < lo:
        return Interval.empty(), clip_lo, clip_hi
    return Interval(lo, hi), clip_lo, clip_hi


# Map keys: ("out", layer_id) for maps produced inside the stack,
# ("ext", pred_id) for maps produced outside, ("ext", ("in", layer_id)) for
# graph inputs.
MapKey = tuple


@dataclass(frozen=True)
class StackGeometry:
    """Static structure of one stack: its layers, feature maps and consumers."""

    graph: WorkloadGraph
    stack: Stack
    layers: tuple[Layer, ...]
    map_keys: tuple[MapKey, ...]
    map_dims: Mapping[MapKey, tuple[int, int]]
    map_channels: Mapping[MapKey, int]
    map_bits: Mapping[MapKey, int]
    consumers: Mapping[MapKey, tuple[int, ...]]
    layer_inputs: Mapping[int, tuple[MapKey, ...]]

    @property
    def output_layer(self) -> Layer:
        return self.layers[-1]

    @property
    def output_map(self) -> MapKey:
        return ("out", self.output_layer.id)

    @property
    def ext_maps(self) -> list[MapKey]:
        return [mk for mk in self.map_keys if mk[0] == "ext"]


def stack_geometry(g: WorkloadGraph, stack: Stack) -> StackGeometry:
    layers = tuple(g.layer(lid) for lid in stack.layer_ids)
    members = set(stack.layer_ids)
    map_dims: dict[MapKey, tuple[int, int]] = {}
    map_channels: dict[MapKey, int] = {}
    map_bits: dict[MapKey, int] = {}
    consumers: dict[MapKey, list[int]] = {}
    layer_inputs: dict[int, tuple[MapKey, ...]] = {}
    ext_order: list[MapKey] = []

    for l in layers:
        inputs: list[MapKey] = []
        if not l.predecessors:
            mk: MapKey = ("ext", ("in", l.id))
            map_dims[mk] = (l.input_extent_x, l.input_extent_y)
            map_channels[mk] = l.C
            map_bits[mk] = l.act_bits
            inputs.append(mk)
            if mk not in ext_order:
                ext_order.append(mk)
            consumers.setdefault(mk, []).append(l.id)
        else:
            for p in l.predecessors:
                if p in members:
                    mk = ("out", p)
                else:
                    pred = g.layer(p)
                    mk = ("ext", p)
                    map_dims[mk] = (pred.OX, pred.OY)
                    map_channels[mk] = pred.K
                    map_bits[mk] = pred.act_bits
                    if mk not in ext_order:
                        ext_order.append(mk)
                inputs.append(mk)
                consumers.setdefault(mk, []).append(l.id)
        layer_inputs[l.id] = tuple(inputs)

    for l in layers:
        mk = ("out", l.id)
        map_dims[mk] = (l.OX, l.OY)
        map_channels[mk] = l.K
        map_bits[mk] = l.act_bits
        consumers.setdefault(mk, [])

    map_keys = tuple(ext_order) + tuple(("out", l.id) for l in layers)
    return StackGeometry(
        graph=g,
        stack=stack,
        layers=layers,
        map_keys=map_keys,
        map_dims=map_dims,
        map_channels=map_channels,
        map_bits=map_bits,
        consumers={k: tuple(v) for k, v in consumers.items()},
        layer_inputs=layer_inputs,
    )


def tile_grid(ox: int, oy: int, tx: int, ty: int) -> tuple[list[Interval], list[Interval]]:
    """Row-major tile grid: full-size interior tiles, remainders at right/bottom."""
    if not (1 <= tx <= ox and 1 <= ty <= oy):
        raise TilingError(f"tile size ({tx},{ty}) out of range for output map {ox}x{oy}")
    cols = [Interval(x, min(x + tx, ox) - 1) for x in range(0, ox, tx)]
    rows = [Interval(y, min(y + ty, oy) - 1) for y in range(0, oy, ty)]
    return cols, rows


@dataclass(frozen=True)
class AxisInfo:
    """Backcalculated intervals of one map along one axis for one grid index."""

    req: Interval
    fresh: Interval
    avail_len: int
    store_len: int
    clip_lo: int
    clip_hi: int
    # Required interval per consuming layer, before branch merging.
    needs: Mapping[int, Interval]

    @property
    def avail_interval(self) -> Interval:
        if self.avail_len == 0 or self.req.is_empty:
            return Interval.empty()
        return Interval(self.req.lo, self.req.lo + self.avail_len - 1)

    def signature(self) -> tuple:
        need_sig = tuple(
            (lid, len(iv), (iv.lo - self.req.lo) if not iv.is_empty else -1)
            for lid, iv in sorted(self.needs.items())
        )
        return (
            len(self.req),
            len(self.fresh),
            self.avail_len,
            self.store_len,
            self.clip_lo,
            self.clip_hi,
            need_sig,
        )


def _solve_axis(
    geom: StackGeometry, axis: str, tiles: list[Interval], cached: bool
) -> list[dict[MapKey, AxisInfo]]:
    """Backcalculate per-map intervals for every grid index along one axis.

    Walks the stack back to front per index: a layer's required input derives
    from its fresh (to-compute) output, branch requirements are enveloped, and
    with caching the fresh interval keeps only what the previous index's
    required interval did not already cover.
    """
    if axis == "x":
        geo = lambda l: (l.stride_x, l.FX, l.pad_left)
        dim = lambda mk: geom.map_dims[mk][0]
    else:
        geo = lambda l: (l.stride_y, l.FY, l.pad_top)
        dim = lambda mk: geom.map_dims[mk][1]

    out_key = geom.output_map
    results: list[dict[MapKey, AxisInfo]] = []
    prev_req: dict[MapKey, Interval] = {}

    for idx, tile in enumerate(tiles):
        needs: dict[MapKey, dict[int, Interval]] = {mk: {} for mk in geom.map_keys}
        clips: dict[MapKey, tuple[int, int]] = {mk: (0, 0) for mk in geom.map_keys}
        req: dict[MapKey, Interval] = {}
        fresh: dict[MapKey, Interval] = {}

        def settle(mk: MapKey):
            if mk == out_key:
                r = tile
            else:
                r = Interval.empty()
                for iv in needs[mk].values():
                    r = r.envelope(iv)
            req[mk] = r
            p = prev_req.get(mk, Interval.empty())
            if not cached or idx == 0 or p.is_empty or r.is_empty:
                fresh[mk] = r
            else:
                lo = max(r.lo, p.hi + 1)
                fresh[mk] = Interval(lo, r.hi) if lo <= r.hi else Interval.empty()

        settle(out_key)
        for l in reversed(geom.layers):
            mk_out = ("out", l.id)
            if mk_out != out_key and mk_out not in req:
                settle(mk_out)
            stride, kernel, pad_lo = geo(l)
            src = fresh[mk_out]
            for mk_in in geom.layer_inputs[l.id]:
                iv, clo, chi = halo_axis(src, stride, kernel, pad_lo, dim(mk_in))
                needs[mk_in][l.id] = iv
                pl, ph = clips[mk_in]
                clips[mk_in] = (max(pl, clo), max(ph, chi))
        for mk in geom.ext_maps:
            if mk not in req:
                settle(mk)

        infos: dict[MapKey, AxisInfo] = {}
        for mk in geom.map_keys:
            r = req[mk]
            p = prev_req.get(mk, Interval.empty())
            avail = len(r.intersect(p)) if (cached and idx > 0) else 0
            infos[mk] = AxisInfo(
                req=r,
                fresh=fresh[mk],
                avail_len=avail,
                store_len=0,  # filled once the next index is known
                clip_lo=clips[mk][0],
                clip_hi=clips[mk][1],
                needs=dict(needs[mk]),
            )
        results.append(infos)
        prev_req = req

    # store_len(idx) is what the next index will read from cache.
    for idx in range(len(tiles)):
        nxt = results[idx + 1] if idx + 1 < len(tiles) else None
        for mk in geom.map_keys:
            cur = results[idx][mk]
            store = nxt[mk].avail_len if nxt is not None else 0
            results[idx][mk] = AxisInfo(
                req=cur.req,
                fresh=cur.fresh,
                avail_len=cur.avail_len,
                store_len=store,
                clip_lo=cur.clip_lo,
                clip_hi=cur.clip_hi,
                needs=cur.needs,
            )
    return results


@dataclass(frozen=True)
class MapTileAttr:
    """Per-map attributes of one tile: intervals plus cached-strip sizes."""

    x: AxisInfo
    y: AxisInfo
    # Element counts over the spatial strip times the map's channel count.
    avail_left_elems: int
    avail_above_elems: int
    store_left_elems: int
    store_above_elems: int

    @property
    def req_region(self) -> Region:
        return Region.from_intervals(self.x.req, self.y.req)

    @property
    def fresh_region(self) -> Region:
        return Region.from_intervals(self.x.fresh, self.y.fresh)


@dataclass(frozen=True)
class TileType:
    index: int
    rep: tuple[int, int]  # representative (row, col) grid position
    multiplicity: int
    first_tile: bool
    maps: Mapping[MapKey, MapTileAttr]
    layer_tc: Mapping[int, tuple[int, int]]  # layer id -> to-compute (w, h)

    def tc_area(self, lid: int) -> int:
        w, h = self.layer_tc[lid]
        return w * h


def _map_attr(geom: StackGeometry, mode: OverlapMode, mk: MapKey, xi: AxisInfo, yi: AxisInfo) -> MapTileAttr:
    ch = geom.map_channels[mk]
    fresh_h = len(yi.fresh)
    req_w = len(xi.req)
    if mode is OverlapMode.FULLY_RECOMPUTE:
        al = aa = sl = sa = 0
    elif mode is OverlapMode.H_CACHED_V_RECOMPUTE:
        strip_h = len(yi.req)
        al, sl = xi.avail_len * strip_h, xi.store_len * strip_h
        aa = sa = 0
    else:  # fully cached: left strips sized to the fresh rows, row strips full width
        al, sl = xi.avail_len * fresh_h, xi.store_len * fresh_h
        aa = req_w * yi.avail_len
        sa = len(xi.fresh) * yi.store_len
    return MapTileAttr(
        x=xi,
        y=yi,
        avail_left_elems=al * ch,
        avail_above_elems=aa * ch,
        store_left_elems=sl * ch,
        store_above_elems=sa * ch,
    )


def identify_tile_types(
    geom: StackGeometry, mode: OverlapMode, cols: list[Interval], rows: list[Interval]
) -> list[TileType]:
    """Group the grid into tiles with identical attributes.

    Grouping is the cross product of per-column and per-row signature classes;
    the first tile is always split off because it alone fills the weight
    memory from off-chip.
    """
    xs = _solve_axis(geom, "x", cols, mode.caches_x)
    ys = _solve_axis(geom, "y", rows, mode.caches_y)

    def classes(infos):
        groups: dict[tuple, list[int]] = {}
        for i, per_map in enumerate(infos):
            sig = tuple(per_map[mk].signature() for mk in geom.map_keys)
            groups.setdefault(sig, []).append(i)
        return list(groups.values())

    col_classes = classes(xs)
    row_classes = classes(ys)

    types: list[TileType] = []

    def build(rep_r: int, rep_c: int, mult: int, first: bool):
        maps = {
            mk: _map_attr(geom, mode, mk, xs[rep_c][mk], ys[rep_r][mk]) for mk in geom.map_keys
        }
        layer_tc = {
            l.id: (len(xs[rep_c][("out", l.id)].fresh), len(ys[rep_r][("out", l.id)].fresh))
            for l in geom.layers
        }
        types.append(
            TileType(
                index=len(types),
                rep=(rep_r, rep_c),
                multiplicity=mult,
                first_tile=first,
                maps=maps,
                layer_tc=layer_tc,
            )
        )

    combos = []
    for rc in row_classes:
        for cc in col_classes:
            combos.append((rc, cc))
    combos.sort(key=lambda pair: (pair[0][0], pair[1][0]))

    for rc, cc in combos:
        mult = len(rc) * len(cc)
        contains_first = rc[0] == 0 and cc[0] == 0
        if contains_first:
            build(0, 0, 1, True)
            mult -= 1
            if mult == 0:
                continue
            rep = (rc[0], cc[1]) if len(cc) > 1 else (rc[1], cc[0])
        else:
            rep = (rc[0], cc[0])
        build(rep[0], rep[1], mult, False)
    return types


def mac_count(geom: StackGeometry, mode: OverlapMode, cols: list[Interval], rows: list[Interval]) -> int:
    """Total MACs over the grid; separable as (sum of widths) x (sum of heights)."""
    xs = _solve_axis(geom, "x", cols, mode.caches_x)
    ys = _solve_axis(geom, "y", rows, mode.caches_y)
    total = 0
    for l in geom.layers:
        coef = layer_mac_count(l) // (l.OX * l.OY)
        mk = ("out", l.id)
        wsum = sum(len(x[mk].fresh) for x in xs)
        hsum = sum(len(y[mk].fresh) for y in ys)
        total += coef * wsum * hsum
    return total


def gather_fragments(tt: TileType, mk: MapKey, consumer_id: int) -> tuple[int, int, int]:
    """Split one consumer's required data on a map into (row-cache, left-cache,
    fresh) element counts; the three rectangles tile the required region."""
    attr = tt.maps[mk]
    nx = attr.x.needs.get(consumer_id, Interval.empty())
    ny = attr.y.needs.get(consumer_id, Interval.empty())
    if nx.is_empty or ny.is_empty:
        return 0, 0, 0
    row = len(nx) * len(ny.intersect(attr.y.avail_interval))
    left = len(nx.intersect(attr.x.avail_interval)) * len(ny.intersect(attr.y.fresh))
    fresh = len(nx.intersect(attr.x.fresh)) * len(ny.intersect(attr.y.fresh))
    return row, left, fresh


def format_tile_types(geom: StackGeometry, types: Sequence[TileType]) -> str:
    """Debug dump of per-tile-type attributes as a plain-text table."""
    lines = []
    for tt in types:
        head = f"type {tt.index}: rep={tt.rep} mult={tt.multiplicity}"
        if tt.first_tile:
            head += " (first tile)"
        lines.append(head)
        for mk in geom.map_keys:
            a = tt.maps[mk]
            lines.append(
                f"  map {mk}: req={len(a.x.req)}x{len(a.y.req)}"
                f" fresh={len(a.x.fresh)}x{len(a.y.fresh)}"
                f" cacheL(in/out)={a.avail_left_elems}/{a.store_left_elems}"
                f" cacheA(in/out)={a.avail_above_elems}/{a.store_above_elems}"
            )
    return "\n".join(lines)
