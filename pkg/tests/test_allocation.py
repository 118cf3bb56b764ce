import pytest

from dfsched.allocation import (
    assign_top_memories,
    audit_placement,
    compute_demand,
    derive_capped_accelerator,
    weight_hold_level,
)
from dfsched.stacks import whole_graph_plan
from dfsched.tiling import OverlapMode, identify_tile_types, stack_geometry, tile_grid
from conftest import load_accelerator


def placements_for(g, acc, tx, ty, mode=OverlapMode.FULLY_CACHED):
    geom = stack_geometry(g, whole_graph_plan(g).stacks[0])
    out = geom.output_layer
    cols, rows = tile_grid(out.OX, out.OY, tx, ty)
    types = identify_tile_types(geom, mode, cols, rows)
    result = []
    for tt in types:
        demand = compute_demand(geom, tt)
        placement = assign_top_memories(demand, acc, geom, first_tile=tt.first_tile)
        result.append((tt, demand, placement))
    return geom, result


def test_small_tile_keeps_both_activations_low(fsrcnn, meta_proto_df):
    # (16,18): every layer's input+output fits the shared LB together.
    geom, placed = placements_for(fsrcnn, meta_proto_df, 16, 18)
    for tt, demand, placement in placed:
        for l in geom.layers:
            d = demand.layers[l.id]
            if d.input_bits + d.output_bits <= meta_proto_df.level("lb_io").capacity_bits:
                assert placement.input_level[l.id] == "lb_io"
                assert placement.output_level[l.id] == "lb_io"


def test_pressure_pushes_output_up_not_input(fsrcnn, meta_proto_df):
    # (60,72): the 56-channel maps no longer fit LB together; inputs keep the
    # LB while outputs spill to GB.
    geom, placed = placements_for(fsrcnn, meta_proto_df, 60, 72)
    lb = meta_proto_df.level("lb_io").capacity_bits
    seen = False
    for tt, demand, placement in placed:
        for l in geom.layers:
            d = demand.layers[l.id]
            if d.input_bits + d.output_bits > lb and d.input_bits <= lb:
                assert placement.input_level[l.id] == "lb_io"
                assert placement.output_level[l.id] == "gb"
                seen = True
    assert seen


def test_full_map_tile_lands_in_dram(fsrcnn, meta_proto_df):
    geom, placed = placements_for(fsrcnn, meta_proto_df, 960, 540)
    (tt, demand, placement), = placed
    wide = [l.id for l in geom.layers if l.K >= 12]
    assert any(placement.input_level[lid] == "dram" for lid in wide)
    assert any(placement.output_level[lid] == "dram" for lid in wide)


def test_weight_schedule_first_tile_from_dram(fsrcnn, meta_proto_df):
    geom, placed = placements_for(fsrcnn, meta_proto_df, 60, 72)
    firsts = [p for tt, d, p in placed if tt.first_tile]
    others = [p for tt, d, p in placed if not tt.first_tile]
    assert all(p.weight_top == "dram" for p in firsts)
    assert all(p.weight_top == "lb_w" for p in others)
    assert all(p.weight_hold_level == "lb_w" for p in firsts + others)


def test_weights_stream_from_dram_when_oversized(fsrcnn):
    tpu = load_accelerator("tpu_like")
    geom, placed = placements_for(fsrcnn, tpu, 60, 72)
    assert all(p.weight_top == "dram" for _, _, p in placed)
    assert all(p.weight_hold_level is None for _, _, p in placed)


def test_single_tile_weights_from_dram(fsrcnn, meta_proto_df):
    geom, placed = placements_for(fsrcnn, meta_proto_df, 960, 540)
    (tt, demand, placement), = placed
    assert tt.first_tile and placement.weight_top == "dram"


def test_weight_hold_level_picks_lowest_fitting(meta_proto_df):
    assert weight_hold_level(meta_proto_df, 15264 * 8).name == "lb_w"
    assert weight_hold_level(meta_proto_df, 64 * 8 * 1024) is None  # only gb serves I/O
    tpu_df = load_accelerator("tpu_like_df")
    assert weight_hold_level(tpu_df, 64 * 8 * 1024).name == "gb"


def test_cached_strips_respect_activation_peak(fsrcnn, meta_proto_df):
    # Fully-cached small tiles: row strips span the full 960-wide maps and
    # cannot sit in LB next to the activations; they go to GB.
    geom, placed = placements_for(fsrcnn, meta_proto_df, 16, 18)
    for tt, demand, placement in placed:
        for (mk, cls), level in placement.cache_level.items():
            if cls == "row" and demand.caches[mk].row_bits > 2 ** 19:
                assert level in ("gb", "dram")


def test_capacity_audit_clean(fsrcnn, meta_proto_df):
    for tx, ty in [(16, 18), (60, 72), (960, 540)]:
        geom, placed = placements_for(fsrcnn, meta_proto_df, tx, ty)
        for tt, demand, placement in placed:
            assert audit_placement(demand, placement, meta_proto_df, geom) == []


def test_never_up_rule(fsrcnn, meta_proto_df):
    # each activation sits at the lowest level that fits it given
    # higher-priority residents
    geom, placed = placements_for(fsrcnn, meta_proto_df, 16, 18)
    for tt, demand, placement in placed:
        w_bits = demand.stack_weight_bits
        for l in geom.layers:
            d = demand.layers[l.id]
            chain = meta_proto_df.chain("I")[1:]
            chosen = placement.input_level[l.id]
            for lv in chain:
                if lv.name == chosen:
                    break
                free = lv.capacity_bits - (w_bits if lv.name == "lb_w" else 0)
                assert d.input_bits > free  # a lower level would not have fit


def test_derive_capped_accelerator_caps_all_operands(fsrcnn, meta_proto_df):
    geom, placed = placements_for(fsrcnn, meta_proto_df, 60, 72)
    tt, demand, placement = placed[0]
    l = geom.layers[0]
    capped = derive_capped_accelerator(placement, meta_proto_df, l.id)
    assert capped.chain("I")[-1].name == placement.input_level[l.id]
    assert capped.chain("O")[-1].name == placement.output_level[l.id]
    assert capped.chain("W")[-1].name == placement.weight_top
    # original untouched
    assert meta_proto_df.chain("I")[-1].name == "dram"


def test_priority_order_override(fsrcnn, meta_proto_df):
    geom = stack_geometry(fsrcnn, whole_graph_plan(fsrcnn).stacks[0])
    cols, rows = tile_grid(960, 540, 60, 72)
    types = identify_tile_types(geom, OverlapMode.FULLY_CACHED, cols, rows)
    tt = types[-1]
    demand = compute_demand(geom, tt)
    flipped = assign_top_memories(
        demand, meta_proto_df, geom, first_tile=False,
        priority_order=("O", "I", "cached-left", "cached-row"),
    )
    default = assign_top_memories(demand, meta_proto_df, geom, first_tile=False)
    swaps = [
        l.id for l in geom.layers
        if (default.input_level[l.id], default.output_level[l.id])
        != (flipped.input_level[l.id], flipped.output_level[l.id])
    ]
    assert swaps  # under pressure the priority order decides who keeps LB
