import pytest

from dfsched.copies import CopyAction, CopyError, price_bundle
from dfsched.hardware import Accelerator, MemoryLevel, Port


def act(elems, bits_per_elem, src, dst, operand="I"):
    return CopyAction(
        category="gather-fresh", operand=operand,
        elements=elems, bits=elems * bits_per_elem, src=src, dst=dst,
    )


def linear_acc(direct_paths=False):
    """reg -> lb -> gb -> dram activation route with simple ports."""
    def lv(name, cap, word, r, w, bw, offchip=False, nports=1):
        return MemoryLevel(
            name=name, capacity_bits=cap, word_length_bits=word,
            read_energy_pJ=r, write_energy_pJ=w,
            ports=tuple(Port("read-write", bw) for _ in range(nports)),
            serves=frozenset({"W", "I", "O"}), offchip=offchip,
        )
    return Accelerator(
        name="lin", mac_count=16, unit_mac_energy_pJ=0.5, spatial_unrolling=(),
        memory_levels=(
            lv("reg", 8192, 8, 0.01, 0.01, 8192),
            lv("lb", 2 ** 20, 64, 4.0, 4.4, 512, nports=2),
            lv("gb", 2 ** 24, 256, 25.0, 27.5, 256, nports=2),
            lv("dram", 2 ** 33, 32, 100.0, 110.0, 64, offchip=True),
        ),
        direct_paths=direct_paths,
    )


def test_empty_bundle_is_free():
    cost = price_bundle([], linear_acc())
    assert cost.energy_pJ == 0 and cost.latency_cycles == 0 and cost.counts == {}


def test_zero_byte_action_is_free():
    cost = price_bundle([act(0, 8, "dram", "gb")], linear_acc())
    assert cost.energy_pJ == 0 and cost.latency_cycles == 0


def test_dram_port_cycles_closed_form():
    # 1024 words of 32 bits over a 64 bit/cycle DRAM port -> 512 cycles.
    acc = linear_acc(direct_paths=True)
    cost = price_bundle([act(1024, 32, "dram", "gb")], acc)
    assert cost.latency_cycles == 1024 * 32 // 64
    words_dram = (1024 * 32) // 32
    words_gb = -(-1024 * 32 // 256)
    assert cost.energy_pJ == pytest.approx(words_dram * 100.0 + words_gb * 27.5)


def test_identical_actions_shared_vs_disjoint_ports():
    acc = linear_acc(direct_paths=True)
    one = price_bundle([act(512, 64, "gb", "lb")], acc)
    # same source port twice: latency doubles
    two_shared = price_bundle([act(512, 64, "gb", "lb")] * 2, acc)
    assert two_shared.latency_cycles == 2 * one.latency_cycles
    # disjoint endpoints: the slower hop dominates instead of summing
    a = act(512, 64, "gb", "lb")
    b = act(512, 64, "dram", "gb")
    apart = price_bundle([a, b], acc)
    alone_a = price_bundle([a], acc)
    alone_b = price_bundle([b], acc)
    assert apart.latency_cycles < alone_a.latency_cycles + alone_b.latency_cycles
    assert apart.latency_cycles >= max(alone_a.latency_cycles, alone_b.latency_cycles)


def test_energy_additive_independent_of_bundling():
    acc = linear_acc()
    actions = [act(100, 8, "dram", "lb"), act(64, 8, "lb", "gb"), act(32, 8, "gb", "lb")]
    together = price_bundle(actions, acc)
    separate = sum(price_bundle([a], acc).energy_pJ for a in actions)
    assert together.energy_pJ == pytest.approx(separate)


def test_latency_monotone_when_adding_actions():
    acc = linear_acc()
    base = [act(100, 8, "dram", "lb")]
    more = base + [act(50, 8, "gb", "lb")]
    assert price_bundle(more, acc).latency_cycles >= price_bundle(base, acc).latency_cycles


def test_hop_by_hop_routing_touches_intermediate_levels():
    acc = linear_acc()
    cost = price_bundle([act(256, 8, "dram", "lb")], acc)
    touched = {name for (name, op) in cost.counts}
    assert touched == {"dram", "gb", "lb"}
    # read at dram and gb, written at gb and lb
    assert cost.counts[("gb", "I")][0] == 256 and cost.counts[("gb", "I")][1] == 256


def test_direct_paths_skip_intermediates():
    cost = price_bundle([act(256, 8, "dram", "lb")], linear_acc(direct_paths=True))
    touched = {name for (name, op) in cost.counts}
    assert touched == {"dram", "lb"}


def test_upward_copies_allowed():
    cost = price_bundle([act(128, 8, "lb", "dram", operand="O")], linear_acc())
    assert cost.energy_pJ > 0
    assert cost.counts[("dram", "O")][1] == 128


def test_same_src_dst_rejected():
    with pytest.raises(CopyError):
        price_bundle([act(10, 8, "lb", "lb")], linear_acc())


def test_counts_include_per_level_energy():
    acc = linear_acc(direct_paths=True)
    cost = price_bundle([act(64, 8, "gb", "lb")], acc)
    assert sum(e for (_, _, e) in cost.counts.values()) == pytest.approx(cost.energy_pJ)
