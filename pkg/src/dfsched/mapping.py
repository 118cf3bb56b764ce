"""Single-layer temporal-mapping search and analytical cost model.

Loop bounds are factorized into primes (merged down to an `lpf_limit` budget),
every distinct ordering of the factor multiset is enumerated, loops are
allocated bottom-up to the capped memory chains by capacity, and each mapping
is priced analytically:

* data held below a chain boundary forms a block; traffic across the boundary
  is block size times the number of times the block changes while the loops
  above iterate (an irrelevant loop gives reuse only while no relevant loop
  sits below it, otherwise the revisit refetches);
* outputs accumulate at their lowest level and ship partial sums up and back
  down whenever an output-irrelevant loop sits above the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .hardware import Accelerator, MemoryLevel

DIMS = ("K", "C", "OX", "OY", "FX", "FY")


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class LayerInstance:
    """Loop bounds of one layer-tile combination (OX/OY are tile-local)."""

    k: int
    c: int
    ox: int
    oy: int
    fx: int
    fy: int
    sx: int = 1
    sy: int = 1
    act_bits: int = 8
    weight_bits: int = 8
    coupled: bool = False     # input (and weight) indexed by K instead of C
    weightless: bool = False  # pooling / elementwise: no weight traffic
    fanin: int = 1            # input maps read per output element

    def bound(self, dim: str) -> int:
        return {
            "K": self.k,
            "C": self.c,
            "OX": self.ox,
            "OY": self.oy,
            "FX": self.fx,
            "FY": self.fy,
        }[dim]

    @property
    def mac_count(self) -> int:
        return self.k * self.c * self.ox * self.oy * self.fx * self.fy

    def operands(self) -> tuple[str, ...]:
        return ("I", "O") if self.weightless else ("W", "I", "O")

    def relevant(self, op: str) -> frozenset[str]:
        if op == "W":
            return frozenset(("K", "FX", "FY") if self.coupled else ("K", "C", "FX", "FY"))
        if op == "I":
            return frozenset(("K", "OX", "OY", "FX", "FY") if self.coupled else ("C", "OX", "OY", "FX", "FY"))
        return frozenset(("K", "OX", "OY"))

    def bits(self, op: str) -> int:
        return self.weight_bits if op == "W" else self.act_bits

    def footprint(self, op: str, cov: Mapping[str, int]) -> int:
        """Element count of `op`'s data block for per-dim coverages `cov`."""
        if op == "W":
            base = cov["K"] * cov["FX"] * cov["FY"]
            return base if self.coupled else base * cov["C"]
        if op == "I":
            ch = cov["K"] if self.coupled else cov["C"]
            # Sliding-window size; windows are disjoint when the stride
            # outruns the kernel coverage.
            def win(n_out, n_f, s):
                return (n_out - 1) * s + n_f if s <= n_f else n_out * n_f
            ix = win(cov["OX"], cov["FX"], self.sx)
            iy = win(cov["OY"], cov["FY"], self.sy)
            return ch * ix * iy * self.fanin
        return cov["K"] * cov["OX"] * cov["OY"]


@dataclass(frozen=True)
class TemporalMapping:
    loops: tuple[tuple[str, int], ...]  # innermost -> outermost
    cuts: Mapping[str, tuple[int, ...]]  # per operand: loop index where each chain level ends


@dataclass
class LayerCost:
    mac_count: int
    mac_energy_pJ: float
    # (level, operand) -> [read_elements, write_elements]
    counts: dict
    # (level, operand) -> pJ
    mem_energy_pJ: dict
    ideal_cycles: float
    latency_cycles: float
    spatial_utilization: float
    mapping: TemporalMapping | None = None

    @property
    def energy_total_pJ(self) -> float:
        return self.mac_energy_pJ + sum(self.mem_energy_pJ.values())

    def metric(self, target: tuple) -> float:
        kind = target[0]
        if kind == "energy":
            return self.energy_total_pJ
        if kind == "latency":
            return self.latency_cycles
        if kind == "edp":
            return self.energy_total_pJ * self.latency_cycles
        if kind == "weighted":
            return target[1] * self.energy_total_pJ + target[2] * self.latency_cycles
        raise MappingError(f"unknown optimization target {target!r}")


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def merged_factors(bounds: Mapping[str, int], lpf_limit: int) -> dict[str, list[int]]:
    """Prime factors per dim, merging the smallest same-dim pair until the
    total factor count fits the limit."""
    if lpf_limit < 1:
        raise MappingError("lpf_limit must be >= 1")
    factors = {d: sorted(prime_factors(b)) for d, b in bounds.items() if b > 1}
    total = sum(len(v) for v in factors.values())
    while total > lpf_limit:
        best = None
        for d in DIMS:
            fs = factors.get(d)
            if fs and len(fs) >= 2:
                prod = fs[0] * fs[1]
                if best is None or prod < best[1]:
                    best = (d, prod)
        if best is None:
            break  # one factor per dim already; cannot merge further
        d, prod = best
        fs = factors[d]
        factors[d] = sorted([prod] + fs[2:])
        total -= 1
    return factors


def distinct_permutations(items: Sequence):
    """Permutations of a multiset without duplicates."""
    pool = sorted(items)
    counts: dict = {}
    for it in pool:
        counts[it] = counts.get(it, 0) + 1
    keys = sorted(counts)
    n = len(pool)
    current = []

    def rec():
        if len(current) == n:
            yield tuple(current)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                current.append(k)
                yield from rec()
                current.pop()
                counts[k] += 1

    yield from rec()


@dataclass(frozen=True)
class _Chain:
    """Capped memory chain of one operand as plain numbers for tight loops."""

    names: tuple[str, ...]
    caps: tuple[int, ...]
    word_lens: tuple[int, ...]
    read_E: tuple[float, ...]
    write_E: tuple[float, ...]
    read_bw: tuple[int, ...]
    write_bw: tuple[int, ...]
    read_port: tuple[tuple[str, int], ...]
    write_port: tuple[tuple[str, int], ...]
    offchip: tuple[bool, ...]


def _chain(levels: Sequence[MemoryLevel]) -> _Chain:
    return _Chain(
        names=tuple(lv.name for lv in levels),
        caps=tuple(lv.capacity_bits for lv in levels),
        word_lens=tuple(lv.word_length_bits for lv in levels),
        read_E=tuple(lv.read_energy_pJ for lv in levels),
        write_E=tuple(lv.write_energy_pJ for lv in levels),
        read_bw=tuple(lv.read_bw() for lv in levels),
        write_bw=tuple(lv.write_bw() for lv in levels),
        read_port=tuple((lv.name, lv.read_port_index()) for lv in levels),
        write_port=tuple((lv.name, lv.write_port_index()) for lv in levels),
        offchip=tuple(lv.offchip for lv in levels),
    )


def _spatial(acc: Accelerator, layer: LayerInstance) -> tuple[dict[str, int], dict[str, int], int]:
    """Effective spatial coverage, temporal bounds after unrolling, array size."""
    eff: dict[str, int] = {}
    temporal: dict[str, int] = {}
    array_par = 1
    for d in DIMS:
        f = acc.spatial_factor(d)
        b = layer.bound(d)
        array_par *= f
        eff[d] = min(f, b)
        temporal[d] = -(-b // f)
    return eff, temporal, array_par


def _allocate(
    loops: Sequence[tuple[str, int]],
    layer: LayerInstance,
    chains: Mapping[str, _Chain],
    eff_spatial: Mapping[str, int],
) -> dict[str, tuple[int, ...]]:
    """Greedy bottom-up allocation of the ordered loops to chain levels.

    Every operand starts at its lowest level; when a level can no longer hold
    the combined blocks of the operands sitting on it, the operands whose
    block just grew move up (weights first, then outputs, then inputs).
    Shared levels are checked against the sum of resident blocks, including
    blocks frozen by operands that already moved past.  An operand at the top
    of its capped chain stays there: the full tile data was vetted by the
    memory allocator.
    """
    ops = [op for op in ("W", "O", "I") if op in chains]
    bounds = {d: layer.bound(d) for d in DIMS}
    cov = {d: min(eff_spatial[d], bounds[d]) for d in DIMS}
    level_of = {op: 0 for op in ops}
    cuts: dict[str, list[int]] = {op: [] for op in ops}
    fp = {op: layer.footprint(op, cov) for op in ops}
    frozen: dict[str, int] = {}
    caps = {}
    for op in ops:
        ch = chains[op]
        for name, cap, off in zip(ch.names, ch.caps, ch.offchip):
            caps[name] = (cap, off)

    def at_top(op: str) -> bool:
        return level_of[op] >= len(chains[op].names) - 1

    for pos, (dim, factor) in enumerate(loops):
        cov[dim] = min(cov[dim] * factor, bounds[dim])
        new_fp = {op: layer.footprint(op, cov) for op in ops}
        while True:
            # Occupancy per level, counting only operands below their top level.
            occ: dict[str, int] = dict(frozen)
            residents: dict[str, list[str]] = {}
            for op in ops:
                if at_top(op):
                    continue
                name = chains[op].names[level_of[op]]
                occ[name] = occ.get(name, 0) + new_fp[op] * layer.bits(op)
                residents.setdefault(name, []).append(op)
            bumped = False
            for name, used in occ.items():
                cap, off = caps[name]
                if off or used <= cap:
                    continue
                for op in ops:  # bump order: W, O, I
                    if op in residents.get(name, ()) and new_fp[op] > fp[op]:
                        frozen[name] = frozen.get(name, 0) + fp[op] * layer.bits(op)
                        cuts[op].append(pos)
                        level_of[op] += 1
                        bumped = True
                        break
                if bumped:
                    break
            if not bumped:
                break
        for op in ops:
            fp[op] = new_fp[op]

    n = len(loops)
    out = {}
    for op in ops:
        ch = chains[op]
        cs = cuts[op] + [n] * (len(ch.names) - 1 - len(cuts[op]))
        out[op] = tuple(cs)
    return out


def _runs(loops: Sequence[tuple[str, int]], start: int, relevant: frozenset[str]) -> tuple[int, int]:
    """(block-change count, distinct-block count) for loops above a boundary."""
    runs = 1
    distinct = 1
    seen = False
    for dim, factor in loops[start:]:
        if dim in relevant:
            runs *= factor
            distinct *= factor
            seen = True
        elif seen:
            runs *= factor
    return runs, distinct


def evaluate_mapping(
    layer: LayerInstance,
    acc: Accelerator,
    loops: Sequence[tuple[str, int]],
    cuts: Mapping[str, Sequence[int]] | None = None,
    keep_mapping: bool = False,
) -> LayerCost:
    """Price one temporal mapping on the capped accelerator.

    With cuts omitted they are derived by the greedy bottom-up allocator.
    """
    chains = {op: _chain(acc.chain(op)) for op in layer.operands()}
    eff, temporal, array_par = _spatial(acc, layer)
    if cuts is None:
        cuts = _allocate(loops, layer, chains, eff)

    macs = layer.mac_count
    bounds = {d: layer.bound(d) for d in DIMS}
    counts: dict[tuple[str, str], list[int]] = {}
    energy: dict[tuple[str, str], float] = {}
    port_busy: dict[tuple[str, int], float] = {}

    def add(level_name: str, op: str, reads: int, writes: int, e: float):
        key = (level_name, op)
        ent = counts.setdefault(key, [0, 0])
        ent[0] += reads
        ent[1] += writes
        energy[key] = energy.get(key, 0.0) + e

    # Compute-side accesses at each operand's lowest level.
    for op in layer.operands():
        ch = chains[op]
        name = ch.names[0]
        if op == "I":
            n = macs * layer.fanin
            add(name, op, n, 0, n * ch.read_E[0])
            port_busy_key = ch.read_port[0]
            port_busy[port_busy_key] = port_busy.get(port_busy_key, 0.0) + n * layer.act_bits / ch.read_bw[0]
        elif op == "W":
            add(name, op, macs, 0, macs * ch.read_E[0])
            key = ch.read_port[0]
            port_busy[key] = port_busy.get(key, 0.0) + macs * layer.weight_bits / ch.read_bw[0]
        else:  # O accumulates: read + write per MAC
            add(name, op, macs, macs, macs * (ch.read_E[0] + ch.write_E[0]))
            rk, wk = ch.read_port[0], ch.write_port[0]
            port_busy[rk] = port_busy.get(rk, 0.0) + macs * layer.act_bits / ch.read_bw[0]
            port_busy[wk] = port_busy.get(wk, 0.0) + macs * layer.act_bits / ch.write_bw[0]

    # Boundary crossings along each operand's chain.
    for op in layer.operands():
        ch = chains[op]
        rel = layer.relevant(op)
        op_bits = layer.bits(op)
        for j, cut in enumerate(cuts[op]):
            cov = dict(eff)
            for d in DIMS:
                cov[d] = min(cov[d], bounds[d])
            for dim, factor in loops[:cut]:
                cov[dim] = min(cov[dim] * factor, bounds[dim])
            block = layer.footprint(op, cov)
            if block == 0:
                continue
            block_bits = block * op_bits
            lo, hi = j, j + 1
            words_lo = -(-block_bits // ch.word_lens[lo])
            words_hi = -(-block_bits // ch.word_lens[hi])
            runs, distinct = _runs(loops, cut, rel)
            if op in ("W", "I"):
                # downward fills: read upper, write lower
                add(ch.names[hi], op, block * runs, 0, runs * words_hi * ch.read_E[hi])
                add(ch.names[lo], op, 0, block * runs, runs * words_lo * ch.write_E[lo])
                rk = ch.read_port[hi]
                wk = ch.write_port[lo]
                port_busy[rk] = port_busy.get(rk, 0.0) + runs * words_hi * ch.word_lens[hi] / ch.read_bw[hi]
                port_busy[wk] = port_busy.get(wk, 0.0) + runs * words_lo * ch.word_lens[lo] / ch.write_bw[lo]
            else:
                ups = runs
                downs = runs - distinct  # partial sums returning for more accumulation
                add(ch.names[lo], op, block * ups, block * downs,
                    ups * words_lo * ch.read_E[lo] + downs * words_lo * ch.write_E[lo])
                add(ch.names[hi], op, block * downs, block * ups,
                    downs * words_hi * ch.read_E[hi] + ups * words_hi * ch.write_E[hi])
                port_busy[ch.read_port[lo]] = port_busy.get(ch.read_port[lo], 0.0) + ups * words_lo * ch.word_lens[lo] / ch.read_bw[lo]
                port_busy[ch.write_port[hi]] = port_busy.get(ch.write_port[hi], 0.0) + ups * words_hi * ch.word_lens[hi] / ch.write_bw[hi]
                if downs:
                    port_busy[ch.read_port[hi]] = port_busy.get(ch.read_port[hi], 0.0) + downs * words_hi * ch.word_lens[hi] / ch.read_bw[hi]
                    port_busy[ch.write_port[lo]] = port_busy.get(ch.write_port[lo], 0.0) + downs * words_lo * ch.word_lens[lo] / ch.write_bw[lo]

    ideal_cycles = 1.0
    for d in DIMS:
        ideal_cycles *= temporal[d]
    util = macs / (ideal_cycles * array_par) if ideal_cycles else 0.0
    compute_cycles = max(ideal_cycles, max(port_busy.values(), default=0.0))

    # Pipeline fill/drain of the lowest blocks over the level-1 ports.
    prep = 0.0
    for op in layer.operands():
        ch = chains[op]
        if len(ch.names) < 2:
            continue
        cov = {d: min(eff[d], bounds[d]) for d in DIMS}
        block_bits = layer.footprint(op, cov) * layer.bits(op)
        if op == "O":
            prep += -(-block_bits // ch.word_lens[1]) * ch.word_lens[1] / ch.write_bw[1]
        else:
            prep += -(-block_bits // ch.word_lens[1]) * ch.word_lens[1] / ch.read_bw[1]

    mapping = TemporalMapping(tuple(loops), {op: tuple(v) for op, v in cuts.items()}) if keep_mapping else None
    return LayerCost(
        mac_count=macs,
        mac_energy_pJ=macs * acc.unit_mac_energy_pJ,
        counts=counts,
        mem_energy_pJ=energy,
        ideal_cycles=ideal_cycles,
        latency_cycles=compute_cycles + prep,
        spatial_utilization=util,
        mapping=mapping,
    )


def audit_capacity(layer: LayerInstance, acc: Accelerator, mapping: TemporalMapping) -> list[str]:
    """Independent check that per-level blocks fit the physical capacities.

    The top (capped) level of each operand holds the full tile data and is
    vetted by the memory allocator, so only inner levels are checked here.
    """
    violations = []
    bounds = {d: layer.bound(d) for d in DIMS}
    eff, _, _ = _spatial(acc, layer)
    per_level: dict[str, int] = {}
    for op in layer.operands():
        chain = acc.chain(op)
        cuts = mapping.cuts[op]
        for j, cut in enumerate(cuts):
            cov = {d: min(eff[d], bounds[d]) for d in DIMS}
            for dim, factor in mapping.loops[:cut]:
                cov[dim] = min(cov[dim] * factor, bounds[dim])
            per_level[chain[j].name] = per_level.get(chain[j].name, 0) + layer.footprint(op, cov) * layer.bits(op)
    for name, bits in per_level.items():
        lv = acc.level(name)
        if not lv.offchip and bits > lv.capacity_bits:
            violations.append(f"level {name}: mapped blocks {bits} bits exceed capacity {lv.capacity_bits}")
    return violations


_SEARCH_CACHE: dict = {}


def _cache_key(layer: LayerInstance, acc: Accelerator, lpf_limit: int, target: tuple):
    chain_sig = []
    for op in layer.operands():
        chain_sig.append(
            tuple(
                (lv.name, lv.capacity_bits, lv.word_length_bits, lv.read_energy_pJ,
                 lv.write_energy_pJ, lv.read_bw(), lv.write_bw(), lv.offchip)
                for lv in acc.chain(op)
            )
        )
    return (layer, tuple(chain_sig), acc.spatial_unrolling, acc.unit_mac_energy_pJ, lpf_limit, target)


def search_mapping(
    layer: LayerInstance,
    acc: Accelerator,
    lpf_limit: int = 6,
    target: tuple = ("energy",),
) -> tuple[TemporalMapping, LayerCost]:
    """Enumerate loop orderings and return the best mapping under the target.

    Ties break toward the lexicographically smallest ordering, so the result
    is deterministic regardless of evaluation order.
    """
    key = _cache_key(layer, acc, lpf_limit, target)
    hit = _SEARCH_CACHE.get(key)
    if hit is not None:
        return hit

    chains = {op: _chain(acc.chain(op)) for op in layer.operands()}
    eff, temporal, _ = _spatial(acc, layer)
    factors = merged_factors(temporal, lpf_limit)
    items = [(d, f) for d in DIMS for f in factors.get(d, [])]

    dim_index = {d: i for i, d in enumerate(DIMS)}
    best = None
    for perm in distinct_permutations(items):
        cuts = _allocate(perm, layer, chains, eff)
        cost = evaluate_mapping(layer, acc, perm, cuts)
        rank = (cost.metric(target), tuple((dim_index[d], f) for d, f in perm))
        if best is None or rank < best[0]:
            best = (rank, perm, cuts, cost)

    _, perm, cuts, cost = best
    mapping = TemporalMapping(tuple(perm), {op: tuple(v) for op, v in cuts.items()})
    cost.mapping = mapping
    result = (mapping, cost)
    _SEARCH_CACHE[key] = result
    return result


def clear_search_cache():
    _SEARCH_CACHE.clear()
