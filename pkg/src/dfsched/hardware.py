"""Accelerator description: PE array, fixed spatial unrolling, memory hierarchy."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

OPERANDS = ("W", "I", "O")
LOOP_DIMS = ("K", "C", "OX", "OY", "FX", "FY")


class HardwareError(ValueError):
    """Raised for invalid accelerator documents."""


@dataclass(frozen=True)
class Port:
    direction: str  # "read" | "write" | "read-write"
    bw_bits_per_cycle: int

    @property
    def can_read(self) -> bool:
        return self.direction in ("read", "read-write")

    @property
    def can_write(self) -> bool:
        return self.direction in ("write", "read-write")


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    capacity_bits: int
    word_length_bits: int
    read_energy_pJ: float
    write_energy_pJ: float
    ports: tuple[Port, ...]
    serves: frozenset[str]
    offchip: bool = False
    comment: str | None = None

    def read_port_index(self) -> int:
        for i, p in enumerate(self.ports):
            if p.can_read:
                return i
        raise HardwareError(f"level {self.name} has no read-capable port")

    def write_port_index(self) -> int:
        for i, p in enumerate(self.ports):
            if p.can_write:
                return i
        raise HardwareError(f"level {self.name} has no write-capable port")

    def read_bw(self) -> int:
        return self.ports[self.read_port_index()].bw_bits_per_cycle

    def write_bw(self) -> int:
        return self.ports[self.write_port_index()].bw_bits_per_cycle

    def words(self, bits: int) -> int:
        return -(-bits // self.word_length_bits) if bits > 0 else 0


@dataclass(frozen=True)
class Accelerator:
    name: str
    mac_count: int
    unit_mac_energy_pJ: float
    spatial_unrolling: tuple[tuple[str, int], ...]
    memory_levels: tuple[MemoryLevel, ...]  # ordered lowest (closest to PEs) to highest
    # Per-operand chains, lowest to highest.  Normally derived from `serves`;
    # restrict_top_level produces values with truncated chains.
    chains: Mapping[str, tuple[MemoryLevel, ...]] = None  # type: ignore[assignment]
    direct_paths: bool = False

    def __post_init__(self):
        if self.chains is None:
            chains = {
                op: tuple(lv for lv in self.memory_levels if op in lv.serves) for op in OPERANDS
            }
            object.__setattr__(self, "chains", chains)

    def chain(self, operand: str) -> tuple[MemoryLevel, ...]:
        return self.chains[operand]

    def level(self, name: str) -> MemoryLevel:
        for lv in self.memory_levels:
            if lv.name == name:
                return lv
        raise KeyError(name)

    def spatial_factor(self, dim: str) -> int:
        return math.prod(f for d, f in self.spatial_unrolling if d == dim)

    def activation_route(self) -> tuple[MemoryLevel, ...]:
        """Ordered levels data-copy actions may traverse (anything serving I or O)."""
        return tuple(lv for lv in self.memory_levels if ("I" in lv.serves or "O" in lv.serves))

    def onchip_capacity_bits(self) -> int:
        return sum(lv.capacity_bits for lv in self.memory_levels if not lv.offchip)

    def dram(self) -> MemoryLevel:
        return self.memory_levels[-1]


def operand_chain(acc: Accelerator, operand: str) -> tuple[MemoryLevel, ...]:
    if operand not in OPERANDS:
        raise HardwareError(f"unknown operand {operand!r}")
    return acc.chain(operand)


def restrict_top_level(acc: Accelerator, caps: Mapping[str, str]) -> Accelerator:
    """Truncate each operand's chain above the named cap level.

    The original accelerator is unmodified; physical memory_levels are kept so
    capacity audits still see the real hierarchy.
    """
    chains = dict(acc.chains)
    for op, cap_name in caps.items():
        chain = acc.chain(op)
        names = [lv.name for lv in chain]
        if cap_name not in names:
            raise HardwareError(f"cap level {cap_name!r} is not on the {op} chain {names}")
        chains[op] = chain[: names.index(cap_name) + 1]
    return replace(acc, chains=chains)


def _require(cond: bool, msg: str):
    if not cond:
        raise HardwareError(msg)


def _validate(acc: Accelerator) -> Accelerator:
    _require(acc.mac_count >= 1, "mac_count must be >= 1")
    names = [lv.name for lv in acc.memory_levels]
    _require(len(names) == len(set(names)), "duplicate memory level names")
    for d, f in acc.spatial_unrolling:
        _require(d in LOOP_DIMS, f"unknown spatial unroll dimension {d!r}")
        _require(f >= 1, f"spatial unroll factor for {d} must be >= 1")
    _require(
        math.prod(f for _, f in acc.spatial_unrolling) <= acc.mac_count,
        "product of spatial unroll factors exceeds the MAC count",
    )
    for lv in acc.memory_levels:
        _require(lv.capacity_bits > 0, f"level {lv.name}: capacity must be > 0")
        _require(lv.word_length_bits > 0, f"level {lv.name}: word length must be > 0")
        _require(len(lv.ports) >= 1, f"level {lv.name}: needs at least one port")
        for p in lv.ports:
            _require(p.bw_bits_per_cycle > 0, f"level {lv.name}: port bandwidth must be > 0")
            _require(p.direction in ("read", "write", "read-write"), f"level {lv.name}: bad port direction")
        lv.read_port_index()
        lv.write_port_index()
        _require(lv.serves and lv.serves <= set(OPERANDS), f"level {lv.name}: bad served operand set")

    offchip = [lv for lv in acc.memory_levels if lv.offchip]
    _require(len(offchip) == 1, "exactly one off-chip (DRAM) level is required")
    _require(acc.memory_levels[-1].offchip, "the off-chip level must be the highest level")
    _require(offchip[0].serves == set(OPERANDS), "the off-chip level must serve W, I and O")
    for op in OPERANDS:
        chain = acc.chain(op)
        _require(len(chain) >= 2, f"operand {op}: chain needs at least a register level and DRAM")
        _require(chain[-1].offchip, f"operand {op}: chain must end at the off-chip level")
        _require(not chain[0].offchip, f"operand {op}: lowest level must be on-chip (register level)")
    return acc


def accelerator_from_dict(doc: Mapping) -> Accelerator:
    try:
        levels = []
        for i, entry in enumerate(doc["memory_levels"]):
            ports = tuple(
                Port(direction=str(p["dir"]), bw_bits_per_cycle=int(p["bw_bits_per_cycle"]))
                for p in entry["ports"]
            )
            levels.append(
                MemoryLevel(
                    name=str(entry["name"]),
                    capacity_bits=int(entry["capacity_bits"]),
                    word_length_bits=int(entry["word_length_bits"]),
                    read_energy_pJ=float(entry["read_energy_pJ"]),
                    write_energy_pJ=float(entry["write_energy_pJ"]),
                    ports=ports,
                    serves=frozenset(entry["serves"]),
                    offchip=bool(entry.get("offchip", False)),
                    comment=entry.get("comment"),
                )
            )
        acc = Accelerator(
            name=str(doc["name"]),
            mac_count=int(doc["mac_count"]),
            unit_mac_energy_pJ=float(doc["unit_mac_energy_pJ"]),
            spatial_unrolling=tuple((str(d), int(f)) for d, f in doc["spatial_unrolling"]),
            memory_levels=tuple(levels),
            direct_paths=bool(doc.get("direct_paths", False)),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise HardwareError(f"missing or malformed field in accelerator document: {exc}") from exc
    return _validate(acc)


def parse_accelerator(text: str) -> Accelerator:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HardwareError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return accelerator_from_dict(doc)


def accelerator_to_dict(acc: Accelerator) -> dict:
    return {
        "name": acc.name,
        "mac_count": acc.mac_count,
        "unit_mac_energy_pJ": acc.unit_mac_energy_pJ,
        "spatial_unrolling": [[d, f] for d, f in acc.spatial_unrolling],
        "direct_paths": acc.direct_paths,
        "memory_levels": [
            {
                "name": lv.name,
                "capacity_bits": lv.capacity_bits,
                "word_length_bits": lv.word_length_bits,
                "read_energy_pJ": lv.read_energy_pJ,
                "write_energy_pJ": lv.write_energy_pJ,
                "ports": [
                    {"dir": p.direction, "bw_bits_per_cycle": p.bw_bits_per_cycle} for p in lv.ports
                ],
                "serves": sorted(lv.serves),
                "offchip": lv.offchip,
                **({"comment": lv.comment} if lv.comment else {}),
            }
            for lv in acc.memory_levels
        ],
    }


def serialize_accelerator(acc: Accelerator) -> str:
    return json.dumps(accelerator_to_dict(acc), indent=2)


def highest_onchip_weight_level(acc: Accelerator) -> MemoryLevel:
    """Highest on-chip level on the W chain; the register level if nothing else."""
    onchip = [lv for lv in acc.chain("W") if not lv.offchip]
    return onchip[-1]
