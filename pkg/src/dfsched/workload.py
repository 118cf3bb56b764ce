"""DNN workload representation: a DAG of conv-like layers parsed from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence


class WorkloadError(ValueError):
    """Raised for syntactic or semantic problems in a workload document."""


class LayerKind(str, Enum):
    CONV = "conv"
    DEPTHWISE_CONV = "depthwise-conv"
    POOLING = "pooling"
    ELEMENTWISE_ADD = "elementwise-add"


# Kinds whose input channels are coupled 1:1 to output channels (each output
# channel reads only its own input channel) and whose op count therefore
# carries no C factor.
CHANNEL_COUPLED = frozenset(
    {LayerKind.DEPTHWISE_CONV, LayerKind.POOLING, LayerKind.ELEMENTWISE_ADD}
)
WEIGHTLESS = frozenset({LayerKind.POOLING, LayerKind.ELEMENTWISE_ADD})


@dataclass(frozen=True)
class Layer:
    id: int
    kind: LayerKind
    K: int
    C: int
    OX: int
    OY: int
    FX: int
    FY: int
    stride_x: int = 1
    stride_y: int = 1
    pad_left: int = 0
    pad_right: int = 0
    pad_top: int = 0
    pad_bottom: int = 0
    predecessors: tuple[int, ...] = ()
    act_bits: int = 8
    weight_bits: int = 8

    @property
    def input_extent_x(self) -> int:
        """Implied input width: (OX-1)*stride + FX - pad_left - pad_right."""
        return (self.OX - 1) * self.stride_x + self.FX - self.pad_left - self.pad_right

    @property
    def input_extent_y(self) -> int:
        return (self.OY - 1) * self.stride_y + self.FY - self.pad_top - self.pad_bottom

    @property
    def weightless(self) -> bool:
        return self.kind in WEIGHTLESS

    @property
    def channel_coupled(self) -> bool:
        return self.kind in CHANNEL_COUPLED

    @property
    def fanin(self) -> int:
        """Number of distinct input maps read per output element."""
        return max(1, len(self.predecessors)) if self.kind is LayerKind.ELEMENTWISE_ADD else 1


def weight_size_bits(layer: Layer) -> int:
    if layer.weightless:
        return 0
    if layer.kind is LayerKind.DEPTHWISE_CONV:
        return layer.C * layer.FX * layer.FY * layer.weight_bits
    return layer.K * layer.C * layer.FX * layer.FY * layer.weight_bits


def stack_weight_size_bits(layers: Iterable[Layer]) -> int:
    return sum(weight_size_bits(l) for l in layers)


def layer_mac_count(layer: Layer) -> int:
    """Op count for a full output map; channel-coupled kinds drop the C factor."""
    c = 1 if layer.channel_coupled else layer.C
    return layer.K * c * layer.OX * layer.OY * layer.FX * layer.FY


@dataclass(frozen=True)
class WorkloadGraph:
    name: str
    layers: tuple[Layer, ...]  # in deterministic topological order

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {l.id: l for l in self.layers})

    def layer(self, layer_id: int) -> Layer:
        return self._by_id[layer_id]

    def successors(self, layer_id: int) -> list[int]:
        return [l.id for l in self.layers if layer_id in l.predecessors]

    @property
    def input_layers(self) -> list[Layer]:
        return [l for l in self.layers if not l.predecessors]

    @property
    def final_layer(self) -> Layer:
        finals = [l for l in self.layers if not self.successors(l.id)]
        assert len(finals) == 1
        return finals[0]

    def total_mac_count(self) -> int:
        return sum(layer_mac_count(l) for l in self.layers)

    def total_weight_bits(self) -> int:
        return stack_weight_size_bits(self.layers)


def _toposort(layers: Sequence[Layer]) -> tuple[Layer, ...]:
    """Kahn's algorithm, breaking ties by ascending layer id."""
    by_id = {l.id: l for l in layers}
    remaining_preds = {l.id: set(l.predecessors) for l in layers}
    ready = sorted(lid for lid, preds in remaining_preds.items() if not preds)
    order: list[Layer] = []
    while ready:
        lid = ready.pop(0)
        order.append(by_id[lid])
        newly = []
        for l in layers:
            if lid in remaining_preds[l.id]:
                remaining_preds[l.id].discard(lid)
                if not remaining_preds[l.id]:
                    newly.append(l.id)
        ready = sorted(ready + newly)
    if len(order) != len(layers):
        cyclic = sorted(lid for lid, preds in remaining_preds.items() if preds)
        raise WorkloadError(f"workload graph is cyclic or has dangling edges at layers {cyclic}")
    return tuple(order)


def _require(cond: bool, msg: str):
    if not cond:
        raise WorkloadError(msg)


def _validate(graph: WorkloadGraph) -> WorkloadGraph:
    ids = [l.id for l in graph.layers]
    _require(len(ids) == len(set(ids)), "duplicate layer ids")
    by_id = {l.id: l for l in graph.layers}

    for l in graph.layers:
        where = f"layer {l.id}"
        for name in ("K", "C", "OX", "OY", "FX", "FY"):
            _require(getattr(l, name) >= 1, f"{where}: {name} must be >= 1")
        _require(l.stride_x >= 1 and l.stride_y >= 1, f"{where}: strides must be >= 1")
        _require(
            min(l.pad_left, l.pad_right, l.pad_top, l.pad_bottom) >= 0,
            f"{where}: padding must be non-negative",
        )
        _require(l.act_bits >= 1 and l.weight_bits >= 1, f"{where}: bit widths must be >= 1")
        for p in l.predecessors:
            _require(p in by_id, f"{where}: unknown predecessor {p}")
            _require(p != l.id, f"{where}: self-loop")

        if l.kind is LayerKind.ELEMENTWISE_ADD:
            _require(len(l.predecessors) >= 2, f"{where}: elementwise-add needs >= 2 predecessors")
            _require(l.FX == 1 and l.FY == 1, f"{where}: elementwise-add must have FX=FY=1")
            _require(l.K == l.C, f"{where}: elementwise-add must have K == C")
            _require(l.stride_x == 1 and l.stride_y == 1, f"{where}: elementwise-add must have stride 1")
        else:
            _require(len(l.predecessors) <= 1, f"{where}: only elementwise-add may have multiple predecessors")
        if l.kind is LayerKind.DEPTHWISE_CONV:
            _require(l.K == l.C, f"{where}: depthwise-conv must have K == C")
        if l.kind is LayerKind.POOLING:
            _require(l.K == l.C, f"{where}: pooling must preserve channels (K == C)")

        # Spatial consistency with each predecessor's output map.
        for p in l.predecessors:
            pred = by_id[p]
            _require(
                l.input_extent_x == pred.OX,
                f"{where}: implied input width {l.input_extent_x} != predecessor {p} OX {pred.OX}",
            )
            _require(
                l.input_extent_y == pred.OY,
                f"{where}: implied input height {l.input_extent_y} != predecessor {p} OY {pred.OY}",
            )
            _require(
                l.C == pred.K,
                f"{where}: input channels {l.C} != predecessor {p} output channels {pred.K}",
            )

    finals = [l for l in graph.layers if not graph.successors(l.id)]
    _require(len(finals) == 1, f"workload must have exactly one final layer, found {[l.id for l in finals]}")
    return graph


def workload_from_dict(doc: Mapping, name: str = "workload") -> WorkloadGraph:
    if not isinstance(doc, Mapping) or "layers" not in doc:
        raise WorkloadError("workload document must be an object with a 'layers' array")
    batch = doc.get("batch", 1)
    if batch != 1:
        raise WorkloadError(f"batch size {batch} not supported (only batch 1)")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        try:
            kind = LayerKind(entry.get("kind", "conv"))
            stride = entry.get("stride", [1, 1])
            pad = entry.get("pad", [0, 0, 0, 0])
            layers.append(
                Layer(
                    id=int(entry["id"]),
                    kind=kind,
                    K=int(entry["K"]),
                    C=int(entry["C"]),
                    OX=int(entry["OX"]),
                    OY=int(entry["OY"]),
                    FX=int(entry["FX"]),
                    FY=int(entry["FY"]),
                    stride_x=int(stride[0]),
                    stride_y=int(stride[1]),
                    pad_left=int(pad[0]),
                    pad_right=int(pad[1]),
                    pad_top=int(pad[2]),
                    pad_bottom=int(pad[3]),
                    predecessors=tuple(int(p) for p in entry.get("predecessors", [])),
                    act_bits=int(entry.get("act_bits", 8)),
                    weight_bits=int(entry.get("weight_bits", 8)),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise WorkloadError(f"layers[{i}]: missing or malformed field ({exc})") from exc
        except ValueError as exc:
            raise WorkloadError(f"layers[{i}]: {exc}") from exc
    graph = WorkloadGraph(name=str(doc.get("name", name)), layers=_toposort(layers))
    return _validate(graph)


def parse_workload(text: str, name: str = "workload") -> WorkloadGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return workload_from_dict(doc, name=name)


def workload_to_dict(graph: WorkloadGraph) -> dict:
    return {
        "name": graph.name,
        "batch": 1,
        "layers": [
            {
                "id": l.id,
                "kind": l.kind.value,
                "K": l.K,
                "C": l.C,
                "OX": l.OX,
                "OY": l.OY,
                "FX": l.FX,
                "FY": l.FY,
                "stride": [l.stride_x, l.stride_y],
                "pad": [l.pad_left, l.pad_right, l.pad_top, l.pad_bottom],
                "predecessors": list(l.predecessors),
                "act_bits": l.act_bits,
                "weight_bits": l.weight_bits,
            }
            for l in graph.layers
        ],
    }


def serialize_workload(graph: WorkloadGraph) -> str:
    return json.dumps(workload_to_dict(graph), indent=2)
