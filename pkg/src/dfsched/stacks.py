"""Partitioning the workload graph into fused-layer stacks (fuse-depth axis)."""

from __future__ import annotations

from dataclasses import dataclass

from .hardware import Accelerator, highest_onchip_weight_level
from .workload import Layer, WorkloadGraph, stack_weight_size_bits


class StackError(ValueError):
    """Raised when a proposed stack partition violates an invariant."""


@dataclass(frozen=True)
class Stack:
    layer_ids: tuple[int, ...]  # contiguous in topological order

    def __len__(self):
        return len(self.layer_ids)

    @property
    def output_layer_id(self) -> int:
        return self.layer_ids[-1]


@dataclass(frozen=True)
class StackPlan:
    stacks: tuple[Stack, ...]

    def __len__(self):
        return len(self.stacks)


def _segments(g: WorkloadGraph) -> list[list[int]]:
    """Split the topological order at branch-free cut points.

    A cut sits after layer v when exactly one data edge crosses it (v's own
    output); branch regions therefore stay whole within a segment.
    """
    order = [l.id for l in g.layers]
    position = {lid: i for i, lid in enumerate(order)}
    segments: list[list[int]] = []
    current: list[int] = []
    for i, lid in enumerate(order):
        current.append(lid)
        open_edges = 0
        for l in g.layers:
            if position[l.id] > i:
                open_edges += sum(1 for p in l.predecessors if position[p] <= i)
        if open_edges <= 1:
            segments.append(current)
            current = []
    if current:  # unreachable for valid graphs (last layer always closes)
        segments.append(current)
    return segments


def auto_stack(g: WorkloadGraph, acc: Accelerator) -> StackPlan:
    """Greedy forward packing of branch-free segments under the W-memory budget.

    A segment joins the running stack iff the accumulated weight total still
    fits the highest on-chip weight level; a segment that alone exceeds the
    budget is emitted as 1-layer stacks.
    """
    budget = highest_onchip_weight_level(acc).capacity_bits
    stacks: list[Stack] = []
    running: list[int] = []
    running_bits = 0
    for seg in _segments(g):
        seg_bits = stack_weight_size_bits(g.layer(lid) for lid in seg)
        if seg_bits > budget:
            if running:
                stacks.append(Stack(tuple(running)))
                running, running_bits = [], 0
            stacks.extend(Stack((lid,)) for lid in seg)
        elif running_bits + seg_bits <= budget:
            running.extend(seg)
            running_bits += seg_bits
        else:
            stacks.append(Stack(tuple(running)))
            running, running_bits = list(seg), seg_bits
    if running:
        stacks.append(Stack(tuple(running)))
    return StackPlan(tuple(stacks))


def single_layer_plan(g: WorkloadGraph) -> StackPlan:
    return StackPlan(tuple(Stack((l.id,)) for l in g.layers))


def whole_graph_plan(g: WorkloadGraph) -> StackPlan:
    return StackPlan((Stack(tuple(l.id for l in g.layers)),))


def validate_plan(g: WorkloadGraph, plan: StackPlan) -> StackPlan:
    order = [l.id for l in g.layers]
    position = {lid: i for i, lid in enumerate(order)}
    seen: list[int] = []
    for s in plan.stacks:
        if not s.layer_ids:
            raise StackError("empty stack")
        for lid in s.layer_ids:
            if lid not in position:
                raise StackError(f"stack references unknown layer {lid}")
        pos = [position[lid] for lid in s.layer_ids]
        if pos != list(range(pos[0], pos[0] + len(pos))):
            raise StackError(f"stack {s.layer_ids} is not contiguous in topological order")
        if seen and position[s.layer_ids[0]] != position[seen[-1]] + 1:
            raise StackError("stacks are not in topological order or do not partition the graph")
        members = set(s.layer_ids)
        for lid in s.layer_ids[:-1]:
            external = [t for t in g.successors(lid) if t not in members]
            if external:
                raise StackError(
                    f"edge {lid}->{external[0]} leaves stack {s.layer_ids} from a non-output layer"
                )
        seen.extend(s.layer_ids)
    if seen != order:
        raise StackError("stacks do not cover the whole graph exactly once")
    return plan


def explicit_plan(g: WorkloadGraph, stacks: list[list[int]]) -> StackPlan:
    return validate_plan(g, StackPlan(tuple(Stack(tuple(s)) for s in stacks)))


def stack_layers(g: WorkloadGraph, stack: Stack) -> tuple[Layer, ...]:
    return tuple(g.layer(lid) for lid in stack.layer_ids)


def stack_input_layer_ids(g: WorkloadGraph, stack: Stack) -> list[int]:
    members = set(stack.layer_ids)
    return [
        lid
        for lid in stack.layer_ids
        if not set(g.layer(lid).predecessors) & members
    ]
