"""Analytical cost model and design-space exploration for depth-first
(layer-fused) DNN scheduling on parameterized accelerators."""

from .allocation import (
    DataDemand,
    Placement,
    assign_top_memories,
    audit_placement,
    compute_demand,
    derive_capped_accelerator,
)
from .copies import CopyAction, price_bundle
from .engine import (
    CostResult,
    DFStrategy,
    StackStrategy,
    best_combination,
    cost_result_to_dict,
    evaluate,
    evaluate_stack,
    rows_to_csv,
    sweep,
    uniform_strategy,
)
from .hardware import (
    Accelerator,
    MemoryLevel,
    operand_chain,
    parse_accelerator,
    restrict_top_level,
    serialize_accelerator,
)
from .mapping import LayerCost, LayerInstance, evaluate_mapping, search_mapping
from .stacks import StackPlan, auto_stack, explicit_plan, single_layer_plan, whole_graph_plan
from .tiling import (
    Interval,
    OverlapMode,
    Region,
    identify_tile_types,
    mac_count,
    merge_branch_cache,
    stack_geometry,
    tile_grid,
)
from .workload import (
    Layer,
    LayerKind,
    WorkloadGraph,
    layer_mac_count,
    parse_workload,
    serialize_workload,
    stack_weight_size_bits,
    weight_size_bits,
)

__version__ = "0.1.0"
