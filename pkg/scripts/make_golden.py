#!/usr/bin/env python3
"""Regenerate the golden fixtures consumed by the plotting frontend's tests:
a small deterministic sweep CSV and one evaluation detail JSON."""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dfsched.engine import cost_result_to_dict, evaluate, rows_to_csv, sweep, uniform_strategy
from dfsched.hardware import parse_accelerator
from dfsched.stacks import auto_stack
from dfsched.tiling import OverlapMode
from dfsched.workload import parse_workload


def main():
    g = parse_workload((ROOT / "configs/workloads/toy_net.json").read_text(), "toy_net")
    acc = parse_accelerator((ROOT / "configs/accelerators/toy_acc.json").read_text())
    tiles = [(tx, ty) for tx in (1, 8, 48) for ty in (1, 6, 24)]
    rows = sweep(g, acc, tiles, list(OverlapMode), lpf_limit=4)
    fixtures = ROOT / "frontend" / "tests" / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    (fixtures / "golden_sweep.csv").write_text(rows_to_csv(rows, acc))

    plan = auto_stack(g, acc)
    res = evaluate(g, acc, uniform_strategy(plan, 8, 6, OverlapMode.FULLY_CACHED), lpf_limit=4)
    (fixtures / "golden_detail.json").write_text(
        json.dumps(cost_result_to_dict(res), indent=2) + "\n"
    )
    print(f"wrote {fixtures / 'golden_sweep.csv'} ({len(rows)} rows) and golden_detail.json")


if __name__ == "__main__":
    main()
