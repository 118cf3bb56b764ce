#!/usr/bin/env python3
"""Sweep the 108 depth-first schedules (6x6 tile sizes x 3 overlap modes) of
the FSRCNN-like workload on the meta-proto-like-DF accelerator and emit the
sweep CSV consumed by the plotting frontend.

Single-threaded this takes a few minutes at the default lpf limit of 6;
pass --threads to parallelize.
"""

import argparse
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dfsched.engine import rows_to_csv, sweep
from dfsched.hardware import parse_accelerator
from dfsched.tiling import OverlapMode
from dfsched.workload import parse_workload

GRID_TX = (1, 4, 16, 60, 240, 960)
GRID_TY = (1, 4, 18, 72, 270, 540)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results" / "fsrcnn_meta_proto_df_sweep.csv"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--lpf-limit", type=int, default=6)
    args = ap.parse_args()

    g = parse_workload((ROOT / "configs/workloads/fsrcnn_like.json").read_text(), "fsrcnn_like")
    acc = parse_accelerator((ROOT / "configs/accelerators/meta_proto_like_df.json").read_text())
    tiles = [(tx, ty) for tx in GRID_TX for ty in GRID_TY]

    t0 = time.time()
    rows = sweep(g, acc, tiles, list(OverlapMode), lpf_limit=args.lpf_limit, threads=args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows, acc))

    ok = [r for r in rows if r.status == "ok"]
    best = min(ok, key=lambda r: r.result.energy_total_pJ)
    print(f"{len(rows)} rows in {time.time() - t0:.0f}s -> {out}")
    print(f"best energy: {best.strategy_id} at {best.result.energy_total_pJ:.3e} pJ")


if __name__ == "__main__":
    main()
