"""Command-line front end: evaluate, sweep, autostack, validate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .engine import (
    MODES_BY_ID,
    SweepRow,
    cost_result_to_dict,
    evaluate,
    rows_to_csv,
    sweep,
    sweep_strategy_id,
    uniform_strategy,
)
from .hardware import parse_accelerator
from .stacks import auto_stack, single_layer_plan, whole_graph_plan
from .tiling import MODE_NAMES
from .workload import parse_workload

CONFIG_DIR_ENV = "DFSCHED_CONFIG_DIR"
_PACKAGED_CONFIGS = Path(__file__).resolve().parent.parent.parent.parent / "configs"


def _resolve(path: str, kind: str) -> Path:
    """Literal path, then $DFSCHED_CONFIG_DIR, then the shipped configs."""
    p = Path(path)
    if p.exists():
        return p
    candidates = []
    env = os.environ.get(CONFIG_DIR_ENV)
    stem = path if path.endswith(".json") else f"{path}.json"
    if env:
        candidates += [Path(env) / stem, Path(env) / kind / stem]
    candidates += [_PACKAGED_CONFIGS / kind / stem]
    for c in candidates:
        if c.exists():
            return c
    raise FileNotFoundError(f"{kind} config not found: {path!r} (searched {[str(c) for c in candidates]})")


def _load_inputs(args):
    acc_path = _resolve(args.accelerator, "accelerators")
    wl_path = _resolve(args.workload, "workloads")
    acc = parse_accelerator(acc_path.read_text())
    g = parse_workload(wl_path.read_text(), name=wl_path.stem)
    return g, acc


def _plan(args, g, acc):
    if args.stacks == "auto":
        return auto_stack(g, acc)
    if args.stacks == "sl":
        return single_layer_plan(g)
    return whole_graph_plan(g)


def _target(spec: str) -> tuple:
    if spec.startswith("weighted:"):
        we, wl = spec.split(":", 1)[1].split(",")
        return ("weighted", float(we), float(wl))
    if spec in ("energy", "latency", "edp"):
        return (spec,)
    raise argparse.ArgumentTypeError(f"unknown target {spec!r}")


def _add_common(p):
    p.add_argument("--accelerator", required=True, help="accelerator config path or shipped name")
    p.add_argument("--workload", required=True, help="workload config path or shipped name")


def _add_run_common(p):
    p.add_argument("--target", type=_target, default=("energy",),
                   help="energy | latency | edp | weighted:WE,WL (default energy)")
    p.add_argument("--lpf-limit", type=int, default=6,
                   help="loop-prime-factor budget for the mapping search (default 6)")
    p.add_argument("--stacks", choices=["auto", "sl", "single"], default="auto",
                   help="fused-stack plan: auto (weight-fit greedy), sl (one layer per stack), single (whole graph)")
    p.add_argument("--out", default="results", help="output directory")


def cmd_evaluate(args) -> int:
    if args.tilex < 1 or args.tiley < 1:
        print("error: --tilex/--tiley must be >= 1", file=sys.stderr)
        return 2
    g, acc = _load_inputs(args)
    plan = _plan(args, g, acc)
    mode = MODES_BY_ID[args.dfmode]
    strategy = uniform_strategy(plan, args.tilex, args.tiley, mode, args.target)
    result = evaluate(g, acc, strategy, lpf_limit=args.lpf_limit)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{g.name}__{acc.name}__{sweep_strategy_id(args.tilex, args.tiley, mode)}"
    (outdir / f"{stem}.json").write_text(json.dumps(cost_result_to_dict(result), indent=2))
    row = SweepRow(
        strategy_id=sweep_strategy_id(args.tilex, args.tiley, mode),
        tx=args.tilex, ty=args.tiley, mode=mode, result=result,
    )
    (outdir / f"{stem}.csv").write_text(rows_to_csv([row], acc))
    print(
        f"{stem}: energy {result.energy_total_pJ:.3e} pJ, latency {result.latency_cycles:.3e} cycles,"
        f" {result.mac_count} MACs, {result.tile_type_count} tile types"
    )
    return 0


def cmd_sweep(args) -> int:
    g, acc = _load_inputs(args)
    plan = _plan(args, g, acc)
    try:
        xs, ys = args.grid.split("x")
        tile_sizes = [(int(tx), int(ty)) for tx in xs.split(",") for ty in ys.split(",")]
    except ValueError:
        print(f"error: bad --grid {args.grid!r}, expected 'tx1,tx2x ty1,ty2'", file=sys.stderr)
        return 2
    modes = [MODES_BY_ID[int(m)] for m in args.modes.split(",")]

    out = Path(args.out)
    skip: set[str] = set()
    existing: dict[str, list[str]] = {}
    if args.resume and out.exists():
        import csv as _csv

        with out.open() as fh:
            reader = _csv.reader(fh)
            header = next(reader, None)
            for rec in reader:
                if header and len(rec) == len(header):
                    row = dict(zip(header, rec))
                    if row.get("status") == "ok":
                        skip.add(row["strategy_id"])
                        existing[row["strategy_id"]] = rec

    rows = sweep(
        g, acc, tile_sizes, modes,
        target=args.target, lpf_limit=args.lpf_limit,
        plan=plan, threads=args.threads, skip_ids=skip,
    )
    fresh_csv = rows_to_csv(rows, acc)
    if skip:
        # splice resumed rows back in canonical grid order
        lines = fresh_csv.splitlines()
        header_line = lines[0]
        by_id = {line.split(",", 2)[1]: line for line in lines[1:]}
        all_rows = []
        for mode in modes:
            for ty in sorted({t[1] for t in tile_sizes}):
                for tx in sorted({t[0] for t in tile_sizes}):
                    if (tx, ty) not in tile_sizes:
                        continue
                    sid = sweep_strategy_id(tx, ty, mode)
                    if sid in by_id:
                        all_rows.append(by_id[sid])
                    elif sid in existing:
                        import csv as _csv, io as _io

                        buf = _io.StringIO()
                        _csv.writer(buf, lineterminator="\n").writerow(existing[sid])
                        all_rows.append(buf.getvalue().rstrip("\n"))
        text = "\n".join([header_line] + all_rows) + "\n"
    else:
        text = fresh_csv
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    failures = [r for r in rows if r.status != "ok"]
    print(f"sweep: {len(rows)} evaluated, {len(skip)} resumed, {len(failures)} failed -> {out}")
    for r in failures:
        print(f"  {r.strategy_id}: {r.error}", file=sys.stderr)
    return 1 if failures else 0


def cmd_autostack(args) -> int:
    g, acc = _load_inputs(args)
    plan = auto_stack(g, acc)
    for i, stack in enumerate(plan.stacks):
        print(f"stack {i}: layers {list(stack.layer_ids)}")
    return 0


def cmd_validate(args) -> int:
    try:
        g, acc = _load_inputs(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: workload {g.name!r} ({len(g.layers)} layers), accelerator {acc.name!r} "
          f"({len(acc.memory_levels)} memory levels)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dfsched",
        description="Analytical energy/latency estimation for depth-first DNN schedules",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("evaluate", help="evaluate one depth-first strategy")
    _add_common(pe)
    _add_run_common(pe)
    pe.add_argument("--dfmode", type=int, choices=[0, 1, 2], default=2,
                    help="overlap storing mode: 0 fully-recompute, 1 h-cached-v-recompute, 2 fully-cached")
    pe.add_argument("--tilex", type=int, required=True)
    pe.add_argument("--tiley", type=int, required=True)
    pe.set_defaults(func=cmd_evaluate)

    ps = sub.add_parser("sweep", help="sweep tile sizes and overlap modes, emit CSV")
    _add_common(ps)
    _add_run_common(ps)
    ps.add_argument("--grid", required=True, help="tile grid, e.g. '1,4,16,60,240,960x1,4,18,72,270,540'")
    ps.add_argument("--modes", default="0,1,2", help="comma-separated mode ids (default all)")
    ps.add_argument("--threads", type=int, default=1, help="parallel workers (output stays deterministic)")
    ps.add_argument("--resume", action="store_true", help="skip rows already present in the output CSV")
    ps.set_defaults(func=cmd_sweep)

    pa = sub.add_parser("autostack", help="print the automatic fused-stack plan")
    _add_common(pa)
    pa.set_defaults(func=cmd_autostack)

    pv = sub.add_parser("validate", help="lint a workload + accelerator pair")
    _add_common(pv)
    pv.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
