#!/usr/bin/env python3
"""Regenerate the shipped accelerator and workload configs.

The five accelerator baselines and their DF-friendly variants are best-effort
reconstructions: spatial unrollings and buffer splits follow the published
descriptions, per-word energies are plausible CACTI-flavored values.  Each
pair keeps the total on-chip capacity identical; DF variants share an I/O
buffer at a lower level and give weights an on-chip home.
"""

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
KB = 8 * 1024
MB = 8 * 1024 * 1024

RECON = "reconstructed: capacity/energy values are plausible, not published"


def reg(name, serves, cap_words=1024, bits=8):
    return {
        "name": name,
        "capacity_bits": cap_words * bits,
        "word_length_bits": bits,
        "read_energy_pJ": 0.01,
        "write_energy_pJ": 0.012,
        "ports": [{"dir": "read-write", "bw_bits_per_cycle": 8192}],
        "serves": serves,
    }


def sram(name, serves, capacity_bits, word=64, read=4.0, write=4.4, bw=512, two_ports=True):
    ports = [{"dir": "read-write", "bw_bits_per_cycle": bw}]
    if two_ports:
        ports.append({"dir": "read-write", "bw_bits_per_cycle": bw})
    return {
        "name": name,
        "capacity_bits": capacity_bits,
        "word_length_bits": word,
        "read_energy_pJ": read,
        "write_energy_pJ": write,
        "ports": ports,
        "serves": serves,
        "comment": RECON,
    }


def dram():
    return {
        "name": "dram",
        "capacity_bits": 1 << 33,
        "word_length_bits": 64,
        "read_energy_pJ": 100.0,
        "write_energy_pJ": 110.0,
        "ports": [{"dir": "read-write", "bw_bits_per_cycle": 64}],
        "serves": ["W", "I", "O"],
        "offchip": True,
        "comment": "DRAM bandwidth fixed to 64 bit/cycle",
    }


def acc(name, unrolling, levels):
    return {
        "name": name,
        "mac_count": 1024,
        "unit_mac_energy_pJ": 0.5,
        "spatial_unrolling": unrolling,
        "memory_levels": [reg("reg_w", ["W"]), reg("reg_i", ["I"]), reg("reg_o", ["O"])]
        + levels
        + [dram()],
    }


ACCELERATORS = {
    # Meta-prototype-like: OX|OY array with K/C sharing, split activation LBs.
    "meta_proto_like": acc(
        "meta_proto_like",
        [["K", 8], ["C", 8], ["OX", 4], ["OY", 4]],
        [
            sram("lb_w", ["W"], 32 * KB, read=4.0, write=4.4),
            sram("lb_i", ["I"], 64 * KB, read=5.0, write=5.5),
            sram("lb_o", ["O"], 64 * KB, read=5.0, write=5.5),
            sram("gb", ["I", "O"], 2 * MB, word=256, read=25.0, write=27.5, bw=256),
        ],
    ),
    "meta_proto_like_df": acc(
        "meta_proto_like_df",
        [["K", 8], ["C", 8], ["OX", 4], ["OY", 4]],
        [
            sram("lb_w", ["W"], 32 * KB, read=4.0, write=4.4),
            sram("lb_io", ["I", "O"], 128 * KB, read=6.0, write=6.6),
            sram("gb", ["I", "O"], 2 * MB, word=256, read=25.0, write=27.5, bw=256),
        ],
    ),
    # TPU-like: systolic K|C, one big unified activation buffer, no on-chip
    # weight memory above the registers.
    "tpu_like": acc(
        "tpu_like",
        [["K", 32], ["C", 32]],
        [sram("ub", ["I", "O"], 2 * MB, word=256, read=25.0, write=27.5, bw=256)],
    ),
    "tpu_like_df": acc(
        "tpu_like_df",
        [["K", 32], ["C", 32]],
        [
            sram("lb_io", ["I", "O"], 256 * KB, read=8.0, write=8.8),
            sram("gb", ["W", "I", "O"], 2 * MB - 256 * KB, word=256, read=24.0, write=26.4, bw=256),
        ],
    ),
    "edge_tpu_like": acc(
        "edge_tpu_like",
        [["K", 16], ["C", 16], ["OX", 2], ["OY", 2]],
        [sram("gb", ["W", "I", "O"], 2 * MB, word=256, read=25.0, write=27.5, bw=256)],
    ),
    "edge_tpu_like_df": acc(
        "edge_tpu_like_df",
        [["K", 16], ["C", 16], ["OX", 2], ["OY", 2]],
        [
            sram("lb_io", ["I", "O"], 256 * KB, read=8.0, write=8.8),
            sram("gb", ["W", "I", "O"], 2 * MB - 256 * KB, word=256, read=24.0, write=26.4, bw=256),
        ],
    ),
    "ascend_like": acc(
        "ascend_like",
        [["K", 16], ["C", 4], ["OX", 4], ["OY", 4]],
        [
            sram("lb_w", ["W"], 64 * KB, read=5.0, write=5.5),
            sram("lb_io", ["I", "O"], 64 * KB, read=5.0, write=5.5),
            sram("gb", ["I", "O"], 2 * MB - 128 * KB, word=256, read=24.5, write=27.0, bw=256),
        ],
    ),
    "ascend_like_df": acc(
        "ascend_like_df",
        [["K", 16], ["C", 4], ["OX", 4], ["OY", 4]],
        [
            sram("lb_w", ["W"], 64 * KB, read=5.0, write=5.5),
            sram("lb_io", ["I", "O"], 128 * KB, read=6.0, write=6.6),
            sram("gb", ["I", "O"], 2 * MB - 192 * KB, word=256, read=24.2, write=26.6, bw=256),
        ],
    ),
    "tesla_npu_like": acc(
        "tesla_npu_like",
        [["K", 32], ["OX", 32]],
        [
            sram("lb_w", ["W"], 32 * KB, read=4.0, write=4.4),
            sram("gb", ["I", "O"], 2 * MB - 32 * KB, word=256, read=25.0, write=27.5, bw=256),
        ],
    ),
    "tesla_npu_like_df": acc(
        "tesla_npu_like_df",
        [["K", 32], ["OX", 32]],
        [
            sram("lb_w", ["W"], 32 * KB, read=4.0, write=4.4),
            sram("lb_io", ["I", "O"], 96 * KB, read=5.5, write=6.0),
            sram("gb", ["I", "O"], 2 * MB - 128 * KB, word=256, read=24.5, write=27.0, bw=256),
        ],
    ),
    # Small config for experiments at desk scale.
    "toy_acc": {
        "name": "toy_acc",
        "mac_count": 16,
        "unit_mac_energy_pJ": 0.5,
        "spatial_unrolling": [["K", 2], ["C", 2], ["OX", 2], ["OY", 2]],
        "memory_levels": [
            reg("reg_w", ["W"], cap_words=64),
            reg("reg_i", ["I"], cap_words=64),
            reg("reg_o", ["O"], cap_words=64),
            sram("lb_w", ["W"], 2 * KB, read=1.0, write=1.1, bw=128, two_ports=False),
            sram("lb_io", ["I", "O"], 4 * KB, read=1.2, write=1.3, bw=128),
            sram("gb", ["W", "I", "O"], 64 * KB, word=128, read=8.0, write=8.8, bw=128),
            dram(),
        ],
    },
}


def conv(id, K, C, OX, OY, F, preds, stride=1, pad=0):
    return {
        "id": id,
        "kind": "conv",
        "K": K,
        "C": C,
        "OX": OX,
        "OY": OY,
        "FX": F,
        "FY": F,
        "stride": [stride, stride],
        "pad": [pad] * 4,
        "predecessors": preds,
        "act_bits": 8,
        "weight_bits": 8,
    }


def fsrcnn_like():
    # Feature extraction / shrink / 4 mappings / expand / reconstruction,
    # unpadded so maps shrink toward the 960x540 output.
    return {
        "name": "fsrcnn_like",
        "batch": 1,
        "layers": [
            conv(1, 56, 3, 976, 556, 5, []),
            conv(2, 12, 56, 976, 556, 1, [1]),
            conv(3, 12, 12, 974, 554, 3, [2]),
            conv(4, 12, 12, 972, 552, 3, [3]),
            conv(5, 12, 12, 970, 550, 3, [4]),
            conv(6, 12, 12, 968, 548, 3, [5]),
            conv(7, 56, 12, 968, 548, 1, [6]),
            conv(8, 1, 56, 960, 540, 9, [7]),
        ],
    }


def reference_net_11():
    # 10 layers of K=32, 3x3, plus a final 1x1 with K=16, on 1280x720x3 input.
    layers = [conv(1, 32, 3, 1280, 720, 3, [], pad=1)]
    for i in range(2, 11):
        layers.append(conv(i, 32, 32, 1280, 720, 3, [i - 1], pad=1))
    layers.append(conv(11, 16, 32, 1280, 720, 1, [10]))
    return {"name": "reference_net_11", "batch": 1, "layers": layers}


def branch_toy():
    # A split with differing receptive fields rejoined by an elementwise add.
    return {
        "name": "branch_toy",
        "batch": 1,
        "layers": [
            conv(1, 8, 3, 32, 32, 3, [], pad=1),
            conv(2, 8, 8, 32, 32, 3, [1], pad=1),
            conv(3, 8, 8, 32, 32, 5, [1], pad=2),
            {
                "id": 4,
                "kind": "elementwise-add",
                "K": 8,
                "C": 8,
                "OX": 32,
                "OY": 32,
                "FX": 1,
                "FY": 1,
                "stride": [1, 1],
                "pad": [0, 0, 0, 0],
                "predecessors": [2, 3],
                "act_bits": 8,
                "weight_bits": 8,
            },
            conv(5, 4, 8, 32, 32, 3, [4], pad=1),
        ],
    }


def toy_net():
    return {
        "name": "toy_net",
        "batch": 1,
        "layers": [
            conv(1, 8, 3, 48, 24, 3, [], pad=1),
            conv(2, 8, 8, 48, 24, 3, [1], pad=1),
            conv(3, 4, 8, 48, 24, 3, [2], pad=1),
        ],
    }


WORKLOADS = {
    "fsrcnn_like": fsrcnn_like(),
    "reference_net_11": reference_net_11(),
    "branch_toy": branch_toy(),
    "toy_net": toy_net(),
}


def main():
    acc_dir = ROOT / "configs" / "accelerators"
    wl_dir = ROOT / "configs" / "workloads"
    acc_dir.mkdir(parents=True, exist_ok=True)
    wl_dir.mkdir(parents=True, exist_ok=True)
    for name, doc in ACCELERATORS.items():
        (acc_dir / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
    for name, doc in WORKLOADS.items():
        (wl_dir / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {len(ACCELERATORS)} accelerators, {len(WORKLOADS)} workloads")


if __name__ == "__main__":
    main()
