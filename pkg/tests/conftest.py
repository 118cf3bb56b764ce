import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dfsched.hardware import parse_accelerator
from dfsched.workload import parse_workload

CONFIGS = Path(__file__).parent.parent / "configs"


def load_workload(name):
    return parse_workload((CONFIGS / "workloads" / f"{name}.json").read_text(), name=name)


def load_accelerator(name):
    return parse_accelerator((CONFIGS / "accelerators" / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def fsrcnn():
    return load_workload("fsrcnn_like")


@pytest.fixture(scope="session")
def meta_proto_df():
    return load_accelerator("meta_proto_like_df")


@pytest.fixture(scope="session")
def toy_net():
    return load_workload("toy_net")


@pytest.fixture(scope="session")
def toy_acc():
    return load_accelerator("toy_acc")


@pytest.fixture(scope="session")
def branch_toy():
    return load_workload("branch_toy")


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS
