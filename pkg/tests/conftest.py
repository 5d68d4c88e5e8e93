from pathlib import Path

import pytest

from policymap.closure import right_iterate
from policymap.topology import (
    adjacency_matrix,
    build_model,
    load_topology,
    transitivity_matrix,
)

DATA = Path(__file__).parent / "data"

ALL_TRANSITIVE = {"Z1": True, "Z2": True, "Z3": True, "Z4": True}
Z4_CLOSED = {"Z1": True, "Z2": True, "Z3": True, "Z4": False}

Z1_Z3_ALL_OPEN = "{A12C23, A12D23, B12C23, B12D23, E14F43, E14G43}"
Z1_Z3_LAB_CLOSED = "{A12C23, A12D23, B12C23, B12D23}"


def data_path(name: str) -> Path:
    return DATA / name


@pytest.fixture(scope="session")
def diamond_topology():
    return load_topology(DATA / "diamond.graphml")


@pytest.fixture
def diamond_model(diamond_topology):
    return build_model(diamond_topology, dict(ALL_TRANSITIVE))


@pytest.fixture
def diamond_model_z4_closed(diamond_topology):
    return build_model(diamond_topology, dict(Z4_CLOSED))


def closure_of(model):
    return right_iterate(adjacency_matrix(model), transitivity_matrix(model))


@pytest.fixture
def diamond_astar(diamond_model):
    return closure_of(diamond_model)
