"""Shared fixtures: a small chemistry world used across the suite."""

import numpy as np
import pytest

from synthdag.chem import canonical_key
from synthdag.dag import (
    BUILDING_BLOCK,
    PRODUCT,
    BuildingBlockCatalog,
    DagNode,
    SynthesisDAG,
)
from synthdag.oracle import LookupOracle, build_table

PHENOL = "Oc1ccccc1"
NITRIC = "O[N+](=O)[O-]"
HYDROGEN = "[H][H]"
ANHYDRIDE = "CC(=O)OC(C)=O"
NITROPHENOL = "O=[N+]([O-])c1ccc(O)cc1"
AMINOPHENOL = "Nc1ccc(O)cc1"
PARACETAMOL = "CC(=O)Nc1ccc(O)cc1"


def canon(s):
    return canonical_key(s)


@pytest.fixture(scope="session")
def paracetamol_world():
    """4 building blocks, 3 reactions, and the corresponding DAG."""
    blocks = BuildingBlockCatalog([PHENOL, NITRIC, HYDROGEN, ANHYDRIDE])
    reactions = [
        ([PHENOL, NITRIC], NITROPHENOL),
        ([NITROPHENOL, HYDROGEN], AMINOPHENOL),
        ([AMINOPHENOL, ANHYDRIDE], PARACETAMOL),
    ]
    oracle = LookupOracle(build_table(reactions))
    nodes = (
        DagNode(0, BUILDING_BLOCK, canon(PHENOL)),
        DagNode(1, BUILDING_BLOCK, canon(NITRIC)),
        DagNode(2, PRODUCT, canon(NITROPHENOL)),
        DagNode(3, BUILDING_BLOCK, canon(HYDROGEN)),
        DagNode(4, PRODUCT, canon(AMINOPHENOL)),
        DagNode(5, BUILDING_BLOCK, canon(ANHYDRIDE)),
        DagNode(6, PRODUCT, canon(PARACETAMOL)),
    )
    edges = ((0, 2), (1, 2), (2, 4), (3, 4), (4, 6), (5, 6))
    dag = SynthesisDAG(nodes, edges, 6)
    return {"catalog": blocks, "oracle": oracle, "dag": dag, "reactions": reactions}


@pytest.fixture()
def rng():
    return np.random.default_rng(7)
