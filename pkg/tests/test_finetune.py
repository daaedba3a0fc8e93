"""Objective functions, pool behaviour, and the hill-climb loop."""

import sys

import numpy as np
import pytest

from synthdag.chem import parse_smiles
from synthdag.dag import BuildingBlockCatalog, replay, serialize
from synthdag.finetune import (
    ContainsRing,
    ExternalCommand,
    HeavyAtomTarget,
    ObjectiveError,
    Pool,
    TanimotoToTarget,
    hill_climb,
    objective_from_spec,
    report,
    score_molecules,
)
from synthdag.model import RouteModel, micro_config
from synthdag.oracle import LookupOracle, build_table

from conftest import canon


def toy_training_world(seed=0):
    catalog = BuildingBlockCatalog(["CCO", "CC(=O)O", "CCN", "OCCO"])
    reactions = [
        (["CCO", "CC(=O)O"], "CC(=O)OCC"),
        (["CCN", "CC(=O)O"], "CC(=O)NCC"),
        (["OCCO", "CC(=O)O"], "CC(=O)OCCO"),
        (["CCN", "OCCO"], "OCCNCC"),   # held out of training below
    ]
    oracle = LookupOracle(build_table(reactions))
    model = RouteModel(micro_config("gen"), catalog, seed=seed)
    # Training routes cover the first three reactions only.
    train_dags = []
    for reactants, product in reactions[:3]:
        seq = _seq(reactants, product)
        train_dags.append(replay(seq, oracle, catalog, np.random.default_rng(0)))
    return model, catalog, oracle, train_dags


def _seq(reactants, product):
    from synthdag.dag import block_node, connect, pick_block, product_node, stop_final

    actions = []
    for r in reactants:
        actions += [block_node(), pick_block(canon(r))]
    actions.append(product_node())
    actions += [connect(canon(r)) for r in reactants]
    # Both reactants are consumed here, so STOP_F auto-connects nothing and
    # the explicit connects define the final reaction.
    actions.append(stop_final(product=canon(product)))
    return actions


# -- objectives ----------------------------------------------------------------


def test_tanimoto_objective_self_is_one():
    obj = TanimotoToTarget("CC(=O)OCC")
    assert obj.score(parse_smiles("CC(=O)OCC")) == 1.0
    assert 0.0 <= obj.score(parse_smiles("CCN")) < 1.0


def test_heavy_atom_objective():
    obj = HeavyAtomTarget(10)
    assert obj.score(parse_smiles("C" * 10)) == 1.0
    assert obj.score(parse_smiles("C" * 5)) == 0.5
    assert obj.score(parse_smiles("C" * 25)) == 0.0  # clamped


def test_ring_objective():
    assert ContainsRing(6).score(parse_smiles("c1ccccc1")) == 1.0
    assert ContainsRing(6).score(parse_smiles("C1CCCC1")) == 0.0
    assert ContainsRing(5).score(parse_smiles("C1CCCC1")) == 1.0
    assert ContainsRing(6).score(parse_smiles("CCCCCC")) == 0.0


def test_external_command_objective():
    cmd = f"{sys.executable} -c \"import sys; [print(0.5) for _ in sys.stdin]\""
    obj = ExternalCommand(cmd)
    assert obj.score(parse_smiles("CCO")) == 0.5
    assert obj.score_many(["CCO", "CCN", "c1ccccc1"]) == [0.5, 0.5, 0.5]


def test_external_command_errors():
    bad_exit = ExternalCommand(f"{sys.executable} -c \"import sys; sys.exit(3)\"")
    with pytest.raises(ObjectiveError):
        bad_exit.score(parse_smiles("CCO"))
    not_numeric = ExternalCommand(
        f"{sys.executable} -c \"import sys; [print('spam') for _ in sys.stdin]\""
    )
    with pytest.raises(ObjectiveError):
        not_numeric.score(parse_smiles("CCO"))


def test_objective_spec_parsing():
    assert isinstance(objective_from_spec("tanimoto:CCO"), TanimotoToTarget)
    assert isinstance(objective_from_spec("heavy_atoms:12"), HeavyAtomTarget)
    assert isinstance(objective_from_spec("ring:6"), ContainsRing)
    assert isinstance(objective_from_spec("external:echo 1.0"), ExternalCommand)
    with pytest.raises(ObjectiveError):
        objective_from_spec("vibes:good")


def test_score_molecules_parallel_matches_serial():
    obj = HeavyAtomTarget(4)
    smiles = ["CCO", "CCCC", "CCCCCC", "C"]
    assert score_molecules(obj, smiles, workers=2) == score_molecules(obj, smiles, workers=1)


# -- pool ----------------------------------------------------------------------


def test_pool_dedup_and_ranking():
    model, catalog, oracle, train_dags = toy_training_world()
    pool = Pool()
    assert pool.add(train_dags[0], 0.5, 0)
    assert not pool.add(train_dags[0], 0.5, 1)  # same route: deduplicated
    assert pool.add(train_dags[1], 0.9, 1)
    assert pool.add(train_dags[2], 0.1, 1)
    assert len(pool) == 3
    ranked = pool.ranked()
    assert [e.score for e in ranked] == [0.9, 0.5, 0.1]
    assert pool.max_score() == 0.9
    assert pool.top(2)[0].score == 0.9


def test_report_single_entry():
    _, _, _, train_dags = toy_training_world()
    pool = Pool()
    pool.add(train_dags[0], 0.7, 0)
    pool.record_round()
    summary = report(pool, top_n=100)
    assert summary["best_score"] == 0.7
    assert summary["mean_top"] == 0.7
    assert summary["trajectory"] == [0.7]


# -- hill climb ----------------------------------------------------------------


def test_hill_climb_zero_rounds_returns_seeded_pool():
    model, catalog, oracle, train_dags = toy_training_world()
    before = {k: v.data.copy() for k, v in model.store.params.items()}
    _, pool = hill_climb(model, HeavyAtomTarget(6), oracle, train_dags,
                         rounds=0, samples_per_round=10, top_k=5,
                         rng=np.random.default_rng(0), max_steps=12)
    assert len(pool) == len(train_dags)
    for k, v in before.items():
        assert np.array_equal(model.store.params[k].data, v)


def test_hill_climb_target_in_seed_pool_hits_one_immediately():
    model, catalog, oracle, train_dags = toy_training_world()
    target = train_dags[0].final_smiles()
    _, pool = hill_climb(model, TanimotoToTarget(target), oracle, train_dags,
                         rounds=1, samples_per_round=5, top_k=3,
                         rng=np.random.default_rng(0), max_steps=12,
                         batch_size=2)
    assert pool.max_score() == 1.0
    assert pool.trajectory[0] == 1.0  # seeded before any sampling


def test_hill_climb_trajectory_monotone_and_pool_grows():
    model, catalog, oracle, train_dags = toy_training_world(seed=2)
    model2, pool = hill_climb(model, HeavyAtomTarget(8), oracle, train_dags,
                              rounds=3, samples_per_round=20, top_k=5,
                              rng=np.random.default_rng(1), max_steps=12,
                              batch_size=4)
    assert len(pool.trajectory) == 4  # seed + 3 rounds
    assert all(a <= b + 1e-12 for a, b in zip(pool.trajectory, pool.trajectory[1:]))
    assert len(pool) >= len(train_dags)
    summary = report(pool, top_n=5)
    assert summary["best_score"] == pool.trajectory[-1]
