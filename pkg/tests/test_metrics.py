"""Sample metrics and synthesizability scoring."""

import pytest

from synthdag.chem import Fingerprint, parse_smiles, reaction_fingerprint, tanimoto
from synthdag.dag import BUILDING_BLOCK, PRODUCT, DagNode, SynthesisDAG
from synthdag.metrics import (
    MetricsError,
    ReactionCorpusIndex,
    sample_metrics,
    step_count,
    synth_score,
)

from conftest import canon


def one_step_dag(reactants, product):
    nodes = [DagNode(i, BUILDING_BLOCK, canon(r)) for i, r in enumerate(reactants)]
    final = DagNode(len(nodes), PRODUCT, canon(product))
    edges = tuple((i, final.id) for i in range(len(nodes)))
    return SynthesisDAG(tuple(nodes) + (final,), edges, final.id)


def two_step_dag():
    nodes = (
        DagNode(0, BUILDING_BLOCK, canon("CCO")),
        DagNode(1, BUILDING_BLOCK, canon("CC(=O)O")),
        DagNode(2, PRODUCT, canon("CC(=O)OCC")),
        DagNode(3, BUILDING_BLOCK, canon("CCN")),
        DagNode(4, PRODUCT, canon("CC(=O)NCC")),
    )
    return SynthesisDAG(nodes, ((0, 2), (1, 2), (2, 4), (3, 4)), 4)


# -- sample metrics -------------------------------------------------------------


def test_metric_definitions_fixture():
    # {A, A, B} with B novel: validity 1.0, uniqueness 2/3, novelty 1/2.
    report = sample_metrics(["CCO", "OCC", "CCN"], train_set=["CCO"])
    assert report.validity == 1.0
    assert report.uniqueness == 2 / 3
    assert report.novelty == 1 / 2


def test_all_identical_in_train():
    report = sample_metrics(["CCO", "CCO", "CCO"], train_set=["CCO"])
    assert report.validity == 1.0
    assert report.uniqueness == 1 / 3
    assert report.novelty == 0.0


def test_invalid_samples_counted_out():
    report = sample_metrics(["CCO", "((((", "not_smiles"], train_set=[])
    assert report.validity == 1 / 3
    assert report.uniqueness == 1.0
    assert report.novelty == 1.0


def test_empty_samples_rejected():
    with pytest.raises(MetricsError):
        sample_metrics([], train_set=[])


def test_fractions_bounded():
    report = sample_metrics(["CCO", "CCN", "CCC", "CCO"], train_set=["CCC"])
    for value in (report.validity, report.uniqueness, report.novelty):
        assert 0.0 <= value <= 1.0


# -- synthesizability ------------------------------------------------------------


CORPUS = [
    (["CCO", "CC(=O)O"], "CC(=O)OCC"),
    (["CC(=O)OCC", "CCN"], "CC(=O)NCC"),
    (["OCCO", "CC(=O)O"], "CC(=O)OCCO"),
    (["CCO"], "CCCl"),
    (["CCN", "CCCl"], "CCNCC"),
]


def test_exact_corpus_match_scores_one():
    index = ReactionCorpusIndex.from_records(CORPUS)
    assert synth_score(two_step_dag(), index) == 1.0


def test_geometric_mean_quarter_one_half():
    # First reaction matches the corpus exactly (similarity 1.0); the second
    # gets a crafted nearest neighbor containing all of its bits plus three
    # times as many fresh ones, pinning similarity at exactly n/4n = 0.25.
    ester = CORPUS[0]
    amide_fp = reaction_fingerprint(
        [parse_smiles("CC(=O)OCC"), parse_smiles("CCN")], parse_smiles("CC(=O)NCC")
    )
    n = len(amide_fp.bits)
    fresh = [b for b in range(amide_fp.width) if b not in amide_fp.bits][: 3 * n]
    crafted = Fingerprint(amide_fp.bits | frozenset(fresh), amide_fp.width, amide_fp.radius)
    assert tanimoto(amide_fp, crafted) == 0.25
    ester_fp = reaction_fingerprint(
        [parse_smiles(r) for r in ester[0]], parse_smiles(ester[1])
    )
    assert tanimoto(amide_fp, ester_fp) < 0.25  # the crafted neighbor is nearest
    assert tanimoto(ester_fp, crafted) < 1.0
    index = ReactionCorpusIndex(fingerprints=[ester_fp, crafted])
    score = synth_score(two_step_dag(), index)
    assert abs(score - 0.5) < 1e-9


def test_scores_match_exhaustive_nearest_neighbor_oracle():
    index = ReactionCorpusIndex.from_records(CORPUS)
    fps = index.fingerprints
    dag = two_step_dag()
    got = synth_score(dag, index)
    # Oracle: independent all-pairs scan over the same reactions.
    expected = 1.0
    for reactant_keys, product_key in dag.reactions():
        fp = reaction_fingerprint(
            [parse_smiles(r) for r in reactant_keys], parse_smiles(product_key)
        )
        expected *= max(tanimoto(fp, other) for other in fps)
    expected **= 1.0 / len(dag.reactions())
    assert got == pytest.approx(expected, abs=1e-12)


def test_synth_score_monotone_in_single_similarity():
    # Replacing a reaction's nearest neighbor with a less similar one can
    # only lower the route score.
    dag = one_step_dag(["OCCO", "CC(=O)O"], "CC(=O)OCCO")
    exact = ReactionCorpusIndex.from_records([CORPUS[2]])
    other = ReactionCorpusIndex.from_records([CORPUS[3]])
    assert synth_score(dag, exact) == 1.0
    assert synth_score(dag, other) < 1.0


def test_synth_score_requires_reactions_and_corpus():
    dag = one_step_dag(["CCO"], "CCCl")
    with pytest.raises(MetricsError):
        synth_score(dag, ReactionCorpusIndex())


def test_step_count():
    assert step_count(two_step_dag()) == 2
    assert step_count(one_step_dag(["CCO"], "CCCl")) == 1


def test_paracetamol_step_count(paracetamol_world):
    assert step_count(paracetamol_world["dag"]) == 3


def test_sample_metrics_with_synth_summary():
    index = ReactionCorpusIndex.from_records(CORPUS)
    dags = [two_step_dag(), one_step_dag(["CCO", "CC(=O)O"], "CC(=O)OCC")]
    report = sample_metrics(
        [d.final_smiles() for d in dags], train_set=[], dags=dags, index=index
    )
    assert report.synth_mean == 1.0
    assert report.synth_median_steps == 1.5
