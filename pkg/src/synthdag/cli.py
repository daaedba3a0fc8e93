"""Command-line entry points for the full workflow.

Every subcommand writes into a run directory: config.json (the invocation
echo), manifest.json (seed, version, wall time), and its outputs under
outputs/.  All randomness descends from --seed through named streams, so
identical (config, seed) pairs produce byte-identical outputs.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .chem import canonical_key
from .dag import BuildingBlockCatalog, serialize, validate
from .dataset import (
    build_network,
    extract_dags,
    filter_reactions,
    load_dags_jsonl,
    parse_reactions,
    split_corpus,
    write_dags_jsonl,
)
from .finetune import hill_climb, objective_from_spec, report
from .metrics import ReactionCorpusIndex, sample_metrics, step_count, synth_score
from .model import (
    ModelConfig,
    RouteModel,
    TrainSchedule,
    ae_defaults,
    gen_defaults,
    latent_walk,
    load_model,
    save_model,
    train,
    union_graph,
)
from .oracle import DEFAULT_TIMEOUT_MS, oracle_from_spec
from .rng import child_rng


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.exceptions.Exit:
            raise
        except click.UsageError:
            raise
        except Exception as exc:  # noqa: BLE001 - structured CLI error surface
            payload = {"error": type(exc).__name__, "message": str(exc)}
            click.echo(json.dumps(payload), err=True)
            sys.exit(1)


@click.group(cls=_Group)
@click.version_option(__version__)
def main():
    """Generate, train, and optimise molecules with their synthesis routes."""


def _run_dir(out: str) -> Path:
    root = Path(out)
    (root / "outputs").mkdir(parents=True, exist_ok=True)
    return root


def _finish(root: Path, command: str, config: dict, started: float):
    config = {k: v for k, v in config.items() if v is not None}
    (root / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))
    manifest = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _dump_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True))


def _model_options(preset):
    def wrap(fn):
        for args, kwargs in reversed(
            [
                (("--ggnn-steps",), dict(type=int, default=None)),
                (("--node-dim",), dict(type=int, default=None)),
                (("--embed-dim",), dict(type=int, default=None)),
                (("--context-layers",), dict(type=int, default=None)),
                (("--context-dim",), dict(type=int, default=None)),
                (("--latent-dim",), dict(type=int, default=None)),
                (("--action-hidden",), dict(type=int, default=None)),
                (("--max-steps",), dict(type=int, default=None)),
                (("--dropout",), dict(type=float, default=None)),
            ]
        ):
            fn = click.option(*args, **kwargs)(fn)
        return fn

    return wrap


def _build_config(preset, **overrides) -> ModelConfig:
    keys = {
        "ggnn_steps", "node_dim", "embed_dim", "context_layers", "context_dim",
        "latent_dim", "action_hidden", "max_steps", "dropout",
    }
    picked = {k: v for k, v in overrides.items() if k in keys and v is not None}
    return preset(**picked)


@main.command("build-dataset")
@click.option("--reactions", required=True, type=click.Path(exists=True))
@click.option("--blocks", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
@click.option("--fractions", default="0.9,0.05,0.05", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def build_dataset_cmd(reactions, blocks, out, fractions, seed):
    """Build synthesis routes from a reaction file and a block catalog."""
    started = time.time()
    root = _run_dir(out)
    catalog = BuildingBlockCatalog.from_file(blocks)
    records, rejects = parse_reactions(reactions)
    records = filter_reactions(records)
    net = build_network(records, catalog)
    dags = extract_dags(net)
    write_dags_jsonl(dags, root / "outputs" / "dags.jsonl")
    fracs = tuple(float(x) for x in fractions.split(","))
    parts = split_corpus(list(range(len(dags))), fracs, seed)
    _dump_json(root / "outputs" / "split_manifest.json",
               {name: sorted(idx) for name, idx in parts.items()})
    _dump_json(root / "outputs" / "rejects.json", rejects)
    _finish(root, "build-dataset", dict(reactions=str(reactions), blocks=str(blocks),
                                        out=out, fractions=fractions, seed=seed), started)
    click.echo(f"wrote {len(dags)} routes ({len(rejects)} rejected lines)")


def _train_command(name, preset, default_epochs):
    @main.command(name)
    @click.option("--dags", "dags_path", required=True, type=click.Path(exists=True))
    @click.option("--valid-dags", type=click.Path(exists=True), default=None)
    @click.option("--blocks", required=True, type=click.Path(exists=True))
    @click.option("--out", required=True)
    @click.option("--epochs", type=int, default=default_epochs, show_default=True)
    @click.option("--lr", type=float, default=1e-3, show_default=True)
    @click.option("--batch-size", type=int, default=64, show_default=True)
    @click.option("--lam", type=float, default=10.0, show_default=True)
    @click.option("--lr-drop", "lr_drops", multiple=True,
                  help="epoch:factor, may repeat (e.g. --lr-drop 300:0.1)")
    @click.option("--seed", type=int, default=0, show_default=True)
    @click.option("--checkpoint-every", type=int, default=0, show_default=True)
    @_model_options(preset)
    def cmd(dags_path, valid_dags, blocks, out, epochs, lr, batch_size, lam,
            lr_drops, seed, checkpoint_every, **model_kw):
        started = time.time()
        root = _run_dir(out)
        catalog = BuildingBlockCatalog.from_file(blocks)
        config = _build_config(preset, **model_kw)
        model = RouteModel(config, catalog, seed=seed)
        train_dags = load_dags_jsonl(dags_path)
        valid = load_dags_jsonl(valid_dags) if valid_dags else None
        drops = {}
        for item in lr_drops:
            epoch_s, factor_s = item.split(":")
            drops[int(epoch_s)] = float(factor_s)
        schedule = TrainSchedule(epochs=epochs, lr=lr, batch_size=batch_size,
                                 lr_drops=drops, lam=lam, seed=seed,
                                 checkpoint_every=checkpoint_every,
                                 out_dir=str(root / "outputs"))
        rows = train(model, train_dags, valid, schedule,
                     log=lambda row: click.echo(json.dumps(row)))
        _finish(root, name, dict(dags=str(dags_path), valid_dags=valid_dags,
                                 blocks=str(blocks), out=out, epochs=epochs, lr=lr,
                                 batch_size=batch_size, lam=lam,
                                 lr_drop=list(lr_drops), seed=seed,
                                 checkpoint_every=checkpoint_every,
                                 model=config.to_dict()), started)
        click.echo(f"final train nll {rows[-1]['nll']:.4f}" if rows else "no epochs")

    return cmd


_train_command("train-gen", gen_defaults, default_epochs=30)
_train_command("train-ae", ae_defaults, default_epochs=400)


@main.command("sample")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--blocks", required=True, type=click.Path(exists=True))
@click.option("--oracle", "oracle_spec", required=True)
@click.option("--n", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--greedy", is_flag=True)
@click.option("--max-steps", type=int, default=None)
@click.option("--oracle-timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS, show_default=True)
@click.option("--out", required=True)
def sample_cmd(checkpoint, blocks, oracle_spec, n, seed, greedy, max_steps,
               oracle_timeout_ms, out):
    """Sample synthesis routes from a trained model."""
    started = time.time()
    root = _run_dir(out)
    catalog = BuildingBlockCatalog.from_file(blocks)
    model = load_model(checkpoint, catalog)
    oracle = oracle_from_spec(oracle_spec, timeout_ms=oracle_timeout_ms)
    rng = child_rng(seed, "sample")
    dags = []
    for _ in range(n):
        dag, _, _ = model.sample_dag(oracle, rng, max_steps=max_steps, greedy=greedy)
        issues = validate(dag)
        if issues:
            raise RuntimeError(f"sampled an invalid route: {issues}")
        dags.append(dag)
    write_dags_jsonl(dags, root / "outputs" / "dags.jsonl")
    with open(root / "outputs" / "finals.smi", "w", encoding="utf-8") as fh:
        for d in dags:
            fh.write(d.final_smiles() + "\n")
    _finish(root, "sample", dict(checkpoint=str(checkpoint), blocks=str(blocks),
                                 oracle=oracle_spec, n=n, seed=seed, greedy=greedy,
                                 max_steps=max_steps,
                                 oracle_timeout_ms=oracle_timeout_ms, out=out), started)
    click.echo(f"sampled {len(dags)} routes")


@main.command("encode")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--blocks", required=True, type=click.Path(exists=True))
@click.option("--dags", "dags_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def encode_cmd(checkpoint, blocks, dags_path, out):
    """Encode routes into latent mean/log-variance vectors."""
    started = time.time()
    root = _run_dir(out)
    catalog = BuildingBlockCatalog.from_file(blocks)
    model = load_model(checkpoint, catalog)
    dags = load_dags_jsonl(dags_path)
    from .nn import no_grad

    with no_grad(), open(root / "outputs" / "latents.jsonl", "w", encoding="utf-8") as fh:
        for d in dags:
            mu, logvar = model.encode(d)
            fh.write(json.dumps({
                "final": d.final_smiles(),
                "mu": [float(x) for x in mu.data.reshape(-1)],
                "logvar": [float(x) for x in logvar.data.reshape(-1)],
            }) + "\n")
    _finish(root, "encode", dict(checkpoint=str(checkpoint), blocks=str(blocks),
                                 dags=str(dags_path), out=out), started)
    click.echo(f"encoded {len(dags)} routes")


@main.command("walk")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--blocks", required=True, type=click.Path(exists=True))
@click.option("--oracle", "oracle_spec", required=True)
@click.option("--n", type=int, default=5, show_default=True)
@click.option("--step-size", type=float, default=0.5, show_default=True)
@click.option("--start-dags", type=click.Path(exists=True), default=None,
              help="encode the first route here as the walk origin")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-tries", type=int, default=200, show_default=True)
@click.option("--out", required=True)
def walk_cmd(checkpoint, blocks, oracle_spec, n, step_size, start_dags, seed,
             max_tries, out):
    """Random-walk the latent space until n distinct routes decode."""
    started = time.time()
    root = _run_dir(out)
    catalog = BuildingBlockCatalog.from_file(blocks)
    model = load_model(checkpoint, catalog)
    oracle = oracle_from_spec(oracle_spec)
    from .nn import no_grad

    if start_dags:
        origin = load_dags_jsonl(start_dags)[0]
        with no_grad():
            mu, _ = model.encode(origin)
        z0 = mu.data.reshape(-1)
    else:
        z0 = np.zeros(model.config.latent_dim, dtype=np.float32)
    dags, union = latent_walk(model, z0, step_size, n, oracle,
                              child_rng(seed, "walk"), max_tries=max_tries)
    write_dags_jsonl(dags, root / "outputs" / "walk_dags.jsonl")
    _dump_json(root / "outputs" / "union.json", union)
    _finish(root, "walk", dict(checkpoint=str(checkpoint), blocks=str(blocks),
                               oracle=oracle_spec, n=n, step_size=step_size,
                               start_dags=start_dags, seed=seed,
                               max_tries=max_tries, out=out), started)
    click.echo(f"collected {len(dags)} distinct routes")


@main.command("finetune")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--blocks", required=True, type=click.Path(exists=True))
@click.option("--oracle", "oracle_spec", required=True)
@click.option("--dags", "dags_path", required=True, type=click.Path(exists=True),
              help="training routes used to seed the pool")
@click.option("--objective", "objective_spec", required=True)
@click.option("-I", "--rounds", type=int, default=10, show_default=True)
@click.option("-N", "--samples-per-round", type=int, default=500, show_default=True)
@click.option("-K", "--topk", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-steps", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", required=True)
def finetune_cmd(checkpoint, blocks, oracle_spec, dags_path, objective_spec,
                 rounds, samples_per_round, topk, lr, batch_size, seed,
                 max_steps, workers, out):
    """Hill-climb the model toward a scalar objective."""
    started = time.time()
    root = _run_dir(out)
    catalog = BuildingBlockCatalog.from_file(blocks)
    model = load_model(checkpoint, catalog)
    oracle = oracle_from_spec(oracle_spec)
    objective = objective_from_spec(objective_spec)
    train_dags = load_dags_jsonl(dags_path)
    model, pool = hill_climb(
        model, objective, oracle, train_dags, rounds=rounds,
        samples_per_round=samples_per_round, top_k=topk,
        rng=child_rng(seed, "finetune"), lr=lr, batch_size=batch_size,
        max_steps=max_steps, workers=workers,
        log=lambda row: click.echo(json.dumps(row)),
    )
    with open(root / "outputs" / "pool.jsonl", "w", encoding="utf-8") as fh:
        for entry in pool.ranked():
            fh.write(json.dumps({
                "score": entry.score,
                "final": entry.final,
                "round": entry.round_added,
                "dag": json.loads(entry.dag.to_json()),
            }, sort_keys=True) + "\n")
    with open(root / "outputs" / "trajectory.csv", "w", encoding="utf-8") as fh:
        fh.write("round,best_score\n")
        for i, best in enumerate(pool.trajectory):
            fh.write(f"{i},{best}\n")
    save_model(model, root / "outputs" / "checkpoint.json")
    _dump_json(root / "outputs" / "report.json", report(pool, top_n=100))
    _finish(root, "finetune", dict(checkpoint=str(checkpoint), blocks=str(blocks),
                                   oracle=oracle_spec, dags=str(dags_path),
                                   objective=objective_spec, rounds=rounds,
                                   samples_per_round=samples_per_round, topk=topk,
                                   lr=lr, batch_size=batch_size, seed=seed,
                                   max_steps=max_steps, workers=workers, out=out),
            started)
    click.echo(f"best score {pool.max_score():.4f} over {len(pool)} pooled routes")


@main.command("score")
@click.option("--dags", "dags_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", required=True, type=click.Path(exists=True),
              help="reference reactions .txt for the synthesizability index")
@click.option("--train-smiles", type=click.Path(exists=True), default=None,
              help=".smi file defining novelty against a training set")
@click.option("--radius", type=int, default=2, show_default=True)
@click.option("--width", type=int, default=2048, show_default=True)
@click.option("--out", required=True)
def score_cmd(dags_path, corpus, train_smiles, radius, width, out):
    """Validity/uniqueness/novelty plus route synthesizability scores."""
    started = time.time()
    root = _run_dir(out)
    dags = load_dags_jsonl(dags_path)
    index = ReactionCorpusIndex.from_reaction_file(corpus, radius=radius, width=width)
    train_set = []
    if train_smiles:
        from .chem import read_smi_file

        train_set = read_smi_file(train_smiles)
    report_obj = sample_metrics([d.final_smiles() for d in dags], train_set,
                                dags=dags, index=index, radius=radius, width=width)
    with open(root / "outputs" / "scores.jsonl", "w", encoding="utf-8") as fh:
        for d in dags:
            fh.write(json.dumps({
                "final": d.final_smiles(),
                "synth_score": synth_score(d, index, radius=radius, width=width),
                "steps": step_count(d),
            }, sort_keys=True) + "\n")
    _dump_json(root / "outputs" / "report.json", report_obj.to_dict())
    _finish(root, "score", dict(dags=str(dags_path), corpus=str(corpus),
                                train_smiles=train_smiles, radius=radius,
                                width=width, out=out, seed=None), started)
    click.echo(f"{'metric':<22}{'value':>10}")
    for key, value in report_obj.to_dict().items():
        if value is not None:
            click.echo(f"{key:<22}{value:>10.4f}" if isinstance(value, float)
                       else f"{key:<22}{value:>10}")


@main.command("stats")
@click.option("--dags", "dags_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True)
def stats_cmd(dags_path, out):
    """Corpus statistics: nodes, heavy atoms, bonds, action length."""
    from .dag import dag_stats

    started = time.time()
    root = _run_dir(out)
    dags = load_dags_jsonl(dags_path)
    stats = dag_stats(dags)
    _dump_json(root / "outputs" / "stats.json", stats)
    _finish(root, "stats", dict(dags=str(dags_path), out=out, seed=None), started)
    for key, value in stats.items():
        click.echo(f"{key:<22}{value:>10.3f}")


@main.command("serve-oracle")
@click.option("--table", required=True, type=click.Path(exists=True),
              help="reaction .txt file backing the lookup oracle")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
def serve_oracle_cmd(table, host, port):
    """Serve a lookup table over the /react HTTP protocol."""
    from .oracle import LookupOracle
    from .service import serve

    oracle = LookupOracle.from_reaction_file(table)
    click.echo(f"serving {len(oracle.table)} reactions on http://{host}:{port}/react")
    serve(oracle, host=host, port=port)


if __name__ == "__main__":
    main()
