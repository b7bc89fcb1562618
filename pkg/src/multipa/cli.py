"""Command line interface: train, evaluate, assess, analyses, service."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from .audio import read_wav
from .clients import ClientConfig, ModelClients
from .completeness import (
    PopulationConfig,
    sample_completeness_populations,
    simulate_incomplete_corpus,
    sweep_thresholds,
)
from .config import AppConfig
from .dataset import convert_speechocean, load_dataset, make_toy_dataset
from .evaluation import MODE_CLOSED, MODE_OPEN, EvalReport, FallbackScores, ablation_table, run_seeds
from .features import FeatureNormalizer
from .model import ScoreRanges
from .pipeline import Assessor, evaluate_assessor, extract_bundle, train_assessor
from .training import load_checkpoint, restore_model, save_checkpoint
from .transcripts import RawTranscript, SOURCE_TARGET


def _load_config(config_path: str | None, **overrides) -> AppConfig:
    cfg = AppConfig.load(config_path) if config_path else AppConfig()
    return cfg.apply_overrides(**overrides)


def _dataset_paths(cfg: AppConfig) -> dict[str, Path]:
    if not cfg.dataset_dir:
        raise click.UsageError("no dataset_dir configured (flag --dataset or config file)")
    root = Path(cfg.dataset_dir)
    return {"train": root / "train.json", "test": root / "test.json"}


def _write_resolved_config(cfg: AppConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "config.yaml")


@click.group()
def main():
    """MultiPA: multi-task pronunciation assessment."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--dataset", "dataset_dir", type=click.Path(), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
def train(config_path, dataset_dir, output_dir, checkpoint_path, cache_dir, seed):
    """Train a model and write a self-contained checkpoint."""
    cfg = _load_config(
        config_path,
        dataset_dir=dataset_dir,
        output_dir=output_dir,
        checkpoint_path=checkpoint_path,
        cache_dir=cache_dir,
        seed=seed,
    )
    paths = _dataset_paths(cfg)
    records, ranges = load_dataset(paths["train"])
    out_dir = Path(cfg.output_dir)
    _write_resolved_config(cfg, out_dir)

    trained = train_assessor(
        records,
        ranges,
        cfg.clients,
        cfg.model,
        cfg.training,
        cfg.completeness,
        bundle_cache_dir=cfg.cache_dir,
    )
    ckpt = Path(cfg.checkpoint_path or out_dir / "model.ckpt")
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        ckpt,
        trained.assessor.model,
        trained.assessor.clients.backbone_module(),
        trained.normalizer,
        ranges,
        dataclasses.asdict(cfg.clients),
        extra={"app_config": cfg.to_dict(), "log": trained.log.to_json_dict()},
    )
    (out_dir / "training_log.json").write_text(json.dumps(trained.log.to_json_dict(), indent=2))
    losses = [e.train_loss for e in trained.log.epochs]
    click.echo(f"checkpoint: {ckpt}")
    click.echo(f"epochs: {len(losses)}  train loss {losses[0]:.4f} -> {losses[-1]:.4f}")
    if trained.skipped_records:
        click.echo(f"skipped records: {trained.skipped_records}")


def _assessor_from_checkpoint(cfg: AppConfig, checkpoint_path: str) -> Assessor:
    payload = load_checkpoint(checkpoint_path)
    model = restore_model(payload)
    clients = ModelClients(ClientConfig(**payload["client_config"]))
    backbone = clients.backbone_module()
    backbone.load_state_dict(payload["backbone_state"])
    backbone.eval()
    return Assessor(
        clients,
        model,
        FeatureNormalizer.from_state_dict(payload["normalizer"]),
        ScoreRanges.from_dict(payload["score_ranges"]),
        cfg.completeness,
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--dataset", "dataset_dir", type=click.Path(), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), default=None)
@click.option("--mode", type=click.Choice(["closed", "open", "both"]), default="both")
@click.option("--seeds", type=int, default=1, help="train+evaluate once per seed")
@click.option("--cache-dir", type=click.Path(), default=None)
def evaluate(config_path, dataset_dir, output_dir, checkpoint_path, mode, seeds, cache_dir):
    """Evaluate on the test split; writes report JSON and a rendered table."""
    cfg = _load_config(
        config_path,
        dataset_dir=dataset_dir,
        output_dir=output_dir,
        checkpoint_path=checkpoint_path,
        cache_dir=cache_dir,
    )
    paths = _dataset_paths(cfg)
    train_records, ranges = load_dataset(paths["train"])
    test_records, _ = load_dataset(paths["test"])
    fallback = FallbackScores.from_records(train_records)
    modes = (MODE_CLOSED, MODE_OPEN) if mode == "both" else (mode,)
    out_dir = Path(cfg.output_dir)
    _write_resolved_config(cfg, out_dir)

    if cfg.checkpoint_path:
        assessor = _assessor_from_checkpoint(cfg, cfg.checkpoint_path)
        report = run_seeds(
            lambda _seed: evaluate_assessor(assessor, test_records, fallback, modes),
            [cfg.training.seed],
            fallback_scores=fallback.to_dict(),
        )
    else:

        def run_one(seed: int):
            tcfg = dataclasses.replace(cfg.training, seed=seed)
            trained = train_assessor(
                train_records, ranges, cfg.clients, cfg.model, tcfg, cfg.completeness,
                bundle_cache_dir=cfg.cache_dir,
            )
            return evaluate_assessor(trained.assessor, test_records, fallback, modes)

        report = run_seeds(run_one, list(range(cfg.training.seed, cfg.training.seed + seeds)),
                           fallback_scores=fallback.to_dict())

    (out_dir / "report.json").write_text(report.to_json())
    for m in modes:  # one report file per evaluated mode
        fragment_doc = {
            "mode": m,
            "seeds": report.seeds,
            "per_seed": [f.to_json_dict() for f in report.fragments[m]],
            "summary": report.summary()["modes"][m],
        }
        (out_dir / f"report-{m}.json").write_text(json.dumps(fragment_doc, indent=2))
    table = report.render_table()
    (out_dir / "report.txt").write_text(table + "\n")
    click.echo(table)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--audio", "audio_path", type=click.Path(exists=True), required=True)
@click.option("--mode", type=click.Choice(["closed", "open"]), required=True)
@click.option("--target-text", default=None)
def assess(config_path, checkpoint_path, audio_path, mode, target_text):
    """Score a single audio file."""
    cfg = _load_config(config_path, checkpoint_path=checkpoint_path)
    assessor = _assessor_from_checkpoint(cfg, checkpoint_path)
    clip = read_wav(audio_path)
    result = assessor.assess_clip(clip, target_text, mode)
    from .service import response_payload

    click.echo(json.dumps(response_payload(result, mode, assessor.ranges.to_dict()), indent=2))


@main.command("completeness-analysis")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--dataset", "dataset_dir", type=click.Path(), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
@click.option("--subset", type=int, default=200, help="utterances to simulate on")
@click.option("--seed", type=int, default=None)
@click.option("--synthetic", is_flag=True, help="sample duration populations instead of aligning a dataset")
def completeness_analysis(config_path, dataset_dir, output_dir, subset, seed, synthetic):
    """Duration histograms plus the threshold-to-F1 sweep."""
    cfg = _load_config(config_path, dataset_dir=dataset_dir, output_dir=output_dir, seed=seed)
    out_dir = Path(cfg.output_dir)
    _write_resolved_config(cfg, out_dir)

    if synthetic:
        complete, incomplete = sample_completeness_populations(PopulationConfig(), cfg.training.seed)
        report = sweep_thresholds(complete, incomplete)
    else:
        if subset <= 0:
            raise click.UsageError("--subset must be positive")
        paths = _dataset_paths(cfg)
        records, ranges = load_dataset(paths["train"])
        # only utterances with a full completeness label simulate cleanly
        comp_hi = ranges.sentence["completeness"][1]
        full = [r for r in records if r.sentence_labels["completeness"] >= comp_hi][:subset]
        if not full:
            raise click.UsageError("no utterance carries a full completeness label")
        clients = ModelClients(cfg.clients)
        lexicon = sorted({w for r in records for w in r.target_words()})

        def aligner_fn(words, audio):
            return clients.force_align(RawTranscript(tuple(words), SOURCE_TARGET), audio)

        outcome = simulate_incomplete_corpus(
            ((r.utterance_id, r.load_audio(), r.target_words()) for r in full),
            aligner_fn,
            lexicon,
            cfg.training.seed,
        )
        complete_durs, incomplete_durs = [], []
        for sample in outcome.samples:
            for i, w in enumerate(sample.aligned.words):
                (incomplete_durs if i == sample.inserted_index else complete_durs).append(w.duration)
        report = sweep_thresholds(complete_durs, incomplete_durs, skipped=outcome.skipped)

    (out_dir / "completeness_report.json").write_text(json.dumps(report.to_json_dict(), indent=2))
    _plot_completeness(report, out_dir)
    click.echo(
        f"best threshold {report.best_threshold:.3f}s  F1 {report.best_f1:.3f}  "
        f"(skipped {report.skipped})"
    )


def _plot_completeness(report, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(0, 0.8, 80)
    ax.hist(report.complete_durations, bins=bins, alpha=0.6, label="complete", density=True)
    ax.hist(report.incomplete_durations, bins=bins, alpha=0.6, label="incomplete", density=True)
    ax.set_xlabel("aligned word duration (s)")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "duration_histogram.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.threshold_grid, report.f1_per_threshold)
    ax.axvline(report.best_threshold, linestyle="--", color="gray")
    ax.set_xlabel("duration threshold (s)")
    ax.set_ylabel("F1 (incomplete as positive)")
    fig.tight_layout()
    fig.savefig(out_dir / "f1_vs_threshold.png", dpi=120)
    plt.close(fig)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--dataset", "dataset_dir", type=click.Path(), default=None)
@click.option("--out", "output_dir", type=click.Path(), default=None)
@click.option("--asrt-ids", required=True, help="comma-separated ASRt model ids")
@click.option("--include-no-asrp", is_flag=True, help="add a variant without ASRp features")
@click.option("--seeds", type=int, default=1)
def ablation(config_path, dataset_dir, output_dir, asrt_ids, include_no_asrp, seeds):
    """Train/evaluate once per ASRt configuration and tabulate side by side."""
    cfg = _load_config(config_path, dataset_dir=dataset_dir, output_dir=output_dir)
    paths = _dataset_paths(cfg)
    train_records, ranges = load_dataset(paths["train"])
    test_records, _ = load_dataset(paths["test"])
    fallback = FallbackScores.from_records(train_records)
    out_dir = Path(cfg.output_dir)
    _write_resolved_config(cfg, out_dir)

    variants: list[tuple[str, dict]] = []
    for asrt in [s.strip() for s in asrt_ids.split(",") if s.strip()]:
        variants.append((f"asrt={asrt}", {"asrt_model_id": asrt}))
    if include_no_asrp:
        variants.append(("no-asrp", {"use_asrp": False}))

    reports: list[tuple[str, EvalReport]] = []
    for label, overrides in variants:
        use_asrp = overrides.pop("use_asrp", True)
        ccfg = dataclasses.replace(cfg.clients, **overrides)

        def run_one(seed: int, ccfg=ccfg, use_asrp=use_asrp):
            tcfg = dataclasses.replace(cfg.training, seed=seed)
            trained = train_assessor(
                train_records, ranges, ccfg, cfg.model, tcfg, cfg.completeness,
                bundle_cache_dir=cfg.cache_dir, use_asrp=use_asrp,
            )
            return evaluate_assessor(trained.assessor, test_records, fallback)

        reports.append(
            (label, run_seeds(run_one, list(range(cfg.training.seed, cfg.training.seed + seeds))))
        )

    table = ablation_table(reports)
    (out_dir / "ablation.txt").write_text(table + "\n")
    (out_dir / "ablation.json").write_text(
        json.dumps({label: json.loads(r.to_json()) for label, r in reports}, indent=2)
    )
    click.echo(table)


@main.command("dump-features")
@click.option("--audio", "audio_path", type=click.Path(exists=True), required=True)
@click.option("--target-text", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def dump_features(audio_path, target_text, config_path):
    """Print the feature bundle for one utterance as JSON."""
    cfg = _load_config(config_path)
    clients = ModelClients(cfg.clients)
    clip = read_wav(audio_path)
    bundle, _ = extract_bundle(
        clients, clip, RawTranscript.from_text(target_text, SOURCE_TARGET)
    )
    click.echo(json.dumps(bundle.to_json_dict(), indent=2))


@main.command("make-toy-data")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--n-train", type=int, default=8)
@click.option("--n-test", type=int, default=4)
@click.option("--seed", type=int, default=0)
def make_toy_data(out_dir, n_train, n_test, seed):
    """Generate a miniature tone-coded corpus with labels."""
    paths = make_toy_dataset(out_dir, n_train=n_train, n_test=n_test, seed=seed)
    click.echo(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))


@main.command("convert-dataset")
@click.option("--native-root", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def convert_dataset(native_root, out_dir):
    """Convert a speechocean762-layout corpus into split manifests."""
    paths = convert_speechocean(native_root, out_dir)
    click.echo(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, checkpoint_path, host, port):
    """Run the assessment HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = _load_config(config_path, checkpoint_path=checkpoint_path, host=host, port=port)
    app = create_app(lambda: _assessor_from_checkpoint(cfg, checkpoint_path))
    uvicorn.run(app, host=cfg.host, port=cfg.port)


if __name__ == "__main__":
    sys.exit(main())
