"""Command-line pipeline driver.

Stages write into a shared run directory: ``ingest`` fills the image
cache, ``preprocess`` builds the split + vocabulary + embeddings + conv
features, ``train`` leaves a bundle and curves, ``evaluate`` scores the
held-out records.  Every stage snapshots the effective config into the
run directory.  Usage problems exit 2; data errors exit 1 with a single
``error: <Type>: <message>`` line.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import __version__
from .config import RunConfig, load_run_config, save_config
from .corpus import (
    DatasetSplit,
    NewsRecord,
    class_counts,
    fetch_images,
    load_manifest,
    split_dataset,
    usable_records,
)
from .errors import MmfndError
from .evaluation import evaluate_bundle, render_confusion, render_report
from .imagepipe import FeatureCache, Vgg16Extractor, make_random_weights, prepare_image
from .models import ModelBundle
from .models import predict as model_predict
from .textpipe import (
    EmbeddingParams,
    build_vocab,
    choose_l_max,
    clean_text,
    load_embedding_model,
    save_embedding_model,
    tokenize,
    train_embeddings,
)
from .training import TrainConfig, train as run_training


def _data_errors(fn):
    """Map pipeline exceptions to exit 1 with a one-line parsable message."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MmfndError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)
    return wrapper


def _load_cfg(ctx, **overrides) -> RunConfig:
    try:
        return load_run_config(ctx.obj, overrides=overrides)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _require_file(path: str, flag: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise click.UsageError(f"{flag}: file not found: {p}")
    return p


def _extractor(cfg: RunConfig) -> Vgg16Extractor:
    if not Path(cfg.weights_file).exists():
        click.echo(
            f"error: ExtractorUnavailable: conv-base weights not found at "
            f"{cfg.weights_file}; run `mmfnd init-weights` for random weights "
            f"or scripts/export_vgg16_weights.py for pretrained ones", err=True)
        sys.exit(1)
    return Vgg16Extractor.from_npz(cfg.weights_file)


def _write_split(split: DatasetSplit, path: Path) -> None:
    payload = {
        "seed": split.seed,
        "test_fraction": split.test_fraction,
        "train": [asdict(r) for r in split.train],
        "test": [asdict(r) for r in split.test],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)


def _read_split(path: Path) -> DatasetSplit:
    if not path.is_file():
        raise click.UsageError(
            f"{path} not found; run `mmfnd preprocess` first")
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return DatasetSplit(
        train=[NewsRecord(**r) for r in payload["train"]],
        test=[NewsRecord(**r) for r in payload["test"]],
        seed=payload["seed"], test_fraction=payload["test_fraction"])


def _read_meta(out_dir: Path) -> dict:
    path = out_dir / "preprocess.json"
    if not path.is_file():
        raise click.UsageError(f"{path} not found; run `mmfnd preprocess` first")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


@click.group()
@click.version_option(version=__version__, prog_name="mmfnd")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="TOML run configuration; flags override file values.")
@click.pass_context
def main(ctx, config_path):
    """Malayalam fake-news classifier pipeline."""
    ctx.obj = config_path


@main.command()
@click.option("--manifest", default=None, help="Dataset manifest CSV.")
@click.option("--image-cache", default=None, help="Directory for fetched images.")
@click.option("--out-dir", default=None, help="Run directory.")
@click.option("--strict", "strict_manifest", flag_value=True, default=None,
              help="Fail on any malformed manifest row.")
@click.option("--timeout", "fetch_timeout", type=float, default=None)
@click.option("--workers", "fetch_workers", type=int, default=None)
@click.pass_context
@_data_errors
def ingest(ctx, **overrides):
    """Load the manifest and fetch every image into the cache."""
    cfg = _load_cfg(ctx, **overrides)
    manifest = _require_file(cfg.manifest, "--manifest")
    records, row_errors = load_manifest(manifest, strict=cfg.strict_manifest)
    report = fetch_images(records, cfg.image_cache, timeout=cfg.fetch_timeout,
                          workers=cfg.fetch_workers, local_base=manifest.parent)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_jsonl(out_dir / "fetch_report.jsonl")
    save_config(cfg, out_dir / "config.toml")
    counts = report.counts()
    fake, not_fake = class_counts(records)
    click.echo(
        f"ingested {len(records)} records ({fake} fake / {not_fake} not fake), "
        f"{len(row_errors)} bad rows skipped; images: {counts['downloaded']} "
        f"fetched, {counts['cached']} cached, {counts['failed']} failed")


@main.command()
@click.option("--manifest", default=None)
@click.option("--image-cache", default=None)
@click.option("--feature-cache", default=None)
@click.option("--weights-file", default=None, help="Conv-base weights (.npz).")
@click.option("--out-dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--test-fraction", type=float, default=None)
@click.option("--vector-size", type=int, default=None)
@click.option("--window", type=int, default=None)
@click.option("--negative", type=int, default=None)
@click.option("--min-count", type=int, default=None)
@click.option("--embed-epochs", type=int, default=None)
@click.option("--l-max-cap", type=int, default=None)
@click.pass_context
@_data_errors
def preprocess(ctx, **overrides):
    """Split the data, train embeddings, and extract image features."""
    cfg = _load_cfg(ctx, **overrides)
    manifest = _require_file(cfg.manifest, "--manifest")
    records, _ = load_manifest(manifest, strict=cfg.strict_manifest)
    usable = usable_records(records, cfg.image_cache)
    if len(usable) < len(records):
        click.echo(f"excluding {len(records) - len(usable)} records without "
                   f"cached images")
    split = split_dataset(usable, cfg.test_fraction, cfg.seed)

    corpus = [tokenize(clean_text(r.headline)) for r in split.train]
    l_max = choose_l_max([len(toks) for toks in corpus], cap=cfg.l_max_cap)
    params = EmbeddingParams(
        vector_size=cfg.vector_size, window=cfg.window, negative=cfg.negative,
        min_count=cfg.min_count, epochs=cfg.embed_epochs, seed=cfg.seed)
    vocab = build_vocab(corpus, min_count=cfg.min_count)
    embedding = train_embeddings(corpus, vocab, params)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_embedding_model(embedding, out_dir / "embedding")

    extractor = _extractor(cfg)
    cache = FeatureCache(cfg.feature_cache)
    image_cache = Path(cfg.image_cache)
    extracted = reused = 0
    feature_len = None
    for rec in split.train + split.test:
        if cache.has(rec.image_name, extractor.version):
            reused += 1
            vec = cache.get(rec.image_name, extractor.version)
        else:
            vec = extractor.extract(prepare_image(image_cache / rec.image_name))
            cache.put(rec.image_name, vec, extractor.version)
            extracted += 1
        feature_len = len(vec)

    _write_split(split, out_dir / "split.json")
    meta = {
        "l_max": l_max,
        "vocab_size": embedding.vocab.size,
        "vector_size": embedding.dim,
        "n_train": len(split.train),
        "n_test": len(split.test),
        "extractor_version": extractor.version,
        "feature_len": feature_len,
    }
    with open(out_dir / "preprocess.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    save_config(cfg, out_dir / "config.toml")
    click.echo(
        f"split {len(split.train)}/{len(split.test)} train/test; vocab "
        f"{embedding.vocab.size}, l_max {l_max}; features: {extracted} "
        f"extracted, {reused} reused (dim {feature_len})")


@main.command()
@click.option("--out-dir", default=None)
@click.option("--feature-cache", default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--target", type=click.Choice(["text", "image", "fusion"]), default=None)
@click.option("--fusion-mode", type=click.Choice(["penultimate", "softmax_output"]),
              default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--freeze-embedding", flag_value=True, default=None)
@click.pass_context
@_data_errors
def train(ctx, **overrides):
    """Train on the preprocessed split and save a bundle."""
    cfg = _load_cfg(ctx, **overrides)
    out_dir = Path(cfg.out_dir)
    meta = _read_meta(out_dir)
    split = _read_split(out_dir / "split.json")
    embedding = load_embedding_model(out_dir / "embedding")
    try:
        tcfg = TrainConfig(
            epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
            beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps, seed=cfg.seed,
            target=cfg.target, fusion_mode=cfg.fusion_mode,
            l_max=meta["l_max"], embed_dim=embedding.dim, dropout=cfg.dropout,
            freeze_embedding=cfg.freeze_embedding,
            standardize_features=cfg.standardize_features)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    cache = FeatureCache(cfg.feature_cache)
    bundle, history = run_training(
        split, tcfg, out_dir, embedding, cache,
        extractor_version=meta["extractor_version"])
    save_config(cfg, out_dir / "config.toml")
    last = history[-1]
    click.echo(
        f"trained {tcfg.target} for {tcfg.epochs} epochs; final train acc "
        f"{last.train_accuracy:.3f}, val acc {last.val_accuracy:.3f}; bundle "
        f"{bundle.version} -> {out_dir / 'bundle'}")


@main.command()
@click.option("--out-dir", default=None)
@click.option("--bundle-dir", default=None)
@click.option("--feature-cache", default=None)
@click.option("--subset", type=click.Choice(["test", "train"]), default="test",
              help="Which side of the stored split to score.")
@click.pass_context
@_data_errors
def evaluate(ctx, subset, **overrides):
    """Score the bundle on the held-out split and write report files."""
    cfg = _load_cfg(ctx, **overrides)
    out_dir = Path(cfg.out_dir)
    split = _read_split(out_dir / "split.json")
    records = split.test if subset == "test" else split.train
    bundle = ModelBundle.load(cfg.bundle_dir)
    cache = FeatureCache(cfg.feature_cache)
    rep, cm, _, excluded = evaluate_bundle(bundle, records, cache, out_dir=out_dir)
    save_config(cfg, out_dir / "config.toml")
    click.echo(render_report(rep))
    click.echo("")
    click.echo(render_confusion(cm))
    if excluded:
        click.echo(f"\n{excluded} records excluded (missing features)")
    click.echo(f"\nreport.json, confusion.json, predictions.jsonl -> {out_dir}")


@main.command("predict")
@click.option("--bundle-dir", default=None)
@click.option("--weights-file", default=None)
@click.option("--headline", required=True, help="Raw headline text.")
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Local image file.")
@click.pass_context
@_data_errors
def predict_cmd(ctx, headline, image_path, **overrides):
    """Classify one headline + image pair and print the response JSON."""
    import time

    cfg = _load_cfg(ctx, **overrides)
    bundle = ModelBundle.load(cfg.bundle_dir)
    extractor = _extractor(cfg)
    bundle.attach_extractor(extractor)
    t0 = time.perf_counter()
    pred = model_predict(bundle, headline, image_path)
    latency_ms = (time.perf_counter() - t0) * 1000.0
    click.echo(json.dumps({
        "label": pred.label_name,
        "probabilities": pred.probabilities,
        "model_version": pred.model_version,
        "latency_ms": round(latency_ms, 3),
    }, ensure_ascii=False))


@main.command()
@click.option("--bundle-dir", default=None)
@click.option("--weights-file", default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--fetch-timeout", type=float, default=None)
@click.option("--cors-origin", default=None)
@click.option("--allow-private-urls", flag_value=True, default=None,
              help="Dev flag: also fetch loopback/link-local image URLs.")
@click.pass_context
@_data_errors
def serve(ctx, **overrides):
    """Serve the bundle over HTTP (POST /api/v1/predict)."""
    from .service import serve as run_server

    cfg = _load_cfg(ctx, **overrides)
    run_server(cfg.bundle_dir, cfg.host, cfg.port, cfg.weights_file,
               fetch_timeout=cfg.fetch_timeout, cors_origin=cfg.cors_origin,
               allow_private_urls=cfg.allow_private_urls)


@main.command("make-fixture")
@click.option("--out", "out", default="fixtures/dataset", show_default=True)
@click.option("--per-class", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@_data_errors
def make_fixture(out, per_class, seed):
    """Regenerate the synthetic offline dataset."""
    from .fixture import generate_fixture

    records = generate_fixture(out, n_per_class=per_class, seed=seed)
    click.echo(f"wrote {len(records)} records to {out}")


@main.command("init-weights")
@click.option("--weights-file", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
@_data_errors
def init_weights(ctx, seed, **overrides):
    """Write seeded random conv-base weights (offline stand-in)."""
    cfg = _load_cfg(ctx, **overrides)
    path = make_random_weights(cfg.weights_file, seed=seed)
    click.echo(
        f"random conv-base weights -> {path} (for offline runs; convert "
        f"pretrained ones with scripts/export_vgg16_weights.py)")


if __name__ == "__main__":
    main()
