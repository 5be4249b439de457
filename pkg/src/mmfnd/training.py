"""Seeded mini-batch training for the text, image, and fusion networks.

The loop is plain cross-entropy SGD with Adam: shuffle with a per-epoch
seed, step over batches, then score both splits in inference mode and
append an EpochRecord.  The held-out split doubles as the validation
curve; no third split exists.  Vocabulary, embeddings, and the feature
scaler all come from the training split only.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import DatasetSplit, NewsRecord
from .errors import EmptySplit, NonFiniteLoss, ShapeMismatch
from .imagepipe import FeatureCache
from .models import (
    FusionSpec,
    ImageBranchSpec,
    ModelBundle,
    PENULTIMATE,
    TextBranchSpec,
    build_fusion_model,
    build_image_branch,
    build_text_branch,
    softmax_xent,
)
from .models.layers import Adam
from .textpipe import EmbeddingModel, encode_batch

log = logging.getLogger(__name__)

TARGET_TEXT = "text"
TARGET_IMAGE = "image"
TARGET_FUSION = "fusion"
_TARGETS = (TARGET_TEXT, TARGET_IMAGE, TARGET_FUSION)

_EVAL_BATCH = 256
_STD_FLOOR = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    seed: int = 42
    target: str = TARGET_FUSION
    fusion_mode: str = PENULTIMATE
    l_max: int = 32
    embed_dim: int = 300
    dropout: float = 0.5
    freeze_embedding: bool = False
    standardize_features: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.target not in _TARGETS:
            raise ValueError(f"target must be one of {_TARGETS}, got {self.target!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float
    wall_seconds: float


def _gather_features(records: Sequence[NewsRecord], features,
                     extractor_version: str) -> np.ndarray:
    """Stack per-record feature vectors; `features` is a FeatureCache or a
    plain image_name -> vector mapping."""
    rows = []
    for rec in records:
        if isinstance(features, FeatureCache):
            rows.append(features.get(rec.image_name, extractor_version))
        else:
            rows.append(np.asarray(features[rec.image_name], np.float32))
    return np.stack(rows).astype(np.float32)


def _scaler_from(feats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = feats.mean(axis=0, dtype=np.float64)
    std = feats.std(axis=0, dtype=np.float64)
    return mean.astype(np.float32), np.maximum(std, _STD_FLOOR).astype(np.float32)


def _onehot(labels: np.ndarray, num_classes: int = 2) -> np.ndarray:
    out = np.zeros((labels.size, num_classes), dtype=np.float32)
    out[np.arange(labels.size), labels] = 1.0
    return out


def _forward(model, target, ids, feats, train):
    if target == TARGET_TEXT:
        return model.text.forward(ids, train)
    if target == TARGET_IMAGE:
        return model.image.forward(feats, train)
    return model.forward(ids, feats, train)


def _backward(model, target, dz):
    if target == TARGET_TEXT:
        model.text.backward_preact(dz)
    elif target == TARGET_IMAGE:
        model.image.backward_preact(dz)
    else:
        model.backward_preact(dz)


def _target_params(model, target):
    if target == TARGET_TEXT:
        return model.text.params(), model.text.grads
    if target == TARGET_IMAGE:
        return model.image.params(), model.image.grads
    return model.params(), model.grads


def _score(model, target, ids, feats, y_onehot) -> tuple[float, float]:
    """Loss and accuracy over a whole split, inference mode, batched."""
    n = y_onehot.shape[0]
    loss_sum = 0.0
    correct = 0
    for s in range(0, n, _EVAL_BATCH):
        sl = slice(s, min(s + _EVAL_BATCH, n))
        probs = _forward(model, target, ids[sl], feats[sl], train=False)
        y = y_onehot[sl]
        loss_sum += float(-np.sum(y * np.log(np.clip(probs, 1e-12, None))))
        correct += int(np.sum(np.argmax(probs, axis=1) == np.argmax(y, axis=1)))
    return loss_sum / n, correct / n


def train(split: DatasetSplit, config: TrainConfig, out_dir: str | Path,
          embedding: EmbeddingModel, features,
          extractor_version: str = "") -> tuple[ModelBundle, list[EpochRecord]]:
    """Run the full recipe and leave a bundle + curves in out_dir.

    `features` maps image_name to a conv-base feature vector (FeatureCache
    or dict); every record in the split must be covered.
    """
    if len(split.train) == 0:
        raise EmptySplit("training split has no records")
    if len(split.test) == 0:
        raise EmptySplit("held-out split has no records")
    if embedding.dim != config.embed_dim:
        raise ShapeMismatch(
            f"embedding dim {embedding.dim} != config embed_dim {config.embed_dim}")

    vocab = embedding.vocab
    ids_tr = encode_batch([r.headline for r in split.train], vocab, config.l_max)
    ids_te = encode_batch([r.headline for r in split.test], vocab, config.l_max)
    feats_tr = _gather_features(split.train, features, extractor_version)
    feats_te = _gather_features(split.test, features, extractor_version)
    y_tr = np.array([r.label for r in split.train], dtype=np.int64)
    y_te = np.array([r.label for r in split.test], dtype=np.int64)
    oh_tr, oh_te = _onehot(y_tr), _onehot(y_te)

    feature_len = feats_tr.shape[1]
    scaler_mean = scaler_std = None
    if config.standardize_features:
        scaler_mean, scaler_std = _scaler_from(feats_tr)
        feats_tr = (feats_tr - scaler_mean) / scaler_std
        feats_te = (feats_te - scaler_mean) / scaler_std

    text_spec = TextBranchSpec(
        vocab_size=vocab.size, embed_dim=config.embed_dim, l_max=config.l_max,
        dropout=config.dropout)
    image_spec = ImageBranchSpec(input_len=feature_len, dropout=config.dropout)
    fusion_spec = FusionSpec(fusion_mode=config.fusion_mode)
    text = build_text_branch(text_spec, embedding.matrix, seed=config.seed,
                             trainable_embedding=not config.freeze_embedding)
    image = build_image_branch(image_spec, seed=config.seed)
    model = build_fusion_model(text, image, fusion_spec, seed=config.seed)
    model.reseed_dropout(config.seed)

    params, grads_fn = _target_params(model, config.target)
    optimizer = Adam(params, lr=config.lr, beta1=config.beta1,
                     beta2=config.beta2, eps=config.eps)

    n = len(split.train)
    history: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = np.random.default_rng(config.seed + epoch).permutation(n)
        for bi, s in enumerate(range(0, n, config.batch_size)):
            idx = order[s:s + config.batch_size]
            probs = _forward(model, config.target, ids_tr[idx], feats_tr[idx],
                             train=True)
            loss, dz = softmax_xent(probs, oh_tr[idx])
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"epoch {epoch} batch {bi} (records {idx[:8].tolist()}...): "
                    f"loss={loss}"
                )
            model.zero_grads()
            _backward(model, config.target, dz)
            optimizer.step(params, grads_fn())
        train_loss, train_acc = _score(model, config.target, ids_tr, feats_tr, oh_tr)
        val_loss, val_acc = _score(model, config.target, ids_te, feats_te, oh_te)
        rec = EpochRecord(
            epoch=epoch, train_loss=train_loss, train_accuracy=train_acc,
            val_loss=val_loss, val_accuracy=val_acc,
            wall_seconds=time.perf_counter() - t0)
        history.append(rec)
        log.info(
            "epoch %d/%d loss %.4f acc %.3f | val loss %.4f acc %.3f (%.1fs)",
            epoch, config.epochs, train_loss, train_acc, val_loss, val_acc,
            rec.wall_seconds)

    out_dir = Path(out_dir)
    bundle = ModelBundle(
        model=model, vocab=vocab,
        embed_meta={"dim": embedding.dim, "vocab_size": vocab.size,
                    "params": asdict(embedding.params)},
        extractor_version=extractor_version,
        scaler_mean=scaler_mean, scaler_std=scaler_std,
        config=asdict(config), history=[asdict(r) for r in history],
        seed=config.seed)
    save_checkpoint(bundle, out_dir / "bundle")
    emit_curves(history, out_dir)
    return bundle, history


def save_checkpoint(bundle: ModelBundle, out_dir: str | Path) -> Path:
    return bundle.save(out_dir)


def load_checkpoint(in_dir: str | Path) -> ModelBundle:
    return ModelBundle.load(in_dir)


def emit_curves(history: Sequence[EpochRecord | Mapping], out_dir: str | Path) -> None:
    """history.json plus plot-ready loss.csv / accuracy.csv
    (columns epoch,train,val)."""
    if not history:
        raise ValueError("history is empty; nothing to emit")
    rows = [asdict(r) if isinstance(r, EpochRecord) else dict(r) for r in history]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "history.json", "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
    for fname, a, b in (("loss.csv", "train_loss", "val_loss"),
                        ("accuracy.csv", "train_accuracy", "val_accuracy")):
        with open(out_dir / fname, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train", "val"])
            for row in rows:
                writer.writerow([row["epoch"], repr(row[a]), repr(row[b])])
