"""Classification metrics and batch scoring of a trained bundle.

Report rows follow display order (not fake, then fake); the confusion
matrix uses the same order for its true-label rows and predicted-label
columns.  Zero denominators yield 0.0 rather than an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import LABEL_NAMES, NOT_FAKE
from .corpus import NewsRecord
from .errors import CacheMiss, EmptyMatrix, EmptySplit, LengthMismatch, ShapeMismatch
from .imagepipe import FeatureCache
from .models import ModelBundle
from .textpipe import encode_batch

CLASS_ORDER = (NOT_FAKE, 1 - NOT_FAKE)  # display order: not fake, fake
CLASS_DISPLAY = tuple(LABEL_NAMES[c] for c in CLASS_ORDER)

_EVAL_BATCH = 256


def _class_index(label: int) -> int:
    return 0 if label == NOT_FAKE else 1


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # 2x2 int64; rows = true class, display order

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {"order": list(CLASS_DISPLAY), "rows_true": self.counts.tolist()}


@dataclass(frozen=True)
class ClassificationReport:
    per_class: dict  # display name -> {precision, recall, f1, support}
    accuracy: float
    macro_avg: dict
    weighted_avg: dict
    total: int

    def to_dict(self) -> dict:
        return {
            "per_class": self.per_class,
            "accuracy": self.accuracy,
            "macro_avg": self.macro_avg,
            "weighted_avg": self.weighted_avg,
            "total": self.total,
        }


def confusion(true_labels: Sequence[int], predicted_labels: Sequence[int]) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape or true_labels.ndim != 1:
        raise LengthMismatch(
            f"label sequences differ: {true_labels.shape} vs {predicted_labels.shape}")
    for name, arr in (("true", true_labels), ("predicted", predicted_labels)):
        if arr.size and not np.isin(arr, (0, 1)).all():
            bad = arr[~np.isin(arr, (0, 1))][0]
            raise ValueError(f"{name} labels must be 0 or 1, found {bad}")
    counts = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        counts[_class_index(int(t)), _class_index(int(p))] += 1
    return ConfusionMatrix(counts=counts)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def report(cm: ConfusionMatrix) -> ClassificationReport:
    counts = cm.counts
    total = int(counts.sum())
    if total == 0:
        raise EmptyMatrix("confusion matrix has zero total count")
    per_class = {}
    for i, name in enumerate(CLASS_DISPLAY):
        tp = float(counts[i, i])
        precision = _safe_div(tp, float(counts[:, i].sum()))
        recall = _safe_div(tp, float(counts[i, :].sum()))
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[name] = {
            "precision": precision, "recall": recall, "f1": f1,
            "support": int(counts[i, :].sum()),
        }
    accuracy = float(np.trace(counts)) / total
    macro = {m: float(np.mean([per_class[n][m] for n in CLASS_DISPLAY]))
             for m in ("precision", "recall", "f1")}
    weighted = {m: sum(per_class[n][m] * per_class[n]["support"] for n in CLASS_DISPLAY) / total
                for m in ("precision", "recall", "f1")}
    macro["support"] = weighted["support"] = total
    return ClassificationReport(
        per_class=per_class, accuracy=accuracy, macro_avg=macro,
        weighted_avg=weighted, total=total)


def render_report(rep: ClassificationReport) -> str:
    """Text table in the usual classification-report layout, 2 decimals."""
    width = max(12, max(len(n) for n in CLASS_DISPLAY))
    head = f"{'':>{width}}  precision    recall  f1-score   support"
    lines = [head, ""]
    for name in CLASS_DISPLAY:
        row = rep.per_class[name]
        lines.append(
            f"{name:>{width}}  {row['precision']:9.2f} {row['recall']:9.2f} "
            f"{row['f1']:9.2f} {row['support']:9d}"
        )
    lines.append("")
    lines.append(f"{'accuracy':>{width}}  {'':9} {'':9} {rep.accuracy:9.2f} {rep.total:9d}")
    for label, avg in (("macro avg", rep.macro_avg), ("weighted avg", rep.weighted_avg)):
        lines.append(
            f"{label:>{width}}  {avg['precision']:9.2f} {avg['recall']:9.2f} "
            f"{avg['f1']:9.2f} {rep.total:9d}"
        )
    return "\n".join(lines)


def render_confusion(cm: ConfusionMatrix) -> str:
    width = max(len(n) for n in CLASS_DISPLAY) + 2
    corner = "true/pred"
    lines = [f"{corner:>{width}}  " + "  ".join(f"{n:>{width}}" for n in CLASS_DISPLAY)]
    for i, name in enumerate(CLASS_DISPLAY):
        cells = "  ".join(f"{int(c):>{width}}" for c in cm.counts[i])
        lines.append(f"{name:>{width}}  {cells}")
    return "\n".join(lines)


def evaluate_bundle(bundle: ModelBundle, records: Sequence[NewsRecord], features,
                    out_dir: str | Path | None = None):
    """Score records with the bundle; returns (report, confusion, predictions,
    n_excluded).

    `features` is a FeatureCache or an image_name -> vector mapping.
    Records whose features are missing or mis-shaped are excluded and
    counted, mirroring how unusable rows are dropped upstream.
    """
    usable: list[NewsRecord] = []
    feats_rows = []
    excluded = 0
    for rec in records:
        try:
            if isinstance(features, FeatureCache):
                vec = features.get(rec.image_name, bundle.extractor_version,
                                   bundle.feature_len)
            else:
                vec = np.asarray(features[rec.image_name], np.float32)
                if vec.shape != (bundle.feature_len,):
                    raise ShapeMismatch(
                        f"{rec.image_name}: feature shape {vec.shape}")
        except (CacheMiss, KeyError, ShapeMismatch):
            excluded += 1
            continue
        usable.append(rec)
        feats_rows.append(vec)
    if not usable:
        raise EmptySplit(f"no usable records out of {len(records)}")

    ids = encode_batch([r.headline for r in usable], bundle.vocab, bundle.l_max)
    feats = np.stack(feats_rows).astype(np.float32)
    probs = np.concatenate([
        bundle.probabilities(ids[s:s + _EVAL_BATCH], feats[s:s + _EVAL_BATCH])
        for s in range(0, len(usable), _EVAL_BATCH)
    ])
    predicted = np.argmax(probs, axis=1)
    truth = np.array([r.label for r in usable], dtype=np.int64)
    cm = confusion(truth, predicted)
    rep = report(cm)
    predictions = [
        {
            "image_name": rec.image_name,
            "headline": rec.headline,
            "true_label": int(t),
            "predicted_label": int(p),
            "probabilities": {LABEL_NAMES[i]: float(probs[j, i])
                              for i in sorted(LABEL_NAMES)},
        }
        for j, (rec, t, p) in enumerate(zip(usable, truth, predicted))
    ]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = rep.to_dict()
        payload["excluded"] = excluded
        with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        with open(out_dir / "confusion.json", "w", encoding="utf-8") as fh:
            json.dump(cm.to_dict(), fh, indent=2)
        with open(out_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
            for row in predictions:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return rep, cm, predictions, excluded
