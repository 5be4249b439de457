"""Serialized model artifact: a directory holding everything needed to
reproduce predictions.

Layout: ``bundle.json`` (specs, config snapshot, metric history, version),
``vocab.json``, ``embed_meta.json``, ``weights.npz`` (every trainable array
plus the feature scaler).  Loading rebuilds the networks and overwrites
their parameters in place; any missing file, unknown key, or shape drift
raises CorruptBundle.

Inference-mode forwards write layer caches but never read them, so a loaded
bundle can serve concurrent predictions from multiple threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .. import LABEL_NAMES
from ..errors import CorruptBundle, ExtractorUnavailable, ShapeMismatch
from ..imagepipe import prepare_image, prepare_image_bytes
from ..textpipe import Vocab, encode
from .networks import (
    FusionModel,
    FusionSpec,
    ImageBranchSpec,
    TextBranchSpec,
    build_fusion_model,
    build_image_branch,
    build_text_branch,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    label: int
    label_name: str
    probabilities: dict
    model_version: str


def _bundle_version(text_spec, image_spec, fusion_spec, seed: int) -> str:
    blob = json.dumps(
        [asdict(text_spec), asdict(image_spec), asdict(fusion_spec), seed],
        sort_keys=True,
    ).encode()
    return "mmfnd-" + hashlib.sha1(blob).hexdigest()[:12]


class ModelBundle:
    """In-memory handle pairing the fusion network with its preprocessing
    state; read-only once loaded."""

    def __init__(self, model: FusionModel, vocab: Vocab, embed_meta: dict,
                 extractor_version: str = "", scaler_mean=None, scaler_std=None,
                 config: dict | None = None, history: list | None = None,
                 version: str | None = None, seed: int = 42):
        self.model = model
        self.vocab = vocab
        self.embed_meta = dict(embed_meta)
        self.extractor_version = extractor_version
        self.scaler_mean = None if scaler_mean is None else np.asarray(scaler_mean, np.float32)
        self.scaler_std = None if scaler_std is None else np.asarray(scaler_std, np.float32)
        self.config = dict(config or {})
        self.history = list(history or [])
        self.version = version or _bundle_version(
            model.text.spec, model.image.spec, model.spec, seed)
        self.extractor = None  # attach_extractor() wires one in for path inputs

    @property
    def l_max(self) -> int:
        return self.model.text.spec.l_max

    @property
    def feature_len(self) -> int:
        return self.model.image.spec.input_len

    def attach_extractor(self, extractor) -> None:
        if self.extractor_version and extractor.version != self.extractor_version:
            raise ExtractorUnavailable(
                f"bundle was built with extractor {self.extractor_version}, "
                f"got {extractor.version}"
            )
        self.extractor = extractor

    def transform_features(self, feats: np.ndarray) -> np.ndarray:
        """Apply the train-split standardization stored in the bundle."""
        feats = np.asarray(feats, np.float32)
        if self.scaler_mean is None:
            return feats
        return (feats - self.scaler_mean) / self.scaler_std

    def probabilities(self, ids: np.ndarray, feats: np.ndarray) -> np.ndarray:
        """Inference forward on a batch; feats are raw extractor outputs.

        Routed by the training target recorded in the config: a bundle
        trained as a single branch predicts with that branch alone.
        """
        if feats.ndim == 1:
            feats = feats[None, :]
        if ids.ndim == 1:
            ids = ids[None, :]
        if feats.shape[1] != self.feature_len:
            raise ShapeMismatch(
                f"feature length {feats.shape[1]} != bundle's {self.feature_len}")
        target = self.config.get("target", "fusion")
        if target == "text":
            return self.model.text.forward(ids, train=False)
        if target == "image":
            return self.model.image.forward(self.transform_features(feats), train=False)
        return self.model.forward(ids, self.transform_features(feats), train=False)

    def save(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "format_version": FORMAT_VERSION,
            "version": self.version,
            "label_names": {str(k): v for k, v in LABEL_NAMES.items()},
            "text_spec": asdict(self.model.text.spec),
            "image_spec": asdict(self.model.image.spec),
            "fusion_spec": asdict(self.model.spec),
            "extractor_version": self.extractor_version,
            "has_scaler": self.scaler_mean is not None,
            "config": self.config,
            "history": self.history,
        }
        with open(out_dir / "bundle.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, ensure_ascii=False)
        self.vocab.to_json(out_dir / "vocab.json")
        with open(out_dir / "embed_meta.json", "w", encoding="utf-8") as fh:
            json.dump(self.embed_meta, fh, indent=2)
        arrays = dict(self.model.params())
        if self.scaler_mean is not None:
            arrays["scaler.mean"] = self.scaler_mean
            arrays["scaler.std"] = self.scaler_std
        np.savez(out_dir / "weights.npz", **arrays)
        return out_dir

    @classmethod
    def load(cls, in_dir: str | Path) -> "ModelBundle":
        in_dir = Path(in_dir)
        for name in ("bundle.json", "vocab.json", "embed_meta.json", "weights.npz"):
            if not (in_dir / name).is_file():
                raise CorruptBundle(f"{in_dir}: missing {name}")
        try:
            with open(in_dir / "bundle.json", "r", encoding="utf-8") as fh:
                meta = json.load(fh)
            vocab = Vocab.from_json(in_dir / "vocab.json")
            with open(in_dir / "embed_meta.json", "r", encoding="utf-8") as fh:
                embed_meta = json.load(fh)
        except (json.JSONDecodeError, ShapeMismatch, KeyError, ValueError) as exc:
            raise CorruptBundle(f"{in_dir}: {exc}") from exc
        if meta.get("format_version") != FORMAT_VERSION:
            raise CorruptBundle(
                f"{in_dir}: format_version {meta.get('format_version')!r}, "
                f"expected {FORMAT_VERSION}"
            )
        try:
            text_spec = TextBranchSpec(**meta["text_spec"])
            image_spec = ImageBranchSpec(**meta["image_spec"])
            fusion_spec = FusionSpec(**meta["fusion_spec"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptBundle(f"{in_dir}: bad spec block: {exc}") from exc
        if vocab.size != text_spec.vocab_size:
            raise CorruptBundle(
                f"{in_dir}: vocab.json has {vocab.size} entries, text spec "
                f"wants {text_spec.vocab_size}"
            )
        try:
            text = build_text_branch(
                text_spec, np.zeros((text_spec.vocab_size, text_spec.embed_dim),
                                    np.float32))
            image = build_image_branch(image_spec)
            model = build_fusion_model(text, image, fusion_spec)
        except ShapeMismatch as exc:
            raise CorruptBundle(f"{in_dir}: {exc}") from exc
        params = model.params()
        scaler_mean = scaler_std = None
        with np.load(in_dir / "weights.npz") as npz:
            expected = set(params)
            if meta.get("has_scaler"):
                expected |= {"scaler.mean", "scaler.std"}
            got = set(npz.files)
            if got != expected:
                missing = sorted(expected - got)[:3]
                extra = sorted(got - expected)[:3]
                raise CorruptBundle(
                    f"{in_dir}: weight keys differ (missing {missing}, extra {extra})")
            for name, target in params.items():
                arr = npz[name]
                if arr.shape != target.shape:
                    raise CorruptBundle(
                        f"{in_dir}: {name} has shape {arr.shape}, expected "
                        f"{target.shape}"
                    )
                target[...] = arr
            if meta.get("has_scaler"):
                scaler_mean = npz["scaler.mean"].astype(np.float32)
                scaler_std = npz["scaler.std"].astype(np.float32)
                if scaler_mean.shape != (image_spec.input_len,):
                    raise CorruptBundle(
                        f"{in_dir}: scaler length {scaler_mean.shape}, expected "
                        f"({image_spec.input_len},)"
                    )
        return cls(
            model=model, vocab=vocab, embed_meta=embed_meta,
            extractor_version=meta.get("extractor_version", ""),
            scaler_mean=scaler_mean, scaler_std=scaler_std,
            config=meta.get("config", {}), history=meta.get("history", []),
            version=meta["version"],
        )


def predict(bundle: ModelBundle, headline: str,
            image: "np.ndarray | str | Path | bytes",
            extractor=None) -> Prediction:
    """Full inference path: raw headline + image (feature vector, file path,
    or encoded bytes) to a labeled probability pair."""
    if isinstance(image, np.ndarray):
        feats = image.reshape(-1)
    else:
        ex = extractor or bundle.extractor
        if ex is None:
            raise ExtractorUnavailable(
                "image given as path/bytes but no feature extractor attached")
        if bundle.extractor_version and ex.version != bundle.extractor_version:
            raise ExtractorUnavailable(
                f"bundle was built with extractor {bundle.extractor_version}, "
                f"got {ex.version}"
            )
        if isinstance(image, bytes):
            pixels = prepare_image_bytes(image)
        else:
            pixels = prepare_image(image)
        feats = ex.extract(pixels)
    enc = encode(headline, bundle.vocab, bundle.l_max)
    probs = bundle.probabilities(enc.ids, feats)[0]
    label = int(np.argmax(probs))
    return Prediction(
        label=label,
        label_name=LABEL_NAMES[label],
        probabilities={LABEL_NAMES[i]: float(probs[i]) for i in sorted(LABEL_NAMES)},
        model_version=bundle.version,
    )
