"""Image loading and VGG-16 conv-base feature extraction.

Images are decoded to RGB, bilinear-resized to 224x224 and normalized in
the Caffe/VGG convention (BGR channel order, per-channel ImageNet mean
subtraction).  The conv base is the 13-layer stack of 3x3 convolutions
with five 2x2 max-pools; its 7x7x512 output flattens to a fixed 25088-d
vector.  Extraction is inference-only and deterministic, so vectors are
cached on disk keyed by (image name, extractor version, length).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from PIL import Image, UnidentifiedImageError

from .errors import CacheMiss, DecodeError, ExtractorUnavailable, NotAnImage, ShapeMismatch

IMAGE_SIZE = 224
FEATURE_LEN = 25088  # 7 * 7 * 512 after five 2x poolings of a 224 input
VGG_BGR_MEANS = np.array([103.939, 116.779, 123.68], dtype=np.float32)

# (layer name, in channels, out channels); a 2x2 max-pool follows each block
VGG16_BLOCKS = [
    [("block1_conv1", 3, 64), ("block1_conv2", 64, 64)],
    [("block2_conv1", 64, 128), ("block2_conv2", 128, 128)],
    [("block3_conv1", 128, 256), ("block3_conv2", 256, 256), ("block3_conv3", 256, 256)],
    [("block4_conv1", 256, 512), ("block4_conv2", 512, 512), ("block4_conv3", 512, 512)],
    [("block5_conv1", 512, 512), ("block5_conv2", 512, 512), ("block5_conv3", 512, 512)],
]


def prepare_image_bytes(data: bytes) -> np.ndarray:
    """Decode raw image bytes into the normalized 224x224x3 input tensor."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise NotAnImage(f"not a recognized image: {exc}") from exc
    except (OSError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    img = img.convert("RGB").resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32)
    arr = arr[:, :, ::-1] - VGG_BGR_MEANS  # RGB -> BGR, then mean subtraction
    return np.ascontiguousarray(arr)


def prepare_image(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DecodeError(f"cannot read {path}: {exc}") from exc
    try:
        return prepare_image_bytes(data)
    except NotAnImage as exc:
        raise NotAnImage(f"{path}: {exc}") from exc
    except DecodeError as exc:
        raise DecodeError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class ImageFeatureVector:
    values: np.ndarray  # float32, length F
    source_image: str


def _conv3x3_relu(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, strip: int = 56) -> np.ndarray:
    """Same-padded 3x3 convolution + ReLU via strip-wise im2col and BLAS."""
    h, w, cin = x.shape
    cout = weight.shape[0]
    # [out, in, 3, 3] -> [(kh, kw, in), out] to match the patch layout
    wmat = weight.transpose(2, 3, 1, 0).reshape(9 * cin, cout)
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    out = np.empty((h, w, cout), dtype=np.float32)
    for r0 in range(0, h, strip):
        r1 = min(h, r0 + strip)
        win = sliding_window_view(xp[r0:r1 + 2], (3, 3), axis=(0, 1))  # [rows, w, c, 3, 3]
        patches = win.transpose(0, 1, 3, 4, 2).reshape((r1 - r0) * w, 9 * cin)
        out[r0:r1] = (patches @ wmat + bias).reshape(r1 - r0, w, cout)
    np.maximum(out, 0.0, out=out)
    return out


def _maxpool2x2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    return x.reshape(h // 2, 2, w // 2, 2, c).max(axis=(1, 3))


class Vgg16Extractor:
    """Conv-base forward pass with weights loaded from a local .npz file.

    The weight file holds ``<layer>.weight`` [out, in, 3, 3] and
    ``<layer>.bias`` [out] float32 arrays for the 13 conv layers.  The
    extractor version is derived from the file content, so features from
    different weight files never alias in the cache.
    """

    def __init__(self, weights: dict[str, np.ndarray], version: str):
        self.weights = weights
        self.version = version

    @classmethod
    def from_npz(cls, path: str | Path) -> "Vgg16Extractor":
        path = Path(path)
        if not path.exists():
            raise ExtractorUnavailable(f"conv-base weights not found: {path}")
        digest = hashlib.sha1(path.read_bytes()).hexdigest()[:12]
        with np.load(path) as npz:
            weights = {}
            for block in VGG16_BLOCKS:
                for name, cin, cout in block:
                    for suffix, shape in ((".weight", (cout, cin, 3, 3)), (".bias", (cout,))):
                        key = name + suffix
                        if key not in npz:
                            raise ExtractorUnavailable(f"{path}: missing array {key}")
                        arr = np.asarray(npz[key], dtype=np.float32)
                        if arr.shape != shape:
                            raise ExtractorUnavailable(
                                f"{path}: {key} has shape {arr.shape}, expected {shape}"
                            )
                        weights[key] = arr
        return cls(weights=weights, version=f"vgg16conv-{digest}")

    def extract(self, prepared: np.ndarray) -> np.ndarray:
        if prepared.shape != (IMAGE_SIZE, IMAGE_SIZE, 3):
            raise ShapeMismatch(
                f"prepared image must be {IMAGE_SIZE}x{IMAGE_SIZE}x3, got {prepared.shape}"
            )
        x = prepared.astype(np.float32, copy=False)
        for block in VGG16_BLOCKS:
            for name, _, _ in block:
                x = _conv3x3_relu(x, self.weights[name + ".weight"], self.weights[name + ".bias"])
            x = _maxpool2x2(x)
        return np.ascontiguousarray(x.reshape(-1))


def extract_features(prepared: np.ndarray, extractor: Vgg16Extractor, source_image: str = "") -> ImageFeatureVector:
    return ImageFeatureVector(values=extractor.extract(prepared), source_image=source_image)


def align_feature_length(vec: ImageFeatureVector, target: int) -> ImageFeatureVector:
    """Zero-pad or truncate to ``target``; identity when lengths match."""
    if target < 1:
        raise ValueError(f"target length must be >= 1, got {target}")
    values = vec.values
    n = values.shape[0]
    if target == n:
        return vec
    if target > n:
        out = np.zeros(target, dtype=values.dtype)
        out[:n] = values
    else:
        out = values[:target].copy()
    return ImageFeatureVector(values=out, source_image=vec.source_image)


def make_random_weights(path: str | Path, seed: int = 0) -> Path:
    """Write a seeded, randomly initialized conv-base weight file.

    He-normal filters keep activation scale stable through the 13 layers.
    Useful for offline runs and tests; real pretrained weights can be
    converted with scripts/export_vgg16_weights.py.
    """
    rng = np.random.default_rng(seed)
    arrays: dict[str, np.ndarray] = {}
    for block in VGG16_BLOCKS:
        for name, cin, cout in block:
            std = np.sqrt(2.0 / (9 * cin))
            arrays[name + ".weight"] = rng.normal(0.0, std, size=(cout, cin, 3, 3)).astype(np.float32)
            arrays[name + ".bias"] = np.zeros(cout, dtype=np.float32)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)
    # np.savez appends .npz when absent; keep the caller's exact path
    written = path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")
    if written != path and written.exists():
        os.replace(written, path)
    return path


class FeatureCache:
    """On-disk feature vectors: raw little-endian float32 plus a JSON
    sidecar carrying the cache key.  Writes are atomic."""

    def __init__(self, cache_dir: str | Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _paths(self, image_name: str) -> tuple[Path, Path]:
        return self.dir / f"{image_name}.f32", self.dir / f"{image_name}.json"

    def put(self, image_name: str, values: np.ndarray, extractor_version: str) -> None:
        vec_path, meta_path = self._paths(image_name)
        tmp_vec = vec_path.with_name(vec_path.name + ".tmp")
        tmp_meta = meta_path.with_name(meta_path.name + ".tmp")
        np.asarray(values, dtype="<f4").tofile(tmp_vec)
        meta = {
            "image_name": image_name,
            "length": int(np.asarray(values).shape[0]),
            "extractor_version": extractor_version,
        }
        tmp_meta.write_text(json.dumps(meta), encoding="utf-8")
        os.replace(tmp_vec, vec_path)
        os.replace(tmp_meta, meta_path)

    def get(self, image_name: str, extractor_version: str, length: int | None = None) -> np.ndarray:
        vec_path, meta_path = self._paths(image_name)
        if not vec_path.exists() or not meta_path.exists():
            raise CacheMiss(f"no cached features for {image_name!r}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("extractor_version") != extractor_version:
            raise CacheMiss(
                f"{image_name!r}: cached under extractor "
                f"{meta.get('extractor_version')!r}, wanted {extractor_version!r}"
            )
        if length is not None and meta.get("length") != length:
            raise CacheMiss(
                f"{image_name!r}: cached length {meta.get('length')}, wanted {length}"
            )
        values = np.fromfile(vec_path, dtype="<f4")
        if values.size != meta.get("length"):
            raise CacheMiss(f"{image_name!r}: sidecar length disagrees with payload")
        return values

    def has(self, image_name: str, extractor_version: str, length: int | None = None) -> bool:
        try:
            self.get(image_name, extractor_version, length)
            return True
        except CacheMiss:
            return False
