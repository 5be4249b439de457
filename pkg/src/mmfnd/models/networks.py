"""The three classifier graphs: BiLSTM text branch, dense image head, and
the fusion network combining them.

Class order on every softmax output is label order: column 0 = fake,
column 1 = not fake.  The fusion model taps either the 64-wide penultimate
activations of both branches (default) or their 2-way softmax outputs,
concatenates, and classifies through Dense(64, relu) -> Dense(2, softmax).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from .layers import Adam, Bidirectional, Dense, Dropout, Embedding

PENULTIMATE = "penultimate"
SOFTMAX_OUTPUT = "softmax_output"


@dataclass(frozen=True)
class TextBranchSpec:
    vocab_size: int
    embed_dim: int = 300
    l_max: int = 32
    lstm1_units: int = 128
    lstm2_units: int = 64
    dense_units: int = 64
    dropout: float = 0.5
    num_classes: int = 2


@dataclass(frozen=True)
class ImageBranchSpec:
    input_len: int = 25088
    dense1_units: int = 256
    dropout: float = 0.5
    dense2_units: int = 64
    num_classes: int = 2


@dataclass(frozen=True)
class FusionSpec:
    fusion_mode: str = PENULTIMATE
    fused_dense_units: int = 64
    num_classes: int = 2

    def __post_init__(self):
        if self.fusion_mode not in (PENULTIMATE, SOFTMAX_OUTPUT):
            raise ValueError(f"unknown fusion mode {self.fusion_mode!r}")


def softmax_xent(probs: np.ndarray, y_onehot: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and the pre-activation gradient (p - y)/B."""
    B = probs.shape[0]
    loss = float(-np.sum(y_onehot * np.log(np.clip(probs, 1e-12, None))) / B)
    dz = (probs - y_onehot) / B
    return loss, dz.astype(probs.dtype)


def _dropout_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 0xD0])


class _Branch:
    """Shared plumbing: parameter aggregation and the training-dropout rng."""

    def __init__(self, seed: int):
        self._layers = []
        self._rng_dropout = _dropout_rng(seed)

    def params(self):
        out = {}
        for layer in self._layers:
            out.update(layer.params())
        return out

    def grads(self):
        out = {}
        for layer in self._layers:
            out.update(layer.grads())
        return out

    def zero_grads(self):
        for layer in self._layers:
            layer.zero_grads()

    def reseed_dropout(self, seed: int):
        self._rng_dropout = _dropout_rng(seed)


class TextBranch(_Branch):
    """Embedding -> BiLSTM(128, sequences) -> BiLSTM(64) -> Dense(64, relu)
    -> Dropout -> Dense(2, softmax)."""

    def __init__(self, spec: TextBranchSpec, embedding_matrix: np.ndarray,
                 seed: int = 42, dtype=np.float32, trainable_embedding: bool = True):
        super().__init__(seed)
        if embedding_matrix.shape != (spec.vocab_size, spec.embed_dim):
            raise ShapeMismatch(
                f"embedding matrix is {embedding_matrix.shape}, spec wants "
                f"({spec.vocab_size}, {spec.embed_dim})"
            )
        self.spec = spec
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self.embedding = Embedding(
            embedding_matrix.astype(dtype).copy(), trainable=trainable_embedding,
            name="embedding",
        )
        self.bilstm1 = Bidirectional(
            spec.embed_dim, spec.lstm1_units, rng, return_sequences=True,
            dtype=dtype, name="bilstm1",
        )
        self.bilstm2 = Bidirectional(
            2 * spec.lstm1_units, spec.lstm2_units, rng, return_sequences=False,
            dtype=dtype, name="bilstm2",
        )
        self.dense = Dense(2 * spec.lstm2_units, spec.dense_units, rng,
                           activation="relu", dtype=dtype, name="dense")
        self.dropout = Dropout(spec.dropout, name="dropout")
        self.out = Dense(spec.dense_units, spec.num_classes, rng,
                         activation="softmax", dtype=dtype, name="out")
        self._layers = [self.embedding, self.bilstm1, self.bilstm2,
                        self.dense, self.dropout, self.out]

    def forward_tap(self, ids: np.ndarray, train: bool = False) -> np.ndarray:
        """Penultimate activation (after dropout), [B, dense_units]."""
        x = self.embedding.forward(ids, train)
        x = self.bilstm1.forward(x, train)
        x = self.bilstm2.forward(x, train)
        x = self.dense.forward(x, train)
        return self.dropout.forward(x, train, self._rng_dropout)

    def forward(self, ids: np.ndarray, train: bool = False) -> np.ndarray:
        return self.out.forward(self.forward_tap(ids, train), train)

    def backward_from_tap(self, dtap: np.ndarray) -> None:
        d = self.dropout.backward(dtap)
        d = self.dense.backward(d)
        d = self.bilstm2.backward(d)
        d = self.bilstm1.backward(d)
        self.embedding.backward(d)

    def backward_preact(self, dz: np.ndarray) -> None:
        self.backward_from_tap(self.out.backward_preact(dz))

    def backward_from_probs(self, dprobs: np.ndarray) -> None:
        self.backward_from_tap(self.out.backward(dprobs))


class ImageBranch(_Branch):
    """Flatten -> Dense(256, relu) -> Dropout -> Dense(64, relu)
    -> Dense(2, softmax); input is the flattened conv-base feature vector."""

    def __init__(self, spec: ImageBranchSpec, seed: int = 42, dtype=np.float32):
        super().__init__(seed)
        if spec.input_len < 1:
            raise ShapeMismatch(f"input_len must be >= 1, got {spec.input_len}")
        self.spec = spec
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self.dense1 = Dense(spec.input_len, spec.dense1_units, rng,
                            activation="relu", dtype=dtype, name="dense1")
        self.dropout = Dropout(spec.dropout, name="dropout")
        self.dense2 = Dense(spec.dense1_units, spec.dense2_units, rng,
                            activation="relu", dtype=dtype, name="dense2")
        self.out = Dense(spec.dense2_units, spec.num_classes, rng,
                         activation="softmax", dtype=dtype, name="out")
        self._layers = [self.dense1, self.dropout, self.dense2, self.out]

    def forward_tap(self, feats: np.ndarray, train: bool = False) -> np.ndarray:
        x = feats.reshape(feats.shape[0], -1).astype(self.dtype, copy=False)
        x = self.dense1.forward(x, train)
        x = self.dropout.forward(x, train, self._rng_dropout)
        return self.dense2.forward(x, train)

    def forward(self, feats: np.ndarray, train: bool = False) -> np.ndarray:
        return self.out.forward(self.forward_tap(feats, train), train)

    def backward_from_tap(self, dtap: np.ndarray) -> None:
        d = self.dense2.backward(dtap)
        d = self.dropout.backward(d)
        self.dense1.backward(d)

    def backward_preact(self, dz: np.ndarray) -> None:
        self.backward_from_tap(self.out.backward_preact(dz))

    def backward_from_probs(self, dprobs: np.ndarray) -> None:
        self.backward_from_tap(self.out.backward(dprobs))


class FusionModel:
    """Concatenates branch taps and classifies; gradients reach both
    branches end to end."""

    def __init__(self, text: TextBranch, image: ImageBranch, spec: FusionSpec,
                 seed: int = 42, dtype=np.float32):
        self.text = text
        self.image = image
        self.spec = spec
        self.dtype = dtype
        if spec.fusion_mode == PENULTIMATE:
            concat_dim = text.spec.dense_units + image.spec.dense2_units
        else:
            concat_dim = text.spec.num_classes + image.spec.num_classes
        self.concat_dim = concat_dim
        rng = np.random.default_rng([seed, 0xF])
        self.fuse_dense = Dense(concat_dim, spec.fused_dense_units, rng,
                                activation="relu", dtype=dtype, name="fuse_dense")
        self.out = Dense(spec.fused_dense_units, spec.num_classes, rng,
                         activation="softmax", dtype=dtype, name="out")
        self._tap_split = None

    def _branch_taps(self, ids, feats, train):
        if self.spec.fusion_mode == PENULTIMATE:
            t = self.text.forward_tap(ids, train)
            i = self.image.forward_tap(feats, train)
        else:
            t = self.text.forward(ids, train)
            i = self.image.forward(feats, train)
        self._tap_split = t.shape[1]
        return np.concatenate([t, i], axis=1)

    def forward(self, ids: np.ndarray, feats: np.ndarray, train: bool = False) -> np.ndarray:
        fused = self._branch_taps(ids, feats, train)
        h = self.fuse_dense.forward(fused, train)
        return self.out.forward(h, train)

    def backward_preact(self, dz: np.ndarray) -> None:
        d = self.out.backward_preact(dz)
        d = self.fuse_dense.backward(d)
        dt, di = d[:, :self._tap_split], d[:, self._tap_split:]
        if self.spec.fusion_mode == PENULTIMATE:
            self.text.backward_from_tap(np.ascontiguousarray(dt))
            self.image.backward_from_tap(np.ascontiguousarray(di))
        else:
            self.text.backward_from_probs(np.ascontiguousarray(dt))
            self.image.backward_from_probs(np.ascontiguousarray(di))

    def params(self):
        out = {f"text.{k}": v for k, v in self.text.params().items()}
        out.update({f"image.{k}": v for k, v in self.image.params().items()})
        out.update({f"fusion.{k}": v for k, v in self.fuse_dense.params().items()})
        out.update({f"fusion.{k}": v for k, v in self.out.params().items()})
        return out

    def grads(self):
        out = {f"text.{k}": v for k, v in self.text.grads().items()}
        out.update({f"image.{k}": v for k, v in self.image.grads().items()})
        out.update({f"fusion.{k}": v for k, v in self.fuse_dense.grads().items()})
        out.update({f"fusion.{k}": v for k, v in self.out.grads().items()})
        return out

    def zero_grads(self):
        self.text.zero_grads()
        self.image.zero_grads()
        self.fuse_dense.zero_grads()
        self.out.zero_grads()

    def reseed_dropout(self, seed: int):
        self.text.reseed_dropout(seed)
        self.image.reseed_dropout(seed)


def build_text_branch(spec: TextBranchSpec, embedding_matrix: np.ndarray,
                      seed: int = 42, dtype=np.float32,
                      trainable_embedding: bool = True) -> TextBranch:
    return TextBranch(spec, embedding_matrix, seed=seed, dtype=dtype,
                      trainable_embedding=trainable_embedding)


def build_image_branch(spec: ImageBranchSpec, seed: int = 42, dtype=np.float32) -> ImageBranch:
    return ImageBranch(spec, seed=seed, dtype=dtype)


def build_fusion_model(text: TextBranch, image: ImageBranch, spec: FusionSpec,
                       seed: int = 42, dtype=np.float32) -> FusionModel:
    return FusionModel(text, image, spec, seed=seed, dtype=dtype)


def make_optimizer(params: dict, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-7) -> Adam:
    return Adam(params, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def count_params(params: dict) -> int:
    return int(sum(v.size for v in params.values()))
