"""Headline preprocessing and word embeddings.

Cleaning keeps Malayalam-block characters, basic Latin letters and the
``NUM`` placeholder that stands in for any digit run.  Tokenization is
whitespace segmentation (Malayalam is space-delimited at word level and
headlines are short).  Embeddings are trained with skip-gram negative
sampling on the training split only.
"""

from __future__ import annotations

import html
import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._kernels import sgns_train_block
from .errors import EmptyCorpus, ShapeMismatch

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1

# ASCII digits plus the Malayalam numerals block
_DIGIT_RUN_RE = re.compile(r"[0-9൦-൯]+")
_TAG_RE = re.compile(r"<[^>]*?>")
_DISALLOWED_RE = re.compile(r"[^ഀ-ൿA-Za-z ]")
_WS_RE = re.compile(r"\s+")


def clean_text(raw: str) -> str:
    """Strip HTML, replace digit runs with NUM, drop everything outside the
    Malayalam block / Latin letters, collapse whitespace.  Idempotent."""
    text = _TAG_RE.sub(" ", raw)
    text = html.unescape(text)
    text = _DIGIT_RUN_RE.sub(" NUM ", text)
    text = _DISALLOWED_RE.sub(" ", text)
    return _WS_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    return [t for t in text.split(" ") if t]


@dataclass
class Vocab:
    token_to_id: dict[str, int]
    id_to_token: list[str]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def to_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.token_to_id, fh, ensure_ascii=False, indent=0)

    @classmethod
    def from_json(cls, path: str | Path) -> "Vocab":
        with open(path, "r", encoding="utf-8") as fh:
            mapping = json.load(fh)
        ids = sorted(mapping.values())
        if ids != list(range(len(ids))):
            raise ShapeMismatch(f"{path}: vocab indices are not contiguous 0..{len(ids) - 1}")
        id_to_token = [""] * len(ids)
        for tok, i in mapping.items():
            id_to_token[i] = tok
        return cls(token_to_id=mapping, id_to_token=id_to_token)


def build_vocab(corpus: Sequence[Sequence[str]], min_count: int = 1) -> Vocab:
    """Frequency-ordered vocabulary with PAD=0 and UNK=1 reserved.

    Ties in frequency break by codepoint order, so two runs over the same
    corpus always produce the identical mapping.
    """
    counts: dict[str, int] = {}
    total = 0
    for sent in corpus:
        for tok in sent:
            counts[tok] = counts.get(tok, 0) + 1
            total += 1
    if total == 0:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    ordered = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    token_to_id = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
    for i, tok in enumerate(ordered, start=2):
        token_to_id[tok] = i
    id_to_token = [PAD_TOKEN, UNK_TOKEN] + ordered
    return Vocab(token_to_id=token_to_id, id_to_token=id_to_token)


@dataclass(frozen=True)
class TextEncoding:
    ids: np.ndarray  # int32, length L_max, right-padded with PAD_ID
    true_length: int


def encode(headline: str, vocab: Vocab, l_max: int) -> TextEncoding:
    """clean -> tokenize -> index (UNK for OOV) -> truncate -> right-pad."""
    if l_max < 1:
        raise ValueError(f"l_max must be >= 1, got {l_max}")
    tokens = tokenize(clean_text(headline))[:l_max]
    ids = np.full(l_max, PAD_ID, dtype=np.int32)
    for i, tok in enumerate(tokens):
        ids[i] = vocab.lookup(tok)
    return TextEncoding(ids=ids, true_length=len(tokens))


def encode_batch(headlines: Iterable[str], vocab: Vocab, l_max: int) -> np.ndarray:
    return np.stack([encode(h, vocab, l_max).ids for h in headlines])


def choose_l_max(token_lengths: Sequence[int], cap: int = 32) -> int:
    """min(cap, ceil of the 95th-percentile headline length), at least 1."""
    if not token_lengths:
        return cap
    p95 = math.ceil(float(np.percentile(np.asarray(token_lengths), 95)))
    return max(1, min(cap, p95))


def oov_rate(corpus: Sequence[Sequence[str]], vocab: Vocab) -> float:
    """Fraction of token occurrences that map to UNK."""
    total = oov = 0
    for sent in corpus:
        for tok in sent:
            total += 1
            if tok not in vocab.token_to_id:
                oov += 1
    return oov / total if total else 0.0


@dataclass(frozen=True)
class EmbeddingParams:
    vector_size: int = 300
    window: int = 5
    negative: int = 5
    min_count: int = 1
    epochs: int = 10
    alpha: float = 0.025
    min_alpha: float = 1e-4
    seed: int = 42


@dataclass
class EmbeddingModel:
    vocab: Vocab
    matrix: np.ndarray  # [V, D] float32; row 0 (PAD) all zeros
    params: EmbeddingParams

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self.vocab.lookup(token)]


def _skipgram_pairs(sentences_ids: list[list[int]], window: int) -> tuple[np.ndarray, np.ndarray]:
    inputs: list[int] = []
    targets: list[int] = []
    for ids in sentences_ids:
        n = len(ids)
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    inputs.append(ids[i])
                    targets.append(ids[j])
    return (np.asarray(inputs, dtype=np.int32), np.asarray(targets, dtype=np.int32))


def train_embeddings(
    corpus: Sequence[Sequence[str]], vocab: Vocab, params: EmbeddingParams
) -> EmbeddingModel:
    """Skip-gram with negative sampling, seeded and single-threaded.

    Tokens below min_count (absent from the vocab) are dropped from the
    training pairs.  After training the PAD row is zeroed and the UNK row
    is set to the mean of the trained rows.
    """
    sentences_ids = [
        [vocab.token_to_id[t] for t in sent if t in vocab.token_to_id] for sent in corpus
    ]
    n_tokens = sum(len(s) for s in sentences_ids)
    if n_tokens == 0:
        raise EmptyCorpus("no in-vocabulary tokens to train embeddings on")

    V, D = vocab.size, params.vector_size
    rng = np.random.default_rng(params.seed)
    syn0 = (rng.random((V, D)) - 0.5) / D
    syn0[PAD_ID] = 0.0
    syn0[UNK_ID] = 0.0
    syn1 = np.zeros((V, D), dtype=np.float64)

    inputs, contexts = _skipgram_pairs(sentences_ids, params.window)
    n_pairs = inputs.shape[0]
    if n_pairs == 0:
        # single-token sentences only: nothing to train, keep the init
        matrix = syn0.astype(np.float32)
        matrix[PAD_ID] = 0.0
        if V > 2:
            matrix[UNK_ID] = matrix[2:].mean(axis=0)
        return EmbeddingModel(vocab=vocab, matrix=matrix, params=params)

    # unigram^0.75 noise distribution over trainable ids
    freqs = np.zeros(V, dtype=np.float64)
    for ids in sentences_ids:
        for i in ids:
            freqs[i] += 1.0
    freqs[PAD_ID] = freqs[UNK_ID] = 0.0
    noise = freqs ** 0.75
    eligible = np.flatnonzero(noise > 0).astype(np.int32)
    cum = np.cumsum(noise[eligible])
    cum /= cum[-1]

    total_updates = params.epochs * n_pairs
    for epoch in range(params.epochs):
        offsets = epoch * n_pairs + np.arange(n_pairs, dtype=np.float64)
        alphas = np.maximum(params.min_alpha, params.alpha * (1.0 - offsets / total_updates))
        draws = rng.random((n_pairs, params.negative))
        negatives = eligible[np.searchsorted(cum, draws)]
        targets = np.concatenate([contexts[:, None], negatives], axis=1).astype(np.int32)
        targets = np.ascontiguousarray(targets)
        sgns_train_block(syn0, syn1, inputs, targets, alphas)

    matrix = syn0.astype(np.float32)
    matrix[PAD_ID] = 0.0
    if V > 2:
        matrix[UNK_ID] = matrix[2:].mean(axis=0)
    return EmbeddingModel(vocab=vocab, matrix=matrix, params=params)


def import_word2vec_text(path: str | Path, vocab: Vocab, dim: int) -> EmbeddingModel:
    """Build an EmbeddingModel from vectors in the word2vec text format.

    Lines are ``token v1 .. vD``; an optional ``count dim`` header line is
    skipped.  Vocab tokens missing from the file get the mean vector, same
    as UNK.
    """
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            parts = line.rstrip("\n").split(" ")
            if lineno == 0 and len(parts) == 2:
                continue  # header
            if len(parts) < 2:
                continue
            tok, vals = parts[0], parts[1:]
            if len(vals) != dim:
                raise ShapeMismatch(
                    f"{path}:{lineno + 1}: expected {dim} components, got {len(vals)}"
                )
            vectors[tok] = np.asarray([float(v) for v in vals], dtype=np.float32)

    matrix = np.zeros((vocab.size, dim), dtype=np.float32)
    hits: set[int] = set()
    for tok, idx in vocab.token_to_id.items():
        if idx in (PAD_ID, UNK_ID):
            continue
        if tok in vectors:
            matrix[idx] = vectors[tok]
            hits.add(idx)
    mean = matrix[sorted(hits)].mean(axis=0) if hits else np.zeros(dim, dtype=np.float32)
    for idx in range(2, vocab.size):
        if idx not in hits:
            matrix[idx] = mean
    matrix[UNK_ID] = mean
    params = EmbeddingParams(vector_size=dim, epochs=0)
    return EmbeddingModel(vocab=vocab, matrix=matrix, params=params)


def save_embedding_model(model: EmbeddingModel, out_dir: str | Path) -> None:
    """Persist as vocab.json + embeddings.f32 (row-major little-endian
    float32) + embed_meta.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.vocab.to_json(out_dir / "vocab.json")
    model.matrix.astype("<f4").tofile(out_dir / "embeddings.f32")
    meta = {
        "dim": model.dim,
        "vocab_size": model.vocab.size,
        "params": asdict(model.params),
    }
    with open(out_dir / "embed_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)


def load_embedding_model(in_dir: str | Path) -> EmbeddingModel:
    in_dir = Path(in_dir)
    vocab = Vocab.from_json(in_dir / "vocab.json")
    with open(in_dir / "embed_meta.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    dim, vsize = int(meta["dim"]), int(meta["vocab_size"])
    if vsize != vocab.size:
        raise ShapeMismatch(f"{in_dir}: meta vocab_size {vsize} != vocab.json size {vocab.size}")
    raw = np.fromfile(in_dir / "embeddings.f32", dtype="<f4")
    if raw.size != vsize * dim:
        raise ShapeMismatch(
            f"{in_dir}: embeddings.f32 has {raw.size} floats, expected {vsize * dim}"
        )
    matrix = raw.reshape(vsize, dim).astype(np.float32)
    params = EmbeddingParams(**meta["params"])
    return EmbeddingModel(vocab=vocab, matrix=matrix, params=params)
