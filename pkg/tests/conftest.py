"""Session-scoped pipeline artifacts built once from the committed fixture
dataset: fetched images, random conv-base weights, extracted features,
embeddings, and the overfit training run reused by several suites."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mmfnd.corpus import DatasetSplit, fetch_images, load_manifest, split_dataset, usable_records
from mmfnd.fixture import overfit_subset
from mmfnd.imagepipe import FeatureCache, Vgg16Extractor, make_random_weights, prepare_image
from mmfnd.textpipe import (
    EmbeddingParams,
    build_vocab,
    choose_l_max,
    clean_text,
    tokenize,
    train_embeddings,
)
from mmfnd.training import TrainConfig, train

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dataset"


@pytest.fixture(scope="session")
def fixture_records():
    records, errors = load_manifest(FIXTURE_DIR / "manifest.csv", strict=True)
    assert not errors
    return records


@pytest.fixture(scope="session")
def work_dir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("pipeline")


@pytest.fixture(scope="session")
def image_cache(work_dir, fixture_records) -> Path:
    cache = work_dir / "images"
    report = fetch_images(fixture_records, cache, local_base=FIXTURE_DIR)
    assert report.counts()["failed"] == 0
    return cache


@pytest.fixture(scope="session")
def vgg_weights(work_dir) -> Path:
    return make_random_weights(work_dir / "vgg16_test.npz", seed=0)


@pytest.fixture(scope="session")
def extractor(vgg_weights) -> Vgg16Extractor:
    return Vgg16Extractor.from_npz(vgg_weights)


@pytest.fixture(scope="session")
def feature_cache(work_dir, image_cache, extractor, fixture_records) -> FeatureCache:
    cache = FeatureCache(work_dir / "features")
    for rec in fixture_records:
        vec = extractor.extract(prepare_image(image_cache / rec.image_name))
        cache.put(rec.image_name, vec, extractor.version)
    return cache


@pytest.fixture(scope="session")
def fixture_split(fixture_records, image_cache) -> DatasetSplit:
    return split_dataset(usable_records(fixture_records, image_cache), 0.3, 42)


def _embedding_for(records, dim=32, seed=42):
    corpus = [tokenize(clean_text(r.headline)) for r in records]
    vocab = build_vocab(corpus)
    params = EmbeddingParams(vector_size=dim, epochs=5, seed=seed)
    return train_embeddings(corpus, vocab, params), corpus


@pytest.fixture(scope="session")
def fixture_embedding(fixture_split):
    embedding, _ = _embedding_for(fixture_split.train)
    return embedding


@pytest.fixture(scope="session")
def overfit_run(work_dir, fixture_records, image_cache, feature_cache, extractor):
    """Fusion model trained 50 epochs on the 16-record subset."""
    usable = usable_records(fixture_records, image_cache)
    subset = overfit_subset(usable)
    rest = [r for r in usable if r not in subset]
    split = DatasetSplit(train=subset, test=rest, seed=42, test_fraction=0.6)
    embedding, corpus = _embedding_for(subset)
    l_max = choose_l_max([len(toks) for toks in corpus])
    config = TrainConfig(epochs=50, seed=42, l_max=l_max, embed_dim=embedding.dim)
    out_dir = work_dir / "overfit_run"
    bundle, history = train(split, config, out_dir, embedding, feature_cache,
                            extractor_version=extractor.version)
    return {"bundle": bundle, "history": history, "out_dir": out_dir,
            "subset": subset, "split": split, "config": config,
            "embedding": embedding}
