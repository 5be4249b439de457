"""Record one real service request/response pair for the web UI tests.

Trains the small overfit bundle on the committed fixture dataset, runs the
HTTP service in-process, posts the first fixture pair, and freezes the
request inputs plus the verbatim response JSON under
frontend/tests/fixtures/.  The UI tests replay that file, so what the
browser renders is checked against an actual service answer, not a
hand-written sample.

Needs the dev extras (httpx) installed.  Regenerate with:

    python3 scripts/capture_frontend_fixture.py
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from mmfnd.corpus import DatasetSplit, fetch_images, load_manifest, usable_records
from mmfnd.fixture import overfit_subset
from mmfnd.imagepipe import FeatureCache, Vgg16Extractor, make_random_weights, prepare_image
from mmfnd.service import create_app
from mmfnd.textpipe import (
    EmbeddingParams,
    build_vocab,
    choose_l_max,
    clean_text,
    tokenize,
    train_embeddings,
)
from mmfnd.training import TrainConfig, train

REPO = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO / "fixtures" / "dataset"
DEFAULT_OUT = REPO / "frontend" / "tests" / "fixtures" / "predict_response.json"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = parser.parse_args()

    records, errors = load_manifest(FIXTURE_DIR / "manifest.csv", strict=True)
    assert not errors

    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        image_cache = work / "images"
        fetch_images(records, image_cache, local_base=FIXTURE_DIR)
        extractor = Vgg16Extractor.from_npz(
            make_random_weights(work / "vgg16.npz", seed=0))
        features = FeatureCache(work / "features")
        for rec in records:
            vec = extractor.extract(prepare_image(image_cache / rec.image_name))
            features.put(rec.image_name, vec, extractor.version)

        usable = usable_records(records, image_cache)
        subset = overfit_subset(usable)
        rest = [r for r in usable if r not in subset]
        split = DatasetSplit(train=subset, test=rest, seed=42, test_fraction=0.6)
        corpus = [tokenize(clean_text(r.headline)) for r in subset]
        embedding = train_embeddings(
            corpus, build_vocab(corpus),
            EmbeddingParams(vector_size=32, epochs=5, seed=42))
        config = TrainConfig(epochs=50, seed=42,
                             l_max=choose_l_max([len(t) for t in corpus]),
                             embed_dim=embedding.dim)
        bundle, _ = train(split, config, work / "run", embedding, features,
                          extractor_version=extractor.version)

        probe = subset[0]
        image_bytes = (image_cache / probe.image_name).read_bytes()
        with TestClient(create_app(bundle, extractor)) as client:
            response = client.post(
                "/api/v1/predict",
                data={"headline": probe.headline},
                files={"image": (probe.image_name, image_bytes, "image/png")})
        assert response.status_code == 200, response.text

    payload = {
        "request": {"headline": probe.headline, "image_name": probe.image_name},
        "response": response.json(),
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                        encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
