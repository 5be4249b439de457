"""Image decoding, conv-base feature extraction, and the feature cache."""

import io

import numpy as np
import pytest
from PIL import Image

from mmfnd.errors import CacheMiss, DecodeError, ExtractorUnavailable, NotAnImage, ShapeMismatch
from mmfnd.imagepipe import (
    FEATURE_LEN,
    IMAGE_SIZE,
    VGG_BGR_MEANS,
    FeatureCache,
    ImageFeatureVector,
    Vgg16Extractor,
    align_feature_length,
    extract_features,
    make_random_weights,
    prepare_image,
    prepare_image_bytes,
)


def _png_bytes(arr):
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


# --- preparation ---------------------------------------------------------

def test_prepare_uniform_gray_is_shifted_means():
    data = _png_bytes(np.full((448, 448, 3), 128, dtype=np.uint8))
    out = prepare_image_bytes(data)
    assert out.shape == (IMAGE_SIZE, IMAGE_SIZE, 3)
    expected = np.float32(128.0) - VGG_BGR_MEANS
    np.testing.assert_array_equal(out.reshape(-1, 3), np.tile(expected, (IMAGE_SIZE * IMAGE_SIZE, 1)))


def test_prepare_resizes_any_aspect_ratio():
    data = _png_bytes(np.zeros((300, 100, 3), dtype=np.uint8))
    out = prepare_image_bytes(data)
    assert out.shape == (IMAGE_SIZE, IMAGE_SIZE, 3)
    assert out.dtype == np.float32


def test_prepare_converts_grayscale_and_rgba():
    gray = _png_bytes(np.full((50, 50), 7, dtype=np.uint8))
    rgba = _png_bytes(np.full((50, 50, 4), 7, dtype=np.uint8))
    assert prepare_image_bytes(gray).shape == (IMAGE_SIZE, IMAGE_SIZE, 3)
    assert prepare_image_bytes(rgba).shape == (IMAGE_SIZE, IMAGE_SIZE, 3)


def test_prepare_bgr_channel_order():
    # pure red input: the red value must land in the last (B,G,R) slot
    data = _png_bytes(np.stack([np.full((32, 32), 200, np.uint8),
                                np.zeros((32, 32), np.uint8),
                                np.zeros((32, 32), np.uint8)], axis=-1))
    out = prepare_image_bytes(data)
    np.testing.assert_allclose(out[0, 0], np.float32([0, 0, 200]) - VGG_BGR_MEANS)


def test_truncated_jpeg_raises_decode_error():
    rng = np.random.default_rng(0)
    noise = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(noise).save(buf, format="JPEG", quality=95)
    data = buf.getvalue()
    with pytest.raises(DecodeError):
        prepare_image_bytes(data[: len(data) // 2])


def test_non_image_bytes_raise():
    with pytest.raises(NotAnImage):
        prepare_image_bytes(b"definitely not pixels")


def test_missing_file_raises(tmp_path):
    with pytest.raises(DecodeError):
        prepare_image(tmp_path / "absent.png")


def test_prepare_image_reads_from_disk(tmp_path):
    path = tmp_path / "img.png"
    path.write_bytes(_png_bytes(np.full((40, 40, 3), 128, dtype=np.uint8)))
    out = prepare_image(path)
    assert out.shape == (IMAGE_SIZE, IMAGE_SIZE, 3)


# --- extractor -----------------------------------------------------------

def test_extract_length_and_finiteness(extractor):
    prepared = np.zeros((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float32)
    feats = extractor.extract(prepared)
    assert feats.shape == (FEATURE_LEN,)
    assert np.isfinite(feats).all()


def test_extract_is_deterministic(extractor):
    rng = np.random.default_rng(5)
    prepared = rng.normal(0, 50, size=(IMAGE_SIZE, IMAGE_SIZE, 3)).astype(np.float32)
    assert np.array_equal(extractor.extract(prepared), extractor.extract(prepared))


def test_extract_rejects_wrong_shape(extractor):
    with pytest.raises(ShapeMismatch):
        extractor.extract(np.zeros((64, 64, 3), dtype=np.float32))


def test_distinct_images_give_distinct_features(feature_cache, fixture_records, extractor):
    a = feature_cache.get(fixture_records[0].image_name, extractor.version)
    b = feature_cache.get(fixture_records[1].image_name, extractor.version)
    assert (a != b).mean() >= 0.01


def test_extract_features_wrapper(extractor):
    prepared = np.zeros((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.float32)
    vec = extract_features(prepared, extractor, source_image="x.png")
    assert isinstance(vec, ImageFeatureVector)
    assert vec.values.shape == (FEATURE_LEN,) and vec.source_image == "x.png"


def test_random_weights_seeded(tmp_path):
    p1 = make_random_weights(tmp_path / "a.npz", seed=3)
    p2 = make_random_weights(tmp_path / "b.npz", seed=3)
    p3 = make_random_weights(tmp_path / "c.npz", seed=4)
    with np.load(p1) as a, np.load(p2) as b, np.load(p3) as c:
        key = "block1_conv1.weight"
        assert np.array_equal(a[key], b[key])
        assert not np.array_equal(a[key], c[key])


def test_extractor_version_from_file(tmp_path):
    path = make_random_weights(tmp_path / "w.npz", seed=0)
    ex = Vgg16Extractor.from_npz(path)
    assert ex.version.startswith("vgg16conv-") and len(ex.version) == len("vgg16conv-") + 12


def test_extractor_missing_file(tmp_path):
    with pytest.raises(ExtractorUnavailable):
        Vgg16Extractor.from_npz(tmp_path / "nope.npz")


def test_extractor_rejects_incomplete_weights(tmp_path):
    np.savez(tmp_path / "w.npz", **{"block1_conv1.weight": np.zeros((64, 3, 3, 3), np.float32)})
    with pytest.raises(ExtractorUnavailable):
        Vgg16Extractor.from_npz(tmp_path / "w.npz")


# --- alignment -----------------------------------------------------------

def test_align_pads_truncates_identity():
    vec = ImageFeatureVector(values=np.arange(5, dtype=np.float32), source_image="s")
    padded = align_feature_length(vec, 8)
    assert padded.values.tolist() == [0, 1, 2, 3, 4, 0, 0, 0]
    assert align_feature_length(vec, 5) is vec
    cut = align_feature_length(vec, 3)
    assert cut.values.tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        align_feature_length(vec, 0)


# --- cache ---------------------------------------------------------------

def test_cache_round_trip_bit_exact(tmp_path):
    cache = FeatureCache(tmp_path)
    values = np.random.default_rng(1).normal(size=100).astype(np.float32)
    cache.put("x.png", values, "vgg16conv-abc")
    got = cache.get("x.png", "vgg16conv-abc")
    assert np.array_equal(got, values)
    assert cache.has("x.png", "vgg16conv-abc", length=100)


def test_cache_miss_cases(tmp_path):
    cache = FeatureCache(tmp_path)
    cache.put("x.png", np.zeros(10, np.float32), "v1")
    with pytest.raises(CacheMiss):
        cache.get("missing.png", "v1")
    with pytest.raises(CacheMiss):
        cache.get("x.png", "v2")  # different extractor version
    with pytest.raises(CacheMiss):
        cache.get("x.png", "v1", length=25088)
    assert not cache.has("x.png", "v2")


def test_cache_detects_truncated_payload(tmp_path):
    cache = FeatureCache(tmp_path)
    cache.put("x.png", np.zeros(10, np.float32), "v1")
    vec_path = tmp_path / "x.png.f32"
    vec_path.write_bytes(vec_path.read_bytes()[:-4])
    with pytest.raises(CacheMiss):
        cache.get("x.png", "v1")


def test_cache_overwrite_updates(tmp_path):
    cache = FeatureCache(tmp_path)
    cache.put("x.png", np.zeros(4, np.float32), "v1")
    cache.put("x.png", np.ones(4, np.float32), "v2")
    assert cache.get("x.png", "v2").tolist() == [1, 1, 1, 1]
    with pytest.raises(CacheMiss):
        cache.get("x.png", "v1")
