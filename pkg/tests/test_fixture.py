"""The committed offline dataset: content guarantees and regeneration."""

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from mmfnd import FAKE, NOT_FAKE
from mmfnd.corpus import class_counts, load_manifest
from mmfnd.fixture import FIXTURE_SEED, N_PER_CLASS, generate_fixture, overfit_subset
from mmfnd.textpipe import clean_text, tokenize

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dataset"


def test_committed_manifest_loads_clean(fixture_records):
    assert len(fixture_records) == 2 * N_PER_CLASS
    assert class_counts(fixture_records) == (N_PER_CLASS, N_PER_CLASS)


def test_labels_alternate_so_prefixes_stay_balanced(fixture_records):
    for k in range(1, N_PER_CLASS + 1):
        fake, not_fake = class_counts(fixture_records[: 2 * k])
        assert fake == not_fake == k


def test_regeneration_reproduces_committed_bytes(tmp_path):
    """Drift guard: the generator with the default seed must emit exactly
    the files under fixtures/dataset, byte for byte."""
    generate_fixture(tmp_path, seed=FIXTURE_SEED)
    committed = sorted(p.relative_to(FIXTURE_DIR)
                       for p in FIXTURE_DIR.rglob("*") if p.is_file())
    regenerated = sorted(p.relative_to(tmp_path)
                         for p in tmp_path.rglob("*") if p.is_file())
    assert regenerated == committed
    for rel in committed:
        assert (tmp_path / rel).read_bytes() == (FIXTURE_DIR / rel).read_bytes(), rel


def test_different_seed_changes_content(tmp_path):
    records = generate_fixture(tmp_path, n_per_class=2, seed=FIXTURE_SEED + 1)
    baseline = (FIXTURE_DIR / "images" / "img_000.png").read_bytes()
    assert (tmp_path / "images" / "img_000.png").read_bytes() != baseline
    assert len(records) == 4


def test_headline_words_separate_classes(fixture_records):
    fake_tokens = set()
    true_tokens = set()
    for r in fixture_records:
        tokens = tokenize(clean_text(r.headline))
        assert tokens  # cleaning must not erase the headline
        (fake_tokens if r.label == FAKE else true_tokens).update(tokens)
    exclusive_fake = fake_tokens - true_tokens
    exclusive_true = true_tokens - fake_tokens
    assert len(exclusive_fake) >= 3 and len(exclusive_true) >= 3


def test_stripe_orientation_separates_classes(fixture_records):
    """Independent image oracle: fake rows have horizontal stripes (large
    row-to-row change), true rows vertical ones (large column-to-column)."""
    for rec in fixture_records:
        arr = np.asarray(Image.open(FIXTURE_DIR / "images" / rec.image_url[len("file:images/"):]),
                         dtype=np.float64)
        row_change = np.abs(np.diff(arr, axis=0)).mean()
        col_change = np.abs(np.diff(arr, axis=1)).mean()
        predicted = FAKE if row_change > col_change else NOT_FAKE
        assert predicted == rec.label, rec.image_name


def test_manifest_urls_resolve_inside_fixture_dir(fixture_records):
    for rec in fixture_records:
        assert rec.image_url.startswith("file:images/")
        assert (FIXTURE_DIR / rec.image_url[len("file:"):]).is_file()


def test_overfit_subset_balanced_and_ordered(fixture_records):
    subset = overfit_subset(fixture_records)
    assert len(subset) == 16
    assert class_counts(subset) == (8, 8)
    assert subset == fixture_records[:16]  # alternating labels: plain prefix
    smaller = overfit_subset(fixture_records, per_class=3)
    assert class_counts(smaller) == (3, 3)


def test_reload_equals_generation_output(tmp_path):
    generated = generate_fixture(tmp_path, n_per_class=3, seed=99)
    loaded, errors = load_manifest(tmp_path / "manifest.csv")
    assert errors == []
    assert loaded == generated
