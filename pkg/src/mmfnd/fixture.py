"""Synthetic offline dataset: 40 records (20 per class) with generated
Malayalam headlines and PNG images, plus the 16-record subset used for
overfit checks.

Both modalities carry class signal (disjoint word pools; opposite stripe
orientations) so even small models can separate the classes.  Generation
is fully seeded and PNG output carries no timestamps, so regenerating
with the same seed reproduces the committed bytes exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from . import FAKE
from .corpus import NewsRecord, derive_image_name, write_manifest

FIXTURE_SEED = 7
N_PER_CLASS = 20
IMAGE_SIDE = 96

# word pools; fake rows lean on rumor/forgery vocabulary, true rows on
# confirmation/report vocabulary, with some shared filler
_FAKE_WORDS = [
    "വ്യാജം", "കിംവദന്തി", "തെറ്റിദ്ധാരണ", "നുണ", "കെട്ടുകഥ",
    "വളച്ചൊടിക്കൽ", "തട്ടിപ്പ്", "വ്യാജപ്രചരണം", "അടിസ്ഥാനരഹിതം", "കപടം",
]
_TRUE_WORDS = [
    "സ്ഥിരീകരണം", "റിപ്പോർട്ട്", "വസ്തുത", "ഔദ്യോഗികം", "പ്രഖ്യാപനം",
    "വിശദീകരണം", "രേഖ", "തെളിവ്", "സാക്ഷ്യം", "യാഥാർഥ്യം",
]
_SHARED_WORDS = [
    "വാർത്ത", "കേരളം", "സർക്കാർ", "ജനങ്ങൾ", "ഇന്ന്", "പുതിയ",
]


def _headline(rng: np.random.Generator, label: int) -> str:
    pool = _FAKE_WORDS if label == FAKE else _TRUE_WORDS
    n_pool = int(rng.integers(3, 6))
    n_shared = int(rng.integers(1, 3))
    words = [pool[int(rng.integers(len(pool)))] for _ in range(n_pool)]
    words += [_SHARED_WORDS[int(rng.integers(len(_SHARED_WORDS)))] for _ in range(n_shared)]
    rng.shuffle(words)
    return " ".join(words)


def _image(rng: np.random.Generator, label: int) -> Image.Image:
    """Stripes run horizontally for fake rows, vertically for true rows."""
    side = IMAGE_SIDE
    axis = np.arange(side, dtype=np.float64)
    phase = rng.uniform(0, 2 * np.pi)
    freq = rng.uniform(0.25, 0.45)
    wave = 90.0 * np.sin(freq * axis + phase) + 128.0
    if label == FAKE:
        base = np.tile(wave[:, None], (1, side))
    else:
        base = np.tile(wave[None, :], (side, 1))
    rgb = np.stack([base, np.roll(base, 7, axis=0), np.roll(base, 14, axis=1)], axis=2)
    rgb = rgb + rng.normal(0, 12.0, size=rgb.shape)
    return Image.fromarray(np.clip(rgb, 0, 255).astype(np.uint8), "RGB")


def generate_fixture(out_dir: str | Path, n_per_class: int = N_PER_CLASS,
                     seed: int = FIXTURE_SEED) -> list[NewsRecord]:
    """Write manifest.csv + images/ under out_dir; returns the records."""
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for i in range(2 * n_per_class):
        label = i % 2  # alternate so any prefix stays balanced
        fname = f"img_{i:03d}.png"
        _image(rng, label).save(img_dir / fname, format="PNG")
        image_url = f"file:images/{fname}"
        records.append(NewsRecord(
            headline=_headline(rng, label),
            news_url=f"http://news.example.invalid/item/{i:03d}",
            image_url=image_url,
            image_name=derive_image_name(image_url),
            label=label,
        ))
    write_manifest(records, out_dir / "manifest.csv")
    return records


def overfit_subset(records: Sequence[NewsRecord], per_class: int = 8) -> list[NewsRecord]:
    """First `per_class` records of each label, manifest order preserved."""
    picked, seen = [], {0: 0, 1: 0}
    for r in records:
        if seen[r.label] < per_class:
            seen[r.label] += 1
            picked.append(r)
    return picked
