"""Dataset ingestion: manifest rows, image fetching/caching, train/test splits.

The manifest is a UTF-8 CSV with header
``news_headline,news_url,image_url,image_name,label`` where label 0 means
fake and 1 means true.  Image filenames are derived from the image URL so
the cache stays stable before anything is downloaded.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import re
import shutil
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlsplit

import numpy as np

from . import FAKE, NOT_FAKE
from .errors import ManifestError, MissingColumn, TooFewRecords

MANIFEST_COLUMNS = ["news_headline", "news_url", "image_url", "image_name", "label"]

_EXT_RE = re.compile(r"^\.[A-Za-z0-9]{1,5}$")
_USER_AGENT = "mmfnd/0.1 (dataset ingestion)"


@dataclass(frozen=True)
class NewsRecord:
    headline: str
    news_url: str
    image_url: str
    image_name: str
    label: int

    def __post_init__(self):
        if not self.headline.strip():
            raise ValueError("headline must be non-empty after trimming")
        if self.label not in (FAKE, NOT_FAKE):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class RowError:
    row: int  # 0-based data row index (header excluded)
    code: str  # bad_label | empty_headline | empty_image_url
    message: str


@dataclass
class DatasetSplit:
    train: list[NewsRecord]
    test: list[NewsRecord]
    seed: int
    test_fraction: float


@dataclass(frozen=True)
class FetchEntry:
    image_name: str
    status: str  # cached | downloaded | failed
    reason: str | None = None


@dataclass
class FetchReport:
    entries: list[FetchEntry] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {"cached": 0, "downloaded": 0, "failed": 0}
        for e in self.entries:
            out[e.status] += 1
        return out

    def failed_names(self) -> set[str]:
        return {e.image_name for e in self.entries if e.status == "failed"}

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                obj = {"image_name": e.image_name, "status": e.status}
                if e.reason is not None:
                    obj["reason"] = e.reason
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def derive_image_name(image_url: str) -> str:
    """SHA-1 of the URL plus the URL's file extension (``.jpg`` fallback)."""
    if not image_url:
        raise ValueError("image_url must be non-empty")
    digest = hashlib.sha1(image_url.encode("utf-8")).hexdigest()
    path = urlsplit(image_url).path
    ext = os.path.splitext(path)[1].lower()
    if not _EXT_RE.match(ext):
        ext = ".jpg"
    return digest + ext


def load_manifest(path: str | Path, strict: bool = False) -> tuple[list[NewsRecord], list[RowError]]:
    """Parse the manifest CSV into records plus per-row errors.

    The image_name column is informative only; the canonical name is
    re-derived from image_url so caching stays consistent.  With
    ``strict=True`` any row error raises :class:`ManifestError`.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MissingColumn(f"{path}: empty file, expected header {MANIFEST_COLUMNS}")
        missing = [c for c in MANIFEST_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise MissingColumn(f"{path}: header lacks column(s) {missing}")

        records: list[NewsRecord] = []
        errors: list[RowError] = []
        for idx, row in enumerate(reader):
            headline = (row.get("news_headline") or "").strip()
            image_url = (row.get("image_url") or "").strip()
            raw_label = (row.get("label") or "").strip()
            if not headline:
                errors.append(RowError(idx, "empty_headline", f"row {idx}: empty headline"))
                continue
            if raw_label not in ("0", "1"):
                errors.append(RowError(idx, "bad_label", f"row {idx}: label {raw_label!r} not in {{0,1}}"))
                continue
            if not image_url:
                errors.append(RowError(idx, "empty_image_url", f"row {idx}: empty image_url"))
                continue
            records.append(
                NewsRecord(
                    headline=headline,
                    news_url=(row.get("news_url") or "").strip(),
                    image_url=image_url,
                    image_name=derive_image_name(image_url),
                    label=int(raw_label),
                )
            )

    if strict and errors:
        raise ManifestError(
            f"{path}: {len(errors)} malformed row(s); first: {errors[0].message}"
        )
    return records, errors


def write_manifest(records: Iterable[NewsRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for r in records:
            writer.writerow([r.headline, r.news_url, r.image_url, r.image_name, r.label])


def class_counts(records: Iterable[NewsRecord]) -> tuple[int, int]:
    """(fake, not_fake) record counts."""
    fake = not_fake = 0
    for r in records:
        if r.label == FAKE:
            fake += 1
        else:
            not_fake += 1
    return fake, not_fake


def _fetch_one(record: NewsRecord, cache_dir: Path, timeout: float, local_base: Path | None) -> FetchEntry:
    dest = cache_dir / record.image_name
    if dest.exists():
        return FetchEntry(record.image_name, "cached")
    scheme = urlsplit(record.image_url).scheme.lower()
    tmp = dest.with_name(dest.name + ".part")
    try:
        if scheme in ("http", "https"):
            req = urllib.request.Request(record.image_url, headers={"User-Agent": _USER_AGENT})
            with urllib.request.urlopen(req, timeout=timeout) as resp, open(tmp, "wb") as out:
                shutil.copyfileobj(resp, out)
        elif scheme == "file":
            rel = urlsplit(record.image_url).path
            src = Path(rel)
            if not src.is_absolute():
                src = (local_base or Path.cwd()) / rel
            if not src.exists():
                return FetchEntry(record.image_name, "failed", f"no such file: {src}")
            shutil.copyfile(src, tmp)
        else:
            return FetchEntry(record.image_name, "failed", f"unsupported URL scheme: {scheme!r}")
        os.replace(tmp, dest)
        return FetchEntry(record.image_name, "downloaded")
    except Exception as exc:  # network errors never abort the batch
        tmp.unlink(missing_ok=True)
        return FetchEntry(record.image_name, "failed", f"{type(exc).__name__}: {exc}")


def fetch_images(
    records: Sequence[NewsRecord],
    cache_dir: str | Path,
    timeout: float = 10.0,
    workers: int = 8,
    local_base: str | Path | None = None,
) -> FetchReport:
    """Download every record's image into ``cache_dir/<image_name>``.

    Already-present files are cache hits (no network call).  ``file:``
    URLs are copied locally; relative ones resolve against ``local_base``
    (typically the manifest's directory).  Failures are recorded per
    record, never raised.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    base = Path(local_base) if local_base is not None else None
    report = FetchReport()
    if not records:
        return report
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        entries = list(pool.map(lambda r: _fetch_one(r, cache_dir, timeout, base), records))
    report.entries = entries
    return report


def usable_records(records: Sequence[NewsRecord], cache_dir: str | Path) -> list[NewsRecord]:
    """Records whose image is present in the cache; the rest are excluded."""
    cache_dir = Path(cache_dir)
    return [r for r in records if (cache_dir / r.image_name).exists()]


def split_dataset(records: Sequence[NewsRecord], test_fraction: float, seed: int) -> DatasetSplit:
    """Deterministic stratified split; same seed and input give the same sets."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    by_class: dict[int, list[int]] = {FAKE: [], NOT_FAKE: []}
    for i, r in enumerate(records):
        by_class[r.label].append(i)
    for label, idxs in by_class.items():
        if len(idxs) < 2:
            raise TooFewRecords(
                f"need >=2 records per class, class {label} has {len(idxs)}"
            )
    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    for label in (FAKE, NOT_FAKE):  # fixed order so the seed is reproducible
        idxs = np.asarray(by_class[label])
        n_test = int(round(len(idxs) * test_fraction))
        n_test = min(max(n_test, 1), len(idxs) - 1)
        chosen = rng.permutation(len(idxs))[:n_test]
        test_idx.extend(idxs[chosen].tolist())
    test_set = set(test_idx)
    train = [records[i] for i in range(len(records)) if i not in test_set]
    test = [records[i] for i in sorted(test_set)]
    return DatasetSplit(train=train, test=test, seed=seed, test_fraction=test_fraction)
