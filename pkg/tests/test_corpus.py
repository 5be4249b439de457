"""Manifest parsing, image-name derivation, fetching, and splitting."""

import hashlib
import threading
from functools import partial
from http.server import HTTPServer, SimpleHTTPRequestHandler
from pathlib import Path

import numpy as np
import pytest

from mmfnd import FAKE, NOT_FAKE
from mmfnd.corpus import (
    MANIFEST_COLUMNS,
    NewsRecord,
    class_counts,
    derive_image_name,
    fetch_images,
    load_manifest,
    split_dataset,
    usable_records,
    write_manifest,
)
from mmfnd.errors import ManifestError, MissingColumn, TooFewRecords

HEADER = ",".join(MANIFEST_COLUMNS)
FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dataset"


def _rec(i, label=0, headline="തലക്കെട്ട്"):
    url = f"http://example.invalid/images/{i}.jpg"
    return NewsRecord(headline=headline, news_url="http://example.invalid/n",
                      image_url=url, image_name=derive_image_name(url), label=label)


# --- derive_image_name ---------------------------------------------------

def test_image_name_is_sha1_plus_extension():
    url = "http://example.invalid/pic.PNG?size=large"
    name = derive_image_name(url)
    assert name == hashlib.sha1(url.encode()).hexdigest() + ".png"


def test_image_name_deterministic_and_distinct():
    a = "http://example.invalid/a.jpg"
    b = "http://example.invalid/b.jpg"
    assert derive_image_name(a) == derive_image_name(a)
    assert derive_image_name(a) != derive_image_name(b)


def test_image_name_fallback_extension():
    assert derive_image_name("http://example.invalid/download").endswith(".jpg")
    # strange over-long "extension" also falls back
    assert derive_image_name("http://e.invalid/x.verylongext").endswith(".jpg")


def test_image_name_injective_on_many_urls():
    names = {derive_image_name(f"http://e.invalid/p/{i}.jpg") for i in range(10_000)}
    assert len(names) == 10_000


# --- load_manifest / write_manifest --------------------------------------

def test_manifest_round_trip(tmp_path):
    records = [_rec(i, label=i % 2) for i in range(6)]
    path = tmp_path / "m.csv"
    write_manifest(records, path)
    loaded, errors = load_manifest(path)
    assert loaded == records
    assert errors == []


def test_header_only_manifest(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text(HEADER + "\n", encoding="utf-8")
    records, errors = load_manifest(path)
    assert records == [] and errors == []


def test_missing_column_raises(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("news_headline,news_url,label\nx,y,0\n", encoding="utf-8")
    with pytest.raises(MissingColumn):
        load_manifest(path)


def test_bad_rows_collected_not_fatal(tmp_path):
    path = tmp_path / "m.csv"
    rows = [
        HEADER,
        'തലക്കെട്ട്,http://n,http://e.invalid/a.jpg,x.jpg,2',   # bad label
        ' ,http://n,http://e.invalid/b.jpg,x.jpg,0',            # empty headline
        'തലക്കെട്ട്,http://n,,x.jpg,1',                          # empty image url
        'തലക്കെട്ട്,http://n,http://e.invalid/c.jpg,x.jpg,1',   # good
    ]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    records, errors = load_manifest(path)
    assert len(records) == 1
    assert sorted(e.code for e in errors) == ["bad_label", "empty_headline", "empty_image_url"]
    with pytest.raises(ManifestError):
        load_manifest(path, strict=True)


def test_manifest_canonicalizes_image_name(tmp_path):
    url = "http://e.invalid/z.png"
    path = tmp_path / "m.csv"
    path.write_text(f"{HEADER}\nതലക്കെട്ട്,http://n,{url},wrong-name.gif,1\n",
                    encoding="utf-8")
    records, _ = load_manifest(path)
    assert records[0].image_name == derive_image_name(url)


def test_class_counts():
    records = [_rec(i, label=0) for i in range(3)] + [_rec(10 + i, label=1) for i in range(2)]
    assert class_counts(records) == (3, 2)


# --- fetch_images --------------------------------------------------------

def test_fetch_local_files_and_idempotence(tmp_path, fixture_records):
    cache = tmp_path / "cache"
    first = fetch_images(fixture_records[:5], cache, local_base=FIXTURE_DIR)
    assert first.counts() == {"cached": 0, "downloaded": 5, "failed": 0}
    second = fetch_images(fixture_records[:5], cache, local_base=FIXTURE_DIR)
    assert second.counts() == {"cached": 5, "downloaded": 0, "failed": 0}
    assert usable_records(fixture_records[:5], cache) == fixture_records[:5]


def test_fetch_failure_is_per_record(tmp_path):
    good_url = "file:present.png"
    bad_url = "file:absent.png"
    (tmp_path / "present.png").write_bytes(b"pretend image")
    records = [
        NewsRecord(headline="x", news_url="http://n", image_url=good_url,
                   image_name=derive_image_name(good_url), label=0),
        NewsRecord(headline="y", news_url="http://n", image_url=bad_url,
                   image_name=derive_image_name(bad_url), label=1),
    ]
    report = fetch_images(records, tmp_path / "cache", local_base=tmp_path)
    assert report.counts() == {"cached": 0, "downloaded": 1, "failed": 1}
    assert report.failed_names() == {records[1].image_name}
    assert usable_records(records, tmp_path / "cache") == [records[0]]


def test_fetch_over_http(tmp_path):
    serve_dir = tmp_path / "www"
    serve_dir.mkdir()
    (serve_dir / "ok.jpg").write_bytes(b"jpegish" * 10)
    handler = partial(SimpleHTTPRequestHandler, directory=str(serve_dir))
    httpd = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        base = f"http://127.0.0.1:{httpd.server_port}"
        urls = [f"{base}/ok.jpg", f"{base}/missing.jpg"]
        records = [
            NewsRecord(headline="x", news_url="http://n", image_url=u,
                       image_name=derive_image_name(u), label=0)
            for u in urls
        ]
        report = fetch_images(records, tmp_path / "cache")
        assert report.counts() == {"cached": 0, "downloaded": 1, "failed": 1}
        fetched = tmp_path / "cache" / records[0].image_name
        assert fetched.read_bytes() == b"jpegish" * 10
    finally:
        httpd.shutdown()


def test_fetch_report_jsonl(tmp_path, fixture_records):
    report = fetch_images(fixture_records[:3], tmp_path / "c", local_base=FIXTURE_DIR)
    out = tmp_path / "report.jsonl"
    report.write_jsonl(out)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 3 and all('"status"' in line for line in lines)


# --- split_dataset -------------------------------------------------------

def test_split_sizes_match_paper_scale():
    records = [_rec(i, label=i % 2) for i in range(1852)]
    split = split_dataset(records, 552 / 1852, seed=11)
    assert abs(len(split.test) - 552) <= 1
    assert len(split.train) + len(split.test) == 1852


def test_split_small_stratified():
    records = [_rec(i, label=i % 2) for i in range(10)]
    split = split_dataset(records, 0.2, seed=3)
    assert class_counts(split.test) == (1, 1)
    assert class_counts(split.train) == (4, 4)


def test_split_deterministic_and_partition():
    records = [_rec(i, label=i % 2) for i in range(40)]
    a = split_dataset(records, 0.3, seed=42)
    b = split_dataset(records, 0.3, seed=42)
    assert a.train == b.train and a.test == b.test
    combined = {r.image_name for r in a.train} | {r.image_name for r in a.test}
    assert combined == {r.image_name for r in records}
    assert not ({r.image_name for r in a.train} & {r.image_name for r in a.test})
    c = split_dataset(records, 0.3, seed=43)
    assert c.test != a.test  # different seed reshuffles


def test_split_needs_two_per_class():
    records = [_rec(0, label=0), _rec(1, label=0), _rec(2, label=1)]
    with pytest.raises(TooFewRecords):
        split_dataset(records, 0.3, seed=1)


def test_split_fraction_validated():
    records = [_rec(i, label=i % 2) for i in range(4)]
    with pytest.raises(ValueError):
        split_dataset(records, 1.5, seed=1)


def test_record_validation():
    with pytest.raises(ValueError):
        NewsRecord(headline="  ", news_url="u", image_url="i", image_name="n", label=0)
    with pytest.raises(ValueError):
        NewsRecord(headline="x", news_url="u", image_url="i", image_name="n", label=3)
    assert FAKE == 0 and NOT_FAKE == 1
