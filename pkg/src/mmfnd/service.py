"""HTTP inference service: a loaded bundle behind two versioned endpoints.

POST /api/v1/predict accepts either multipart (``headline`` + ``image``
upload) or JSON (``headline`` + ``image_url``); GET /api/v1/health reports
the model version.  The bundle is loaded once and never mutated, so
concurrent requests are safe.  URL fetches refuse non-HTTP(S) schemes and
loopback/link-local hosts unless the dev flag allows them.

Error mapping: invalid request shape 422, undecodable image or refused URL
400, upstream fetch failure 502, missing model/extractor 503.
"""

from __future__ import annotations

import ipaddress
import logging
import socket
import time
import urllib.error
import urllib.request
from pathlib import Path
from urllib.parse import urlsplit

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .errors import DecodeError, ImageFetchFailed, NotAnImage
from .imagepipe import Vgg16Extractor, prepare_image_bytes
from .models import ModelBundle, predict

log = logging.getLogger(__name__)

_USER_AGENT = f"mmfnd/{__version__}"
_MAX_FETCH_BYTES = 20 * 1024 * 1024


def _field_error(status: int, loc: list, msg: str, code: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"detail": [{"loc": loc, "msg": msg, "type": code}]})


def _refusal_reason(url: str, allow_private: bool) -> str | None:
    """Why this URL must not be fetched, or None if it is acceptable."""
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https"):
        return f"scheme {parts.scheme!r} is not allowed (http/https only)"
    if not parts.hostname:
        return "URL has no host"
    if allow_private:
        return None
    try:
        infos = socket.getaddrinfo(parts.hostname, None)
        addresses = [ipaddress.ip_address(info[4][0]) for info in infos]
    except (socket.gaierror, ValueError) as exc:
        return f"cannot resolve host {parts.hostname!r}: {exc}"
    for addr in addresses:
        if addr.is_loopback or addr.is_link_local or addr.is_unspecified:
            return f"host {parts.hostname!r} resolves to blocked address {addr}"
    return None


def _fetch_url(url: str, timeout: float) -> bytes:
    req = urllib.request.Request(url, headers={"User-Agent": _USER_AGENT})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return resp.read(_MAX_FETCH_BYTES)
    except (urllib.error.URLError, urllib.error.HTTPError, TimeoutError, OSError) as exc:
        raise ImageFetchFailed(f"{url}: {exc}") from exc


def create_app(bundle: ModelBundle, extractor: Vgg16Extractor | None = None, *,
               fetch_timeout: float = 10.0, cors_origin: str = "*",
               allow_private_urls: bool = False) -> FastAPI:
    app = FastAPI(title="mmfnd", version=__version__)
    app.add_middleware(
        CORSMiddleware, allow_origins=[cors_origin], allow_methods=["*"],
        allow_headers=["*"])

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "model_version": bundle.version}

    @app.post("/api/v1/predict")
    async def predict_endpoint(request: Request):
        content_type = request.headers.get("content-type", "")
        image_bytes = None
        image_url = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            headline = form.get("headline")
            upload = form.get("image")
            image_url = form.get("image_url") or None
            if upload is not None and not isinstance(upload, str):
                image_bytes = await upload.read()
            elif isinstance(upload, str) and upload:
                return _field_error(422, ["body", "image"],
                                    "image must be a file upload", "value_error")
        elif content_type.startswith("application/json"):
            try:
                body = await request.json()
            except Exception:
                return _field_error(422, ["body"], "request body is not valid JSON",
                                    "value_error.json")
            if not isinstance(body, dict):
                return _field_error(422, ["body"], "request body must be an object",
                                    "type_error")
            headline = body.get("headline")
            image_url = body.get("image_url") or None
        else:
            return _field_error(
                422, ["body"],
                "use multipart/form-data (headline+image) or application/json "
                "(headline+image_url)", "value_error.content_type")

        if not isinstance(headline, str) or not headline.strip():
            return _field_error(422, ["body", "headline"],
                                "headline must be a non-empty string", "value_error.empty")
        if (image_bytes is None) == (image_url is None):
            return _field_error(422, ["body", "image"],
                                "provide exactly one image source (upload or image_url)",
                                "value_error.image_source")

        if extractor is None:
            return JSONResponse(status_code=503, content={
                "detail": "feature extractor is not loaded", "code": "model_unavailable"})

        t0 = time.perf_counter()
        if image_url is not None:
            refusal = _refusal_reason(image_url, allow_private_urls)
            if refusal is not None:
                return JSONResponse(status_code=400, content={
                    "detail": refusal, "code": "url_refused"})
            try:
                image_bytes = _fetch_url(image_url, fetch_timeout)
            except ImageFetchFailed as exc:
                return JSONResponse(status_code=502, content={
                    "detail": str(exc), "code": "image_fetch_failed"})
        try:
            pixels = prepare_image_bytes(image_bytes)
        except (NotAnImage, DecodeError) as exc:
            return JSONResponse(status_code=400, content={
                "detail": str(exc), "code": "decode_error"})
        feats = extractor.extract(pixels)
        result = predict(bundle, headline, feats)
        latency_ms = (time.perf_counter() - t0) * 1000.0
        return {
            "label": result.label_name,
            "probabilities": result.probabilities,
            "model_version": result.model_version,
            "latency_ms": round(latency_ms, 3),
        }

    return app


def serve(bundle_dir: str | Path, host: str, port: int, weights_file: str | Path, *,
          fetch_timeout: float = 10.0, cors_origin: str = "*",
          allow_private_urls: bool = False) -> None:
    """Load everything up front (fail fast), then block in uvicorn."""
    import uvicorn

    bundle = ModelBundle.load(bundle_dir)
    extractor = Vgg16Extractor.from_npz(weights_file)
    bundle.attach_extractor(extractor)
    app = create_app(bundle, extractor, fetch_timeout=fetch_timeout,
                     cors_origin=cors_origin, allow_private_urls=allow_private_urls)
    log.info("serving bundle %s on %s:%d", bundle.version, host, port)
    uvicorn.run(app, host=host, port=port, log_level="info")
