"""Embedding providers: a deterministic local stub and an HTTP client.

The stub hashes probe texts into fixed-dimension vectors, which gives fully
reproducible pipelines with no model in the loop. The HTTP client talks to a
mask-embedding service exposing ``GET /v1/info`` and ``POST /v1/embed``, and
rewrites the canonical ``[MASK]`` literal to whatever mask token the service
advertises.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np
import requests

from .errors import ProviderError
from .probing import MASK_LITERAL


class HashEmbeddingProvider:
    """Deterministic stand-in provider derived from SHA-256 of the text.

    Vector components are drawn from the digest stream of
    ``"{salt}|{dim}|{mask_index}|{text}"``, mapped into [-1, 1). The same text
    always yields the same two vectors, on any platform.
    """

    def __init__(self, dim: int = 64, salt: str = "") -> None:
        if dim < 1:
            raise ProviderError(f"stub provider dim must be >= 1, got {dim}")
        self._dim = int(dim)
        self._salt = salt

    @property
    def dim(self) -> int:
        return self._dim

    def embed_masked(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        if text.count(MASK_LITERAL) != 2:
            raise ProviderError(
                f"stub provider expects exactly two {MASK_LITERAL} placeholders: {text!r}"
            )
        return self._vector(text, 0), self._vector(text, 1)

    def _vector(self, text: str, mask_index: int) -> np.ndarray:
        material = f"{self._salt}|{self._dim}|{mask_index}|{text}".encode("utf-8")
        out = np.empty(self._dim, dtype=np.float32)
        counter = 0
        filled = 0
        while filled < self._dim:
            digest = hashlib.sha256(material + b"#" + str(counter).encode()).digest()
            words = np.frombuffer(digest, dtype="<u4")
            for word in words:
                if filled >= self._dim:
                    break
                out[filled] = np.float32((float(word) / 2.0**32) * 2.0 - 1.0)
                filled += 1
            counter += 1
        return out


class HttpEmbeddingProvider:
    """Client for a mask-embedding HTTP service.

    On construction it fetches ``/v1/info`` for the model id, dimension, and
    mask token. Requests are issued in deterministic (evaluation) mode unless
    told otherwise.
    """

    def __init__(
        self,
        base_url: str,
        *,
        deterministic: bool = True,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ) -> None:
        self._base = base_url.rstrip("/")
        self._deterministic = deterministic
        self._timeout = timeout
        self._session = session or requests.Session()
        info = self._get_json("/v1/info")
        try:
            self.model_id = str(info["model_id"])
            self._dim = int(info["dim"])
            self.mask_token = str(info["mask_token"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed /v1/info response: {info!r}") from exc

    @property
    def dim(self) -> int:
        return self._dim

    def embed_masked(self, text: str) -> tuple[np.ndarray, np.ndarray]:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[tuple[np.ndarray, np.ndarray]]:
        """Embed several probe texts in one request, order-preserving."""
        payload = {
            "texts": [t.replace(MASK_LITERAL, self.mask_token) for t in texts],
            "deterministic": self._deterministic,
        }
        doc = self._post_json("/v1/embed", payload)
        try:
            results = doc["results"]
            out = []
            for item in results:
                first, second = item["mask_vectors"]
                out.append(
                    (
                        np.asarray(first, dtype=np.float32),
                        np.asarray(second, dtype=np.float32),
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed /v1/embed response: {doc!r}") from exc
        if len(out) != len(texts):
            raise ProviderError(
                f"service returned {len(out)} results for {len(texts)} texts"
            )
        for first, second in out:
            if first.shape[0] != self._dim or second.shape[0] != self._dim:
                raise ProviderError(
                    f"service returned vectors of unexpected dimension "
                    f"(advertised {self._dim})"
                )
        return out

    def _get_json(self, path: str) -> dict:
        try:
            response = self._session.get(self._base + path, timeout=self._timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"GET {path} failed: {exc}") from exc
        return self._check(response, path)

    def _post_json(self, path: str, payload: dict) -> dict:
        try:
            response = self._session.post(
                self._base + path, json=payload, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise ProviderError(f"POST {path} failed: {exc}") from exc
        return self._check(response, path)

    @staticmethod
    def _check(response: requests.Response, path: str) -> dict:
        if response.status_code != 200:
            raise ProviderError(
                f"{path} returned HTTP {response.status_code}: {response.text[:500]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderError(f"{path} returned non-JSON body") from exc


def provider_from_spec(spec: str):
    """Build a provider from a CLI spec string.

    ``stub:dim=64`` or ``stub:dim=64,salt=abc`` for the hash stub;
    ``http://host:port`` (or https) for the HTTP service.
    """
    if spec.startswith(("http://", "https://")):
        return HttpEmbeddingProvider(spec)
    if spec == "stub" or spec.startswith("stub:"):
        options = {}
        if ":" in spec:
            for part in spec.split(":", 1)[1].split(","):
                if not part:
                    continue
                if "=" not in part:
                    raise ProviderError(f"malformed stub option {part!r} in {spec!r}")
                key, value = part.split("=", 1)
                options[key.strip()] = value.strip()
        try:
            dim = int(options.pop("dim", "64"))
        except ValueError as exc:
            raise ProviderError(f"stub dim must be an integer in {spec!r}") from exc
        salt = options.pop("salt", "")
        if options:
            raise ProviderError(f"unknown stub options {sorted(options)} in {spec!r}")
        return HashEmbeddingProvider(dim=dim, salt=salt)
    raise ProviderError(
        f"unrecognized provider spec {spec!r}; expected 'stub:dim=N' or an http(s) URL"
    )
