"""
Text embedding providers.

Every provider turns a non-empty string into a unit-norm :class:`Embedding` of a fixed dimension
and must be safe to call from several threads at once. Two implementations ship:

* :class:`HashingEmbeddingProvider` is deterministic and offline. Text is stripped and lowercased,
  cut into overlapping character 3-grams, each 3-gram is hashed with 64-bit FNV-1a into one of
  ``dim`` buckets, the bucket counts are accumulated and the result is L2-normalized. Stored
  memories are re-embedded with it on load, so this scheme is part of the bank format.
* :class:`HTTPEmbeddingProvider` posts the text to an embedding service and parses ``dim``
  comma-separated decimals from the response body.
"""
import abc
from typing import Optional

import numpy as np
import requests

from ..exceptions import DimensionMismatchError, EmptyTextError, ProviderUnavailableError
from ..utils import logger
from .embedding import Embedding

DEFAULT_DIM = 64
DEFAULT_TIMEOUT_S = 5.0

FNV_OFFSET_BASIS = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3
_MASK_64 = 0xFFFFFFFFFFFFFFFF
NGRAM = 3


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK_64
    return h


def _clean(text: str) -> str:
    if text is None or not text.strip():
        raise EmptyTextError("Cannot embed empty text")
    return text.strip()


class EmbeddingProvider(abc.ABC):
    def __init__(self, dim: int = DEFAULT_DIM) -> None:
        if dim <= 0:
            raise ValueError(f"dim must be greater than zero, not {dim}")
        self.dim = dim

    def embed(self, text: str) -> Embedding:
        embedding = self._embed(_clean(text))
        if embedding.dim != self.dim:
            raise DimensionMismatchError(self.dim, embedding.dim)
        return embedding

    @abc.abstractmethod
    def _embed(self, text: str) -> Embedding:
        raise NotImplementedError

    @property
    def name(self) -> str:
        return f"{self.__class__.__name__}(dim={self.dim})"


class HashingEmbeddingProvider(EmbeddingProvider):
    def _embed(self, text: str) -> Embedding:
        lowered = text.lower()
        counts = np.zeros(self.dim, dtype=np.float64)
        for start in range(len(lowered) - NGRAM + 1):
            gram = lowered[start:start + NGRAM].encode('utf-8')
            counts[fnv1a_64(gram) % self.dim] += 1
        if not counts.any():
            raise EmptyTextError(f"'{text}' is shorter than one {NGRAM}-gram")
        return Embedding(counts / np.linalg.norm(counts))


class HTTPEmbeddingProvider(EmbeddingProvider):
    """
    Client for an external embedding service: POST a UTF-8 text body, receive ``dim``
    comma-separated decimals. Timeouts, connection failures, non-2xx responses and malformed
    bodies all surface as :class:`ProviderUnavailableError`.
    """

    def __init__(self, url: str, dim: int = DEFAULT_DIM, timeout: float = DEFAULT_TIMEOUT_S,
                 headers: Optional[dict] = None) -> None:
        super().__init__(dim)
        self.url = url
        self.timeout = timeout
        self.headers = {'Content-Type': 'text/plain; charset=utf-8', **(headers or {})}

    def _embed(self, text: str) -> Embedding:
        try:
            response = requests.post(self.url, data=text.encode('utf-8'), headers=self.headers,
                                     timeout=self.timeout)
        except requests.exceptions.RequestException as ex:
            raise ProviderUnavailableError(f"Error accessing '{self.url}': {ex}") from ex

        if not 200 <= response.status_code < 300:
            raise ProviderUnavailableError(
                f"Error accessing '{self.url}'. Received status code {response.status_code}"
            )

        try:
            values = [float(x) for x in response.text.strip().split(',')]
        except ValueError as ex:
            raise ProviderUnavailableError(f"Malformed embedding returned by '{self.url}'") from ex

        if len(values) != self.dim:
            raise DimensionMismatchError(self.dim, len(values))

        logger.debug(f"Embedded {len(text)} characters via {self.url}")
        try:
            return Embedding.normalized(values)
        except ValueError as ex:
            raise ProviderUnavailableError(f"Unusable embedding returned by '{self.url}'") from ex
