"""
Sources of refreshed content for memories whose answer came from a live feed.

Every source implements ``fetch(url, query_text) -> text`` and raises :class:`LiveSourceError` when it
cannot; callers then resurface the stale answer instead.
"""
import abc
import concurrent.futures
import hashlib
import os
from typing import Dict, Hashable, Optional, Sequence, Tuple

import requests

from ..exceptions import LiveSourceError
from ..utils import logger

DEFAULT_TIMEOUT_S = 5.0
FIXTURE_NAME_LENGTH = 16


def fixture_name(url: str) -> str:
    ''' File name a fixture directory stores the canned response for ``url`` under '''
    return f"{hashlib.sha256(url.encode('utf-8')).hexdigest()[:FIXTURE_NAME_LENGTH]}.txt"


class LiveSource(abc.ABC):
    @abc.abstractmethod
    def fetch(self, url: str, query_text: str) -> str:
        raise NotImplementedError


class NullLiveSource(LiveSource):
    def fetch(self, url: str, query_text: str) -> str:
        raise LiveSourceError(f"No live source configured for '{url}'")


class FixtureLiveSource(LiveSource):
    def __init__(self, directory: str) -> None:
        self.directory = directory

    def fetch(self, url: str, query_text: str) -> str:
        path = os.path.join(self.directory, fixture_name(url))
        try:
            with open(path, encoding='utf-8') as handle:
                text = handle.read().strip()
        except OSError as ex:
            raise LiveSourceError(f"No fixture for '{url}' at {path}") from ex
        if not text:
            raise LiveSourceError(f"Fixture for '{url}' is empty")
        return text


class HTTPLiveSource(LiveSource):
    def __init__(self, timeout: float = DEFAULT_TIMEOUT_S, headers: Optional[dict] = None) -> None:
        self.timeout = timeout
        self.headers = headers or {}

    def fetch(self, url: str, query_text: str) -> str:
        try:
            response = requests.get(url, params={'q': query_text}, headers=self.headers, timeout=self.timeout)
        except requests.exceptions.RequestException as ex:
            raise LiveSourceError(f"Error accessing '{url}': {ex}") from ex

        if response.status_code > 399:
            raise LiveSourceError(f"Error accessing '{url}'. Received status code {response.status_code}")

        text = response.content.decode('utf-8', errors='replace').strip()
        if not text:
            raise LiveSourceError(f"Empty response from '{url}'")
        return text


def fetch_all(source: LiveSource, jobs: Sequence[Tuple[Hashable, str, str]],
              max_workers: int = 4) -> Dict[Hashable, Optional[str]]:
    '''
    Fetch every ``(key, url, query_text)`` job concurrently. Failed fetches map to ``None``.
    '''
    results: Dict[Hashable, Optional[str]] = {}
    if not jobs:
        return results
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(source.fetch, url, query_text): key for key, url, query_text in jobs}
        for future in concurrent.futures.as_completed(futures):
            key = futures[future]
            try:
                results[key] = future.result()
            except Exception as ex:  # pylint: disable=broad-except
                logger.warning(f"Live refresh failed, resurfacing stale content: {ex}")
                results[key] = None
    logger.debug(f"Fetched {sum(r is not None for r in results.values())} of {len(jobs)} live responses")
    return results
