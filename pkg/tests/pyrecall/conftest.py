import math
import os
import urllib.parse
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Tuple, Union
from unittest.mock import MagicMock

import numpy as np
import pytest
import requests
from _pytest.monkeypatch import MonkeyPatch

from pyrecall.core import GeoPoint, Timestamp
from pyrecall.embed.embedding import Embedding
from pyrecall.embed.providers import EmbeddingProvider, HashingEmbeddingProvider
from pyrecall.recall.frame import Detection, FrameObservation, FrameQuery
from pyrecall.store.bank import MemoryBank
from pyrecall.store.memory import ResponseSource, SpatialActivityProfile

# Seattle, UTC-5 as recorded in the shipped traces
TZ_MIN = -300
HOME = GeoPoint(lat=47.6097, lon=-122.3331, accuracy_m=8)
# 2025-03-03 07:50 local
DAY1_0750 = 1741006200
# 2025-03-03 00:00 UTC
BASE_EPOCH_S = 1740960000


class MakeFrameCallable(Protocol):
    def __call__(self, epoch_s: int = DAY1_0750, geo: GeoPoint = HOME, scene: str = 'entrance hallway',
                 activity: str = 'preparing to commute',
                 detections: Sequence[Tuple[str, float]] = (('door', 0.92),),
                 query: Optional[FrameQuery] = None) -> FrameObservation: ...


class CountingProvider(HashingEmbeddingProvider):
    """ Hashing provider that remembers every text it embedded """

    def __init__(self, dim: int = 64) -> None:
        super().__init__(dim)
        self.texts: List[str] = []

    def _embed(self, text: str) -> Embedding:
        self.texts.append(text)
        return super()._embed(text)


def random_profiles(n: int, seed: int, spread_m: float = 1000.0, tod_spread_s: int = 86400, clusters: int = 8,
                    dim: int = 64, provider: Optional[EmbeddingProvider] = None) -> List[SpatialActivityProfile]:
    '''
    Profiles scattered around downtown Seattle from 08:20 UTC onwards. Without a ``provider`` the
    descriptors are noisy copies of ``clusters`` random centers; with one they are embedded from the
    scene and activity texts, which keeps them reproducible after a reload.
    '''
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((clusters, dim))
    profiles = []
    for _ in range(n):
        north, east = rng.uniform(-spread_m / 2, spread_m / 2, 2)
        geo = GeoPoint(lat=47.6 + north / 111_320.0, lon=-122.3 + east / (111_320.0 * math.cos(math.radians(47.6))))
        ts = Timestamp(epoch_s=BASE_EPOCH_S + 30000 + int(rng.integers(0, tod_spread_s)))
        cluster = int(rng.integers(0, clusters))
        if provider is None:
            descriptor = Embedding.normalized(centers[cluster] + rng.normal(0.0, 0.3, dim))
            profiles.append(SpatialActivityProfile(geo=geo, ts=ts, scene_text=f"scene {cluster}",
                                                   activity_text=f"activity {cluster}", descriptor=descriptor))
        else:
            scene = f"room {cluster} corner {int(rng.integers(0, 20))}"
            activity = f"task {int(rng.integers(0, 20))}"
            profiles.append(SpatialActivityProfile.build(geo, ts, scene, activity, provider))
    return profiles


def fill_bank(bank: MemoryBank, profiles: List[SpatialActivityProfile]) -> List[int]:
    return [bank.add_memory(f"referent {i}", f"query {i}", f"response {i}", ResponseSource.static(), profile)
            for i, profile in enumerate(profiles)]


# Autouse to prevent integration tests sneaking into the unit tests
@pytest.fixture(autouse=True)
def _requests_prevent_delete(monkeypatch: MonkeyPatch, thrower: Callable, logging_side_effect: Callable) -> MagicMock:
    mock = MagicMock(side_effect=logging_side_effect('requests.delete', after=thrower))
    monkeypatch.setattr(requests, 'delete', mock)
    return mock


# Autouse to prevent integration tests sneaking into the unit tests
@pytest.fixture(autouse=True)
def _requests_prevent_get(monkeypatch: MonkeyPatch, thrower: Callable, logging_side_effect: Callable) -> MagicMock:
    mock = MagicMock(side_effect=logging_side_effect('requests.get', after=thrower))
    monkeypatch.setattr(requests, 'get', mock)
    return mock


# Autouse to prevent integration tests sneaking into the unit tests
@pytest.fixture(autouse=True)
def _requests_prevent_post(monkeypatch: MonkeyPatch, thrower: Callable, logging_side_effect: Callable) -> MagicMock:
    mock = MagicMock(side_effect=logging_side_effect('requests.post', after=thrower))
    monkeypatch.setattr(requests, 'post', mock)
    return mock


# Autouse to prevent integration tests sneaking into the unit tests
@pytest.fixture(autouse=True)
def _requests_prevent_put(monkeypatch: MonkeyPatch, thrower: Callable, logging_side_effect: Callable) -> MagicMock:
    mock = MagicMock(side_effect=logging_side_effect('requests.put', after=thrower))
    monkeypatch.setattr(requests, 'put', mock)
    return mock


@pytest.fixture(name='provider')
def _provider() -> HashingEmbeddingProvider:
    return HashingEmbeddingProvider(64)


@pytest.fixture(name='counting_provider')
def _counting_provider() -> CountingProvider:
    return CountingProvider(64)


@pytest.fixture(name='bank')
def _bank(provider: HashingEmbeddingProvider) -> MemoryBank:
    return MemoryBank(provider)


@pytest.fixture(name='make_profile')
def _make_profile(provider: HashingEmbeddingProvider) -> Callable[..., SpatialActivityProfile]:
    def _make(epoch_s: int = DAY1_0750, geo: GeoPoint = HOME, scene: str = 'entrance hallway',
              activity: str = 'preparing to commute') -> SpatialActivityProfile:
        return SpatialActivityProfile.build(geo, Timestamp(epoch_s=epoch_s, tz_offset_min=TZ_MIN), scene,
                                            activity, provider)
    return _make


@pytest.fixture(name='make_frame')
def _make_frame() -> MakeFrameCallable:
    def _make(epoch_s: int = DAY1_0750, geo: GeoPoint = HOME, scene: str = 'entrance hallway',
              activity: str = 'preparing to commute',
              detections: Sequence[Tuple[str, float]] = (('door', 0.92),),
              query: Optional[FrameQuery] = None) -> FrameObservation:
        return FrameObservation(
            ts=Timestamp(epoch_s=epoch_s, tz_offset_min=TZ_MIN),
            geo=geo,
            detections=[Detection(label, conf) for label, conf in detections],
            scene_text=scene,
            activity_text=activity,
            query=query,
        )
    return _make


@pytest.fixture(name='add_door_memory')
def _add_door_memory(bank: MemoryBank, make_profile: Callable[..., SpatialActivityProfile]) -> Callable[..., int]:
    ''' Store the commute weather question asked at the house entrance '''
    def _add(epoch_s: int = DAY1_0750, interval_days: float = 1.0) -> int:
        return bank.add_memory('door', 'what is the weather like today', 'Sunny, 12 C',
                               ResponseSource.live_feed('https://weather.example.com/today'),
                               make_profile(epoch_s=epoch_s), interval_days=interval_days, tag='A1')
    return _add


@pytest.fixture()
def data_dir() -> str:
    """
        Returns the path to the tests data directory
    """
    this_dir = os.path.dirname(os.path.realpath(__file__))
    return os.path.join(this_dir, 'data')


class DummyResponse:
    def __init__(self, content: Union[str, bytes], status_code: int = 200, url: str = ''):
        self.content = content.encode('utf-8') if isinstance(content, str) else content
        self.text = self.content.decode('utf-8')
        self.status_code = status_code
        self.url = url


@pytest.fixture()
def response_get_monkeypatch(monkeypatch: MonkeyPatch) -> Callable:
    """
        Returns a function that will monkeypatch the requests.get function call to return expected data
    """
    def setup(result: Union[str, bytes], expected_url: Optional[str] = None, status_code: int = 200) -> MagicMock:
        def _monkeypatch(url: str, params: Optional[Dict] = None, **kwargs: object) -> DummyResponse:
            final_url = url
            if params:
                final_url = f"{final_url}?{urllib.parse.urlencode(params)}"

            if expected_url is not None:
                print("expected", expected_url)
                print("received", final_url)
                assert final_url.endswith(expected_url)

            return DummyResponse(result, status_code, final_url)

        mock = MagicMock(side_effect=_monkeypatch)
        monkeypatch.setattr(requests, 'get', mock)
        return mock

    return setup


@pytest.fixture()
def response_post_monkeypatch(monkeypatch: MonkeyPatch) -> Callable:
    """
        Returns a function that will monkeypatch the requests.post function call to return expected data
    """
    def setup(result: Union[str, bytes], status_code: int = 200) -> MagicMock:
        mock = MagicMock(side_effect=lambda url, **kwargs: DummyResponse(result, status_code, url))
        monkeypatch.setattr(requests, 'post', mock)
        return mock

    return setup
