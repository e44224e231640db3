"""
The stored record types: where a response comes from, the spatial activity profile a memory was made
in, and the memory itself.
"""
from typing import Any, Dict, Optional

import attr

from ..core import GeoPoint, Timestamp, TimeOfDay, time_of_day
from ..datahelpers.validators import check_greater_zero, check_not_blank
from ..embed.embedding import Embedding
from ..embed.providers import EmbeddingProvider
from ..index.rtree import SpatioTemporalKey

DESCRIPTOR_SEPARATOR = ' | '
LIVE_PREFIX = 'live:'
STATIC = 'static'


def descriptor_text(scene_text: str, activity_text: str) -> str:
    ''' Scene and activity are embedded together as one descriptor '''
    return f"{scene_text.strip()}{DESCRIPTOR_SEPARATOR}{activity_text.strip()}"


@attr.s(frozen=True)
class ResponseSource:
    url: Optional[str] = attr.ib(default=None)

    @url.validator
    def _check_url(self, attribute: attr.Attribute, value: Optional[str]) -> None:
        if value is not None and not value.strip():
            raise ValueError(f"{attribute.name} of a live feed must not be blank")

    @classmethod
    def static(cls) -> 'ResponseSource':
        return cls()

    @classmethod
    def live_feed(cls, url: str) -> 'ResponseSource':
        return cls(url)

    @classmethod
    def parse(cls, text: str) -> 'ResponseSource':
        ''' Read ``static`` or ``live:<url>`` '''
        if not isinstance(text, str):
            raise TypeError(f"Response source must be a string, not {type(text).__name__}")
        if text == STATIC:
            return cls.static()
        if text.startswith(LIVE_PREFIX) and len(text) > len(LIVE_PREFIX):
            return cls.live_feed(text[len(LIVE_PREFIX):])
        raise ValueError(f"Unknown response source '{text}', expected 'static' or 'live:<url>'")

    @property
    def is_live(self) -> bool:
        return self.url is not None

    def __str__(self) -> str:
        return f"{LIVE_PREFIX}{self.url}" if self.url is not None else STATIC


@attr.s(frozen=True, kw_only=True)
class SpatialActivityProfile:
    geo: GeoPoint = attr.ib(validator=attr.validators.instance_of(GeoPoint))
    ts: Timestamp = attr.ib(validator=attr.validators.instance_of(Timestamp))
    scene_text: str = attr.ib(validator=check_not_blank)
    activity_text: str = attr.ib(validator=check_not_blank)
    descriptor: Embedding = attr.ib(validator=attr.validators.instance_of(Embedding), repr=False)

    @classmethod
    def build(cls, geo: GeoPoint, ts: Timestamp, scene_text: str, activity_text: str,
              provider: EmbeddingProvider) -> 'SpatialActivityProfile':
        descriptor = provider.embed(descriptor_text(scene_text, activity_text))
        return cls(geo=geo, ts=ts, scene_text=scene_text, activity_text=activity_text, descriptor=descriptor)

    @property
    def tod(self) -> TimeOfDay:
        return time_of_day(self.ts)

    @property
    def text(self) -> str:
        return descriptor_text(self.scene_text, self.activity_text)

    def key(self) -> SpatioTemporalKey:
        return SpatioTemporalKey(lat=self.geo.lat, lon=self.geo.lon, tod_s=self.tod.seconds_since_local_midnight)

    def to_record(self) -> Dict[str, Any]:
        return {
            'lat': self.geo.lat,
            'lon': self.geo.lon,
            'acc_m': self.geo.accuracy_m,
            'epoch_s': self.ts.epoch_s,
            'tz_min': self.ts.tz_offset_min,
            'scene': self.scene_text,
            'activity': self.activity_text,
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any], provider: EmbeddingProvider) -> 'SpatialActivityProfile':
        return cls.build(
            geo=GeoPoint(lat=record['lat'], lon=record['lon'], accuracy_m=record.get('acc_m', 0.0)),
            ts=Timestamp(epoch_s=record['epoch_s'], tz_offset_min=record.get('tz_min', 0)),
            scene_text=record['scene'],
            activity_text=record['activity'],
            provider=provider,
        )


def _check_recall_after_creation(instance: 'Rsam', attribute: attr.Attribute, value: Optional[Timestamp]) -> None:
    if value is not None and value < instance.created_at:
        raise ValueError(f"{attribute.name} ({value.epoch_s}) precedes created_at ({instance.created_at.epoch_s})")


@attr.s(frozen=True, kw_only=True)
class Rsam:
    """
    A referent-anchored spatiotemporal activity memory: a user's query and its answer, bound to the
    object it was asked about and the context it was asked in. Instances are immutable; the bank
    replaces them with ``attr.evolve`` as their lifecycle advances.
    """

    id: int = attr.ib(converter=int)
    referent_label: str = attr.ib(validator=check_not_blank)
    query_text: str = attr.ib(validator=check_not_blank)
    response_text: str = attr.ib(validator=check_not_blank)
    response_source: ResponseSource = attr.ib(factory=ResponseSource.static)
    profile: SpatialActivityProfile = attr.ib()
    created_at: Timestamp = attr.ib()
    last_recalled_at: Optional[Timestamp] = attr.ib(default=None, validator=_check_recall_after_creation)
    recall_interval_days: float = attr.ib(default=1.0, converter=float, validator=check_greater_zero,
                                          metadata={"units": "days"})
    dismissed: bool = attr.ib(default=False)
    tag: Optional[str] = attr.ib(default=None)
