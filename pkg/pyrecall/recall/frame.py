from typing import Optional, Tuple

import attr

from ..core import GeoPoint, Timestamp
from ..datahelpers.validators import check_between_zero_one, check_not_blank
from ..embed.providers import EmbeddingProvider
from ..store.memory import ResponseSource, SpatialActivityProfile

_optional_text = attr.validators.optional(attr.validators.instance_of(str))


@attr.s(frozen=True)
class Detection:
    label: str = attr.ib(validator=check_not_blank)
    confidence: float = attr.ib(converter=float, validator=check_between_zero_one)


@attr.s(frozen=True, kw_only=True)
class FrameQuery:
    """ A question the user asked aloud about ``referent_label`` while the frame was captured """

    referent_label: str = attr.ib(validator=check_not_blank)
    query_text: str = attr.ib(validator=check_not_blank)
    response_text: Optional[str] = attr.ib(default=None, validator=_optional_text)
    response_source: ResponseSource = attr.ib(factory=ResponseSource.static)
    tag: Optional[str] = attr.ib(default=None, validator=_optional_text)


@attr.s(frozen=True, kw_only=True)
class FrameObservation:
    ts: Timestamp = attr.ib(validator=attr.validators.instance_of(Timestamp))
    geo: GeoPoint = attr.ib(validator=attr.validators.instance_of(GeoPoint))
    detections: Tuple[Detection, ...] = attr.ib(default=(), converter=tuple)
    scene_text: str = attr.ib(validator=check_not_blank)
    activity_text: str = attr.ib(validator=check_not_blank)
    query: Optional[FrameQuery] = attr.ib(default=None)

    def profile(self, provider: EmbeddingProvider) -> SpatialActivityProfile:
        return SpatialActivityProfile.build(self.geo, self.ts, self.scene_text, self.activity_text, provider)
