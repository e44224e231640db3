"""
Value types and the geodesic / circular-time arithmetic every other module builds on.

Angles are stored in degrees and only converted to radians inside the distance functions.
Time-of-day is derived in the user's local clock (``tz_offset_min``) because the routines the
engine matches on recur by local time.
"""
import datetime
from typing import Union

import attr
import numpy as np

from .datahelpers.validators import check_in_range, check_not_negative
from .utils import SECONDS_PER_DAY

EARTH_RADIUS_M = 6_371_000.0
HALF_DAY_S = SECONDS_PER_DAY // 2


@attr.s(frozen=True, kw_only=True)
class GeoPoint:
    lat: float = attr.ib(converter=float, validator=check_in_range(-90, 90), metadata={"units": "deg"})
    lon: float = attr.ib(converter=float, validator=check_in_range(-180, 180), metadata={"units": "deg"})
    accuracy_m: float = attr.ib(default=0.0, converter=float, validator=check_not_negative,
                                metadata={"units": "m"})


@attr.s(frozen=True, kw_only=True, order=True)
class Timestamp:
    epoch_s: int = attr.ib(converter=int, metadata={"units": "s"})
    tz_offset_min: int = attr.ib(default=0, converter=int, validator=check_in_range(-840, 840),
                                 order=False, metadata={"units": "min"})

    def __sub__(self, other: 'Timestamp') -> int:
        return self.epoch_s - other.epoch_s

    def isoformat(self) -> str:
        tz = datetime.timezone(datetime.timedelta(minutes=self.tz_offset_min))
        return datetime.datetime.fromtimestamp(self.epoch_s, tz=tz).isoformat()


@attr.s(frozen=True)
class TimeOfDay:
    seconds_since_local_midnight: int = attr.ib(converter=int, validator=check_in_range(0, SECONDS_PER_DAY - 1))

    def __str__(self) -> str:
        hours, remainder = divmod(self.seconds_since_local_midnight, 3600)
        return f"{hours:02d}:{remainder // 60:02d}"

    @classmethod
    def from_clock(cls, hours: int, minutes: int = 0, seconds: int = 0) -> 'TimeOfDay':
        return cls((hours * 3600 + minutes * 60 + seconds) % SECONDS_PER_DAY)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    '''
    Great-circle distance in meters between two points on a spherical Earth of radius 6,371 km.
    '''
    lat_a, lon_a, lat_b, lon_b = np.deg2rad([a.lat, a.lon, b.lat, b.lon])
    half_chord = (
        np.sin((lat_b - lat_a) / 2) ** 2
        + np.cos(lat_a) * np.cos(lat_b) * np.sin((lon_b - lon_a) / 2) ** 2
    )
    return float(2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(min(1.0, half_chord))))


def haversine_m_array(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    ''' Vectorized haversine from one point (degrees) to arrays of points (degrees) '''
    lat_r, lon_r = np.deg2rad(lat), np.deg2rad(lon)
    lats_r, lons_r = np.deg2rad(lats), np.deg2rad(lons)
    half_chord = (
        np.sin((lats_r - lat_r) / 2) ** 2
        + np.cos(lat_r) * np.cos(lats_r) * np.sin((lons_r - lon_r) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(1.0, half_chord)))


def time_of_day(t: Timestamp) -> TimeOfDay:
    return TimeOfDay((t.epoch_s + t.tz_offset_min * 60) % SECONDS_PER_DAY)


def circular_diff_s(a: Union[TimeOfDay, int], b: Union[TimeOfDay, int]) -> int:
    '''
    Distance between two times of day on the 24 hour clock, in [0, 43200] seconds.
    Plain integers are accepted and reduced modulo one day first.
    '''
    a_s = a.seconds_since_local_midnight if isinstance(a, TimeOfDay) else int(a) % SECONDS_PER_DAY
    b_s = b.seconds_since_local_midnight if isinstance(b, TimeOfDay) else int(b) % SECONDS_PER_DAY
    diff = abs(a_s - b_s)
    return min(diff, SECONDS_PER_DAY - diff)


def circular_diff_s_array(tod_s: int, tods: np.ndarray) -> np.ndarray:
    diff = np.abs(np.asarray(tods, dtype=np.int64) - int(tod_s))
    return np.minimum(diff, SECONDS_PER_DAY - diff)
