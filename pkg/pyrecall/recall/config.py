import os
from typing import Any, Optional

import attr

from ..core import GeoPoint, HALF_DAY_S
from ..datahelpers.validators import check_between_minus_one_one, check_between_zero_one, check_greater_zero
from ..store import file_utils

CFG_FILENAME = 'recall_config.json'
PYRECALL_CONFIG_ENV = 'PYRECALL_CONFIG'

MIN_RADIUS_M = 50.0
ACCURACY_RADIUS_FACTOR = 2.0


# pylint: disable=unused-argument
def _check_optional_radius(instance: Any, attribute: attr.Attribute, value: Optional[float]) -> None:
    if value is not None:
        check_greater_zero(instance, attribute, value)


# pylint: disable=unused-argument
def _check_window(instance: Any, attribute: attr.Attribute, value: float) -> None:
    if not 0 < value <= HALF_DAY_S:
        raise ValueError(f"{attribute.name} must be in (0, {HALF_DAY_S}], not {value}")


@attr.s(frozen=True, kw_only=True)
class RecallConfig:
    radius_m: Optional[float] = attr.ib(default=None, converter=attr.converters.optional(float),
                                        validator=_check_optional_radius, metadata={"units": "m"})
    tod_window_s: float = attr.ib(default=5400.0, converter=float, validator=_check_window,
                                  metadata={"units": "s"})
    referent_conf_threshold: float = attr.ib(default=0.5, converter=float, validator=check_between_zero_one)
    referent_sim_threshold: float = attr.ib(default=0.8, converter=float, validator=check_between_minus_one_one)
    semantic_threshold: float = attr.ib(default=0.8, converter=float, validator=check_between_minus_one_one)
    k: int = attr.ib(default=5, converter=int, validator=check_greater_zero)
    default_interval_days: float = attr.ib(default=1.0, converter=float, validator=check_greater_zero,
                                           metadata={"units": "days"})
    proactive: bool = attr.ib(default=True, converter=bool)

    def effective_radius_m(self, geo: GeoPoint) -> float:
        ''' The configured radius, or twice the fix's accuracy but never under 50 m '''
        if self.radius_m is not None:
            return self.radius_m
        return max(ACCURACY_RADIUS_FACTOR * geo.accuracy_m, MIN_RADIUS_M)

    def save(self, directory: str) -> None:
        file_utils.safe_jsonify(directory, CFG_FILENAME, attr.asdict(self))


def load_config(filename: Optional[str] = None) -> RecallConfig:
    ''' Load from the named file, or the one in $PYRECALL_CONFIG, falling back to the defaults '''
    cfg_handle = filename or os.environ.get(PYRECALL_CONFIG_ENV)
    if cfg_handle and os.path.isfile(cfg_handle):
        data = file_utils.load_json(cfg_handle)
        if not isinstance(data, dict):
            raise ValueError(f"{cfg_handle} must hold a JSON object")
        try:
            return RecallConfig(**data)
        except TypeError as ex:
            raise ValueError(f"{cfg_handle}: {ex}") from ex
    if filename:
        raise FileNotFoundError(f"No recall configuration at '{filename}'")
    return RecallConfig()
