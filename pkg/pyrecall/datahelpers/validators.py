import math
from typing import Any, Union

import attr

Number = Union[int, float]


# pylint: disable=unused-argument
def check_greater_zero(instance: Any, attribute: attr.Attribute, value: Number) -> None:
    if value <= 0:
        raise ValueError(
            f"{attribute.name} must be greater than zero, not {value}"
        )


# pylint: disable=unused-argument
def check_not_negative(instance: Any, attribute: attr.Attribute, value: Number) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError(
            f"{attribute.name} must be finite and non-negative, not {value}"
        )


# pylint: disable=unused-argument
def check_between_zero_one(instance: Any, attribute: attr.Attribute, value: Number) -> None:
    if not 0 <= value <= 1:
        raise ValueError(
            f"{attribute.name} must be between zero and one, not {value}"
        )


# pylint: disable=unused-argument
def check_between_minus_one_one(instance: Any, attribute: attr.Attribute, value: Number) -> None:
    if not -1 <= value <= 1:
        raise ValueError(
            f"{attribute.name} must be between minus one and one, not {value}"
        )


def check_in_range(low: Number, high: Number) -> Any:
    ''' Build an attrs validator accepting finite values in the closed range [low, high] '''

    # pylint: disable=unused-argument
    def _check(instance: Any, attribute: attr.Attribute, value: Number) -> None:
        if not math.isfinite(value) or not low <= value <= high:
            raise ValueError(
                f"{attribute.name} must be between {low} and {high}, not {value}"
            )

    return _check


# pylint: disable=unused-argument
def check_not_blank(instance: Any, attribute: attr.Attribute, value: str) -> None:
    if not isinstance(value, str):
        raise TypeError(f"{attribute.name} must be a string, not {type(value).__name__}")
    if not value or not value.strip():
        raise ValueError(f"{attribute.name} must not be blank")
