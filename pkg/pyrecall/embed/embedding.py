from typing import Any, Sequence, Union

import attr
import numpy as np

from ..exceptions import DimensionMismatchError, EmptyInputError

NORM_TOLERANCE = 1e-6

ArrayLike = Union[Sequence[float], np.ndarray]


def _as_readonly_array(values: Any) -> np.ndarray:
    array = np.array(values, dtype=np.float64).reshape(-1)
    array.setflags(write=False)
    return array


# pylint: disable=unused-argument
def _check_unit_norm(instance: Any, attribute: attr.Attribute, value: np.ndarray) -> None:
    if value.size == 0:
        raise EmptyInputError("An embedding needs at least one component")
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{attribute.name} must only contain finite components")
    norm = float(np.linalg.norm(value))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"{attribute.name} must have unit L2 norm, not {norm}")


@attr.s(frozen=True, eq=False, repr=False)
class Embedding:
    """
    A fixed-dimension, unit-L2-norm vector. The backing array is read-only so embeddings can be
    shared freely between indices and threads.
    """

    values: np.ndarray = attr.ib(converter=_as_readonly_array, validator=_check_unit_norm)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def normalized(cls, values: ArrayLike) -> 'Embedding':
        ''' Scale any non-zero finite vector to unit length '''
        array = np.asarray(values, dtype=np.float64).reshape(-1)
        norm = float(np.linalg.norm(array))
        if norm == 0 or not np.isfinite(norm):
            raise EmptyInputError("Cannot normalize a zero or non-finite vector")
        return cls(array / norm)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        head = ', '.join(f'{x:.4f}' for x in self.values[:4])
        return f"Embedding(dim={self.dim}, values=[{head}{', ...' if self.dim > 4 else ''}])"


def check_dimension(expected: int, embedding: Embedding) -> None:
    if embedding.dim != expected:
        raise DimensionMismatchError(expected, embedding.dim)


def cosine(a: Embedding, b: Embedding) -> float:
    '''
    Cosine similarity of two unit embeddings, clipped to [-1, 1].
    '''
    check_dimension(a.dim, b)
    return float(np.clip(np.dot(a.values, b.values), -1.0, 1.0))
