import numpy as np
import pytest

from pyrecall.embed.embedding import Embedding, check_dimension, cosine
from pyrecall.exceptions import DimensionMismatchError, EmptyInputError


def test_embedding_requires_unit_norm() -> None:
    with pytest.raises(ValueError):
        Embedding([1.0, 1.0])


def test_embedding_rejects_non_finite() -> None:
    with pytest.raises(ValueError):
        Embedding([float('nan'), 1.0])


def test_embedding_rejects_empty() -> None:
    with pytest.raises(EmptyInputError):
        Embedding([])


def test_normalized() -> None:
    embedding = Embedding.normalized([3.0, 4.0])
    assert embedding.values.tolist() == pytest.approx([0.6, 0.8])
    assert embedding.dim == 2


def test_normalized_zero_vector() -> None:
    with pytest.raises(EmptyInputError):
        Embedding.normalized([0.0, 0.0])


def test_values_are_read_only() -> None:
    embedding = Embedding.normalized([1.0, 0.0])
    with pytest.raises(ValueError):
        embedding.values[0] = 2.0


def test_equality_and_hash() -> None:
    a, b = Embedding.normalized([1.0, 2.0]), Embedding.normalized([1.0, 2.0])
    assert a == b
    assert hash(a) == hash(b)
    assert a != Embedding.normalized([2.0, 1.0])


def test_cosine_self() -> None:
    x = Embedding.normalized(np.arange(1, 9, dtype=float))
    assert cosine(x, x) == pytest.approx(1.0, abs=1e-6)


def test_cosine_orthonormal() -> None:
    assert cosine(Embedding([1.0, 0.0, 0.0]), Embedding([0.0, 1.0, 0.0])) == 0


def test_cosine_opposite() -> None:
    x = Embedding.normalized([1.0, 2.0, 3.0])
    assert cosine(x, Embedding(-x.values)) == pytest.approx(-1.0)


def test_cosine_dimension_mismatch() -> None:
    with pytest.raises(DimensionMismatchError):
        cosine(Embedding([1.0, 0.0]), Embedding([1.0, 0.0, 0.0]))


def test_check_dimension() -> None:
    check_dimension(2, Embedding([0.0, 1.0]))
    with pytest.raises(DimensionMismatchError) as ex:
        check_dimension(3, Embedding([0.0, 1.0]))
    assert ex.value.expected == 3
    assert ex.value.actual == 2
