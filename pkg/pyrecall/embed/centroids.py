"""
Nearest-centroid scene/activity classification.

Each class is represented by the normalized mean of its sample embeddings; a query is labeled
with the class whose centroid has the highest cosine similarity, ties going to the
lexicographically smallest label.
"""
from collections import defaultdict
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import attr
import numpy as np
import pandas as pd

from ..exceptions import EmptyInputError
from .embedding import Embedding, check_dimension, cosine


def _check_classes(instance: 'CentroidModel', attribute: attr.Attribute, value: Mapping[str, Embedding]) -> None:
    if not value:
        raise EmptyInputError("A centroid model needs at least one class")
    dims = {centroid.dim for centroid in value.values()}
    if len(dims) != 1:
        raise ValueError(f"{attribute.name} centroids must share one dimension, found {sorted(dims)}")


@attr.s(frozen=True)
class CentroidModel:
    classes: Mapping[str, Embedding] = attr.ib(converter=lambda x: dict(sorted(x.items())),
                                               validator=_check_classes)

    @property
    def labels(self) -> List[str]:
        return list(self.classes)

    @property
    def dim(self) -> int:
        return next(iter(self.classes.values())).dim


def build_centroids(samples: Iterable[Tuple[str, Embedding]]) -> CentroidModel:
    grouped: Dict[str, List[np.ndarray]] = defaultdict(list)
    for label, embedding in samples:
        grouped[label].append(embedding.values)

    if not grouped:
        raise EmptyInputError("build_centroids needs at least one (label, embedding) sample")

    centroids = {}
    for label in sorted(grouped):
        # sorting the rows keeps the float summation independent of sample order
        rows = sorted(grouped[label], key=lambda row: row.tobytes())
        centroids[label] = Embedding.normalized(np.sum(rows, axis=0))
    return CentroidModel(centroids)


def classify(query: Embedding, model: CentroidModel) -> Tuple[str, float]:
    check_dimension(model.dim, query)
    best_label, best_score = '', -np.inf
    # classes are stored sorted, so strict > keeps the smallest label on ties
    for label, centroid in model.classes.items():
        score = cosine(query, centroid)
        if score > best_score:
            best_label, best_score = label, score
    return best_label, float(best_score)


def classification_report(y_true: Sequence[str], y_pred: Sequence[str]) -> pd.DataFrame:
    '''
    Per-class precision, recall, F1 and support, plus a ``macro avg`` row.
    Classes with no predictions score zero precision rather than raising.
    '''
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred must have the same length")
    if not y_true:
        raise EmptyInputError("classification_report needs at least one sample")

    frame = pd.DataFrame({'true': list(y_true), 'pred': list(y_pred)})
    rows = []
    for label in sorted(set(frame['true']) | set(frame['pred'])):
        tp = int(((frame['true'] == label) & (frame['pred'] == label)).sum())
        predicted = int((frame['pred'] == label).sum())
        support = int((frame['true'] == label).sum())
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        rows.append({'label': label, 'precision': precision, 'recall': recall, 'f1': f1, 'support': support})

    report = pd.DataFrame(rows).set_index('label')
    report.loc['macro avg'] = [
        report['precision'].mean(), report['recall'].mean(), report['f1'].mean(), report['support'].sum()
    ]
    report['support'] = report['support'].astype(int)
    return report


def macro_f1(y_true: Sequence[str], y_pred: Sequence[str]) -> float:
    return float(classification_report(y_true, y_pred).loc['macro avg', 'f1'])


def make_clusters(n_classes: int = 5, per_class: int = 200, dim: int = 64, noise: float = 0.05,
                  seed: int = 0, center_cosine: float = 0.3,
                  labels: Optional[Sequence[str]] = None) -> List[Tuple[str, Embedding]]:
    '''
    Synthesize a labeled evaluation set: ``n_classes`` unit centers whose pairwise cosine is
    exactly ``center_cosine``, each surrounded by ``per_class`` normalized samples drawn with
    isotropic Gaussian noise of standard deviation ``noise`` per component.
    '''
    if not 0 <= center_cosine < 1:
        raise ValueError(f"center_cosine must be in [0, 1), not {center_cosine}")
    if dim <= n_classes:
        raise ValueError("dim must exceed n_classes to place the cluster centers")
    labels = list(labels) if labels is not None else [f'class_{i}' for i in range(n_classes)]
    if len(labels) != n_classes:
        raise ValueError("labels must name every class")

    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dim, n_classes + 1)))
    shared, axes = basis[:, 0], basis[:, 1:]
    # c_i = sqrt(rho) * u + sqrt(1 - rho) * e_i  =>  c_i . c_j = rho
    centers = np.sqrt(center_cosine) * shared[:, None] + np.sqrt(1 - center_cosine) * axes

    samples = []
    for label, center in zip(labels, centers.T):
        for _ in range(per_class):
            samples.append((label, Embedding.normalized(center + rng.normal(0.0, noise, dim))))
    return samples
