"""Maximum-likelihood discriminant analysis for spherical observations.

Each group gets its own location fit; a new point is allocated to the
group with the highest fitted log-density.  Group sizes never enter the
rule (no prior weighting), so the classifier is a pure ML allocator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import density, mle, sphere
from .rng import as_generator

__all__ = [
    "Classifier",
    "CrossValidationResult",
    "adjusted_rand_index",
    "cross_validate",
    "predict_class",
    "predict_labels",
    "train",
]

_MIN_GROUP = 2


@dataclass(frozen=True)
class Classifier:
    family: str
    labels: tuple[int, ...]
    group_params: tuple[sphere.SphericalParams, ...]

    @property
    def n_groups(self) -> int:
        return len(self.labels)

    @property
    def d(self) -> int:
        return self.group_params[0].d


@dataclass(frozen=True)
class CrossValidationResult:
    family: str
    folds: int
    repeats: int
    accuracies: tuple[float, ...]
    skipped_folds: int

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def median_accuracy(self) -> float:
        return float(np.median(self.accuracies))


def _check_labels(Y: np.ndarray, labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != Y.shape[0]:
        raise ValueError(
            f"labels must be a length-{Y.shape[0]} vector, got shape {labels.shape}"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        as_int = labels.astype(int)
        if not np.array_equal(as_int, labels):
            raise ValueError("labels must be integers")
        labels = as_int
    return labels


def train(Y: np.ndarray, labels, family: str) -> Classifier:
    """Fit one location model per group and bundle them into a classifier."""
    Y = sphere.as_directional(Y)
    labels = _check_labels(Y, labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("need at least 2 groups to train a classifier")
    fits = []
    for lab in uniq:
        rows = Y[labels == lab]
        if rows.shape[0] < _MIN_GROUP:
            raise ValueError(
                f"group {int(lab)} has {rows.shape[0]} observation(s); "
                f"need at least {_MIN_GROUP} to train"
            )
        fits.append(mle.fit_nr(rows, family).params)
    return Classifier(
        family=family,
        labels=tuple(int(v) for v in uniq),
        group_params=tuple(fits),
    )


def _score_matrix(clf: Classifier, Y: np.ndarray) -> np.ndarray:
    """(n, J) log-density matrix; higher is a better allocation."""
    return np.column_stack(
        [density._logpdf_unchecked(Y, p) for p in clf.group_params]
    )


def predict_labels(clf: Classifier, Y: np.ndarray) -> np.ndarray:
    """Allocate every row of Y; ties go to the lowest group label."""
    Y = sphere.as_directional(Y)
    if Y.shape[1] != clf.d + 1:
        raise ValueError(
            f"classifier was trained on S^{clf.d} but data lives in "
            f"R^{Y.shape[1]}"
        )
    scores = _score_matrix(clf, Y)
    # argmax returns the first maximiser and group labels are sorted, so
    # exact ties already resolve to the lowest label
    idx = np.argmax(scores, axis=1)
    return np.asarray(clf.labels)[idx]


def predict_class(clf: Classifier, y0: np.ndarray) -> int:
    """Allocate a single unit vector to a group label."""
    y0 = np.asarray(y0, dtype=float)
    if y0.ndim != 1:
        raise ValueError("predict_class expects a single vector; use predict_labels for batches")
    return int(predict_labels(clf, y0[None, :])[0])


def _stratified_folds(labels: np.ndarray, folds: int, rng) -> np.ndarray:
    """Per-group shuffled round-robin fold ids, so each fold sees all groups."""
    fold_of = np.empty(labels.shape[0], dtype=int)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % folds
    return fold_of


def cross_validate(
    Y: np.ndarray,
    labels,
    family: str,
    folds: int = 10,
    repeats: int = 1,
    rng=None,
) -> CrossValidationResult:
    """Repeated stratified k-fold estimate of the correct-classification rate.

    Each repeat reshuffles the fold assignment on its own substream; the
    repeat accuracy pools correct predictions across its folds.  A fold
    whose training split leaves some group with fewer than 2 points is
    skipped and counted in ``skipped_folds``.
    """
    Y = sphere.as_directional(Y)
    labels = _check_labels(Y, labels)
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    gen = as_generator(rng)
    accuracies = []
    skipped = 0
    for _ in range(repeats):
        fold_of = _stratified_folds(labels, folds, gen)
        correct = 0
        total = 0
        for f in range(folds):
            test = fold_of == f
            train_mask = ~test
            if not np.any(test):
                continue
            counts = np.bincount(labels[train_mask])
            present = np.unique(labels)
            if any(counts[lab] < _MIN_GROUP for lab in present if lab < counts.size) or any(
                lab >= counts.size for lab in present
            ):
                skipped += 1
                continue
            clf = train(Y[train_mask], labels[train_mask], family)
            pred = predict_labels(clf, Y[test])
            correct += int(np.sum(pred == labels[test]))
            total += int(test.sum())
        if total == 0:
            raise ValueError("every fold was skipped; reduce folds or add data")
        accuracies.append(correct / total)
    return CrossValidationResult(
        family=family,
        folds=folds,
        repeats=repeats,
        accuracies=tuple(accuracies),
        skipped_folds=skipped,
    )


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValueError("partitions must label the same number of items")
    n = a.shape[0]
    if n < 2:
        return 1.0
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)

    def _comb2(x):
        return float(np.sum(x * (x - 1.0) / 2.0))

    sum_cells = _comb2(table)
    sum_rows = _comb2(table.sum(axis=1))
    sum_cols = _comb2(table.sum(axis=0))
    total = n * (n - 1.0) / 2.0
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
