"""Desk-scale downstream evaluation: k-nearest-neighbour classification.

A deterministic kNN probe compares raw sparse count vectors against the
stacked dense representation on a labeled corpus. It is a stand-in
harness, not a benchmark reproduction.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrainingSet, InsufficientLabels, LengthMismatch
from .stack import DcotModel, flatten, transform
from .text import Corpus, docs_to_csr
from .validation import as_float_matrix

METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class LabeledCorpus:
    """A corpus whose leading documents carry class labels."""

    corpus: Corpus
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(lbl) for lbl in self.labels)
        if not labels:
            raise ValueError("labels must be non-empty")
        if len(labels) > self.corpus.n:
            raise ValueError("more labels than documents")
        object.__setattr__(self, "labels", labels)

    @property
    def n_labeled(self) -> int:
        return len(self.labels)


def _distance_matrix(queries: np.ndarray, train: np.ndarray, metric: str) -> np.ndarray:
    if metric == "cosine":
        def unit(M):
            norms = np.linalg.norm(M, axis=1, keepdims=True)
            # zero rows keep zero similarity to everything
            return np.divide(M, norms, out=np.zeros_like(M), where=norms > 0)

        return 1.0 - unit(queries) @ unit(train).T
    if metric == "euclidean":
        qq = (queries ** 2).sum(axis=1)[:, None]
        tt = (train ** 2).sum(axis=1)[None, :]
        sq = np.maximum(qq + tt - 2.0 * queries @ train.T, 0.0)
        return np.sqrt(sq)
    raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")


def knn_classify(
    train_vectors,
    train_labels,
    query_vectors,
    k: int = 3,
    metric: str = "cosine",
) -> list[str]:
    """Majority vote over the k nearest training rows.

    Neighbour selection orders by (distance, label) so the result does not
    depend on training order. Vote ties are broken by the smaller summed
    distance, then by the lexicographically smaller label.
    """
    train = as_float_matrix(train_vectors, "train_vectors")
    queries = as_float_matrix(query_vectors, "query_vectors")
    labels = np.asarray([str(lbl) for lbl in train_labels])
    if train.shape[0] == 0:
        raise EmptyTrainingSet("no training vectors")
    if labels.shape[0] != train.shape[0]:
        raise LengthMismatch(
            f"{train.shape[0]} training rows but {labels.shape[0]} labels"
        )
    if not 1 <= k <= train.shape[0]:
        raise ValueError(f"k must be in [1, {train.shape[0]}], got {k}")
    if train.shape[1] != queries.shape[1]:
        raise ValueError(
            f"train dim {train.shape[1]} != query dim {queries.shape[1]}"
        )

    dist = _distance_matrix(queries, train, metric)
    predictions = []
    for row in dist:
        order = np.lexsort((labels, row))[:k]
        votes = Counter(labels[order])
        top = max(votes.values())
        tied = [lbl for lbl, c in votes.items() if c == top]
        if len(tied) > 1:
            summed = {
                lbl: row[order][labels[order] == lbl].sum() for lbl in tied
            }
            best = min(summed.values())
            tied = [lbl for lbl in tied if summed[lbl] == best]
        predictions.append(min(tied))
    return predictions


def accuracy(predicted, truth) -> float:
    """Exact-match fraction of two aligned label sequences."""
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise LengthMismatch(
            f"predicted has {len(predicted)} items, truth has {len(truth)}"
        )
    if not truth:
        raise ValueError("cannot score empty label lists")
    hits = sum(1 for a, b in zip(predicted, truth) if a == b)
    return hits / len(truth)


def stratified_split(
    labels, seed: int, test_fraction: float = 0.2
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class shuffle split; singleton classes stay in train."""
    labels = [str(lbl) for lbl in labels]
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    by_class = defaultdict(list)
    for i, lbl in enumerate(labels):
        by_class[lbl].append(i)
    for lbl in sorted(by_class):
        members = np.asarray(by_class[lbl], dtype=np.int64)
        perm = members[rng.permutation(members.size)]
        n_test = 0
        if members.size >= 2:
            n_test = min(max(1, round(members.size * test_fraction)), members.size - 1)
        test_idx.extend(perm[:n_test])
        train_idx.extend(perm[n_test:])
    return np.sort(np.asarray(train_idx, np.int64)), np.sort(
        np.asarray(test_idx, np.int64)
    )


@dataclass(frozen=True)
class ClassScores:
    support: int
    sbow_accuracy: float
    dcot_accuracy: float


@dataclass(frozen=True)
class ComparisonReport:
    """Accuracy of the raw sparse arm vs the dense stacked arm."""

    sbow_accuracy: float
    dcot_accuracy: float
    per_class: dict[str, ClassScores]
    n_train: int
    n_test: int
    k: int
    metric: str
    split_seed: int

    def to_dict(self) -> dict:
        return {
            "sbow_accuracy": self.sbow_accuracy,
            "dcot_accuracy": self.dcot_accuracy,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "k": self.k,
            "metric": self.metric,
            "split_seed": self.split_seed,
            "per_class": {
                lbl: {
                    "support": cs.support,
                    "sbow_accuracy": cs.sbow_accuracy,
                    "dcot_accuracy": cs.dcot_accuracy,
                }
                for lbl, cs in sorted(self.per_class.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def format_text(self) -> str:
        lines = [
            f"sbow_accuracy: {self.sbow_accuracy:.4f}",
            f"dcot_accuracy: {self.dcot_accuracy:.4f}",
            f"n_train: {self.n_train}",
            f"n_test: {self.n_test}",
            f"k: {self.k}",
            f"metric: {self.metric}",
            f"split_seed: {self.split_seed}",
        ]
        for lbl, cs in sorted(self.per_class.items()):
            lines.append(
                f"class {lbl}: support={cs.support} "
                f"sbow={cs.sbow_accuracy:.4f} dcot={cs.dcot_accuracy:.4f}"
            )
        return "\n".join(lines)


def compare_representations(
    labeled: LabeledCorpus,
    model: DcotModel,
    split_seed: int = 0,
    k: int = 3,
    metric: str = "cosine",
) -> ComparisonReport:
    """Score kNN on raw counts and on the flattened stacked representation.

    Uses a deterministic stratified 80/20 split of the labeled documents.
    """
    n_l = labeled.n_labeled
    if n_l < 4:
        raise InsufficientLabels(f"need at least 4 labeled documents, got {n_l}")
    docs = labeled.corpus.docs[:n_l]
    labels = list(labeled.labels)

    train_idx, test_idx = stratified_split(labels, split_seed)
    if test_idx.size == 0:
        raise InsufficientLabels(
            "stratified split produced no test documents "
            "(every class has a single labeled document)"
        )

    sbow = docs_to_csr(docs).toarray()
    dense = np.vstack([flatten(transform(model, doc)).to_dense() for doc in docs])

    y = np.asarray(labels)
    truth = list(y[test_idx])
    preds = {}
    for name, matrix in (("sbow", sbow), ("dcot", dense)):
        preds[name] = knn_classify(
            matrix[train_idx], list(y[train_idx]), matrix[test_idx], k, metric
        )

    per_class = {}
    for lbl in sorted(set(truth)):
        mask = [i for i, t in enumerate(truth) if t == lbl]
        per_class[lbl] = ClassScores(
            support=len(mask),
            sbow_accuracy=accuracy([preds["sbow"][i] for i in mask], [lbl] * len(mask)),
            dcot_accuracy=accuracy([preds["dcot"][i] for i in mask], [lbl] * len(mask)),
        )

    return ComparisonReport(
        sbow_accuracy=accuracy(preds["sbow"], truth),
        dcot_accuracy=accuracy(preds["dcot"], truth),
        per_class=per_class,
        n_train=int(train_idx.size),
        n_test=int(test_idx.size),
        k=k,
        metric=metric,
        split_seed=split_seed,
    )
