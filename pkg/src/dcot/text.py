"""Text ingestion: tokenization, vocabulary building, sparse count vectors.

Documents are plain UTF-8 text, one document per line ("line corpus").
Labeled corpora use the form ``label<TAB>text``.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyVocabulary, InvalidPrototypeCount, IoFailure
from .validation import check_positive_int

# Unicode letters and digits; underscore is punctuation here.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split text into tokens on runs of non-alphanumeric characters.

    Lowercasing is applied first (on by default). Empty tokens never occur.
    """
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class Vocabulary:
    """An ordered dictionary of terms with corpus-wide occurrence counts.

    ``index`` maps each term to its 0-based position; positions run 0..d-1.
    """

    terms: tuple[str, ...]
    counts: tuple[int, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("vocabulary must contain at least one term")
        if len(self.terms) != len(self.counts):
            raise ValueError("terms and counts must have equal length")
        if any(c < 1 for c in self.counts):
            raise ValueError("every vocabulary count must be >= 1")
        index = {t: i for i, t in enumerate(self.terms)}
        if len(index) != len(self.terms):
            raise ValueError("vocabulary terms must be unique")
        object.__setattr__(self, "index", index)

    @property
    def size(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass(frozen=True)
class SbowVector:
    """Sparse bag-of-words vector: strictly increasing indices, positive counts."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.int64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be parallel 1-D arrays")
        if self.dim < 0:
            raise ValueError("dim must be non-negative")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError("indices must lie in [0, dim)")
            if np.any(val <= 0):
                raise ValueError("stored values must be positive")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        out[self.indices] = self.values
        return out

    def entries(self) -> list[tuple[int, int]]:
        return [(int(i), int(v)) for i, v in zip(self.indices, self.values)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SbowVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class PrototypeSet:
    """Ordered term indices selected as the dense output coordinate system."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise InvalidPrototypeCount("prototype set must be non-empty")
        if len(set(idx)) != len(idx):
            raise ValueError("prototype indices must be distinct")
        if any(i < 0 for i in idx):
            raise ValueError("prototype indices must be non-negative")
        object.__setattr__(self, "indices", idx)

    @property
    def r(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Corpus:
    """A list of sparse document vectors sharing one dimension."""

    docs: tuple[SbowVector, ...]

    def __post_init__(self):
        docs = tuple(self.docs)
        if not docs:
            raise ValueError("a corpus must contain at least one document")
        dim = docs[0].dim
        if any(d.dim != dim for d in docs):
            raise ValueError("all documents must share one dimension")
        object.__setattr__(self, "docs", docs)

    @property
    def dim(self) -> int:
        return self.docs[0].dim

    @property
    def n(self) -> int:
        return len(self.docs)


def build_vocabulary(token_docs: Sequence[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Build the dictionary over tokenized documents.

    Terms whose corpus-wide count is below ``min_count`` are dropped. The
    remaining terms are ordered by descending count, ties broken
    lexicographically.
    """
    check_positive_int("min_count", min_count)
    if len(token_docs) == 0:
        raise ValueError("at least one document is required")
    freq = Counter()
    for tokens in token_docs:
        freq.update(tokens)
    kept = [t for t, c in freq.items() if c >= min_count]
    if not kept:
        raise EmptyVocabulary(f"no token reached min_count={min_count}")
    kept.sort(key=lambda t: (-freq[t], t))
    return Vocabulary(terms=tuple(kept), counts=tuple(freq[t] for t in kept))


def vectorize(tokens: Iterable[str], vocab: Vocabulary) -> SbowVector:
    """Count in-vocabulary tokens into a canonical sparse vector.

    Out-of-vocabulary tokens are silently dropped; a fully out-of-vocabulary
    document yields an empty vector.
    """
    counts = Counter()
    index = vocab.index
    for tok in tokens:
        pos = index.get(tok)
        if pos is not None:
            counts[pos] += 1
    if not counts:
        return SbowVector(np.empty(0, np.int64), np.empty(0, np.int64), vocab.size)
    idx = np.array(sorted(counts), dtype=np.int64)
    val = np.array([counts[i] for i in idx], dtype=np.int64)
    return SbowVector(idx, val, vocab.size)


def select_prototypes(vocab: Vocabulary, r: int) -> PrototypeSet:
    """Pick the ``r`` most frequent terms (ties lexicographic) as prototypes."""
    d = vocab.size
    if not 0 < r < d:
        raise InvalidPrototypeCount(
            f"prototype count must satisfy 0 < r < d; got r={r}, d={d}"
        )
    order = sorted(range(d), key=lambda i: (-vocab.counts[i], vocab.terms[i]))
    return PrototypeSet(tuple(order[:r]))


def docs_to_csr(docs: Sequence[SbowVector], dim: int | None = None) -> sp.csr_matrix:
    """Stack sparse document vectors into a CSR matrix of counts."""
    if dim is None:
        if not docs:
            raise ValueError("dim is required for an empty document list")
        dim = docs[0].dim
    indptr = np.zeros(len(docs) + 1, dtype=np.int64)
    for i, doc in enumerate(docs):
        if doc.dim != dim:
            raise ValueError("all documents must share one dimension")
        indptr[i + 1] = indptr[i] + doc.nnz
    indices = (
        np.concatenate([doc.indices for doc in docs])
        if docs
        else np.empty(0, np.int64)
    )
    data = (
        np.concatenate([doc.values.astype(np.float64) for doc in docs])
        if docs
        else np.empty(0, np.float64)
    )
    return sp.csr_matrix((data, indices, indptr), shape=(len(docs), dim))


def read_line_corpus(path) -> list[str]:
    """Read a UTF-8 line corpus: one document per line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read corpus file {path}: {exc}") from exc


def read_labeled_corpus(path) -> tuple[list[str], list[str]]:
    """Read a labeled line corpus (``label<TAB>text``) into (labels, texts)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read labeled corpus file {path}: {exc}") from exc
    labels, texts = [], []
    for lineno, line in enumerate(lines, start=1):
        label, sep, text = line.partition("\t")
        if not sep or not label:
            raise IoFailure(
                f"{path}:{lineno}: expected 'label<TAB>text', got {line!r}"
            )
        labels.append(label)
        texts.append(text)
    return labels, texts
