"""Scikit-learn estimator facade over the text-to-dense pipeline.

``DenseCohortEncoder`` takes raw document strings, learns the vocabulary,
prototype set and stacked encoder in ``fit``, and emits the concatenated
sparse-plus-dense representation from ``transform`` as a CSR matrix, so the
encoder drops into sklearn pipelines next to any downstream classifier.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .encoder import DEFAULT_DIM_CAP, CorruptionConfig
from .stack import flatten, train_stack, transform
from .text import Corpus, build_vocabulary, select_prototypes, tokenize, vectorize


class DenseCohortEncoder(BaseEstimator, TransformerMixin):
    """Learn dense prototype-term representations for text documents.

    Parameters
    ----------
    n_prototypes : int
        Number of most-frequent terms used as output coordinates (r).
    survival_prob : float
        Probability that a feature survives the marginalized corruption,
        in (0, 1].
    n_layers : int
        How many times the encoder is re-applied to its own output.
    ridge : float or None
        Regularizer added to the expected scatter's diagonal before the
        solve; None selects a scaled default.
    min_count : int
        Minimum corpus-wide count for a term to enter the vocabulary.
    lowercase : bool
        Lowercase text before tokenizing.
    squash : bool
        Apply tanh to every layer output.
    max_dim : int
        Refuse to build a dense scatter above this bias-augmented dimension.
    """

    def __init__(
        self,
        n_prototypes: int = 100,
        survival_prob: float = 0.5,
        n_layers: int = 1,
        ridge: float | None = None,
        min_count: int = 1,
        lowercase: bool = True,
        squash: bool = True,
        max_dim: int = DEFAULT_DIM_CAP,
    ):
        self.n_prototypes = n_prototypes
        self.survival_prob = survival_prob
        self.n_layers = n_layers
        self.ridge = ridge
        self.min_count = min_count
        self.lowercase = lowercase
        self.squash = squash
        self.max_dim = max_dim

    def _tokenize_all(self, X) -> list[list[str]]:
        texts = list(X)
        if not texts:
            raise ValueError("at least one document is required")
        if not all(isinstance(t, str) for t in texts):
            raise TypeError("X must be an iterable of strings")
        return [tokenize(t, lowercase=self.lowercase) for t in texts]

    def fit(self, X, y=None):
        """Learn vocabulary, prototypes and the stacked encoder from raw text."""
        token_docs = self._tokenize_all(X)
        vocab = build_vocabulary(token_docs, min_count=self.min_count)
        prototypes = select_prototypes(vocab, self.n_prototypes)
        corpus = Corpus(tuple(vectorize(toks, vocab) for toks in token_docs))
        config = CorruptionConfig(p=self.survival_prob, ridge=self.ridge)
        self.model_ = train_stack(
            corpus,
            vocab,
            prototypes,
            config,
            self.n_layers,
            squash_layers=self.squash,
            max_dim=self.max_dim,
        )
        return self

    def transform(self, X) -> sp.csr_matrix:
        """Encode documents as rows of shape (n_samples, d + l*r)."""
        if not hasattr(self, "model_"):
            raise NotFittedError("this DenseCohortEncoder instance is not fitted")
        model = self.model_
        token_docs = self._tokenize_all(X)
        rows = []
        for toks in token_docs:
            rep = transform(model, vectorize(toks, model.vocab))
            rows.append(flatten(rep))
        out_dim = model.output_dim
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        for i, row in enumerate(rows):
            indptr[i + 1] = indptr[i] + row.indices.size
        indices = np.concatenate([row.indices for row in rows])
        data = np.concatenate([row.values for row in rows])
        return sp.csr_matrix((data, indices, indptr), shape=(len(rows), out_dim))
