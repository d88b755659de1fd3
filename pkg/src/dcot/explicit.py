"""Explicit feature-dropout training and exact expectation enumeration.

These routines build the corrupted least-squares problem the slow way, by
sampling corrupted copies or by enumerating every corruption mask. They
exist to cross-check the closed-form encoder, not to replace it.

All randomness flows through an explicitly seeded ``numpy.random.Generator``
(PCG64 via ``numpy.random.default_rng``); there is no global random state.
"""

from __future__ import annotations

import numpy as np

from .encoder import LayerWeights
from .errors import DimensionTooLarge, NonFiniteResult, SingularSystem
from .text import Corpus, PrototypeSet, SbowVector
from .validation import check_positive_int, check_probability, check_ridge

# Mask enumeration walks 2^d corruption patterns; beyond this it is refused.
MAX_ENUMERATION_DIM = 12

# Corrupted copies are processed in blocks of at most this many matrix
# elements to bound peak memory.
_CHUNK_ELEMENTS = 1 << 22


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator or a 64-bit seed; global/unseeded state is refused."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return np.random.default_rng(rng)


def corrupt(x: SbowVector, p: float, rng) -> SbowVector:
    """Drop each nonzero coordinate of ``x`` independently with probability 1-p.

    Corruption is per dimension: a coordinate either survives with its full
    count or is zeroed. Never adds coordinates, never increases one.
    """
    p = check_probability(p)
    gen = as_generator(rng)
    keep = gen.random(x.nnz) < p
    return SbowVector(x.indices[keep], x.values[keep], x.dim)


def _chunk_size(m: int, dim: int) -> int:
    return max(1, min(m, _CHUNK_ELEMENTS // max(dim, 1)))


def train_explicit(
    corpus: Corpus,
    prototypes: PrototypeSet,
    p: float,
    m: int,
    rng,
    ridge: float = 0.0,
) -> LayerWeights:
    """Least-squares weights from ``m`` sampled corrupted copies per document.

    The m-fold corrupted design is never materialized; its second moments are
    accumulated per sample block and the system
    ``W (Q/(n m) + ridge*I) = R/(n m)`` is solved. Deterministic given the
    seed.
    """
    p = check_probability(p)
    check_positive_int("m", m)
    ridge = check_ridge(ridge)
    if ridge is None:
        raise ValueError("ridge must be an explicit non-negative number")
    gen = as_generator(rng)

    d = corpus.dim
    proto = np.asarray(prototypes.indices, dtype=np.int64)
    if proto.size and proto.max() >= d:
        raise ValueError("prototype indices must lie inside the corpus dimension")
    Q = np.zeros((d + 1, d + 1), dtype=np.float64)
    R = np.zeros((proto.size, d + 1), dtype=np.float64)
    chunk = _chunk_size(m, d)

    for doc in corpus.docs:
        x = doc.to_dense()
        xbar = x[proto]
        remaining = m
        while remaining > 0:
            c = min(chunk, remaining)
            kept = gen.random((c, d)) < p
            Xh = kept * x
            col_sums = Xh.sum(axis=0)
            Q[:d, :d] += Xh.T @ Xh
            Q[:d, d] += col_sums
            Q[d, :d] += col_sums
            Q[d, d] += c
            R[:, :d] += np.outer(xbar, col_sums)
            R[:, d] += xbar * c
            remaining -= c

    scale = 1.0 / (corpus.n * m)
    A = Q * scale
    if ridge > 0.0:
        A = A + ridge * np.eye(d + 1)
    try:
        W = np.linalg.solve(A, (R * scale).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(
            f"sampled system is singular at m={m} ({exc}); retry with ridge > 0"
        ) from exc
    if not np.isfinite(W).all():
        raise NonFiniteResult("sampled solve produced non-finite entries")
    return LayerWeights(W)


def enumerate_expectations(
    corpus: Corpus, prototypes: PrototypeSet, p: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact corruption expectations by exhaustive mask enumeration.

    Every one of the 2^d survival masks is weighted by its probability and
    accumulated, giving the expected corrupted scatter and the expected
    target cross-products exactly (up to float rounding). Only feasible for
    small d; refuses d > MAX_ENUMERATION_DIM.
    """
    p = check_probability(p)
    d = corpus.dim
    if d > MAX_ENUMERATION_DIM:
        raise DimensionTooLarge(
            f"mask enumeration needs 2^d patterns; d={d} exceeds the "
            f"cap of {MAX_ENUMERATION_DIM}"
        )
    proto = np.asarray(prototypes.indices, dtype=np.int64)
    if proto.size and proto.max() >= d:
        raise ValueError("prototype indices must lie inside the corpus dimension")

    n_masks = 1 << d
    masks = ((np.arange(n_masks)[:, None] >> np.arange(d)[None, :]) & 1).astype(
        np.float64
    )
    survivors = masks.sum(axis=1)
    probs = p ** survivors * (1.0 - p) ** (d - survivors)

    EQ = np.zeros((d + 1, d + 1), dtype=np.float64)
    ER = np.zeros((proto.size, d + 1), dtype=np.float64)
    ones = np.ones((n_masks, 1), dtype=np.float64)
    for doc in corpus.docs:
        x = doc.to_dense()
        Xh = np.hstack([masks * x, ones])
        EQ += (Xh * probs[:, None]).T @ Xh
        ER += np.outer(x[proto], probs @ Xh)
    return EQ, ER
