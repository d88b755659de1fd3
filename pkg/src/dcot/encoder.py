"""Closed-form layer training under marginalized feature dropout.

A layer reconstructs a set of target coordinates from a corrupted input in
the least-squares sense, with corruption marginalized out: instead of ever
sampling dropped features, the expected second-moment matrices are computed
directly from the scatter matrix of the uncorrupted, bias-augmented input,
and the weights come from one symmetric linear solve.

Layout convention: the constant bias feature occupies the LAST row/column
(index ``dim``) of every bias-augmented object, and the last column of a
weight matrix is the bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionCap,
    DimensionMismatch,
    IndexOutOfRange,
    NonFiniteResult,
    SingularSystem,
)
from .text import Corpus, PrototypeSet, SbowVector
from .validation import as_float_matrix, check_probability, check_ridge

# Largest bias-augmented dimension for which a dense scatter matrix is built.
DEFAULT_DIM_CAP = 40_000

# Scale factor for the automatic ridge: keeps the regularizer in the units
# of the expected scatter regardless of corpus size.
AUTO_RIDGE_SCALE = 1e-5

TargetIndices = Union[PrototypeSet, Sequence[int]]


@dataclass(frozen=True)
class ScatterMatrix:
    """Dense symmetric scatter of bias-augmented inputs; bias at index dim."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"scatter matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        """Input feature count, excluding the bias."""
        return self.matrix.shape[0] - 1

    @property
    def n_docs(self) -> float:
        """Bias-bias entry: the number of accumulated documents."""
        return float(self.matrix[-1, -1])


@dataclass(frozen=True)
class LayerWeights:
    """One learned linear map of shape (r, input_dim + 1); last column is the bias."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 2:
            raise ValueError(f"weights must be (r, input_dim+1), got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("weight entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def r(self) -> int:
        return self.matrix.shape[0]

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1] - 1

    @property
    def bias(self) -> np.ndarray:
        return self.matrix[:, -1]


@dataclass(frozen=True)
class CorruptionConfig:
    """Survival probability and ridge for one training run.

    ``ridge=None`` selects the scaled default
    ``AUTO_RIDGE_SCALE * trace(EQ) / (dim + 1)``; pass ``0.0`` to disable
    regularization entirely.
    """

    p: float
    ridge: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_probability(self.p))
        object.__setattr__(self, "ridge", check_ridge(self.ridge))


class LayerFit(NamedTuple):
    weights: LayerWeights
    ridge: float
    residual: float


def survival_vector(dim: int, p: float) -> np.ndarray:
    """Per-feature survival probabilities; the bias feature never corrupts."""
    q = np.full(dim + 1, check_probability(p), dtype=np.float64)
    q[dim] = 1.0
    return q


# tanh saturates to exactly +-1.0 in float64 once |x| exceeds ~19; squashed
# outputs are contractually inside the open interval, so saturated values
# are pulled to the nearest interior float.
_SQUASH_LO = np.nextafter(-1.0, 0.0)
_SQUASH_HI = np.nextafter(1.0, 0.0)


def squash_values(x: np.ndarray) -> np.ndarray:
    """Elementwise tanh, kept strictly inside (-1, 1)."""
    return np.clip(np.tanh(x), _SQUASH_LO, _SQUASH_HI)


def compute_scatter(corpus: Corpus, max_dim: int = DEFAULT_DIM_CAP) -> ScatterMatrix:
    """Accumulate the scatter of bias-augmented documents, in corpus order."""
    dim = corpus.dim
    if dim + 1 > max_dim:
        raise DimensionCap(
            f"dense scatter needs dim+1={dim + 1} > cap {max_dim}; "
            "raise the cap or shrink the vocabulary"
        )
    S = np.zeros((dim + 1, dim + 1), dtype=np.float64)
    for doc in corpus.docs:
        idx = np.append(doc.indices, dim)
        vals = np.append(doc.values.astype(np.float64), 1.0)
        S[np.ix_(idx, idx)] += np.outer(vals, vals)
    return ScatterMatrix(S)


def scatter_from_dense(X, max_dim: int = DEFAULT_DIM_CAP) -> ScatterMatrix:
    """Scatter of dense row vectors with the bias feature appended."""
    X = as_float_matrix(X, "X")
    n, dim = X.shape
    if n < 1:
        raise ValueError("at least one input row is required")
    if dim + 1 > max_dim:
        raise DimensionCap(
            f"dense scatter needs dim+1={dim + 1} > cap {max_dim}"
        )
    Xb = np.hstack([X, np.ones((n, 1))])
    return ScatterMatrix(Xb.T @ Xb)


def expected_q(S: ScatterMatrix, p: float) -> np.ndarray:
    """Expected scatter of the corrupted input.

    Off-diagonal entries pick up both features' survival factors; diagonal
    entries are one feature with itself and pick up a single factor.
    """
    q = survival_vector(S.dim, p)
    EQ = S.matrix * np.outer(q, q)
    np.fill_diagonal(EQ, np.diag(S.matrix) * q)
    return EQ


def _target_array(targets: TargetIndices, dim: int) -> np.ndarray:
    idx = np.asarray(
        targets.indices if isinstance(targets, PrototypeSet) else list(targets),
        dtype=np.int64,
    )
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("target indices must be a non-empty 1-D sequence")
    if np.unique(idx).size != idx.size:
        raise ValueError("target indices must be distinct")
    if idx.min() < 0 or idx.max() >= dim:
        raise IndexOutOfRange(
            f"target indices must lie in [0, {dim}), got range "
            f"[{idx.min()}, {idx.max()}]"
        )
    return idx


def expected_r(S: ScatterMatrix, targets: TargetIndices, p: float) -> np.ndarray:
    """Expected cross-products of uncorrupted targets with the corrupted input.

    Row k selects target row ``targets[k]`` of the scatter; the survival
    factor attaches to the corrupted (column) index, so the bias column
    keeps factor 1.
    """
    q = survival_vector(S.dim, p)
    idx = _target_array(targets, S.dim)
    return S.matrix[idx, :] * q


def solve_weights(EQ, ER, ridge: float = 0.0) -> LayerWeights:
    """Solve ``W (EQ + ridge*I) = ER`` with a symmetric linear solve.

    The system matrix is never inverted explicitly.
    """
    EQ = as_float_matrix(EQ, "EQ")
    ER = as_float_matrix(ER, "ER")
    n = EQ.shape[0]
    if EQ.shape[0] != EQ.shape[1]:
        raise ValueError(f"EQ must be square, got shape {EQ.shape}")
    if ER.shape[1] != n:
        raise ValueError(
            f"ER must have {n} columns to match EQ, got shape {ER.shape}"
        )
    if not np.allclose(EQ, EQ.T, rtol=1e-10, atol=1e-12):
        raise ValueError("EQ must be symmetric")
    ridge = check_ridge(ridge)
    A = EQ if ridge == 0.0 else EQ + ridge * np.eye(n)
    try:
        Wt = sla.solve(A, ER.T, assume_a="sym")
    except sla.LinAlgError as exc:
        raise SingularSystem(
            f"linear solve failed ({exc}); retry with ridge > 0"
        ) from exc
    if not np.isfinite(Wt).all():
        raise NonFiniteResult("linear solve produced non-finite entries")
    return LayerWeights(Wt.T)


def solve_residual(weights: LayerWeights, EQ, ER, ridge: float = 0.0) -> float:
    """Relative Frobenius residual of ``W (EQ + ridge*I) = ER``."""
    EQ = as_float_matrix(EQ, "EQ")
    ER = as_float_matrix(ER, "ER")
    A = EQ if ridge == 0.0 else EQ + ridge * np.eye(EQ.shape[0])
    num = np.linalg.norm(weights.matrix @ A - ER)
    den = np.linalg.norm(ER)
    return float(num / den) if den > 0 else float(num)


def auto_ridge(EQ: np.ndarray) -> float:
    """Scaled default ridge: AUTO_RIDGE_SCALE * trace(EQ) / (dim+1)."""
    return float(AUTO_RIDGE_SCALE * np.trace(EQ) / EQ.shape[0])


def fit_layer(
    inputs: Corpus | np.ndarray,
    targets: TargetIndices,
    config: CorruptionConfig,
    max_dim: int = DEFAULT_DIM_CAP,
) -> LayerFit:
    """Train one layer and report the ridge used and the solve residual.

    ``inputs`` is either a sparse corpus or a dense (n, dim) array; the
    training is fully deterministic, no sampling occurs.
    """
    if isinstance(inputs, Corpus):
        S = compute_scatter(inputs, max_dim)
    else:
        S = scatter_from_dense(inputs, max_dim)
    EQ = expected_q(S, config.p)
    ER = expected_r(S, targets, config.p)
    ridge = config.ridge if config.ridge is not None else auto_ridge(EQ)
    weights = solve_weights(EQ, ER, ridge)
    return LayerFit(weights, ridge, solve_residual(weights, EQ, ER, ridge))


def train_layer(
    inputs: Corpus | np.ndarray,
    targets: TargetIndices,
    config: CorruptionConfig,
    max_dim: int = DEFAULT_DIM_CAP,
) -> LayerWeights:
    """Train one layer (scatter, expectations, symmetric solve)."""
    return fit_layer(inputs, targets, config, max_dim).weights


def transform_layer(weights: LayerWeights, x, squash: bool = True) -> np.ndarray:
    """Apply one layer to a single vector: ``tanh(W [x;1])`` (or raw affine).

    ``x`` may be an :class:`SbowVector` or any dense 1-D sequence whose
    length equals the layer's input dimension.
    """
    W = weights.matrix
    if isinstance(x, SbowVector):
        if x.dim != weights.input_dim:
            raise DimensionMismatch(
                f"vector has dim {x.dim}, layer expects {weights.input_dim}"
            )
        out = W[:, x.indices] @ x.values.astype(np.float64) + W[:, -1]
    else:
        v = np.asarray(x, dtype=np.float64).ravel()
        if v.shape[0] != weights.input_dim:
            raise DimensionMismatch(
                f"vector has length {v.shape[0]}, layer expects {weights.input_dim}"
            )
        out = W[:, :-1] @ v + W[:, -1]
    return squash_values(out) if squash else out
