"""Recursive re-application of the encoder and the concatenated output.

Layer 1 maps sparse document vectors onto the prototype coordinates; every
further layer is trained on the previous layer's (squashed) outputs and
reconstructs all of its own input coordinates, so the representation stays
in prototype space. The final representation concatenates the original
sparse vector with every layer's output, in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import (
    DEFAULT_DIM_CAP,
    CorruptionConfig,
    LayerWeights,
    fit_layer,
    squash_values,
    transform_layer,
)
from .errors import DcotError, DimensionMismatch
from .text import Corpus, PrototypeSet, SbowVector, Vocabulary, docs_to_csr
from .validation import check_positive_int, check_probability, check_ridge


@dataclass(frozen=True)
class DcotModel:
    """A trained stack: vocabulary, prototypes, and one weight matrix per layer."""

    vocab: Vocabulary
    prototypes: PrototypeSet
    p: float
    layers: tuple[LayerWeights, ...]
    squash_layers: bool = True
    ridge: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_probability(self.p))
        object.__setattr__(self, "ridge", check_ridge(self.ridge))
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("a model must have at least one layer")
        d = self.vocab.size
        r = self.prototypes.r
        if not 0 < r < d:
            raise ValueError(f"prototype count must satisfy 0 < r < d; got r={r}, d={d}")
        if max(self.prototypes.indices) >= d:
            raise ValueError("prototype indices must lie inside the vocabulary")
        if layers[0].input_dim != d:
            raise ValueError(
                f"layer 1 must have input_dim d={d}, got {layers[0].input_dim}"
            )
        for k, layer in enumerate(layers):
            if layer.r != r:
                raise ValueError(f"layer {k + 1} must have {r} output rows")
            if k >= 1 and layer.input_dim != r:
                raise ValueError(f"layer {k + 1} must have input_dim r={r}")
        object.__setattr__(self, "layers", layers)

    @property
    def d(self) -> int:
        return self.vocab.size

    @property
    def r(self) -> int:
        return self.prototypes.r

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def output_dim(self) -> int:
        """Length of the flattened representation: d + l*r."""
        return self.d + self.n_layers * self.r


@dataclass(frozen=True)
class DenseRepresentation:
    """The untouched input vector plus one dense output per layer."""

    original: SbowVector
    layer_outputs: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "layer_outputs", tuple(self.layer_outputs))


@dataclass(frozen=True)
class SparseVector:
    """General sparse float vector; explicit zeros are allowed."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be parallel 1-D arrays")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing within [0, dim)")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        out[self.indices] = self.values
        return out


def _layer_error(k: int, exc: DcotError) -> DcotError:
    return type(exc)(f"layer {k}: {exc}")


def _batch_apply(layer: LayerWeights, Z: np.ndarray, squash: bool) -> np.ndarray:
    out = Z @ layer.matrix[:, :-1].T + layer.matrix[:, -1]
    return squash_values(out) if squash else out


def train_stack_with_residuals(
    corpus: Corpus,
    vocab: Vocabulary,
    prototypes: PrototypeSet,
    config: CorruptionConfig,
    n_layers: int,
    squash_layers: bool = True,
    max_dim: int = DEFAULT_DIM_CAP,
) -> tuple[DcotModel, list[float]]:
    """Train ``n_layers`` greedily and report each layer's solve residual.

    Layer k is frozen before layer k+1 trains; layers past the first use the
    identity target set over all r coordinates of their input space.
    """
    check_positive_int("n_layers", n_layers)
    if corpus.dim != vocab.size:
        raise DimensionMismatch(
            f"corpus dim {corpus.dim} does not match vocabulary size {vocab.size}"
        )
    r = prototypes.r
    residuals: list[float] = []

    try:
        fit = fit_layer(corpus, prototypes, config, max_dim)
    except DcotError as exc:
        raise _layer_error(1, exc) from exc
    layers = [fit.weights]
    residuals.append(fit.residual)

    if n_layers > 1:
        X = docs_to_csr(corpus.docs)
        Z = np.asarray(X @ fit.weights.matrix[:, :-1].T) + fit.weights.bias
        if squash_layers:
            Z = squash_values(Z)
        identity_targets = range(r)
        for k in range(2, n_layers + 1):
            try:
                fit = fit_layer(Z, identity_targets, config, max_dim)
            except DcotError as exc:
                raise _layer_error(k, exc) from exc
            layers.append(fit.weights)
            residuals.append(fit.residual)
            if k < n_layers:
                Z = _batch_apply(fit.weights, Z, squash_layers)

    model = DcotModel(
        vocab=vocab,
        prototypes=prototypes,
        p=config.p,
        layers=tuple(layers),
        squash_layers=squash_layers,
        ridge=config.ridge,
    )
    return model, residuals


def train_stack(
    corpus: Corpus,
    vocab: Vocabulary,
    prototypes: PrototypeSet,
    config: CorruptionConfig,
    n_layers: int,
    squash_layers: bool = True,
    max_dim: int = DEFAULT_DIM_CAP,
) -> DcotModel:
    """Train the full stack; see :func:`train_stack_with_residuals`."""
    model, _ = train_stack_with_residuals(
        corpus, vocab, prototypes, config, n_layers, squash_layers, max_dim
    )
    return model


def transform(model: DcotModel, x: SbowVector) -> DenseRepresentation:
    """Run one document through every layer; the model is never mutated."""
    if x.dim != model.d:
        raise DimensionMismatch(
            f"vector has dim {x.dim}, model expects {model.d}"
        )
    outputs = []
    current: SbowVector | np.ndarray = x
    for layer in model.layers:
        current = transform_layer(layer, current, model.squash_layers)
        outputs.append(current)
    return DenseRepresentation(original=x, layer_outputs=tuple(outputs))


def flatten(rep: DenseRepresentation) -> SparseVector:
    """Concatenate (x, z1, ..., zl) into one sparse vector of length d + l*r.

    The original segment keeps its sparse encoding; layer segments are dense,
    so their zeros are stored explicitly.
    """
    d = rep.original.dim
    z = (
        np.concatenate(rep.layer_outputs)
        if rep.layer_outputs
        else np.empty(0, np.float64)
    )
    indices = np.concatenate(
        [rep.original.indices, d + np.arange(z.size, dtype=np.int64)]
    )
    values = np.concatenate([rep.original.values.astype(np.float64), z])
    return SparseVector(indices, values, d + z.size)
