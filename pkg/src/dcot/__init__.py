"""dcot: dense cohort-of-terms text representations.

Learns a closed-form marginalized denoising encoder that maps sparse
bag-of-words count vectors onto a small set of frequent "prototype" terms,
optionally re-applied to its own output, and concatenates the original
vector with every layer's output.
"""

from .encoder import (
    CorruptionConfig,
    LayerWeights,
    ScatterMatrix,
    compute_scatter,
    expected_q,
    expected_r,
    solve_weights,
    train_layer,
    transform_layer,
)
from .errors import DcotError
from .estimator import DenseCohortEncoder
from .evaluation import (
    LabeledCorpus,
    accuracy,
    compare_representations,
    knn_classify,
)
from .explicit import corrupt, enumerate_expectations, train_explicit
from .model_io import load, load_file, save, save_file
from .stack import (
    DcotModel,
    DenseRepresentation,
    SparseVector,
    flatten,
    train_stack,
    transform,
)
from .text import (
    Corpus,
    PrototypeSet,
    SbowVector,
    Vocabulary,
    build_vocabulary,
    select_prototypes,
    tokenize,
    vectorize,
)

__version__ = "0.1.0"

__all__ = [
    "CorruptionConfig",
    "Corpus",
    "DcotError",
    "DcotModel",
    "DenseCohortEncoder",
    "DenseRepresentation",
    "LabeledCorpus",
    "LayerWeights",
    "PrototypeSet",
    "SbowVector",
    "ScatterMatrix",
    "SparseVector",
    "Vocabulary",
    "accuracy",
    "build_vocabulary",
    "compare_representations",
    "compute_scatter",
    "corrupt",
    "enumerate_expectations",
    "expected_q",
    "expected_r",
    "flatten",
    "knn_classify",
    "load",
    "load_file",
    "save",
    "save_file",
    "select_prototypes",
    "solve_weights",
    "tokenize",
    "train_explicit",
    "train_layer",
    "train_stack",
    "transform",
    "transform_layer",
    "vectorize",
]
