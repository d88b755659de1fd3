"""Self-checks comparing the closed-form encoder with its explicit twins.

Each check trains on a seeded synthetic corpus and is fully deterministic.
They back the ``dcot verify`` command and the acceptance suite:

* exact mask enumeration must reproduce the closed-form expectations,
* sampled explicit-corruption weights must converge to the closed form,
* with no corruption the encoder must degenerate to ordinary least squares,
* a tiny instance with a hand-solved 3x3 system must come out exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import (
    CorruptionConfig,
    compute_scatter,
    expected_q,
    expected_r,
    train_layer,
    transform_layer,
)
from .errors import DimensionTooLarge
from .explicit import MAX_ENUMERATION_DIM, enumerate_expectations, train_explicit
from .text import Corpus, PrototypeSet, SbowVector

ENUMERATION_TOL = 1e-10
OLS_TOL = 1e-8
HAND_TOL = 1e-9
CONVERGED_GAP = 0.05
CONVERGENCE_SAMPLE_FLOOR = 100_000

# Tiny two-document instance whose solution was worked by hand
# (the 3x3 expected-scatter system has determinant 1).
HAND_DOCS = ((1, 2), (0, 1))
HAND_TARGET_INDEX = 1
HAND_P = 0.5
HAND_WEIGHTS = (0.625, 0.125, 1.25)
HAND_INPUT = (1, 2)
HAND_RAW_OUTPUT = 2.125


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_corpus(rng: np.random.Generator, n_docs: int, dim: int,
                  max_count: int = 3, density: float = 0.6) -> Corpus:
    """Random sparse count vectors; every document keeps at least one entry."""
    docs = []
    for _ in range(n_docs):
        dense = rng.integers(0, max_count + 1, size=dim)
        dense[rng.random(dim) >= density] = 0
        if not dense.any():
            dense[int(rng.integers(0, dim))] = 1
        idx = np.flatnonzero(dense)
        docs.append(SbowVector(idx, dense[idx], dim))
    return Corpus(tuple(docs))


def dense_design(corpus: Corpus) -> np.ndarray:
    X = np.vstack([doc.to_dense() for doc in corpus.docs])
    return np.hstack([X, np.ones((corpus.n, 1))])


def check_enumeration_equality(
    seed: int, dim: int = 10, n_docs: int = 20, n_corpora: int = 3
) -> CheckResult:
    """Closed-form expectations must match exhaustive mask enumeration."""
    if dim > MAX_ENUMERATION_DIM:
        raise DimensionTooLarge(
            f"enumeration check requires dims <= {MAX_ENUMERATION_DIM}, got {dim}"
        )
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_corpora):
        corpus = random_corpus(rng, n_docs, dim)
        r = max(1, dim // 3)
        prototypes = PrototypeSet(tuple(range(r)))
        S = compute_scatter(corpus)
        for p in (0.1, 0.5, 0.9, 1.0):
            eq_exact, er_exact = enumerate_expectations(corpus, prototypes, p)
            gap = max(
                np.abs(eq_exact - expected_q(S, p)).max(),
                np.abs(er_exact - expected_r(S, prototypes, p)).max(),
            )
            worst = max(worst, float(gap))
    return CheckResult(
        "expectation-enumeration",
        worst <= ENUMERATION_TOL,
        f"max abs deviation {worst:.3e} (tol {ENUMERATION_TOL:.0e})",
    )


def monte_carlo_gaps(
    corpus: Corpus,
    prototypes: PrototypeSet,
    p: float,
    sample_grid: list[int],
    n_seeds: int = 5,
    seed: int = 0,
) -> dict[int, float]:
    """Median relative Frobenius gap to the marginalized weights, per m."""
    config = CorruptionConfig(p=p, ridge=0.0)
    w_marg = train_layer(corpus, prototypes, config).matrix
    norm = np.linalg.norm(w_marg)
    gaps: dict[int, float] = {}
    for m in sample_grid:
        per_seed = []
        for s in range(n_seeds):
            w_m = train_explicit(
                corpus, prototypes, p, m, np.random.default_rng((seed, s, m))
            ).matrix
            per_seed.append(float(np.linalg.norm(w_m - w_marg) / norm))
        gaps[m] = float(np.median(per_seed))
    return gaps


def check_monte_carlo_convergence(
    seed: int,
    dim: int = 10,
    n_docs: int = 20,
    r: int = 3,
    p: float = 0.5,
    max_samples: int = 100_000,
) -> CheckResult:
    """Sampled weights must approach the closed form as copies increase."""
    rng = np.random.default_rng(seed)
    corpus = random_corpus(rng, n_docs, dim)
    prototypes = PrototypeSet(tuple(range(min(r, dim - 1))))
    grid = [100]
    while grid[-1] * 10 <= max_samples:
        grid.append(grid[-1] * 10)
    gaps = monte_carlo_gaps(corpus, prototypes, p, grid, seed=seed)
    ordered = [gaps[m] for m in grid]
    decreasing = all(a > b for a, b in zip(ordered, ordered[1:]))
    small_enough = (
        ordered[-1] < CONVERGED_GAP
        if grid[-1] >= CONVERGENCE_SAMPLE_FLOOR
        else True
    )
    detail = ", ".join(f"median_gap[m={m}]={gaps[m]:.4e}" for m in grid)
    return CheckResult(
        "monte-carlo-convergence", decreasing and small_enough, detail
    )


def check_no_corruption_degeneration(
    seed: int, dim: int = 8, n_docs: int = 30, r: int = 3
) -> CheckResult:
    """p=1, ridge=0 must equal an independent least-squares fit."""
    rng = np.random.default_rng(seed)
    corpus = random_corpus(rng, n_docs, dim)
    prototypes = PrototypeSet(tuple(range(r)))
    w = train_layer(corpus, prototypes, CorruptionConfig(p=1.0, ridge=0.0)).matrix

    Xb = dense_design(corpus)
    targets = Xb[:, list(prototypes.indices)]
    w_ols = np.linalg.lstsq(Xb, targets, rcond=None)[0].T
    rel = float(np.linalg.norm(w - w_ols) / np.linalg.norm(w_ols))
    return CheckResult(
        "no-corruption-degeneration",
        rel <= OLS_TOL,
        f"relative gap to least squares {rel:.3e} (tol {OLS_TOL:.0e})",
    )


def check_hand_worked_instance() -> CheckResult:
    """The tiny two-document system must reproduce its hand-solved weights."""
    dim = 2
    docs = []
    for dense in HAND_DOCS:
        arr = np.asarray(dense)
        idx = np.flatnonzero(arr)
        docs.append(SbowVector(idx, arr[idx], dim))
    corpus = Corpus(tuple(docs))
    prototypes = PrototypeSet((HAND_TARGET_INDEX,))
    w = train_layer(corpus, prototypes, CorruptionConfig(p=HAND_P, ridge=0.0))
    w_gap = float(np.abs(w.matrix - np.asarray(HAND_WEIGHTS)).max())

    raw = transform_layer(w, np.asarray(HAND_INPUT, dtype=float), squash=False)
    squashed = transform_layer(w, np.asarray(HAND_INPUT, dtype=float), squash=True)
    t_gap = max(
        abs(float(raw[0]) - HAND_RAW_OUTPUT),
        abs(float(squashed[0]) - np.tanh(HAND_RAW_OUTPUT)),
    )
    gap = max(w_gap, t_gap)
    return CheckResult(
        "hand-worked-instance",
        gap <= HAND_TOL,
        f"max abs deviation {gap:.3e} (tol {HAND_TOL:.0e})",
    )


def run_verification(
    seed: int = 0,
    dims: int = 10,
    n_docs: int = 20,
    mc_samples: int = 100_000,
    enumerate_check: bool | None = None,
) -> list[CheckResult]:
    """Run the full self-check suite.

    ``enumerate_check=None`` includes the enumeration check whenever the
    dimension permits it; ``True`` forces it (raising DimensionTooLarge if
    the dimension is out of range); ``False`` skips it.
    """
    results = []
    if enumerate_check is None:
        enumerate_check = dims <= MAX_ENUMERATION_DIM
    if enumerate_check:
        results.append(check_enumeration_equality(seed, dim=dims, n_docs=n_docs))
    results.append(
        check_monte_carlo_convergence(
            seed, dim=dims, n_docs=n_docs, max_samples=mc_samples
        )
    )
    results.append(check_no_corruption_degeneration(seed))
    results.append(check_hand_worked_instance())
    return results
