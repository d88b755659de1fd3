"""Acceptance suite.

Each test exercises one acceptance criterion end to end at its stated
tolerance and prints a single PASS/FAIL line. Expected values for the tiny
instance were derived by hand (3x3 system with determinant 1) and are
cross-checked elsewhere against brute-force oracles.
"""

import io
import math
import subprocess
import sys
import time

import numpy as np

from corpusgen import PROTOTYPE_COUNT, synonym_context_corpus, write_corpus_files

from dcot.encoder import CorruptionConfig, train_layer
from dcot.errors import DcotError
from dcot.evaluation import LabeledCorpus, compare_representations
from dcot.explicit import enumerate_expectations
from dcot.model_io import load
from dcot.stack import flatten, train_stack, transform
from dcot.text import (
    Corpus,
    PrototypeSet,
    SbowVector,
    Vocabulary,
    build_vocabulary,
    select_prototypes,
    tokenize,
    vectorize,
)
from dcot.encoder import compute_scatter, expected_q, expected_r
from dcot.verify import monte_carlo_gaps, random_corpus

from test_model_io import models_equal, random_model, to_bytes


def report(name: str, passed: bool, detail: str = ""):
    print(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, f"{name} failed: {detail}"


def sbow(dense, dim=None):
    arr = np.asarray(dense, dtype=np.int64)
    dim = arr.size if dim is None else dim
    idx = np.flatnonzero(arr)
    return SbowVector(idx, arr[idx], dim)


def test_a1_sampled_weights_converge_to_closed_form():
    started = time.monotonic()
    corpus = random_corpus(np.random.default_rng(11), n_docs=20, dim=10)
    prototypes = PrototypeSet((0, 1, 2))
    grid = [100, 1_000, 10_000, 100_000]
    gaps = monte_carlo_gaps(corpus, prototypes, p=0.5, sample_grid=grid,
                            n_seeds=5, seed=11)
    ordered = [gaps[m] for m in grid]
    elapsed = time.monotonic() - started
    decreasing = all(a > b for a, b in zip(ordered, ordered[1:]))
    converged = ordered[-1] < 0.05
    detail = (
        ", ".join(f"m={m}: {gaps[m]:.4e}" for m in grid)
        + f" ({elapsed:.1f}s)"
    )
    report("A1 sampled-vs-marginalized convergence",
           decreasing and converged and elapsed < 30.0, detail)


def test_a2_enumeration_matches_closed_form_expectations():
    started = time.monotonic()
    rng = np.random.default_rng(22)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 11))
        n = int(rng.integers(1, 21))
        corpus = random_corpus(rng, n_docs=n, dim=d)
        r = int(rng.integers(1, d))
        prototypes = PrototypeSet(tuple(int(i) for i in rng.permutation(d)[:r]))
        S = compute_scatter(corpus)
        for p in (0.1, 0.5, 0.9, 1.0):
            eq_exact, er_exact = enumerate_expectations(corpus, prototypes, p)
            gap = max(
                float(np.abs(eq_exact - expected_q(S, p)).max()),
                float(np.abs(er_exact - expected_r(S, prototypes, p)).max()),
            )
            worst = max(worst, gap)
    elapsed = time.monotonic() - started
    report("A2 exact expectation enumeration",
           worst <= 1e-10 and elapsed < 10.0,
           f"max abs deviation {worst:.3e} over 20 corpora x 4 p ({elapsed:.1f}s)")


def test_a3_no_corruption_equals_ordinary_least_squares():
    corpus = random_corpus(np.random.default_rng(33), n_docs=30, dim=8)
    prototypes = PrototypeSet((0, 2, 5))
    w = train_layer(corpus, prototypes, CorruptionConfig(p=1.0, ridge=0.0)).matrix

    # independent normal-equations path on the uncorrupted dense design
    X = np.vstack([doc.to_dense() for doc in corpus.docs])
    Xb = np.hstack([X, np.ones((corpus.n, 1))])
    gram = Xb.T @ Xb
    w_ols = np.linalg.solve(gram, Xb.T @ Xb[:, list(prototypes.indices)]).T
    rel = float(np.linalg.norm(w - w_ols) / np.linalg.norm(w_ols))
    report("A3 p=1 degenerates to least squares", rel <= 1e-8,
           f"relative Frobenius gap {rel:.3e} (tol 1e-08)")


def test_a4_hand_worked_instance():
    corpus = Corpus((sbow([1, 2]), sbow([0, 1], dim=2)))
    prototypes = PrototypeSet((1,))
    w = train_layer(corpus, prototypes, CorruptionConfig(p=0.5, ridge=0.0))
    w_gap = float(np.abs(w.matrix - np.array([[0.625, 0.125, 1.25]])).max())

    # index of "food" in this vocabulary is 1, the prototype coordinate
    model = train_stack(
        corpus,
        Vocabulary(("good", "food"), (1, 3)),
        prototypes,
        CorruptionConfig(p=0.5, ridge=0.0),
        n_layers=1,
    )
    z = transform(model, sbow([1, 2])).layer_outputs[0]
    z_gap = abs(float(z[0]) - math.tanh(2.125))
    report("A4 hand-worked tiny instance",
           w_gap <= 1e-9 and z_gap <= 1e-9,
           f"weight gap {w_gap:.2e}, transform gap {z_gap:.2e} (tol 1e-09)")


def test_a5_synonyms_link_through_context():
    started = time.monotonic()
    gen = synonym_context_corpus(seed=7)
    token_docs = [tokenize(t) for t in gen.unlabeled]
    vocab = build_vocabulary(token_docs, min_count=1)
    prototypes = select_prototypes(vocab, PROTOTYPE_COUNT)
    proto_terms = [vocab.terms[i] for i in prototypes.indices]
    assert gen.anchor in proto_terms
    assert gen.synonym not in proto_terms and gen.control not in proto_terms

    corpus = Corpus(tuple(vectorize(toks, vocab) for toks in token_docs))
    model = train_stack(corpus, vocab, prototypes, CorruptionConfig(p=0.5),
                        n_layers=2)

    anchor_coord = proto_terms.index(gen.anchor)
    z_syn = transform(model, vectorize([gen.synonym], vocab)).layer_outputs[1]
    z_ctl = transform(model, vectorize([gen.control], vocab)).layer_outputs[1]
    margin = float(z_syn[anchor_coord] - z_ctl[anchor_coord])

    labeled_docs = tuple(vectorize(tokenize(t), vocab) for _, t in gen.labeled)
    labeled = LabeledCorpus(Corpus(labeled_docs),
                            tuple(lbl for lbl, _ in gen.labeled))
    rep = compare_representations(labeled, model, split_seed=0, k=3)
    elapsed = time.monotonic() - started
    report(
        "A5 synonym-through-context",
        margin > 0.0 and rep.dcot_accuracy >= rep.sbow_accuracy and elapsed < 30.0,
        f"layer-2 margin {margin:+.4f}; accuracy dcot {rep.dcot_accuracy:.3f} "
        f"vs sbow {rep.sbow_accuracy:.3f} ({elapsed:.1f}s)",
    )


def test_a6_shapes_bounds_ordering_and_persistence():
    gen = synonym_context_corpus(seed=7)
    token_docs = [tokenize(t) for t in gen.unlabeled]
    vocab = build_vocabulary(token_docs, min_count=1)
    prototypes = select_prototypes(vocab, 5)
    corpus = Corpus(tuple(vectorize(toks, vocab) for toks in token_docs))
    d, r, l = vocab.size, 5, 3
    model = train_stack(corpus, vocab, prototypes, CorruptionConfig(p=0.5), l)

    shapes_ok = [w.matrix.shape for w in model.layers] == (
        [(r, d + 1)] + [(r, r + 1)] * (l - 1)
    )

    bounds_ok = True
    ordering_ok = True
    for doc in corpus.docs[:40]:
        rep = transform(model, doc)
        for z in rep.layer_outputs:
            bounds_ok &= bool(np.all(z > -1.0) and np.all(z < 1.0))
        flat = flatten(rep)
        dense = flat.to_dense()
        ordering_ok &= bool(np.array_equal(dense[:d], doc.to_dense()))
        for k, z in enumerate(rep.layer_outputs):
            seg = dense[d + k * r: d + (k + 1) * r]
            ordering_ok &= bool(np.array_equal(seg, z))
        ordering_ok &= flat.dim == d + l * r

    rng = np.random.default_rng(66)
    roundtrip_ok = True
    for _ in range(10):
        m = random_model(rng)
        blob = to_bytes(m)
        roundtrip_ok &= models_equal(m, load(io.BytesIO(blob)))
        roundtrip_ok &= to_bytes(load(io.BytesIO(blob))) == blob

    fuzz_ok = True
    blob = to_bytes(random_model(rng, d=8, r=3, n_layers=2))
    for cut in range(len(blob)):
        try:
            load(io.BytesIO(blob[:cut]))
            fuzz_ok = False  # truncation must never load silently
        except DcotError:
            pass
        except Exception:
            fuzz_ok = False

    report(
        "A6 shape/invariant suite",
        shapes_ok and bounds_ok and ordering_ok and roundtrip_ok and fuzz_ok,
        f"shapes {shapes_ok}, bounds {bounds_ok}, ordering {ordering_ok}, "
        f"roundtrip {roundtrip_ok}, fuzz {fuzz_ok}",
    )


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "dcot", *args], capture_output=True, text=True
    )


def test_a7_cli_end_to_end(tmp_path):
    verify_res = run_cli("verify", "--seed", "0")
    verify_ok = verify_res.returncode == 0

    gen = synonym_context_corpus(seed=7)
    unlabeled, labeled = write_corpus_files(gen, tmp_path)
    runs = []
    for tag in ("one", "two"):
        model = tmp_path / f"model-{tag}.dcot"
        encoded = tmp_path / f"encoded-{tag}.txt"
        report_json = tmp_path / f"report-{tag}.json"
        t = run_cli("train", "--input", unlabeled, "--out", str(model),
                    "--prototypes", str(PROTOTYPE_COUNT),
                    "--corruption", "0.5", "--layers", "2")
        x = run_cli("transform", "--model", str(model), "--input", unlabeled,
                    "--out", str(encoded))
        e = run_cli("eval", "--model", str(model), "--input", labeled,
                    "--k", "3", "--seed", "0", "--json", str(report_json))
        runs.append(
            dict(
                codes=(t.returncode, x.returncode, e.returncode),
                model=model.read_bytes(),
                encoded=encoded.read_bytes(),
                report=report_json.read_bytes(),
                stdout=e.stdout,
            )
        )
    pipeline_ok = all(r["codes"] == (0, 0, 0) for r in runs)
    deterministic = all(runs[0][k] == runs[1][k]
                        for k in ("model", "encoded", "report"))
    report(
        "A7 CLI end-to-end",
        verify_ok and pipeline_ok and deterministic,
        f"verify exit {verify_res.returncode}, pipeline codes "
        f"{runs[0]['codes']}, deterministic {deterministic}",
    )
