import numpy as np
import pytest

from dcot.errors import EmptyVocabulary, InvalidPrototypeCount, IoFailure
from dcot.text import (
    Corpus,
    SbowVector,
    Vocabulary,
    build_vocabulary,
    docs_to_csr,
    read_labeled_corpus,
    read_line_corpus,
    select_prototypes,
    tokenize,
    vectorize,
)


class TestTokenize:
    def test_lowercase_and_split(self):
        assert tokenize("Good food, FOOD!") == ["good", "food", "food"]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphen_splits(self):
        assert tokenize("a1-b2") == ["a1", "b2"]

    def test_underscore_and_punctuation_split(self):
        assert tokenize("a_b c.d") == ["a", "b", "c", "d"]

    def test_no_lowercase(self):
        assert tokenize("Good FOOD", lowercase=False) == ["Good", "FOOD"]


class TestBuildVocabulary:
    def test_counts_and_order(self):
        vocab = build_vocabulary([["good", "food", "food"], ["food"]], min_count=1)
        assert vocab.terms == ("food", "good")
        assert vocab.counts == (3, 1)

    def test_threshold_excludes_all(self):
        with pytest.raises(EmptyVocabulary):
            build_vocabulary([["a"]], min_count=2)

    def test_tie_broken_lexicographically(self):
        vocab = build_vocabulary([["b", "a"], ["a", "b"]], min_count=1)
        assert vocab.terms == ("a", "b")

    def test_min_count_filters(self):
        vocab = build_vocabulary([["x", "x", "y"]], min_count=2)
        assert vocab.terms == ("x",)

    def test_index_is_bijection(self):
        vocab = build_vocabulary([["c", "b", "a", "b"]], min_count=1)
        assert sorted(vocab.index.values()) == list(range(len(vocab)))
        for term, i in vocab.index.items():
            assert vocab.terms[i] == term


class TestVectorize:
    @pytest.fixture
    def vocab(self):
        return Vocabulary(terms=("food", "good"), counts=(3, 1))

    def test_counts(self, vocab):
        vec = vectorize(["good", "food", "food"], vocab)
        assert vec.entries() == [(0, 2), (1, 1)]
        assert vec.dim == 2

    def test_oov_dropped(self, vocab):
        vec = vectorize(["zzz"], vocab)
        assert vec.nnz == 0
        assert vec.dim == 2

    def test_empty_tokens(self, vocab):
        assert vectorize([], vocab).nnz == 0

    def test_value_sum_equals_in_vocab_token_count(self, vocab):
        rng = np.random.default_rng(3)
        pool = ["food", "good", "zzz", "qqq"]
        for _ in range(50):
            tokens = list(rng.choice(pool, size=rng.integers(0, 20)))
            vec = vectorize(tokens, vocab)
            expected = sum(1 for t in tokens if t in vocab)
            assert int(vec.values.sum()) == expected

    def test_deterministic(self, vocab):
        text = "Good food; GOOD good food!"
        a = vectorize(tokenize(text), vocab)
        b = vectorize(tokenize(text), vocab)
        assert a == b


class TestSbowVectorInvariants:
    def test_rejects_unsorted_indices(self):
        with pytest.raises(ValueError):
            SbowVector(np.array([2, 1]), np.array([1, 1]), 5)

    def test_rejects_duplicate_indices(self):
        with pytest.raises(ValueError):
            SbowVector(np.array([1, 1]), np.array([1, 1]), 5)

    def test_rejects_zero_values(self):
        with pytest.raises(ValueError):
            SbowVector(np.array([1]), np.array([0]), 5)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SbowVector(np.array([5]), np.array([1]), 5)

    def test_to_dense_roundtrip(self):
        vec = SbowVector(np.array([0, 3]), np.array([2, 7]), 5)
        assert vec.to_dense().tolist() == [2, 0, 0, 7, 0]


class TestSelectPrototypes:
    def test_top_one(self):
        vocab = Vocabulary(terms=("food", "good"), counts=(3, 1))
        assert select_prototypes(vocab, 1).indices == (0,)

    def test_strict_subset_required(self):
        vocab = Vocabulary(terms=tuple("abcde"), counts=(5, 4, 3, 2, 1))
        with pytest.raises(InvalidPrototypeCount):
            select_prototypes(vocab, 5)
        with pytest.raises(InvalidPrototypeCount):
            select_prototypes(vocab, 0)

    def test_tie_rule(self):
        vocab = Vocabulary(terms=("a", "b", "c"), counts=(2, 2, 1))
        chosen = select_prototypes(vocab, 2)
        assert [vocab.terms[i] for i in chosen.indices] == ["a", "b"]

    def test_unsorted_vocabulary_still_picks_highest_counts(self):
        vocab = Vocabulary(terms=("x", "y", "z"), counts=(1, 9, 5))
        chosen = select_prototypes(vocab, 2)
        assert [vocab.terms[i] for i in chosen.indices] == ["y", "z"]

    def test_prefix_property(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            d = int(rng.integers(3, 15))
            counts = tuple(int(c) for c in rng.integers(1, 6, size=d))
            vocab = Vocabulary(
                terms=tuple(f"t{i:02d}" for i in range(d)), counts=counts
            )
            for r in range(1, d - 1):
                small = select_prototypes(vocab, r).indices
                big = select_prototypes(vocab, r + 1).indices
                assert big[: len(small)] == small


class TestCorpus:
    def test_requires_documents(self):
        with pytest.raises(ValueError):
            Corpus(())

    def test_requires_consistent_dim(self):
        a = SbowVector(np.array([0]), np.array([1]), 3)
        b = SbowVector(np.array([0]), np.array([1]), 4)
        with pytest.raises(ValueError):
            Corpus((a, b))

    def test_docs_to_csr(self):
        docs = [
            SbowVector(np.array([0, 2]), np.array([1, 4]), 3),
            SbowVector(np.empty(0, np.int64), np.empty(0, np.int64), 3),
        ]
        X = docs_to_csr(docs)
        assert X.shape == (2, 3)
        assert X.toarray().tolist() == [[1.0, 0.0, 4.0], [0.0, 0.0, 0.0]]


class TestCorpusFiles:
    def test_line_corpus(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("one doc\n\nthird doc\n", encoding="utf-8")
        assert read_line_corpus(path) == ["one doc", "", "third doc"]

    def test_line_corpus_missing(self, tmp_path):
        with pytest.raises(IoFailure):
            read_line_corpus(tmp_path / "nope.txt")

    def test_labeled_corpus(self, tmp_path):
        path = tmp_path / "l.tsv"
        path.write_text("pos\tgreat food\nneg\tbad food\n", encoding="utf-8")
        labels, texts = read_labeled_corpus(path)
        assert labels == ["pos", "neg"]
        assert texts == ["great food", "bad food"]

    def test_labeled_corpus_malformed(self, tmp_path):
        path = tmp_path / "l.tsv"
        path.write_text("pos great food\n", encoding="utf-8")
        with pytest.raises(IoFailure):
            read_labeled_corpus(path)
