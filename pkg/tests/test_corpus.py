import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqatag.corpus import (
    build_corpus,
    largest_remainder_sizes,
    load_corpus,
    load_split,
    save_corpus,
    save_split,
    split_corpus,
    split_manifest_hash,
)
from cqatag.errors import DuplicatePostIdError, SplitError

from conftest import make_answer, make_question, random_corpus


class TestBuildCorpus:
    def test_answer_index_links_answers(self):
        corpus = build_corpus(
            [make_question(1, ["boot"]), make_answer(2, 1), make_answer(3, 1)], "d"
        )
        assert len(corpus.answer_index[1]) == 2
        assert corpus.orphan_answer_ids == frozenset()

    def test_dangling_parent_is_flagged_orphan(self):
        corpus = build_corpus([make_question(1, ["boot"]), make_answer(2, 99)], "d")
        assert len(corpus.answers) == 1
        assert corpus.orphan_answer_ids == frozenset({2})
        assert corpus.answers_for(1) == []

    def test_duplicate_ids_fatal(self):
        with pytest.raises(DuplicatePostIdError):
            build_corpus([make_question(1, ["a"]), make_question(1, ["b"])], "d")

    def test_restrict_keeps_linked_answers(self):
        corpus = build_corpus(
            [
                make_question(1, ["boot"]),
                make_question(2, ["bash"]),
                make_answer(3, 1),
                make_answer(4, 2),
            ],
            "d",
        )
        sub = corpus.restrict([1])
        assert [q.id for q in sub.questions] == [1]
        assert [a.id for a in sub.answers] == [3]


class TestSplitCorpus:
    def test_exact_ratio_sizes(self):
        corpus = random_corpus(seed=1, n_questions=100, with_answers=False)
        split = split_corpus(corpus, seed=42)
        assert (len(split.train), len(split.dev), len(split.test)) == (70, 10, 20)

    def test_same_seed_same_partition(self):
        corpus = random_corpus(seed=2, n_questions=57)
        assert split_corpus(corpus, seed=9) == split_corpus(corpus, seed=9)

    def test_largest_remainder_on_101(self):
        # 101 * (0.7, 0.1, 0.2) floors to (70, 10, 20); the spare unit goes
        # to the largest fractional remainder, which is train's 0.7.
        corpus = random_corpus(seed=3, n_questions=101, with_answers=False)
        split = split_corpus(corpus, seed=0)
        assert (len(split.train), len(split.dev), len(split.test)) == (71, 10, 20)

    def test_too_small_corpus_rejected(self):
        corpus = build_corpus([make_question(i, ["a"]) for i in range(1, 6)], "d")
        with pytest.raises(SplitError):
            split_corpus(corpus, seed=1)

    def test_bad_ratios_rejected(self):
        corpus = random_corpus(seed=4, n_questions=20)
        with pytest.raises(SplitError):
            split_corpus(corpus, ratios=(0.5, 0.2, 0.2), seed=1)

    @given(seed=st.integers(0, 10_000), n=st.integers(10, 120))
    @settings(max_examples=60, deadline=None)
    def test_partition_property(self, seed, n):
        corpus = random_corpus(seed=seed % 17, n_questions=n, with_answers=False)
        split = split_corpus(corpus, seed=seed)
        ids = set(corpus.question_ids())
        assert split.train | split.dev | split.test == ids
        assert len(split.train) + len(split.dev) + len(split.test) == len(ids)
        assert not (split.train & split.dev)
        assert not (split.train & split.test)
        assert not (split.dev & split.test)
        # Determinism across calls.
        assert split == split_corpus(corpus, seed=seed)

    def test_largest_remainder_sizes_sum(self):
        for total in (10, 37, 101, 999):
            sizes = largest_remainder_sizes(total, (0.7, 0.1, 0.2))
            assert sum(sizes) == total


class TestPersistence:
    def test_corpus_round_trip(self, tmp_path, small_corpus):
        path = tmp_path / "corpus.jsonl"
        save_corpus(small_corpus, path)
        loaded = load_corpus(path)
        assert loaded.domain == small_corpus.domain
        assert loaded.questions == small_corpus.questions
        assert loaded.answers == small_corpus.answers
        assert loaded.orphan_answer_ids == small_corpus.orphan_answer_ids

    def test_split_round_trip(self, tmp_path, small_corpus):
        split = split_corpus(small_corpus, seed=5)
        path = tmp_path / "split.json"
        save_split(split, path)
        assert load_split(path) == split

    def test_split_hash_stable(self, small_corpus):
        split = split_corpus(small_corpus, seed=5)
        assert split_manifest_hash(split) == split_manifest_hash(split)
        other = split_corpus(small_corpus, seed=6)
        assert split_manifest_hash(split) != split_manifest_hash(other)
