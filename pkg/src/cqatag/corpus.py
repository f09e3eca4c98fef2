"""Core corpus types: posts, per-domain corpora, train/dev/test splits.

The on-disk corpus format is line-delimited JSON (one self-describing record
per line, UTF-8) so corpora can be streamed, appended, and diffed in tests.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import (
    DuplicatePostIdError,
    InvalidPostError,
    SplitError,
)

QUESTION = "question"
ANSWER = "answer"

MAX_TAGS = 5

# The one PRNG used for splitting, recorded in every split manifest.
SPLIT_GENERATOR = "python-mersenne-twister"

CORPUS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Post:
    """One StackExchange post (question or answer) after ingest filtering."""

    id: int
    post_type: str
    body: str
    score: int = 0
    creation_date: str = ""
    parent_id: int | None = None
    title: str | None = None
    tags: tuple[str, ...] = ()
    owner_id: int | None = None
    owner_display_name: str | None = None
    view_count: int = 0
    answer_count: int = 0
    accepted_answer_id: int | None = None

    @property
    def is_question(self) -> bool:
        return self.post_type == QUESTION

    def validate(self) -> None:
        """Raise InvalidPostError when a structural invariant is broken."""
        if self.post_type not in (QUESTION, ANSWER):
            raise InvalidPostError(f"post {self.id}: unknown post_type {self.post_type!r}")
        if self.owner_id is None and not self.owner_display_name:
            raise InvalidPostError(f"post {self.id}: no owner")
        if self.view_count < 0 or self.answer_count < 0:
            raise InvalidPostError(f"post {self.id}: negative count field")
        if self.post_type == QUESTION:
            if not 1 <= len(self.tags) <= MAX_TAGS:
                raise InvalidPostError(
                    f"post {self.id}: question must carry 1..{MAX_TAGS} tags, got {len(self.tags)}"
                )
            for tag in self.tags:
                if not tag or tag != tag.lower() or "<" in tag or ">" in tag:
                    raise InvalidPostError(f"post {self.id}: malformed tag {tag!r}")
            if self.title is None:
                raise InvalidPostError(f"post {self.id}: question without title")
        else:
            if self.tags:
                raise InvalidPostError(f"post {self.id}: answer with tags")
            if self.parent_id is None:
                raise InvalidPostError(f"post {self.id}: answer without parent_id")


@dataclass
class DomainCorpus:
    """All retained posts of one domain, with question/answer linkage.

    Immutable after build; safe to share read-only across threads.
    Orphan answers (dangling ParentId) stay in `answers` and are flagged
    in `orphan_answer_ids`.
    """

    domain: str
    questions: list[Post]
    answers: list[Post]
    answer_index: dict[int, list[Post]] = field(default_factory=dict)
    orphan_answer_ids: frozenset[int] = frozenset()

    def question_ids(self) -> list[int]:
        return [q.id for q in self.questions]

    def answers_for(self, question_id: int) -> list[Post]:
        return self.answer_index.get(question_id, [])

    def restrict(self, question_ids: Iterable[int]) -> "DomainCorpus":
        """Sub-corpus containing only the given questions and their answers."""
        wanted = set(question_ids)
        questions = [q for q in self.questions if q.id in wanted]
        answers = [a for a in self.answers if a.parent_id in wanted]
        return build_corpus(questions + answers, self.domain)


def build_corpus(posts: Iterable[Post], domain: str) -> DomainCorpus:
    """Separate questions from answers and index answers by ParentId.

    Duplicate post ids are fatal. Answers whose parent question is not in
    the corpus are kept but flagged as orphans.
    """
    questions: list[Post] = []
    answers: list[Post] = []
    seen: set[int] = set()
    for post in posts:
        if post.id in seen:
            raise DuplicatePostIdError(f"duplicate post id {post.id} in domain {domain!r}")
        seen.add(post.id)
        if post.is_question:
            questions.append(post)
        else:
            answers.append(post)

    question_ids = {q.id for q in questions}
    answer_index: dict[int, list[Post]] = {}
    orphans: set[int] = set()
    for answer in answers:
        if answer.parent_id in question_ids:
            answer_index.setdefault(answer.parent_id, []).append(answer)
        else:
            orphans.add(answer.id)
    return DomainCorpus(
        domain=domain,
        questions=questions,
        answers=answers,
        answer_index=answer_index,
        orphan_answer_ids=frozenset(orphans),
    )


@dataclass(frozen=True)
class CorpusSplit:
    """Deterministic partition of question ids into train/dev/test."""

    train: frozenset[int]
    dev: frozenset[int]
    test: frozenset[int]
    seed: int
    ratios: tuple[float, float, float]
    generator: str = SPLIT_GENERATOR

    def part_of(self, question_id: int) -> str:
        if question_id in self.train:
            return "train"
        if question_id in self.dev:
            return "dev"
        if question_id in self.test:
            return "test"
        raise KeyError(question_id)


def largest_remainder_sizes(total: int, ratios: tuple[float, ...]) -> list[int]:
    """Allocate `total` items to parts by largest-remainder rounding.

    Deterministic: remaining units go to the largest fractional remainders,
    ties broken by part order.
    """
    quotas = [total * r for r in ratios]
    sizes = [int(q) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    leftover = total - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def split_corpus(
    corpus: DomainCorpus,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 0,
) -> CorpusSplit:
    """Uniform random train/dev/test partition of question ids.

    Driven solely by the seed through Python's Mersenne Twister, so two runs
    (on any platform) with the same seed produce the same split. Sizes follow
    largest-remainder rounding of the ratios.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {sum(ratios)}")
    ids = sorted(q.id for q in corpus.questions)
    if len(ids) < 10:
        raise SplitError(f"corpus has {len(ids)} questions; need at least 10 to split")
    rng = random.Random(seed)
    rng.shuffle(ids)
    n_train, n_dev, n_test = largest_remainder_sizes(len(ids), ratios)
    train = frozenset(ids[:n_train])
    dev = frozenset(ids[n_train : n_train + n_dev])
    test = frozenset(ids[n_train + n_dev :])
    return CorpusSplit(train=train, dev=dev, test=test, seed=seed, ratios=tuple(ratios))


# ---------------------------------------------------------------------------
# Persistence


def post_to_record(post: Post) -> dict:
    record = {
        "id": post.id,
        "type": post.post_type,
        "body": post.body,
        "score": post.score,
        "creation_date": post.creation_date,
        "owner_id": post.owner_id,
        "owner_display_name": post.owner_display_name,
        "view_count": post.view_count,
        "answer_count": post.answer_count,
        "accepted_answer_id": post.accepted_answer_id,
    }
    if post.is_question:
        record["title"] = post.title
        record["tags"] = list(post.tags)
    else:
        record["parent_id"] = post.parent_id
    return record


def post_from_record(record: dict) -> Post:
    return Post(
        id=record["id"],
        post_type=record["type"],
        body=record["body"],
        score=record.get("score", 0),
        creation_date=record.get("creation_date", ""),
        parent_id=record.get("parent_id"),
        title=record.get("title"),
        tags=tuple(record.get("tags", ())),
        owner_id=record.get("owner_id"),
        owner_display_name=record.get("owner_display_name"),
        view_count=record.get("view_count", 0),
        answer_count=record.get("answer_count", 0),
        accepted_answer_id=record.get("accepted_answer_id"),
    )


def save_corpus(corpus: DomainCorpus, path) -> None:
    """Write a corpus as line-delimited JSON: a header record, then one post per line."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "record": "header",
            "domain": corpus.domain,
            "format_version": CORPUS_FORMAT_VERSION,
            "n_questions": len(corpus.questions),
            "n_answers": len(corpus.answers),
        }
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for post in corpus.questions:
            fh.write(json.dumps(post_to_record(post), ensure_ascii=False, sort_keys=True) + "\n")
        for post in corpus.answers:
            fh.write(json.dumps(post_to_record(post), ensure_ascii=False, sort_keys=True) + "\n")


def iter_corpus_records(path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_corpus(path) -> DomainCorpus:
    records = iter_corpus_records(path)
    header = next(records)
    if header.get("record") != "header":
        raise InvalidPostError(f"{path}: first record is not a corpus header")
    posts = [post_from_record(r) for r in records]
    return build_corpus(posts, header["domain"])


def split_to_manifest(split: CorpusSplit) -> dict:
    return {
        "generator": split.generator,
        "seed": split.seed,
        "ratios": list(split.ratios),
        "counts": {"train": len(split.train), "dev": len(split.dev), "test": len(split.test)},
        "train": sorted(split.train),
        "dev": sorted(split.dev),
        "test": sorted(split.test),
    }


def save_split(split: CorpusSplit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(split_to_manifest(split), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_split(path) -> CorpusSplit:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return CorpusSplit(
        train=frozenset(manifest["train"]),
        dev=frozenset(manifest["dev"]),
        test=frozenset(manifest["test"]),
        seed=manifest["seed"],
        ratios=tuple(manifest["ratios"]),
        generator=manifest.get("generator", SPLIT_GENERATOR),
    )


def split_manifest_hash(split: CorpusSplit) -> str:
    """Stable identifier of a split, used to stamp artifacts built from it."""
    canonical = json.dumps(split_to_manifest(split), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
