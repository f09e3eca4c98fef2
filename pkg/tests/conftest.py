import random

import pytest

from cqatag.corpus import ANSWER, QUESTION, Post, build_corpus

TAG_POOL = [
    "boot",
    "grub2",
    "dual-boot",
    "networking",
    "wireless",
    "bash",
    "command-line",
    "apt",
    "package-management",
    "drivers",
    "nvidia",
    "server",
    "partitioning",
    "sound",
    "usb",
    "kernel",
    "unity",
    "gnome",
    "upgrade",
    "installation",
]


def make_question(qid, tags, owner=1, title=None, body="<p>body text</p>", **kwargs):
    return Post(
        id=qid,
        post_type=QUESTION,
        title=title if title is not None else f"question {qid}",
        body=body,
        tags=tuple(tags),
        owner_id=owner,
        creation_date="2020-01-01T00:00:00.000",
        **kwargs,
    )


def make_answer(aid, parent_id, owner=2, body="<p>an answer</p>", **kwargs):
    return Post(
        id=aid,
        post_type=ANSWER,
        parent_id=parent_id,
        body=body,
        owner_id=owner,
        creation_date="2020-01-02T00:00:00.000",
        **kwargs,
    )


def random_corpus(seed, n_questions=40, tag_pool=None, domain="synthetic", with_answers=True):
    """A reproducible corpus with varied tag counts, owners, views, answers."""
    rng = random.Random(seed)
    pool = tag_pool if tag_pool is not None else TAG_POOL
    posts = []
    next_id = 1
    for _ in range(n_questions):
        qid = next_id
        next_id += 1
        tags = rng.sample(pool, rng.randint(1, min(5, len(pool))))
        posts.append(
            make_question(
                qid,
                tags,
                owner=rng.randint(1, max(2, n_questions // 3)),
                view_count=rng.randint(0, 500),
                score=rng.randint(-2, 10) if rng.random() < 0.7 else 0,
                accepted_answer_id=rng.randint(1000, 2000) if rng.random() < 0.5 else None,
            )
        )
        if with_answers:
            for _ in range(rng.randint(0, 3)):
                posts.append(make_answer(next_id, qid, owner=rng.randint(1, 50)))
                next_id += 1
    rng.shuffle(posts)
    return build_corpus(posts, domain)


@pytest.fixture
def small_corpus():
    return random_corpus(seed=7, n_questions=40)
