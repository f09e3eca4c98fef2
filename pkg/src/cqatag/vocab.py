"""MetaTag vocabulary: the shortest frequency-ranked tag prefix reaching a
post-coverage target. Tags outside it are out-of-vocabulary (OOV)."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .analytics import build_tag_frequency
from .corpus import DomainCorpus
from .errors import EmptyCorpusError


@dataclass
class MetaVocab:
    domain: str
    coverage_target: float
    tags: list[str]
    achieved_coverage: float
    built_from: str
    counts: dict[str, int]

    def __post_init__(self):
        self._tag_set = frozenset(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self._tag_set

    def __len__(self) -> int:
        return len(self.tags)


def build_meta_vocab(
    train_corpus: DomainCorpus,
    coverage_target: float,
    built_from: str = "train",
) -> MetaVocab:
    """Shortest frequency-ranked prefix whose post coverage reaches the target.

    Coverage is post coverage (a question counts as covered when it carries
    at least one vocabulary tag). Frequencies must come from the training
    split only, so pass the restricted corpus. Minimality holds: dropping
    the last tag puts coverage below the target.
    """
    if not 0 < coverage_target <= 100:
        raise ValueError(f"coverage_target must be in (0, 100], got {coverage_target}")
    questions = train_corpus.questions
    if not questions:
        raise EmptyCorpusError("cannot build a vocabulary from an empty training corpus")
    freq = build_tag_frequency(train_corpus)
    rank_of = {tag: i + 1 for i, tag in enumerate(freq.ranked)}

    # A prefix of length n covers exactly the questions whose best-ranked
    # tag has rank <= n, so one histogram pass finds the minimal prefix.
    newly_covered = [0] * (len(freq.ranked) + 1)
    for q in questions:
        newly_covered[min(rank_of[t] for t in q.tags)] += 1

    covered = 0
    prefix_len = len(freq.ranked)
    achieved = 0.0
    for n in range(1, len(freq.ranked) + 1):
        covered += newly_covered[n]
        achieved = 100.0 * covered / len(questions)
        if achieved >= coverage_target or covered == len(questions):
            prefix_len = n
            break
    tags = freq.ranked[:prefix_len]
    return MetaVocab(
        domain=train_corpus.domain,
        coverage_target=coverage_target,
        tags=tags,
        achieved_coverage=achieved,
        built_from=built_from,
        counts={t: freq.counts[t] for t in tags},
    )


def is_oov(tag: str, vocab: MetaVocab) -> bool:
    """True when the (lowercased, trimmed) tag is outside the vocabulary."""
    return tag.strip().lower() not in vocab


def save_vocab(vocab: MetaVocab, path) -> None:
    payload = {
        "domain": vocab.domain,
        "coverage_target": vocab.coverage_target,
        "achieved_coverage": vocab.achieved_coverage,
        "built_from": vocab.built_from,
        "tags": vocab.tags,
        "counts": vocab.counts,
        "size": len(vocab.tags),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_vocab(path) -> MetaVocab:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return MetaVocab(
        domain=payload["domain"],
        coverage_target=payload["coverage_target"],
        tags=list(payload["tags"]),
        achieved_coverage=payload["achieved_coverage"],
        built_from=payload["built_from"],
        counts=dict(payload["counts"]),
    )
