"""Tagging-behavior statistics over a domain corpus.

Everything here is a pure function of an immutable corpus: frequency and
co-occurrence tables, post coverage, text overlap, ordering preferences,
positional profiles, and positional stability. Percentages are computed in
full precision; report emitters round for display.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .corpus import DomainCorpus
from .errors import EmptyCorpusError, UnknownPairError, UnknownTagError
from .ingest import strip_html

MAX_POSITIONS = 5

SCOPE_TITLE = "title"
SCOPE_TITLE_BODY = "title_body"
SCOPE_TITLE_BODY_ANSWERS = "title_body_answers"
SCOPES = (SCOPE_TITLE, SCOPE_TITLE_BODY, SCOPE_TITLE_BODY_ANSWERS)

MODE_EMS = "ems"  # single-word tags only
MODE_EMM = "emm"  # single- and multi-word tags
MODES = (MODE_EMS, MODE_EMM)


@dataclass
class TagFrequencyTable:
    """Per-tag post counts with a deterministic frequency ranking."""

    domain: str
    counts: dict[str, int]
    ranked: list[str]

    def top(self, n: int) -> list[str]:
        return self.ranked[: max(n, 0)]


def build_tag_frequency(corpus: DomainCorpus) -> TagFrequencyTable:
    """Count, per tag, the number of questions it appears in.

    Ranking is by descending count, ties broken lexicographically so that
    every top-n table is reproducible.
    """
    counts: Counter[str] = Counter()
    for q in corpus.questions:
        counts.update(set(q.tags))
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    return TagFrequencyTable(domain=corpus.domain, counts=dict(counts), ranked=ranked)


@dataclass
class DomainStats:
    """Headline per-domain statistics (question side plus asker counts)."""

    domain: str
    q_count: int
    tag_count: int
    ppt: float
    avg_tags: float
    views_gt_100: int
    asker_count: int
    qpa: float
    pct_no_answers: float
    pct_no_scores: float
    pct_no_accepted: float
    max_answers: int
    max_views: int


def compute_domain_stats(corpus: DomainCorpus) -> DomainStats:
    """All Table-style headline numbers for one domain.

    Answer-derived fields count the answers actually linked in the corpus.
    V>100 counts questions with view_count > 100 (the header is ambiguous
    about questions vs all posts; we count questions).
    """
    questions = corpus.questions
    if not questions:
        raise EmptyCorpusError(f"domain {corpus.domain!r} has no questions")
    n = len(questions)
    tags = {t for q in questions for t in q.tags}
    askers = {
        q.owner_id if q.owner_id is not None else f"name:{q.owner_display_name}"
        for q in questions
    }
    answer_counts = [len(corpus.answers_for(q.id)) for q in questions]
    return DomainStats(
        domain=corpus.domain,
        q_count=n,
        tag_count=len(tags),
        ppt=n / len(tags),
        avg_tags=sum(len(q.tags) for q in questions) / n,
        views_gt_100=sum(1 for q in questions if q.view_count > 100),
        asker_count=len(askers),
        qpa=n / len(askers),
        pct_no_answers=100.0 * sum(1 for c in answer_counts if c == 0) / n,
        pct_no_scores=100.0 * sum(1 for q in questions if q.score == 0) / n,
        pct_no_accepted=100.0 * sum(1 for q in questions if q.accepted_answer_id is None) / n,
        max_answers=max(answer_counts),
        max_views=max(q.view_count for q in questions),
    )


def top_n_post_coverage(freq: TagFrequencyTable, corpus: DomainCorpus, n: int) -> float:
    """Percentage of questions containing at least one of the n most frequent tags.

    n larger than the tag space is clamped; coverage is monotone in n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not corpus.questions:
        raise EmptyCorpusError(f"domain {corpus.domain!r} has no questions")
    top = set(freq.top(min(n, len(freq.ranked))))
    covered = sum(1 for q in corpus.questions if top.intersection(q.tags))
    return 100.0 * covered / len(corpus.questions)


def tag_word_count(tag: str) -> int:
    """Number of words in a tag; hyphens are the word separators ("dual-boot" = 2)."""
    return tag.count("-") + 1


WORD_BUCKETS = ("1", "2", "3", "4", "5", ">5")


def tag_word_length_distribution(freq: TagFrequencyTable) -> dict[str, float]:
    """Share of distinct tags per word-count bucket {1..5, >5}, in percent."""
    total = len(freq.counts)
    buckets = {b: 0 for b in WORD_BUCKETS}
    for tag in freq.counts:
        words = tag_word_count(tag)
        buckets["1" if words == 1 else str(words) if words <= 5 else ">5"] += 1
    if total == 0:
        return {b: 0.0 for b in WORD_BUCKETS}
    return {b: 100.0 * c / total for b, c in buckets.items()}


@dataclass(frozen=True)
class TagCharStats:
    shortest: str
    longest: str
    average_length: float


def tag_char_stats(freq: TagFrequencyTable) -> TagCharStats:
    """Shortest / longest / mean character length over distinct tags.

    Length ties resolve to the lexicographically smallest tag.
    """
    tags = sorted(freq.counts)
    if not tags:
        raise EmptyCorpusError("no tags")
    shortest = min(tags, key=lambda t: (len(t), t))
    longest = min(tags, key=lambda t: (-len(t), t))
    average = sum(len(t) for t in tags) / len(tags)
    return TagCharStats(shortest=shortest, longest=longest, average_length=average)


# ---------------------------------------------------------------------------
# Tag-post overlap (exact matching of a question's own tags in its text)


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def _phrase_pattern(tag: str) -> re.Pattern[str]:
    # Hyphenated tags match as space-separated phrases; boundaries are
    # any non-alphanumeric character (so "3.5e" and "c" match cleanly).
    phrase = " ".join(part for part in tag.split("-") if part)
    escaped = re.escape(phrase)
    return re.compile(rf"(?<![0-9a-z]){escaped}(?![0-9a-z])")


_PATTERN_CACHE: dict[str, re.Pattern[str]] = {}


def phrase_matches(tag: str, normalized_text: str) -> bool:
    pattern = _PATTERN_CACHE.get(tag)
    if pattern is None:
        pattern = _phrase_pattern(tag)
        _PATTERN_CACHE[tag] = pattern
    return pattern.search(normalized_text) is not None


def question_texts(corpus: DomainCorpus, scope: str) -> dict[int, str]:
    """HTML-stripped, lowercased, whitespace-normalized text per question id."""
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    texts = {}
    for q in corpus.questions:
        parts = [q.title or ""]
        if scope in (SCOPE_TITLE_BODY, SCOPE_TITLE_BODY_ANSWERS):
            parts.append(strip_html(q.body))
        if scope == SCOPE_TITLE_BODY_ANSWERS:
            parts.extend(strip_html(a.body) for a in corpus.answers_for(q.id))
        texts[q.id] = normalize_text(" ".join(parts))
    return texts


def tag_post_overlap(
    corpus: DomainCorpus,
    scope: str,
    mode: str,
    texts: Mapping[int, str] | None = None,
) -> float:
    """Percentage of questions whose own tags exactly match in the scoped text.

    EMS considers only single-word tags; EMM also matches hyphenated tags as
    space-separated phrases. A question counts once however many tags match.
    Pass `texts` (from question_texts) to reuse stripped text across calls.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if not corpus.questions:
        raise EmptyCorpusError(f"domain {corpus.domain!r} has no questions")
    if texts is None:
        texts = question_texts(corpus, scope)
    hits = 0
    for q in corpus.questions:
        text = texts[q.id]
        candidates = q.tags if mode == MODE_EMM else [t for t in q.tags if "-" not in t]
        if any(phrase_matches(tag, text) for tag in candidates):
            hits += 1
    return 100.0 * hits / len(corpus.questions)


# ---------------------------------------------------------------------------
# Co-occurrence and ordering


@dataclass
class CooccurrenceTable:
    """Unordered pair counts plus ordered counts by sequence position."""

    domain: str
    pairs: dict[tuple[str, str], int]
    orderings: dict[tuple[str, str], int]

    def ranked_pairs(self) -> list[tuple[str, str]]:
        return sorted(self.pairs, key=lambda p: (-self.pairs[p], p))


def pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def build_cooccurrence(corpus: DomainCorpus) -> CooccurrenceTable:
    """Count every unordered tag pair once per post; record sequence order.

    orderings[(a, b)] counts posts where a precedes b, so for every pair
    pairs[{a,b}] == orderings[(a,b)] + orderings[(b,a)].
    """
    pairs: Counter[tuple[str, str]] = Counter()
    orderings: Counter[tuple[str, str]] = Counter()
    for q in corpus.questions:
        for first, second in combinations(q.tags, 2):
            if first == second:
                continue
            pairs[pair_key(first, second)] += 1
            orderings[(first, second)] += 1
    return CooccurrenceTable(domain=corpus.domain, pairs=dict(pairs), orderings=dict(orderings))


def pair_post_coverage(
    table: CooccurrenceTable, corpus: DomainCorpus, k: int
) -> tuple[float, float]:
    """(coverage by the top-k pairs, share of single-tag posts), both in percent."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not corpus.questions:
        raise EmptyCorpusError(f"domain {corpus.domain!r} has no questions")
    top = table.ranked_pairs()[:k]
    covered = 0
    single = 0
    for q in corpus.questions:
        tagset = set(q.tags)
        if len(q.tags) == 1:
            single += 1
        if any(a in tagset and b in tagset for a, b in top):
            covered += 1
    n = len(corpus.questions)
    return 100.0 * covered / n, 100.0 * single / n


@dataclass(frozen=True)
class OrderingPreference:
    count_ij: int
    count_ji: int
    dominant_pct: float


def ordering_preference(table: CooccurrenceTable, t_i: str, t_j: str) -> OrderingPreference:
    """How often t_i precedes t_j versus the reverse, for an observed pair."""
    if pair_key(t_i, t_j) not in table.pairs:
        raise UnknownPairError(f"pair ({t_i!r}, {t_j!r}) never co-occurs in {table.domain!r}")
    count_ij = table.orderings.get((t_i, t_j), 0)
    count_ji = table.orderings.get((t_j, t_i), 0)
    total = count_ij + count_ji
    return OrderingPreference(
        count_ij=count_ij,
        count_ji=count_ji,
        dominant_pct=100.0 * max(count_ij, count_ji) / total,
    )


# ---------------------------------------------------------------------------
# Positional profiles and stability


@dataclass
class PositionalProfile:
    """Where in the 1..5 tag sequence a tag tends to sit."""

    tag: str
    position_counts: list[int]
    phi: list[float]


def position_counts(corpus: DomainCorpus) -> dict[str, list[int]]:
    """Per tag, how many questions have it at sequence position 1..5."""
    counts: dict[str, list[int]] = {}
    for q in corpus.questions:
        for index, tag in enumerate(q.tags):
            row = counts.get(tag)
            if row is None:
                row = counts[tag] = [0] * MAX_POSITIONS
            row[index] += 1
    return counts


def _profile_from_counts(tag: str, row: Sequence[int]) -> PositionalProfile:
    total = sum(row)
    phi = [100.0 * c / total for c in row] if total else [0.0] * MAX_POSITIONS
    return PositionalProfile(tag=tag, position_counts=list(row), phi=phi)


def positional_profile(corpus: DomainCorpus, tag: str) -> PositionalProfile:
    """Occurrence percentage of `tag` at each position; phi sums to 100."""
    counts = position_counts(corpus)
    if tag not in counts:
        raise UnknownTagError(f"tag {tag!r} never occurs in {corpus.domain!r}")
    return _profile_from_counts(tag, counts[tag])


@dataclass
class StabilityReport:
    """Which tags stay within a given set of positions at threshold delta."""

    domain: str
    delta: float
    q_sets: dict[frozenset[int], set[str]]
    st: dict[frozenset[int], float]


def stability_report(
    corpus: DomainCorpus,
    position_sets: Iterable[Iterable[int]] = ({1, 2}, {3, 4, 5}),
    delta: float = 99.0,
    min_count: int = 0,
) -> StabilityReport:
    """Share of the tag space that is positionally stable.

    A tag is stable for a position set X when its phi mass on X reaches
    delta (a percentage). The universe is every tag with at least one
    occurrence unless `min_count` filters rarer tags out.
    """
    if not 0 < delta <= 100:
        raise ValueError(f"delta must be in (0, 100], got {delta}")
    normalized_sets = [frozenset(s) for s in position_sets]
    for s in normalized_sets:
        if not s or not s.issubset(range(1, MAX_POSITIONS + 1)):
            raise ValueError(f"position set {sorted(s)} must be a nonempty subset of 1..5")
    counts = position_counts(corpus)
    universe = {t: row for t, row in counts.items() if sum(row) >= max(min_count, 1)}
    if not universe:
        raise EmptyCorpusError(f"domain {corpus.domain!r} has no tagged questions")
    q_sets: dict[frozenset[int], set[str]] = {}
    st: dict[frozenset[int], float] = {}
    for pos_set in normalized_sets:
        members = set()
        for tag, row in universe.items():
            total = sum(row)
            mass = 100.0 * sum(row[x - 1] for x in pos_set) / total
            if mass >= delta:
                members.add(tag)
        q_sets[pos_set] = members
        st[pos_set] = 100.0 * len(members) / len(universe)
    return StabilityReport(domain=corpus.domain, delta=delta, q_sets=q_sets, st=st)
