"""Hit@k scoring, head-contribution and OOV statistics, run aggregation,
and a one-sided exact Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import EvalMismatchError, PredictionError
from .predictions import SOURCE_G_HEAD, SOURCE_P_HEAD, PredictionSet
from .vocab import MetaVocab, is_oov


def normalize_tag(tag: str) -> str:
    return tag.strip().lower()


def _align(
    predictions: Iterable[PredictionSet],
    gold: Mapping[int, Iterable[str]],
) -> tuple[dict[int, PredictionSet], dict[int, set[str]]]:
    pred_by_id = {p.post_id: p for p in predictions}
    gold_sets = {pid: {normalize_tag(t) for t in tags} for pid, tags in gold.items()}
    missing = set(gold_sets) - set(pred_by_id)
    unmatched = set(pred_by_id) - set(gold_sets)
    if missing or unmatched:
        raise EvalMismatchError(missing_predictions=missing, unmatched_predictions=unmatched)
    return pred_by_id, gold_sets


def hit_at_k(
    predictions: Iterable[PredictionSet],
    gold: Mapping[int, Iterable[str]],
    k: int,
) -> float:
    """Percentage of posts whose first k predicted tags intersect the gold tags.

    Tag equality is exact string equality after lowercase/trim normalization.
    Posts with an empty gold set are excluded from the denominator (they
    cannot occur in a valid corpus).
    """
    if not 1 <= k <= 5:
        raise ValueError(f"k must be in 1..5, got {k}")
    pred_by_id, gold_sets = _align(predictions, gold)
    scored = 0
    hits = 0
    for pid, gold_tags in gold_sets.items():
        if not gold_tags:
            continue
        scored += 1
        predicted = {normalize_tag(t) for t in pred_by_id[pid].tag_names()[:k]}
        if predicted & gold_tags:
            hits += 1
    if scored == 0:
        raise EvalMismatchError()
    return 100.0 * hits / scored


def evaluate_hits(
    predictions: Sequence[PredictionSet],
    gold: Mapping[int, Iterable[str]],
    ks: Sequence[int] = (1, 2, 3, 4, 5),
) -> dict[int, float]:
    return {k: hit_at_k(predictions, gold, k) for k in ks}


@dataclass(frozen=True)
class HeadContribution:
    p_only: float
    g_only: float


def head_contributions(
    predictions: Iterable[PredictionSet],
    gold: Mapping[int, Iterable[str]],
) -> HeadContribution:
    """Share of posts where exactly one head produced a correct tag.

    Every prediction must be labeled p-head or g-head; anything else is an
    error because the split would be meaningless.
    """
    pred_by_id, gold_sets = _align(predictions, gold)
    p_only = 0
    g_only = 0
    for pid, gold_tags in gold_sets.items():
        p_tags: set[str] = set()
        g_tags: set[str] = set()
        for entry in pred_by_id[pid].tags:
            if entry.source == SOURCE_P_HEAD:
                p_tags.add(normalize_tag(entry.tag))
            elif entry.source == SOURCE_G_HEAD:
                g_tags.add(normalize_tag(entry.tag))
            else:
                raise PredictionError(
                    f"post {pid}: prediction {entry.tag!r} has source {entry.source!r}; "
                    "head contributions need p-head/g-head labels"
                )
        p_hit = bool(p_tags & gold_tags)
        g_hit = bool(g_tags & gold_tags)
        if p_hit and not g_hit:
            p_only += 1
        elif g_hit and not p_hit:
            g_only += 1
    n = len(gold_sets)
    return HeadContribution(p_only=100.0 * p_only / n, g_only=100.0 * g_only / n)


@dataclass(frozen=True)
class OovStats:
    pct_posts: float
    pct_all_tags: float
    pct_oov_tags: float | None  # None when there are no OOV gold tags


def oov_stats(
    predictions: Iterable[PredictionSet],
    gold: Mapping[int, Iterable[str]],
    vocab: MetaVocab,
) -> OovStats:
    """How much of the out-of-vocabulary gold mass the predictions recover.

    pct_posts: posts with at least one correctly predicted OOV tag.
    pct_all_tags: correct OOV predictions over all gold tags.
    pct_oov_tags: correct OOV predictions over OOV gold tags (absent when
    no gold tag is OOV).
    """
    pred_by_id, gold_sets = _align(predictions, gold)
    posts_with_oov_hit = 0
    correct_oov = 0
    total_gold = 0
    total_oov_gold = 0
    for pid, gold_tags in gold_sets.items():
        total_gold += len(gold_tags)
        oov_gold = {t for t in gold_tags if is_oov(t, vocab)}
        total_oov_gold += len(oov_gold)
        predicted = {normalize_tag(t) for t in pred_by_id[pid].tag_names()}
        oov_hits = predicted & oov_gold
        correct_oov += len(oov_hits)
        if oov_hits:
            posts_with_oov_hit += 1
    n = len(gold_sets)
    return OovStats(
        pct_posts=100.0 * posts_with_oov_hit / n,
        pct_all_tags=100.0 * correct_oov / total_gold if total_gold else 0.0,
        pct_oov_tags=100.0 * correct_oov / total_oov_gold if total_oov_gold else None,
    )


# ---------------------------------------------------------------------------
# One-sided Wilcoxon signed-rank test

EXACT_LIMIT = 25


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    w_plus: float
    n_nonzero: int
    exact: bool
    degenerate: bool = False


def _rank_with_ties(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        average = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = average
        i = j + 1
    return ranks


def _exact_tail_probability(doubled_ranks: Sequence[int], doubled_w: int) -> float:
    """P(W+ >= w) under the signed-rank null, by counting sign assignments.

    Convolves the distribution of 2*W+ over all 2^m assignments (ranks are
    doubled so tied half-ranks become integers); equivalent to enumerating
    every assignment but polynomial time.
    """
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total - r, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
    tail = sum(counts[max(doubled_w, 0) :])
    return tail / (1 << len(doubled_ranks))


def wilcoxon_one_sided(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    """Exact one-sided Wilcoxon signed-rank test of H1: y > x.

    Zero differences are dropped (Wilcoxon's original treatment) and tied
    absolute differences get averaged ranks. The p-value is the exact tail
    probability P(W+ >= w) over all 2^m sign assignments for m <= 25; larger
    m falls back to a normal approximation with tie correction and is
    flagged exact=False. All differences zero degenerates to p = 1.0.
    """
    if len(x) != len(y):
        raise ValueError(f"paired samples differ in length: {len(x)} vs {len(y)}")
    if not x:
        raise ValueError("need at least one pair")
    diffs = [yi - xi for xi, yi in zip(x, y)]
    nonzero = [d for d in diffs if d != 0]
    if not nonzero:
        return WilcoxonResult(p_value=1.0, w_plus=0.0, n_nonzero=0, exact=True, degenerate=True)
    ranks = _rank_with_ties([abs(d) for d in nonzero])
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    m = len(nonzero)
    if m <= EXACT_LIMIT:
        doubled = [round(2 * r) for r in ranks]
        p = _exact_tail_probability(doubled, round(2 * w_plus))
        return WilcoxonResult(p_value=p, w_plus=w_plus, n_nonzero=m, exact=True)
    # Normal approximation with tie correction and continuity correction.
    mean = m * (m + 1) / 4
    tie_counts: dict[float, int] = {}
    for d in nonzero:
        tie_counts[abs(d)] = tie_counts.get(abs(d), 0) + 1
    tie_term = sum(t**3 - t for t in tie_counts.values()) / 48
    variance = m * (m + 1) * (2 * m + 1) / 24 - tie_term
    z = (w_plus - mean - 0.5) / math.sqrt(variance)
    p = 0.5 * math.erfc(z / math.sqrt(2))
    return WilcoxonResult(p_value=p, w_plus=w_plus, n_nonzero=m, exact=False)


@dataclass(frozen=True)
class RunAggregate:
    mean: float
    std: float | None  # sample (Bessel-corrected) std; None for a single run
    n_runs: int


def aggregate_runs(values: Sequence[float]) -> RunAggregate:
    """Mean and sample standard deviation across runs."""
    if not values:
        raise ValueError("need at least one run")
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return RunAggregate(mean=mean, std=None, n_runs=n)
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    return RunAggregate(mean=mean, std=math.sqrt(variance), n_runs=n)


@dataclass
class EvalReport:
    """Hit@k for one model on one domain, possibly aggregated over runs."""

    domain: str
    model: str
    per_run_hits: dict[int, list[float]]  # k -> one value per run
    seeds: list[int]

    def aggregate(self) -> dict[int, RunAggregate]:
        return {k: aggregate_runs(v) for k, v in sorted(self.per_run_hits.items())}
