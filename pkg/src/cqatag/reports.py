"""CSV/JSON report emitters shaped like the standard tag-analysis tables.

Values are computed at full precision in analytics and rounded to two
decimals here. Column names follow the conventional headers (#Q, PPT,
AvgT, EMS, EMM, ...); reports_schema.md documents every file and column.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from typing import Iterable

from . import analytics
from .corpus import DomainCorpus

COVERAGE_NS = (1, 3, 5, 10, 50, 100)
PAIR_KS = (1, 3, 5, 10, 50, 100)
DEFAULT_DELTAS = (80.0, 90.0, 99.0)
POSITION_SETS = (frozenset({1, 2}), frozenset({3, 4, 5}))
TOP_PAIRS_PER_DOMAIN = 5
ORDERING_PAIRS_PER_DOMAIN = 10
DISTRIBUTION_TOP_TAGS = 100
DISTRIBUTION_TOP_PAIRS = 50
STABLE_EXAMPLES = 5


def fmt(value: float, places: int = 2) -> float:
    return round(value, places)


@dataclass
class DomainReport:
    """Every per-domain statistic needed to fill the report files."""

    domain: str
    stats: analytics.DomainStats
    word_length: dict[str, float]
    char_stats: analytics.TagCharStats
    coverage: dict[int, float]
    tag_space_pct_top100: float
    pair_coverage: dict[int, float]
    single_tag_pct: float
    top_pairs: list[tuple[tuple[str, str], int]]
    ordering_rows: list[dict]
    overlap: dict[tuple[str, str], float]
    stability: dict[float, analytics.StabilityReport]
    tag_distribution: list[tuple[str, int]]
    pair_distribution: list[tuple[tuple[str, str], int]]
    stable_examples: dict[frozenset[int], list[str]] = field(default_factory=dict)


def analyze_domain(
    corpus: DomainCorpus,
    deltas: Iterable[float] = DEFAULT_DELTAS,
    position_sets: Iterable[frozenset[int]] = POSITION_SETS,
    example_seed: int = 0,
) -> DomainReport:
    freq = analytics.build_tag_frequency(corpus)
    table = analytics.build_cooccurrence(corpus)
    stats = analytics.compute_domain_stats(corpus)
    position_sets = [frozenset(s) for s in position_sets]

    coverage = {
        n: analytics.top_n_post_coverage(freq, corpus, n)
        for n in COVERAGE_NS
        if freq.ranked
    }
    pair_cov: dict[int, float] = {}
    single_pct = 0.0
    for k in PAIR_KS:
        if table.pairs:
            pair_cov[k], single_pct = analytics.pair_post_coverage(table, corpus, k)
        else:
            single_pct = 100.0 * sum(1 for q in corpus.questions if len(q.tags) == 1) / len(
                corpus.questions
            )

    ranked_pairs = table.ranked_pairs()
    ordering_rows = []
    for pair in ranked_pairs[:ORDERING_PAIRS_PER_DOMAIN]:
        pref = analytics.ordering_preference(table, pair[0], pair[1])
        total = pref.count_ij + pref.count_ji
        ordering_rows.append(
            {
                "domain": corpus.domain,
                "total": total,
                "order_1": f"({pair[0]},{pair[1]})",
                "order_1_pct": 100.0 * pref.count_ij / total,
                "order_2": f"({pair[1]},{pair[0]})",
                "order_2_pct": 100.0 * pref.count_ji / total,
            }
        )

    overlap = {}
    for scope in analytics.SCOPES:
        texts = analytics.question_texts(corpus, scope)
        for mode in analytics.MODES:
            overlap[(scope, mode)] = analytics.tag_post_overlap(corpus, scope, mode, texts=texts)

    stability = {
        float(delta): analytics.stability_report(corpus, position_sets, delta)
        for delta in deltas
    }

    # Example stable tags at the strictest threshold, sampled reproducibly.
    strictest = max(stability)
    rng = random.Random(example_seed)
    stable_examples = {}
    for pos_set in position_sets:
        members = sorted(stability[strictest].q_sets[pos_set])
        stable_examples[pos_set] = (
            members if len(members) <= STABLE_EXAMPLES else rng.sample(members, STABLE_EXAMPLES)
        )

    return DomainReport(
        domain=corpus.domain,
        stats=stats,
        word_length=analytics.tag_word_length_distribution(freq),
        char_stats=analytics.tag_char_stats(freq),
        coverage=coverage,
        tag_space_pct_top100=100.0 * min(100, len(freq.ranked)) / len(freq.ranked),
        pair_coverage=pair_cov,
        single_tag_pct=single_pct,
        top_pairs=[(p, table.pairs[p]) for p in ranked_pairs[:TOP_PAIRS_PER_DOMAIN]],
        ordering_rows=ordering_rows,
        overlap=overlap,
        stability=stability,
        tag_distribution=[(t, freq.counts[t]) for t in freq.ranked[:DISTRIBUTION_TOP_TAGS]],
        pair_distribution=[(p, table.pairs[p]) for p in ranked_pairs[:DISTRIBUTION_TOP_PAIRS]],
        stable_examples=stable_examples,
    )


def _write_csv(path, header: list[str], rows: Iterable[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_domain_stats_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "#Q", "#T", "PPT", "AvgT", "V>100", "#A", "QPA"],
        [
            [
                r.domain,
                r.stats.q_count,
                r.stats.tag_count,
                fmt(r.stats.ppt),
                fmt(r.stats.avg_tags),
                r.stats.views_gt_100,
                r.stats.asker_count,
                fmt(r.stats.qpa),
            ]
            for r in reports
        ],
    )


def write_domain_stats_extended_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        [
            "Domain",
            "Q",
            "T",
            "Q/T",
            "AVGT",
            "NOANS (%)",
            "NOSCORES (%)",
            "NO ACCEPT ANS (%)",
            "MAXANS",
            "MAXVIEW",
            "VIEWGT100",
            "#ASKERS",
        ],
        [
            [
                r.domain,
                r.stats.q_count,
                r.stats.tag_count,
                fmt(r.stats.ppt),
                fmt(r.stats.avg_tags),
                fmt(r.stats.pct_no_answers),
                fmt(r.stats.pct_no_scores),
                fmt(r.stats.pct_no_accepted),
                r.stats.max_answers,
                r.stats.max_views,
                r.stats.views_gt_100,
                r.stats.asker_count,
            ]
            for r in reports
        ],
    )


def write_word_length_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "1", "2", "3", "4", "5", ">5"],
        [
            [r.domain] + [fmt(r.word_length[b]) for b in analytics.WORD_BUCKETS]
            for r in reports
        ],
    )


def write_char_stats_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "Longest Tag", "Longest Size", "Shortest Tag", "Shortest Size", "AvgTLen"],
        [
            [
                r.domain,
                r.char_stats.longest,
                len(r.char_stats.longest),
                r.char_stats.shortest,
                len(r.char_stats.shortest),
                fmt(r.char_stats.average_length),
            ]
            for r in reports
        ],
    )


def write_coverage_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "#T", "100Tag%", "Top1", "Top10", "Top100"],
        [
            [
                r.domain,
                r.stats.tag_count,
                fmt(r.tag_space_pct_top100),
                fmt(r.coverage[1]),
                fmt(r.coverage[10]),
                fmt(r.coverage[100]),
            ]
            for r in reports
        ],
    )


def write_coverage_detailed_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "#T", "Top1", "Top3", "Top5", "Top10", "Top50", "Top100", "100T%"],
        [
            [r.domain, r.stats.tag_count]
            + [fmt(r.coverage[n]) for n in COVERAGE_NS]
            + [fmt(r.tag_space_pct_top100)]
            for r in reports
        ],
    )


def write_pair_coverage_csv(reports: list[DomainReport], path) -> None:
    _write_csv(
        path,
        ["Domain", "Top-1", "Top-3", "Top-5", "Top-10", "Top-50", "Top-100", "Single"],
        [
            [r.domain]
            + [fmt(r.pair_coverage[k]) if k in r.pair_coverage else "" for k in PAIR_KS]
            + [fmt(r.single_tag_pct)]
            for r in reports
        ],
    )


def write_top_pairs_csv(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for rank, (pair, count) in enumerate(r.top_pairs, start=1):
            rows.append([r.domain, rank, pair[0], pair[1], count])
    _write_csv(path, ["Domain", "Rank", "Tag A", "Tag B", "Post-Count"], rows)


def write_ordering_csv(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for row in r.ordering_rows:
            rows.append(
                [
                    row["domain"],
                    row["total"],
                    row["order_1"],
                    fmt(row["order_1_pct"]),
                    row["order_2"],
                    fmt(row["order_2_pct"]),
                ]
            )
    _write_csv(path, ["Domain", "Total", "Order-1", "%", "Order-2", "%"], rows)


_SCOPE_LABELS = {
    analytics.SCOPE_TITLE: "Title",
    analytics.SCOPE_TITLE_BODY: "Title+Body",
    analytics.SCOPE_TITLE_BODY_ANSWERS: "Title+Body+Answer",
}


def write_overlap_csv(reports: list[DomainReport], path) -> None:
    header = ["Domain"]
    for scope in analytics.SCOPES:
        for mode in analytics.MODES:
            header.append(f"{_SCOPE_LABELS[scope]} {mode.upper()}")
    rows = []
    for r in reports:
        row = [r.domain]
        for scope in analytics.SCOPES:
            for mode in analytics.MODES:
                row.append(fmt(r.overlap[(scope, mode)]))
        rows.append(row)
    _write_csv(path, header, rows)


def _positions_label(pos_set: frozenset[int]) -> str:
    return ",".join(str(p) for p in sorted(pos_set))


def write_stability_csv(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for delta in sorted(r.stability):
            report = r.stability[delta]
            for pos_set in sorted(report.st, key=_positions_label):
                rows.append(
                    [
                        r.domain,
                        fmt(delta, 0),
                        _positions_label(pos_set),
                        fmt(report.st[pos_set]),
                        len(report.q_sets[pos_set]),
                    ]
                )
    _write_csv(path, ["Domain", "Delta", "Positions", "ST", "Stable Tags"], rows)


def write_stable_examples_csv(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        row = [r.domain]
        for pos_set in POSITION_SETS:
            row.append("; ".join(r.stable_examples.get(pos_set, [])))
        rows.append(row)
    _write_csv(path, ["Domain", "Position 1, 2", "Position 3, 4, 5"], rows)


def write_tag_distribution_series(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for rank, (tag, count) in enumerate(r.tag_distribution, start=1):
            rows.append([r.domain, rank, tag, count])
    _write_csv(path, ["Domain", "Rank", "Tag", "Post-Count"], rows)


def write_pair_distribution_series(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for rank, (pair, count) in enumerate(r.pair_distribution, start=1):
            rows.append([r.domain, rank, pair[0], pair[1], count])
    _write_csv(path, ["Domain", "Rank", "Tag A", "Tag B", "Post-Count"], rows)


def write_overlap_series(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for (scope, mode), value in sorted(r.overlap.items()):
            rows.append([r.domain, _SCOPE_LABELS[scope], mode.upper(), fmt(value)])
    _write_csv(path, ["Domain", "Scope", "Mode", "Percent"], rows)


def write_stability_series(reports: list[DomainReport], path) -> None:
    rows = []
    for r in reports:
        for delta in sorted(r.stability):
            for pos_set, st in sorted(r.stability[delta].st.items(), key=lambda kv: _positions_label(kv[0])):
                rows.append([r.domain, fmt(delta, 0), _positions_label(pos_set), fmt(st)])
    _write_csv(path, ["Domain", "Delta", "Positions", "ST"], rows)


ANALYSIS_FILES = {
    "domain_stats.csv": write_domain_stats_csv,
    "domain_stats_extended.csv": write_domain_stats_extended_csv,
    "tag_word_length.csv": write_word_length_csv,
    "tag_char_stats.csv": write_char_stats_csv,
    "tag_coverage.csv": write_coverage_csv,
    "tag_coverage_detailed.csv": write_coverage_detailed_csv,
    "pair_coverage.csv": write_pair_coverage_csv,
    "top_pairs.csv": write_top_pairs_csv,
    "pair_ordering.csv": write_ordering_csv,
    "tag_post_overlap.csv": write_overlap_csv,
    "tag_stability.csv": write_stability_csv,
    "stable_tag_examples.csv": write_stable_examples_csv,
    "series_tag_distribution.csv": write_tag_distribution_series,
    "series_pair_distribution.csv": write_pair_distribution_series,
    "series_tag_post_overlap.csv": write_overlap_series,
    "series_tag_stability.csv": write_stability_series,
}


def write_analysis_reports(reports: list[DomainReport], out_dir) -> list[str]:
    """Emit every analysis CSV into out_dir; returns the file names."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    ordered = sorted(reports, key=lambda r: r.domain)
    for name, writer in ANALYSIS_FILES.items():
        writer(ordered, os.path.join(out_dir, name))
        written.append(name)
    return written


# ---------------------------------------------------------------------------
# Evaluation reports


def write_hit_report(rows: list[dict], path) -> None:
    """rows: domain, model, then Hit@k mean/std pairs."""
    header = ["Domain", "Model"]
    for k in range(1, 6):
        header += [f"Hit@{k}", f"Hit@{k} Std"]
    table = []
    for row in sorted(rows, key=lambda r: (r["domain"], r["model"])):
        line = [row["domain"], row["model"]]
        for k in range(1, 6):
            agg = row["hits"].get(k)
            if agg is None:
                line += ["", ""]
            else:
                line += [fmt(agg.mean), "" if agg.std is None else fmt(agg.std)]
        table.append(line)
    _write_csv(path, header, table)


def write_wilcoxon_csv(rows: list[dict], path, significance: float = 0.05) -> None:
    _write_csv(
        path,
        ["Domain", "Baseline Model", "Improved Model", "P-Value", "Is Significant"],
        [
            [
                row["domain"],
                row["baseline"],
                row["improved"],
                f"{row['p_value']:.5f}",
                "Yes" if row["p_value"] < significance else "No",
            ]
            for row in sorted(rows, key=lambda r: (r["domain"], r["improved"]))
        ],
    )


def write_head_contrib_csv(rows: list[dict], path) -> None:
    _write_csv(
        path,
        ["Domain", "Model", "P", "G"],
        [
            [row["domain"], row["model"], fmt(row["p_only"]), fmt(row["g_only"])]
            for row in sorted(rows, key=lambda r: (r["domain"], r["model"]))
        ],
    )


def write_oov_csv(rows: list[dict], path) -> None:
    _write_csv(
        path,
        ["Domain", "Model", "% Posts", "% ALL Tags", "% OOV Tags"],
        [
            [
                row["domain"],
                row["model"],
                fmt(row["pct_posts"]),
                fmt(row["pct_all_tags"]),
                "" if row["pct_oov_tags"] is None else fmt(row["pct_oov_tags"]),
            ]
            for row in sorted(rows, key=lambda r: (r["domain"], r["model"]))
        ],
    )


def write_eval_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


SCHEMA_DOC = """\
# Report schema

All percentages are computed at full precision and rounded to two decimals
for display. Columns follow the conventional table headers for this kind of
tag analysis.

## domain_stats.csv
One row per domain. `#Q` questions, `#T` distinct tags, `PPT` posts per tag
(#Q / #T), `AvgT` mean tags per question, `V>100` questions with more than
100 views, `#A` distinct askers, `QPA` questions per asker (#Q / #A).

## domain_stats_extended.csv
Adds `NOANS (%)` questions without answers, `NOSCORES (%)` questions with a
zero score, `NO ACCEPT ANS (%)` questions without an accepted answer,
`MAXANS`/`MAXVIEW` per-domain maxima, `VIEWGT100`, `#ASKERS`.

## tag_word_length.csv
Share of distinct tags whose word count (hyphen-separated) falls in each
bucket 1..5 or >5.

## tag_char_stats.csv
Shortest/longest tag with their character sizes and `AvgTLen`, the mean tag
length over distinct tags.

## tag_coverage.csv / tag_coverage_detailed.csv
`TopN`: percent of questions containing at least one of the N most frequent
tags. `100Tag%`/`100T%`: the 100 most frequent tags as a share of the tag
space.

## pair_coverage.csv
`Top-K`: percent of questions containing at least one of the K most
frequent tag pairs; `Single`: percent of questions carrying exactly one tag.

## top_pairs.csv
The most frequent co-occurring tag pairs per domain with their post counts.

## pair_ordering.csv
For each of the ten most frequent pairs: total co-occurrence count and the
percentage observed in each order (`Order-1` is the lexicographic order).

## tag_post_overlap.csv / series_tag_post_overlap.csv
Percent of questions where at least one of the question's own tags appears
in the scoped user text. `EMS` matches single-word tags only; `EMM` also
matches hyphenated tags as space-separated phrases. Scopes: Title,
Title+Body, Title+Body+Answer.

## tag_stability.csv / series_tag_stability.csv
`ST`: percent of the tag space whose position mass on the listed positions
reaches `Delta` percent. `Stable Tags` is the member count.

## stable_tag_examples.csv
Up to five reproducibly sampled stable tags per position group at the
strictest threshold.

## series_tag_distribution.csv / series_pair_distribution.csv
Rank/count series for the 100 most frequent tags and the 50 most frequent
pairs (plot data).

## hit_report.csv
Hit@k per model and domain: percent of posts whose first k predicted tags
intersect the gold tags; mean and sample std across runs.

## wilcoxon.csv
One-sided exact Wilcoxon signed-rank p-values comparing paired per-run
Hit@5 values (H1: improved model > baseline model), significance at 0.05.

## head_contrib.csv
`P`/`G`: percent of posts where only the vocabulary head / only the
generative head predicted at least one correct tag.

## oov.csv
`% Posts`: posts with at least one correctly predicted out-of-vocabulary
tag; `% ALL Tags`: correct OOV predictions over all gold tags; `% OOV
Tags`: correct OOV predictions over OOV gold tags (blank when no gold tag
is OOV).
"""


def write_schema_doc(out_dir) -> str:
    import os

    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "reports_schema.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCHEMA_DOC)
    return path
