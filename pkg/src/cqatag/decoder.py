"""Assemble refined tags from generated token streams and merge them with
meta-tag predictions into a final prediction set.

The token-stream file is the sole coupling with the neural component: one
line-delimited JSON record per post holding (token, log-probability, kind)
triples. Kinds: "tag" (subword material), "sep" (tag boundary), "punct"
(skipped entirely).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .predictions import (
    MAX_PREDICTIONS,
    SOURCE_G_HEAD,
    SOURCE_P_HEAD,
    PredictionSet,
    RankedTag,
)

KIND_TAG = "tag"
KIND_SEP = "sep"
KIND_PUNCT = "punct"
KINDS = (KIND_TAG, KIND_SEP, KIND_PUNCT)

# Stored log-probability floor for probability zero (exp(-1e9) underflows to 0.0).
LOG_PROB_FLOOR = -1e9


@dataclass(frozen=True)
class StreamToken:
    token: str
    probability: float
    kind: str
    log_prob: float | None = None

    def stored_log_prob(self) -> float:
        if self.log_prob is not None:
            return self.log_prob
        if self.probability <= 0.0:
            return LOG_PROB_FLOOR
        return math.log(self.probability)


@dataclass
class TokenStream:
    post_id: int | None
    tokens: list[StreamToken]


def classify_token(token: str) -> str:
    """Punctuation means no alphanumerics and no '-' (hyphens are tag material)."""
    if any(ch.isalnum() or ch == "-" for ch in token):
        return KIND_TAG
    return KIND_PUNCT


@dataclass(frozen=True)
class RefinedTag:
    text: str
    token_count: int
    combined_score: float


def _candidate_from_segment(segment: Sequence[StreamToken]) -> RefinedTag | None:
    parts = [t for t in segment if t.kind == KIND_TAG]
    if not parts:
        return None
    text = "".join(t.token for t in parts)
    if not text or text.startswith("-") or text.endswith("-"):
        return None
    # Combined score: geometric mean of the joined tokens' probabilities,
    # so multi-token tags are not penalized relative to single-token ones.
    if any(t.probability <= 0.0 for t in parts):
        score = 0.0
    else:
        score = math.exp(sum(math.log(t.probability) for t in parts) / len(parts))
    return RefinedTag(text=text, token_count=len(parts), combined_score=score)


def assemble_tags(stream: TokenStream | Sequence[StreamToken]) -> list[RefinedTag]:
    """Build refined tags from the segments between consecutive separators.

    Within a segment, punctuation tokens are skipped and the remaining token
    strings are concatenated without inserted spaces. Candidates that are
    empty or start/end with '-' are dropped, then adjacent duplicate tags
    collapse to their first occurrence. Tokens before the first separator or
    after the last one belong to no tag. Malformed streams yield fewer tags,
    never an error.
    """
    tokens = stream.tokens if isinstance(stream, TokenStream) else list(stream)
    sep_positions = [i for i, t in enumerate(tokens) if t.kind == KIND_SEP]
    candidates: list[RefinedTag] = []
    for start, end in zip(sep_positions, sep_positions[1:]):
        candidate = _candidate_from_segment(tokens[start + 1 : end])
        if candidate is not None:
            candidates.append(candidate)
    collapsed: list[RefinedTag] = []
    for candidate in candidates:
        if collapsed and collapsed[-1].text == candidate.text:
            continue
        collapsed.append(candidate)
    return collapsed


def select_topk_refined(tags: Sequence[RefinedTag], k: int) -> list[RefinedTag]:
    """Top-k by combined score, ties keeping first-occurrence order."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    ranked = sorted(tags, key=lambda t: -t.combined_score)
    return list(ranked[:k])


def merge_predictions(
    meta: Sequence[str | tuple[str, float]],
    refined: Sequence[RefinedTag],
    n_meta: int = 2,
    n_refined: int = 3,
    post_id: int | None = None,
    backfill: bool = False,
) -> PredictionSet:
    """First n_meta meta tags (P-head), then up to n_refined refined (G-head).

    Duplicates against earlier entries are dropped without replacement
    unless `backfill` pulls later candidates to fill the quota. Scores are
    clipped to be non-increasing across the head junction (ordering is by
    head and rank, not by a shared score scale).
    """
    if n_meta < 0 or n_refined < 0:
        raise ValueError("n_meta and n_refined must be non-negative")
    if n_meta + n_refined > MAX_PREDICTIONS:
        raise ValueError(
            f"n_meta + n_refined = {n_meta + n_refined} exceeds the platform bound of {MAX_PREDICTIONS}"
        )
    entries: list[RankedTag] = []
    seen: set[str] = set()

    def admit(tag: str, score: float, source: str) -> None:
        if tag in seen:
            return
        seen.add(tag)
        if entries and score > entries[-1].score:
            score = entries[-1].score
        entries.append(RankedTag(tag=tag, score=score, source=source))

    meta_pairs = [(m, 1.0) if isinstance(m, str) else (m[0], float(m[1])) for m in meta]
    meta_budget = meta_pairs if backfill else meta_pairs[:n_meta]
    taken = 0
    for tag, score in meta_budget:
        if taken == n_meta:
            break
        before = len(entries)
        admit(tag, score, SOURCE_P_HEAD)
        taken += len(entries) - before

    refined_budget = refined if backfill else refined[:n_refined]
    taken = 0
    for candidate in refined_budget:
        if taken == n_refined:
            break
        before = len(entries)
        admit(candidate.text, candidate.combined_score, SOURCE_G_HEAD)
        taken += len(entries) - before

    return PredictionSet(post_id=post_id, tags=entries)


# ---------------------------------------------------------------------------
# Token-stream file contract


def write_token_streams(streams: Iterable[TokenStream], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for stream in streams:
            record = {
                "post_id": stream.post_id,
                "tokens": [[t.token, t.stored_log_prob(), t.kind] for t in stream.tokens],
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def read_token_streams(path) -> Iterator[TokenStream]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            tokens = [
                StreamToken(
                    token=token,
                    probability=min(math.exp(log_prob), 1.0) if log_prob > LOG_PROB_FLOOR else 0.0,
                    kind=kind,
                    log_prob=log_prob,
                )
                for token, log_prob, kind in record["tokens"]
            ]
            yield TokenStream(post_id=record["post_id"], tokens=tokens)
