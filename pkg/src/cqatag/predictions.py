"""Ranked tag predictions and their line-delimited JSON file format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import PredictionError

SOURCE_P_HEAD = "p-head"
SOURCE_G_HEAD = "g-head"
SOURCE_BASELINE = "baseline"
SOURCE_MAJORITY = "majority"
SOURCES = (SOURCE_P_HEAD, SOURCE_G_HEAD, SOURCE_BASELINE, SOURCE_MAJORITY)

MAX_PREDICTIONS = 5


@dataclass(frozen=True)
class RankedTag:
    tag: str
    score: float
    source: str


@dataclass
class PredictionSet:
    """At most five ranked tags for one post, each with score and source head."""

    post_id: int | None
    tags: list[RankedTag]

    def __post_init__(self):
        validate_prediction_set(self)

    def tag_names(self) -> list[str]:
        return [t.tag for t in self.tags]


def validate_prediction_set(pred: PredictionSet) -> None:
    if len(pred.tags) > MAX_PREDICTIONS:
        raise PredictionError(
            f"post {pred.post_id}: {len(pred.tags)} predictions exceed the bound of {MAX_PREDICTIONS}"
        )
    names = [t.tag for t in pred.tags]
    if len(set(names)) != len(names):
        raise PredictionError(f"post {pred.post_id}: duplicate predicted tags {names}")
    for entry in pred.tags:
        if entry.source not in SOURCES:
            raise PredictionError(f"post {pred.post_id}: unknown source {entry.source!r}")
    scores = [t.score for t in pred.tags]
    for earlier, later in zip(scores, scores[1:]):
        if later > earlier + 1e-12:
            raise PredictionError(f"post {pred.post_id}: scores increase ({scores})")


def save_predictions(predictions: Iterable[PredictionSet], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            record = {
                "post_id": pred.post_id,
                "predictions": [
                    {"tag": t.tag, "score": t.score, "source": t.source} for t in pred.tags
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_predictions(path) -> Iterator[PredictionSet]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield PredictionSet(
                post_id=record["post_id"],
                tags=[
                    RankedTag(tag=e["tag"], score=e["score"], source=e["source"])
                    for e in record["predictions"]
                ],
            )
