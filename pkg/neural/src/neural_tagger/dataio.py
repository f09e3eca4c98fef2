"""Readers and writers for the file contracts shared with the analytics
pipeline: corpus JSONL, split manifest, vocab JSON, meta-prediction JSONL,
and the token-stream JSONL the decoder consumes.

This package never imports the pipeline; the files are the interface.
"""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

LOG_PROB_FLOOR = -1e9

KIND_TAG = "tag"
KIND_SEP = "sep"
KIND_PUNCT = "punct"

_MARKUP_RE = re.compile(r"<[^>]+>")


def plain_text(markup: str) -> str:
    """Crude markup removal for model input; entities decoded, tags dropped."""
    return " ".join(_MARKUP_RE.sub(" ", html.unescape(markup)).split())


@dataclass(frozen=True)
class Question:
    id: int
    title: str
    body: str
    tags: tuple[str, ...]


def read_questions(corpus_path) -> list[Question]:
    """Questions from a corpus JSONL file (header line, then one post per line)."""
    questions = []
    with open(corpus_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("record") == "header":
                continue
            if record.get("type") != "question":
                continue
            questions.append(
                Question(
                    id=record["id"],
                    title=record.get("title") or "",
                    body=plain_text(record.get("body") or ""),
                    tags=tuple(record.get("tags", ())),
                )
            )
    return questions


def read_split(split_path) -> dict[str, set[int]]:
    with open(split_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return {part: set(manifest[part]) for part in ("train", "dev", "test")}


def read_vocab_tags(vocab_path) -> list[str]:
    """Ranked tag list from a vocab JSON file."""
    with open(vocab_path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return list(payload["tags"])


def write_meta_predictions(records: Iterable[tuple[int, list[tuple[str, float]]]], path) -> None:
    """records: (post_id, [(tag, score), ...]) in rank order."""
    with open(path, "w", encoding="utf-8") as fh:
        for post_id, tags in records:
            payload = {
                "post_id": post_id,
                "tags": [{"tag": tag, "score": score} for tag, score in tags],
            }
            fh.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")


def read_meta_predictions(path) -> Iterator[tuple[int, list[tuple[str, float]]]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield record["post_id"], [(e["tag"], e["score"]) for e in record["tags"]]


def write_token_streams(records: Iterable[tuple[int, list[tuple[str, float, str]]]], path) -> None:
    """records: (post_id, [(token, log_probability, kind), ...])."""
    with open(path, "w", encoding="utf-8") as fh:
        for post_id, tokens in records:
            payload = {
                "post_id": post_id,
                "tokens": [[token, log_prob, kind] for token, log_prob, kind in tokens],
            }
            fh.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")


def read_token_streams(path) -> Iterator[tuple[int, list[tuple[str, float, str]]]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            yield record["post_id"], [tuple(t) for t in record["tokens"]]
