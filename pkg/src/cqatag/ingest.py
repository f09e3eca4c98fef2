"""Streaming ingestion of StackExchange ``Posts.xml`` dumps.

Feeds the pull parser in fixed-size chunks so peak memory stays bounded
regardless of file size; processed ``<row/>`` elements are cleared as soon
as they are consumed.
"""

from __future__ import annotations

import html
import html.parser
import os
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator
from xml.etree import ElementTree as ET

from .corpus import ANSWER, MAX_TAGS, QUESTION, Post
from .errors import DumpParseError, InvalidPostError, TagFieldError

_CHUNK_SIZE = 1 << 16

_TAG_FIELD_RE = re.compile(r"<([^<>]+)>")

POST_TYPE_QUESTION = "1"
POST_TYPE_ANSWER = "2"


@dataclass
class RejectsReport:
    """Counts of dump rows that were filtered out, by reason."""

    no_owner: int = 0
    missing_attribute: int = 0
    invalid_tags: int = 0
    other_post_type: int = 0
    examples: list[str] = field(default_factory=list)

    MAX_EXAMPLES = 20

    @property
    def total(self) -> int:
        """Rejected question/answer rows; other post types are expected filtering."""
        return self.no_owner + self.missing_attribute + self.invalid_tags

    def add(self, reason: str, detail: str) -> None:
        setattr(self, reason, getattr(self, reason) + 1)
        if len(self.examples) < self.MAX_EXAMPLES:
            self.examples.append(f"{reason}: {detail}")

    def to_json(self) -> dict:
        return {
            "no_owner": self.no_owner,
            "missing_attribute": self.missing_attribute,
            "invalid_tags": self.invalid_tags,
            "other_post_type": self.other_post_type,
            "total_rejected": self.total,
            "examples": list(self.examples),
        }


def parse_tag_field(raw: str, post_id: int | None = None) -> list[str]:
    """Split a ``<a><b><c>`` Tags attribute into an ordered tag list.

    Order is preserved because the positional analyses depend on it. The
    attribute may arrive HTML-entity-escaped (``&lt;boot&gt;...``).
    """
    where = f" (post {post_id})" if post_id is not None else ""
    text = html.unescape(raw)
    tags = _TAG_FIELD_RE.findall(text)
    if "".join(f"<{t}>" for t in tags) != text:
        raise TagFieldError(f"unbalanced or malformed tag field {raw!r}{where}")
    if not tags:
        raise TagFieldError(f"empty tag field{where}; questions carry at least one tag")
    if len(tags) > MAX_TAGS:
        raise TagFieldError(f"{len(tags)} tags exceeds the platform bound of {MAX_TAGS}{where}")
    return [t.lower() for t in tags]


class _TextExtractor(html.parser.HTMLParser):
    """Collects visible text; drops markup, keeps code-block contents."""

    _INVISIBLE = {"script", "style"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._INVISIBLE:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._INVISIBLE and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth and data:
            self.chunks.append(data)


def strip_html(text: str) -> str:
    """Best-effort removal of markup: entities decoded, code text kept.

    Never raises; malformed markup degrades to whatever text the tolerant
    parser can recover. Whitespace is normalized to single spaces.
    """
    extractor = _TextExtractor()
    try:
        extractor.feed(text)
        extractor.close()
    except Exception:
        pass
    return " ".join(" ".join(extractor.chunks).split())


def _optional_int(value: str | None) -> int | None:
    return int(value) if value is not None else None


def _post_from_row(attrs: dict[str, str]) -> Post:
    post_type_id = attrs["PostTypeId"]
    post_id = int(attrs["Id"])
    common = dict(
        id=post_id,
        body=attrs["Body"],
        score=int(attrs.get("Score", "0")),
        creation_date=attrs.get("CreationDate", ""),
        owner_id=_optional_int(attrs.get("OwnerUserId")),
        owner_display_name=attrs.get("OwnerDisplayName"),
        view_count=int(attrs.get("ViewCount", "0")),
        answer_count=int(attrs.get("AnswerCount", "0")),
        accepted_answer_id=_optional_int(attrs.get("AcceptedAnswerId")),
    )
    if post_type_id == POST_TYPE_QUESTION:
        tags = tuple(parse_tag_field(attrs["Tags"], post_id=post_id))
        return Post(post_type=QUESTION, title=attrs["Title"], tags=tags, **common)
    return Post(post_type=ANSWER, parent_id=int(attrs["ParentId"]), **common)


def parse_posts_stream(
    source: BinaryIO | str,
    rejects: RejectsReport | None = None,
) -> Iterator[Post]:
    """Stream-parse a Posts.xml dump into Post objects.

    Yields only questions and answers; rows with no owner, or missing a
    required attribute for their type, are skipped and tallied in `rejects`.
    Malformed XML is fatal and reported with an approximate byte offset.

    `source` is a path or a binary file object. Memory use is bounded by the
    chunk size, not the file size.
    """
    if rejects is None:
        rejects = RejectsReport()
    own_handle = isinstance(source, (str, bytes, os.PathLike))
    stream = open(source, "rb") if own_handle else source
    parser = ET.XMLPullParser(events=("end",))
    bytes_fed = 0
    try:
        while True:
            chunk = stream.read(_CHUNK_SIZE)
            try:
                if chunk:
                    parser.feed(chunk)
                else:
                    parser.close()
                # Errors from bad input are deferred until the events are read.
                events = list(parser.read_events())
            except ET.ParseError as exc:
                line, column = exc.position
                raise DumpParseError(
                    f"malformed XML: {exc.msg}",
                    byte_offset=bytes_fed,
                    line=line,
                    column=column,
                ) from exc
            bytes_fed += len(chunk)
            for _event, elem in events:
                if elem.tag == "row":
                    post = _filter_row(dict(elem.attrib), rejects)
                    if post is not None:
                        yield post
                elem.clear()
            if not chunk:
                break
    finally:
        if own_handle:
            stream.close()


def _filter_row(attrs: dict[str, str], rejects: RejectsReport) -> Post | None:
    row_id = attrs.get("Id", "?")
    post_type_id = attrs.get("PostTypeId")
    if post_type_id not in (POST_TYPE_QUESTION, POST_TYPE_ANSWER):
        rejects.add("other_post_type", f"row {row_id} PostTypeId={post_type_id}")
        return None
    if "OwnerUserId" not in attrs and "OwnerDisplayName" not in attrs:
        rejects.add("no_owner", f"row {row_id}")
        return None
    required = ["Id", "Body"]
    if post_type_id == POST_TYPE_QUESTION:
        required += ["Title", "Tags"]
    else:
        required += ["ParentId"]
    missing = [name for name in required if name not in attrs]
    if missing:
        rejects.add("missing_attribute", f"row {row_id} missing {missing}")
        return None
    try:
        post = _post_from_row(attrs)
        post.validate()
    except TagFieldError as exc:
        rejects.add("invalid_tags", f"row {row_id}: {exc}")
        return None
    except (InvalidPostError, ValueError, KeyError) as exc:
        rejects.add("missing_attribute", f"row {row_id}: {exc}")
        return None
    return post
