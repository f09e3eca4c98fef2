"""Deterministic subword tokenizer built from the training corpus.

Pieces carry their literal text, so concatenating the pieces of a tag
reproduces the tag exactly (hyphens stay attached to the piece they
precede: "visa-refusals" -> ["visa", "-refusals"]). Unknown words fall
back to single characters, which are always in the vocabulary.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable, Sequence

PAD = "<pad>"
MASK = "<mask>"
MASKREF = "<maskref>"
TAGSEP = "<tagsep>"
SPECIALS = (PAD, MASK, MASKREF, TAGSEP)

_WORD_RE = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


def words_of(text: str) -> list[str]:
    """Lowercased alphanumeric runs plus single punctuation characters."""
    return _WORD_RE.findall(text.lower())


def tag_pieces(tag: str) -> list[str]:
    """Split a tag at hyphens, keeping each hyphen glued to what follows."""
    parts = tag.split("-")
    pieces = [parts[0]] if parts[0] else []
    for part in parts[1:]:
        pieces.append("-" + part)
    return pieces or [tag]


class SubwordTokenizer:
    def __init__(self, pieces: Sequence[str]):
        self.id_to_token = list(SPECIALS) + [p for p in pieces if p not in SPECIALS]
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        self.pad_id = self.token_to_id[PAD]
        self.mask_id = self.token_to_id[MASK]
        self.maskref_id = self.token_to_id[MASKREF]
        self.tagsep_id = self.token_to_id[TAGSEP]
        self._max_piece_len = max((len(p) for p in pieces), default=1)

    def __len__(self) -> int:
        return len(self.id_to_token)

    @classmethod
    def build(
        cls,
        texts: Iterable[str],
        tags: Iterable[str],
        max_words: int = 4000,
    ) -> "SubwordTokenizer":
        """Vocabulary: every seen character, the most frequent words, and
        every piece of every training tag. Fully determined by its inputs."""
        word_counts: Counter[str] = Counter()
        chars: set[str] = set()
        tag_list = sorted(set(tags))
        for text in texts:
            for word in words_of(text):
                word_counts[word] += 1
                chars.update(word)
        for tag in tag_list:
            chars.update(tag.lower())
        pieces: list[str] = sorted(chars)
        seen = set(pieces)
        for tag in tag_list:
            for piece in tag_pieces(tag.lower()):
                if piece and piece not in seen:
                    seen.add(piece)
                    pieces.append(piece)
        top_words = sorted(word_counts, key=lambda w: (-word_counts[w], w))[:max_words]
        for word in top_words:
            if word not in seen:
                seen.add(word)
                pieces.append(word)
        return cls(pieces)

    def encode_word(self, word: str) -> list[int]:
        """Greedy longest-prefix segmentation; single characters as fallback."""
        ids = []
        i = 0
        while i < len(word):
            match = None
            end = min(len(word), i + self._max_piece_len)
            for j in range(end, i, -1):
                candidate = word[i:j]
                token_id = self.token_to_id.get(candidate)
                if token_id is not None:
                    match = (token_id, j)
                    break
            if match is None:
                # Unseen character; skip it rather than fail.
                i += 1
                continue
            ids.append(match[0])
            i = match[1]
        return ids

    def encode_text(self, text: str) -> list[int]:
        ids = []
        for word in words_of(text):
            ids.extend(self.encode_word(word))
        return ids

    def encode_tag(self, tag: str) -> list[int]:
        ids = []
        for piece in tag_pieces(tag.lower()):
            token_id = self.token_to_id.get(piece)
            if token_id is not None:
                ids.append(token_id)
            else:
                ids.extend(self.encode_word(piece))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.id_to_token[i] for i in ids)

    def token_kind(self, token_id: int) -> str:
        """Kind label for the stream file: sep / punct / tag."""
        token = self.id_to_token[token_id]
        if token_id == self.tagsep_id:
            return "sep"
        if token in SPECIALS:
            return "punct"  # non-boundary specials carry no tag text
        if any(ch.isalnum() or ch == "-" for ch in token):
            return "tag"
        return "punct"

    def to_payload(self) -> dict:
        return {"pieces": self.id_to_token[len(SPECIALS) :]}

    @classmethod
    def from_payload(cls, payload: dict) -> "SubwordTokenizer":
        return cls(payload["pieces"])
