"""Masking-template construction for training and inference.

Training input is the tokenized title + body followed by the post's tag
sequence rendered in place: an in-vocabulary tag becomes one <mask> slot
(predicted by the tag head); an out-of-vocabulary tag becomes a group of
<maskref> slots, one per subword piece, wrapped by boundary slots whose
target is the <tagsep> token. Boundary slots are masked like refined slots
so that greedy inference, which only ever sees <maskref> inputs, learns to
emit the separators that mark tag boundaries in the generated stream.

Inference templates append bare mask slots: five <mask> for vocabulary-only
prediction, or two <mask> plus a parameterized run of <maskref> for the
joint model.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataio import Question
from .tokenizer import SubwordTokenizer

SLOT_META = "meta"
SLOT_REFINED = "refined"
SLOT_BOUNDARY = "boundary"


@dataclass(frozen=True)
class Slot:
    position: int
    kind: str
    target: int  # tag index for meta slots, token id otherwise


@dataclass
class MaskingTemplate:
    input_ids: list[int]
    slots: list[Slot]

    def meta_slots(self) -> list[Slot]:
        return [s for s in self.slots if s.kind == SLOT_META]

    def refined_slots(self) -> list[Slot]:
        return [s for s in self.slots if s.kind == SLOT_REFINED]

    def generation_slots(self) -> list[Slot]:
        return [s for s in self.slots if s.kind in (SLOT_REFINED, SLOT_BOUNDARY)]


def _text_ids(question: Question, tokenizer: SubwordTokenizer, budget: int) -> list[int]:
    """Title in full, body truncated to whatever budget remains."""
    title_ids = tokenizer.encode_text(question.title)
    if len(title_ids) >= budget:
        return title_ids[:budget]
    body_ids = tokenizer.encode_text(question.body)
    return title_ids + body_ids[: budget - len(title_ids)]


def build_mp_instance(
    question: Question,
    vocab_tags: set[str],
    tokenizer: SubwordTokenizer,
    tag_index: dict[str, int],
    max_len: int = 256,
) -> MaskingTemplate | None:
    """One <mask> per in-vocabulary tag; OOV tags are omitted entirely.

    Returns None for posts with no in-vocabulary tag (callers count skips).
    """
    in_vocab = [t for t in question.tags if t in vocab_tags]
    if not in_vocab:
        return None
    text = _text_ids(question, tokenizer, max_len - len(in_vocab))
    input_ids = list(text)
    slots = []
    for tag in in_vocab:
        slots.append(Slot(position=len(input_ids), kind=SLOT_META, target=tag_index[tag]))
        input_ids.append(tokenizer.mask_id)
    return MaskingTemplate(input_ids=input_ids, slots=slots)


def build_mrpg_instance(
    question: Question,
    vocab_tags: set[str],
    tokenizer: SubwordTokenizer,
    tag_index: dict[str, int],
    max_len: int = 256,
) -> MaskingTemplate | None:
    """In-vocabulary tags as <mask> slots, each OOV tag as a boundary-wrapped
    group of <maskref> slots over its subword pieces, in tag-sequence order."""
    rendered: list[tuple[str, int]] = []  # (slot kind, target)
    any_tag = False
    for tag in question.tags:
        if tag in vocab_tags:
            rendered.append((SLOT_META, tag_index[tag]))
            any_tag = True
        else:
            piece_ids = tokenizer.encode_tag(tag)
            if not piece_ids:
                continue
            rendered.append((SLOT_BOUNDARY, tokenizer.tagsep_id))
            rendered.extend((SLOT_REFINED, pid) for pid in piece_ids)
            rendered.append((SLOT_BOUNDARY, tokenizer.tagsep_id))
            any_tag = True
    if not any_tag:
        return None
    text = _text_ids(question, tokenizer, max_len - len(rendered))
    input_ids = list(text)
    slots = []
    for kind, target in rendered:
        input_token = tokenizer.mask_id if kind == SLOT_META else tokenizer.maskref_id
        slots.append(Slot(position=len(input_ids), kind=kind, target=target))
        input_ids.append(input_token)
    return MaskingTemplate(input_ids=input_ids, slots=slots)


def build_mp_inference(
    question: Question, tokenizer: SubwordTokenizer, max_len: int = 256, n_slots: int = 5
) -> tuple[list[int], list[int]]:
    """Text plus exactly n_slots <mask> tokens; returns (input_ids, positions)."""
    text = _text_ids(question, tokenizer, max_len - n_slots)
    input_ids = list(text)
    positions = []
    for _ in range(n_slots):
        positions.append(len(input_ids))
        input_ids.append(tokenizer.mask_id)
    return input_ids, positions


def build_mrpg_inference(
    question: Question,
    tokenizer: SubwordTokenizer,
    max_len: int = 256,
    n_meta: int = 2,
    n_refined: int = 12,
) -> tuple[list[int], list[int], list[int]]:
    """Text + n_meta <mask> + n_refined <maskref>; returns
    (input_ids, meta positions, refined positions)."""
    text = _text_ids(question, tokenizer, max_len - n_meta - n_refined)
    input_ids = list(text)
    meta_positions = []
    for _ in range(n_meta):
        meta_positions.append(len(input_ids))
        input_ids.append(tokenizer.mask_id)
    refined_positions = []
    for _ in range(n_refined):
        refined_positions.append(len(input_ids))
        input_ids.append(tokenizer.maskref_id)
    return input_ids, meta_positions, refined_positions
