"""Inference: vocabulary-head tag ranking plus greedy refined-token streams.

Vocabulary-only mode fills five mask slots and reports the most probable
vocabulary tag per slot (duplicates across slots are kept; downstream
prediction assembly deduplicates). Joint mode fills two mask slots from
the tag head, then greedily fills each refined slot with its single most
probable token (argmax; ties resolve to the lowest token id via first-max
selection) and serializes tokens, log-probabilities, and kinds for the
stream decoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .dataio import LOG_PROB_FLOOR, Question
from .model import MaskedTagger
from .templates import build_mp_inference, build_mrpg_inference
from .tokenizer import SubwordTokenizer

MODE_MP = "mp"
MODE_MRPG = "mrpg"


@dataclass
class InferenceResult:
    post_id: int
    meta_tags: list[tuple[str, float]]
    stream: list[tuple[str, float, str]] = field(default_factory=list)


def _hidden_for(model: MaskedTagger, input_ids: list[int]) -> torch.Tensor:
    ids = torch.tensor([input_ids], dtype=torch.long)
    pad_mask = torch.zeros_like(ids, dtype=torch.bool)
    with torch.no_grad():
        return model(ids, pad_mask)[0]


def _meta_predictions(
    model: MaskedTagger, hidden: torch.Tensor, positions: list[int], tags: list[str]
) -> list[tuple[str, float]]:
    out = []
    with torch.no_grad():
        for position in positions:
            probs = torch.softmax(model.tag_head(hidden[position]), dim=-1)
            best = int(torch.argmax(probs))
            out.append((tags[best], float(probs[best])))
    return out


def infer(
    question: Question,
    model: MaskedTagger,
    tokenizer: SubwordTokenizer,
    tags: list[str],
    mode: str = MODE_MRPG,
    n_refined: int = 12,
    max_len: int | None = None,
) -> InferenceResult:
    max_len = max_len or model.config.max_len
    model.eval()
    if mode == MODE_MP:
        input_ids, positions = build_mp_inference(question, tokenizer, max_len, n_slots=5)
        hidden = _hidden_for(model, input_ids)
        return InferenceResult(
            post_id=question.id,
            meta_tags=_meta_predictions(model, hidden, positions, tags),
        )
    if mode != MODE_MRPG:
        raise ValueError(f"unknown mode {mode!r}")
    input_ids, meta_positions, refined_positions = build_mrpg_inference(
        question, tokenizer, max_len, n_meta=2, n_refined=n_refined
    )
    hidden = _hidden_for(model, input_ids)
    meta = _meta_predictions(model, hidden, meta_positions, tags)
    stream = []
    with torch.no_grad():
        for position in refined_positions:
            log_probs = torch.log_softmax(model.generation_head(hidden[position]), dim=-1)
            best = int(torch.argmax(log_probs))
            log_prob = max(float(log_probs[best]), LOG_PROB_FLOOR)
            stream.append((tokenizer.id_to_token[best], log_prob, tokenizer.token_kind(best)))
    return InferenceResult(post_id=question.id, meta_tags=meta, stream=stream)


def infer_many(
    questions: list[Question],
    model: MaskedTagger,
    tokenizer: SubwordTokenizer,
    tags: list[str],
    mode: str = MODE_MRPG,
    n_refined: int = 12,
    max_len: int | None = None,
) -> list[InferenceResult]:
    return [
        infer(q, model, tokenizer, tags, mode=mode, n_refined=n_refined, max_len=max_len)
        for q in questions
    ]
